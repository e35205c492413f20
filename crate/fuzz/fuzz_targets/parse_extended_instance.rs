#![no_main]

use libfuzzer_sys::fuzz_target;
use sirate::io::{extended_from_table, parse_document, witness_from_table};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(table) = parse_document(text) else {
        return;
    };
    if let Ok((src, ext)) = extended_from_table(&table) {
        ext.validate(src.x_size).expect("parsed instance is valid");
        if let Ok(ch) = witness_from_table(&table, &src, &ext) {
            ch.validate(&src, &ext).expect("parsed witness is valid");
        }
    }
});
