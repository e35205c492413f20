#![no_main]

use libfuzzer_sys::fuzz_target;
use sirate::io::{decoder_instance_from_table, instance_from_table, parse_document};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(table) = parse_document(text) {
        if let Ok((src, spec)) = instance_from_table(&table) {
            src.ensure_valid().expect("parsed source is valid");
            spec.validate().expect("parsed distortions are valid");
        }
        let _ = decoder_instance_from_table(&table);
    }
});
