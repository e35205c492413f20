#![no_main]

use libfuzzer_sys::fuzz_target;
use sirate::io::{apply_override, parse_override};
use toml::Table;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((path, value)) = parse_override(text) {
        assert!(!path.is_empty());
        let mut table = Table::new();
        apply_override(&mut table, &path, value).expect("fresh table accepts any path");
    }
});
