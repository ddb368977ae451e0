#![no_main]

use intricacy_core::scenario::parse_config;
use libfuzzer_sys::fuzz_target;

// Any UTF-8 document is either a valid config or a field-level error.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(config) = parse_config(text) {
            assert!(!config.formats.is_empty());
        }
    }
});
