#![no_main]

use intricacy_core::kinetics::{parse_field_csv, write_field_csv};
use libfuzzer_sys::fuzz_target;

// Accepted snapshots must survive a write/parse round trip unchanged.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(field) = parse_field_csv(text) {
            let again = parse_field_csv(&write_field_csv(&field)).expect("own output parses");
            assert_eq!(again, field);
        }
    }
});
