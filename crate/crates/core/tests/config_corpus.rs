//! The fuzz corpus seeds double as configuration examples.

use std::path::Path;

use intricacy_core::kinetics::parse_field_csv;
use intricacy_core::scenario::parse_config;
use intricacy_core::Error;

fn corpus(target: &str) -> Vec<(String, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn config_seeds_parse_except_the_invalid_one() {
    let files = corpus("parse_config");
    assert!(files.len() >= 5);
    for (name, text) in files {
        match parse_config(&text) {
            Ok(_) => assert_ne!(name, "unknown_key.toml"),
            Err(Error::Config(list)) => {
                assert_eq!(name, "unknown_key.toml", "{list:?}");
                assert!(list[0].to_string().contains("foo"));
            }
            Err(e) => panic!("{name}: {e}"),
        }
    }
}

#[test]
fn field_seeds_parse_except_the_duplicate() {
    for (name, text) in corpus("parse_field_csv") {
        assert_eq!(parse_field_csv(&text).is_ok(), name != "duplicate.csv", "{name}");
    }
}
