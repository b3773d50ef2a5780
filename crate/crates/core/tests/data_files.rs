//! The shipped data files must agree with the built-in defaults.

use std::path::PathBuf;

use spitgate_core::media::PrototypeTable;
use spitgate_core::spam_db::PatternStore;

fn repo_data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

#[test]
fn shipped_patterns_match_defaults() {
    let loaded = PatternStore::load(&repo_data("patterns.txt")).unwrap();
    assert_eq!(loaded.patterns(), PatternStore::default_patterns().patterns());
    assert_eq!(loaded.duplicates_dropped, 0);
}

#[test]
fn shipped_prototypes_match_defaults() {
    let loaded = PrototypeTable::load(&repo_data("prototypes.txt")).unwrap();
    let default = PrototypeTable::default_table();
    assert_eq!(loaded.entries, default.entries);
    assert_eq!(loaded.scale, 1.0);
}
