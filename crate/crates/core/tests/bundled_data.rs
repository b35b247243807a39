//! The files under data/ are the output of `synthetic::synthetic50`.
//! Set GROPLE_REGENERATE_DATA=1 to rewrite them.

use std::path::PathBuf;

use grople::dataset::MultiLabelDataset;
use grople::synthetic::synthetic50;

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

#[test]
fn bundled_files_match_generator() {
    let ds = synthetic50().unwrap();
    if std::env::var_os("GROPLE_REGENERATE_DATA").is_some() {
        ds.write_mulan(&data_dir(), "synthetic50").unwrap();
    }
    let (arff, xml) = ds.to_mulan();
    let dir = data_dir();
    assert_eq!(std::fs::read_to_string(dir.join("synthetic50.arff")).unwrap(), arff);
    assert_eq!(std::fs::read_to_string(dir.join("synthetic50.xml")).unwrap(), xml);
    let loaded =
        MultiLabelDataset::load_mulan(&dir.join("synthetic50.arff"), &dir.join("synthetic50.xml")).unwrap();
    assert_eq!(loaded, ds);
}
