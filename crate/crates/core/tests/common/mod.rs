#![allow(dead_code)]

use std::path::PathBuf;

use modelcard_core::{parse_notebook, Notebook};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn notebook_paths() -> Vec<PathBuf> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(fixtures().join("notebooks"))
        .expect("fixture dir")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "ipynb"))
        .collect();
    paths.sort();
    paths
}

pub fn load(name: &str) -> Notebook {
    let bytes = std::fs::read(fixtures().join("notebooks").join(name)).expect("fixture");
    parse_notebook(&bytes).expect("fixture parses")
}
