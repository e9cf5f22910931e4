#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crisisnews::{Overrides, Pipeline, PipelineConfig};

pub fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

pub fn synthetic_config() -> PathBuf {
    workspace_root().join("configs/synthetic.toml")
}

pub fn pipeline(out: &Path, overrides: Overrides) -> Pipeline {
    let overrides = Overrides { output_dir: Some(out.to_path_buf()), ..overrides };
    Pipeline::new(PipelineConfig::load(&synthetic_config(), &overrides).unwrap()).unwrap()
}

/// Every file under `dir`, keyed by relative path.
pub fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}
