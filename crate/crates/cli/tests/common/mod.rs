#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

pub fn config_text(name: &str) -> String {
    std::fs::read_to_string(configs_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn config_value(name: &str) -> Value {
    serde_json::from_str(&config_text(name)).unwrap()
}

pub fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("upsilon-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

/// Write `config` to a scratch file and return its path.
pub fn write_config(name: &str, config: &Value) -> PathBuf {
    let path = scratch(name);
    std::fs::write(&path, config.to_string()).unwrap();
    path
}

pub fn upsilon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_upsilon")).args(args).output().expect("binary runs")
}
