//! Shared fixtures for the benchmarks.

use symfind::model::{parse_model, ControlModel};

/// Loads `models/{name}.sfm` from the workspace.
pub fn corpus_model(name: &str) -> ControlModel {
    let path = format!("{}/../../models/{name}.sfm", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    parse_model(&text).unwrap_or_else(|e| panic!("{path}: {e}"))
}
