#![allow(dead_code)]

use std::path::{Path, PathBuf};

use mediaprof::RunConfig;

/// A synthetic run small enough to finish in seconds.
pub fn small_config_json(output_dir: &str, seed: u64) -> String {
    format!(
        r#"{{
  "output_dir": "{output_dir}",
  "seed": {seed},
  "synth": {{"generator": {{"n_nodes": 120, "p_in": 0.08, "p_out": 0.005}}, "halo_factor": 0.5}},
  "node2vec": {{"dim": 8, "walk_length": 10, "num_walks": 3, "epochs": 1}},
  "gnn": {{"layers": 2, "hidden_dim": 8, "epochs": 20, "sage_sample_sizes": [4, 4]}},
  "classify": {{"svm": {{"c_grid": [1.0], "gamma_grid": [0.1]}}}}
}}
"#
    )
}

pub fn write_config(dir: &Path, seed: u64) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, small_config_json("out", seed)).unwrap();
    path
}

pub fn small_config(dir: &Path, seed: u64) -> RunConfig {
    RunConfig::load(&write_config(dir, seed)).unwrap()
}
