//! Run configuration: one JSON file. Relative paths resolve against the
//! directory holding the config file. Module seeds are never set in the
//! file; each is derived from `seed` with [`module_seed`](crate::seeds::module_seed).

use std::fs;
use std::path::{Path, PathBuf};

use mediaprof_core::classify::CvConfig;
use mediaprof_core::eval::Task;
use mediaprof_core::gnn::GnnConfig;
use mediaprof_core::node2vec::Node2VecConfig;
use mediaprof_core::synth::SynthConfig;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingKind {
    Node2vec,
    Gcn,
    Sage,
}

impl EmbeddingKind {
    pub fn name(self) -> &'static str {
        match self {
            EmbeddingKind::Node2vec => "node2vec",
            EmbeddingKind::Gcn => "gcn",
            EmbeddingKind::Sage => "sage",
        }
    }

    pub fn is_gnn(self) -> bool {
        self != EmbeddingKind::Node2vec
    }
}

/// Synthetic fixture generation in place of input files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub generator: SynthConfig,
    /// Unlabeled halo nodes per base node; 0 disables the halo.
    pub halo_factor: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        SynthSection {
            generator: SynthConfig::default(),
            halo_factor: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    pub records: PathBuf,
    pub features: PathBuf,
    pub labels: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalChannel {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSection {
    /// Expansion rounds after the level-0 build.
    pub max_level: u32,
    /// Neighbors averaged when imputing a missing metric.
    pub imputation_k: usize,
}

impl Default for GraphSection {
    fn default() -> Self {
        GraphSection {
            max_level: 4,
            imputation_k: 5,
        }
    }
}

fn default_task() -> Task {
    Task::Factuality
}

fn default_embeddings() -> Vec<EmbeddingKind> {
    vec![EmbeddingKind::Node2vec, EmbeddingKind::Gcn, EmbeddingKind::Sage]
}

fn default_true() -> bool {
    true
}

fn default_train_fraction() -> f64 {
    0.8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_task")]
    pub task: Task,
    #[serde(default)]
    pub synth: Option<SynthSection>,
    #[serde(default)]
    pub inputs: Option<InputPaths>,
    #[serde(default)]
    pub external_channels: Vec<ExternalChannel>,
    #[serde(default)]
    pub graph: GraphSection,
    #[serde(default = "default_embeddings")]
    pub embeddings: Vec<EmbeddingKind>,
    /// Adds the nine engagement features as a channel of their own.
    #[serde(default = "default_true")]
    pub alexametrics_channel: bool,
    #[serde(default)]
    pub node2vec: Node2VecConfig,
    /// Shared by both GNN variants; `variant` is set per embedding.
    #[serde(default)]
    pub gnn: GnnConfig,
    /// Share of each class's labeled nodes used as GNN training nodes.
    #[serde(default = "default_train_fraction")]
    pub gnn_train_fraction: f64,
    #[serde(default)]
    pub classify: CvConfig,
}

fn config_error(path: &str, message: impl std::fmt::Display) -> Error {
    Error::Config {
        path: path.to_string(),
        message: message.to_string(),
    }
}

impl RunConfig {
    /// Parses, resolves relative paths against `path`'s directory, and
    /// validates.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_json(&bytes)?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    /// Parses without resolving or validating; errors carry the key path.
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_slice(bytes);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_error(&path, e.into_inner())
        })
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        if let Some(inputs) = &mut self.inputs {
            fix(&mut inputs.records);
            fix(&mut inputs.features);
            fix(&mut inputs.labels);
        }
        for c in &mut self.external_channels {
            fix(&mut c.path);
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.synth, &self.inputs) {
            (Some(_), Some(_)) => return Err(config_error("inputs", "set either `synth` or `inputs`, not both")),
            (None, None) => return Err(config_error("inputs", "one of `synth` or `inputs` is required")),
            _ => {}
        }
        if let Some(s) = &self.synth {
            s.generator.validate().map_err(|e| config_error("synth.generator", e))?;
            if s.generator.seed != 0 {
                return Err(config_error("synth.generator.seed", "module seeds derive from the top-level `seed`"));
            }
            if !(s.halo_factor >= 0.0 && s.halo_factor.is_finite()) {
                return Err(config_error("synth.halo_factor", "must be a finite number >= 0"));
            }
        }
        if let Some(inputs) = &self.inputs {
            for (key, p) in [
                ("inputs.records", &inputs.records),
                ("inputs.features", &inputs.features),
                ("inputs.labels", &inputs.labels),
            ] {
                if !p.is_file() {
                    return Err(config_error(key, format!("file {} does not exist", p.display())));
                }
            }
        }
        let mut names: Vec<&str> = self.embeddings.iter().map(|e| e.name()).collect();
        if self.alexametrics_channel {
            names.push("alexametrics");
        }
        for (i, c) in self.external_channels.iter().enumerate() {
            let key = format!("external_channels[{i}]");
            if c.name.is_empty() || c.name.contains(['+', '/', ',']) {
                return Err(config_error(&key, format!("invalid channel name {:?}", c.name)));
            }
            if !c.path.is_file() {
                return Err(config_error(&key, format!("file {} does not exist", c.path.display())));
            }
            names.push(&c.name);
        }
        let mut sorted = names.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(config_error("embeddings", format!("channel {} is listed twice", w[0])));
        }
        if names.is_empty() {
            return Err(config_error("embeddings", "no channel to classify"));
        }
        if self.graph.imputation_k == 0 {
            return Err(config_error("graph.imputation_k", "must be >= 1"));
        }
        self.node2vec.validate().map_err(|e| config_error("node2vec", e))?;
        if self.embeddings.iter().any(|e| e.is_gnn()) {
            self.gnn.validate().map_err(|e| config_error("gnn", e))?;
            let sage = GnnConfig {
                variant: mediaprof_core::gnn::GnnVariant::Sage,
                ..self.gnn.clone()
            };
            if self.embeddings.contains(&EmbeddingKind::Sage) {
                sage.validate().map_err(|e| config_error("gnn.sage_sample_sizes", e))?;
            }
        }
        if !(self.gnn_train_fraction > 0.0 && self.gnn_train_fraction <= 1.0) {
            return Err(config_error("gnn_train_fraction", "must lie in (0, 1]"));
        }
        self.classify.svm.validate().map_err(|e| config_error("classify.svm", e))?;
        if self.classify.folds < 2 {
            return Err(config_error("classify.folds", "must be >= 2"));
        }
        for (key, seed) in [
            ("node2vec.seed", self.node2vec.seed),
            ("gnn.seed", self.gnn.seed),
            ("classify.seed", self.classify.seed),
            ("classify.svm.seed", self.classify.svm.seed),
        ] {
            if seed != 0 {
                return Err(config_error(key, "module seeds derive from the top-level `seed`"));
            }
        }
        Ok(())
    }

    /// Channel names in classification order.
    pub fn channel_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.embeddings.iter().map(|e| e.name().to_string()).collect();
        if self.alexametrics_channel {
            names.push("alexametrics".into());
        }
        names.extend(self.external_channels.iter().map(|c| c.name.clone()));
        names
    }
}
