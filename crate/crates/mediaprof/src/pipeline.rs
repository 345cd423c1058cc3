//! Stage graph, artifact layout, and the cached runner.
//!
//! Layout under `output_dir`, one directory per stage, each with a
//! `manifest.json`:
//!
//! | stage         | outputs                                                      |
//! |---------------|--------------------------------------------------------------|
//! | `synth`       | `records.jsonl`, `features.csv`, `labels.csv`                |
//! | `build-graph` | `nodes.csv`, `edges.csv`, `stats.json`                       |
//! | `impute`      | `features.csv`, `imputation.json`                            |
//! | `embed`       | `<kind>.csv`, `<kind>.json`, `<kind>.checkpoint.json` (GNNs) |
//! | `train`       | `cv.json`                                                    |
//! | `fuse`        | `fusion.json`                                                |
//! | `evaluate`    | `reports.json`                                               |
//! | `report`      | `report.json`, `report.txt`                                  |
//!
//! A stage reruns when its manifest is stale or when a stage it depends on
//! ran earlier in the same invocation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use mediaprof_core::classify::{
    cross_validate_channels, fuse_results, ChannelResult, CvConfig, FusionMode,
    RepresentationChannel, Standardizer,
};
use mediaprof_core::embedding::EmbeddingMatrix;
use mediaprof_core::eval::{majority_cv_report, EvalReport, Task};
use mediaprof_core::features::{impute_missing, presence_rates, NodeFeatures};
use mediaprof_core::gnn::{train_semi_supervised, GnnConfig, GnnVariant, LabelMask};
use mediaprof_core::graph::{GraphStats, IndexedGraph, MediaGraph, RecordMap};
use mediaprof_core::node2vec::{node2vec, Node2VecConfig};
use mediaprof_core::synth::{generate, plant_unlabeled_halo, SynthConfig};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::config::{EmbeddingKind, RunConfig};
use crate::error::{Error, Result};
use crate::io::{
    ingest_external_representation, read_feature_table, read_features, read_graph, read_json,
    read_labels, read_matrix_csv, read_records, write_bytes, write_checkpoint,
    write_feature_table, write_features, write_graph, write_json, write_labels,
    write_matrix_csv, write_records, LabelTable,
};
use crate::manifest::{hash_files, sha256_json, Manifest, TOOL_VERSION};
use crate::report::ReportDocument;
use crate::seeds::module_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, clap::ValueEnum)]
pub enum Stage {
    Synth,
    BuildGraph,
    Impute,
    Embed,
    Train,
    Fuse,
    Evaluate,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Synth,
        Stage::BuildGraph,
        Stage::Impute,
        Stage::Embed,
        Stage::Train,
        Stage::Fuse,
        Stage::Evaluate,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::BuildGraph => "build-graph",
            Stage::Impute => "impute",
            Stage::Embed => "embed",
            Stage::Train => "train",
            Stage::Fuse => "fuse",
            Stage::Evaluate => "evaluate",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which stages ran and which were served from cache, in pipeline order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub executed: Vec<Stage>,
    pub skipped: Vec<Stage>,
}

/// One input of a stage and the stage that produces it (`None` for files
/// supplied by the user).
struct Input {
    path: PathBuf,
    producer: Option<Stage>,
}

struct Plan {
    inputs: Vec<Input>,
    outputs: Vec<PathBuf>,
    config_hash: String,
    seeds: BTreeMap<String, u64>,
}

#[derive(Serialize)]
struct Hashed<'a, T: Serialize> {
    stage: &'a str,
    settings: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GraphStatsFile {
    max_level: u32,
    stats: GraphStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ChannelArtifact {
    report: EvalReport,
    /// Fold model fingerprints as 16-digit hex.
    fingerprints: Vec<String>,
    leakage_ok: Option<bool>,
    test_posteriors: Vec<Vec<Vec<f64>>>,
    train_posteriors: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CvArtifact {
    task: Task,
    /// Labeled domains in evaluation order.
    domains: Vec<String>,
    labels: Vec<usize>,
    folds: Vec<usize>,
    channels: Vec<ChannelArtifact>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FusionArtifact {
    mode: FusionMode,
    /// `None` with a single channel.
    report: Option<EvalReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EvaluationArtifact {
    task: Task,
    labeled_nodes: usize,
    leakage_ok: bool,
    baseline: EvalReport,
    systems: Vec<EvalReport>,
}

fn to_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn from_rows(rows: &[Vec<f64>], cols: usize) -> Result<Array2<f64>> {
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(mediaprof_core::Error::ShapeMismatch("ragged posterior matrix".into()).into());
    }
    Ok(Array2::from_shape_vec((rows.len(), cols), flat).expect("rows checked"))
}

impl ChannelArtifact {
    fn from_result(r: &ChannelResult) -> Self {
        ChannelArtifact {
            report: r.report.clone(),
            fingerprints: r.fingerprints.iter().map(|f| format!("{f:016x}")).collect(),
            leakage_ok: r.leakage_ok,
            test_posteriors: r.test_posteriors.iter().map(to_rows).collect(),
            train_posteriors: r.train_posteriors.iter().map(to_rows).collect(),
        }
    }

    fn to_result(&self, n_classes: usize) -> Result<ChannelResult> {
        let parse = |f: &String| {
            u64::from_str_radix(f, 16).map_err(|_| {
                Error::from(mediaprof_core::Error::Parse(format!("bad fingerprint {f:?}")))
            })
        };
        Ok(ChannelResult {
            report: self.report.clone(),
            fingerprints: self.fingerprints.iter().map(parse).collect::<Result<_>>()?,
            leakage_ok: self.leakage_ok,
            test_posteriors: self
                .test_posteriors
                .iter()
                .map(|m| from_rows(m, n_classes))
                .collect::<Result<_>>()?,
            train_posteriors: self
                .train_posteriors
                .iter()
                .map(|m| from_rows(m, n_classes))
                .collect::<Result<_>>()?,
        })
    }
}

pub struct Pipeline {
    config: RunConfig,
}

impl Pipeline {
    pub fn new(config: RunConfig) -> Self {
        Pipeline { config }
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn root(&self) -> &Path {
        &self.config.output_dir
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.root().join(stage.name())
    }

    pub fn manifest_path(&self, stage: Stage) -> PathBuf {
        self.stage_dir(stage).join("manifest.json")
    }

    pub fn report_json_path(&self) -> PathBuf {
        self.stage_dir(Stage::Report).join("report.json")
    }

    /// Stages that apply to this configuration, in execution order.
    pub fn stages(&self) -> Vec<Stage> {
        Stage::ALL
            .into_iter()
            .filter(|&s| s != Stage::Synth || self.config.synth.is_some())
            .collect()
    }

    fn raw_input(&self, which: &str) -> Input {
        match &self.config.inputs {
            Some(inputs) => Input {
                path: match which {
                    "records" => inputs.records.clone(),
                    "features" => inputs.features.clone(),
                    _ => inputs.labels.clone(),
                },
                producer: None,
            },
            None => Input {
                path: self.stage_dir(Stage::Synth).join(match which {
                    "records" => "records.jsonl",
                    "features" => "features.csv",
                    _ => "labels.csv",
                }),
                producer: Some(Stage::Synth),
            },
        }
    }

    fn out(&self, stage: Stage, file: &str) -> PathBuf {
        self.stage_dir(stage).join(file)
    }

    fn produced(&self, stage: Stage, file: &str) -> Input {
        Input {
            path: self.out(stage, file),
            producer: Some(stage),
        }
    }

    fn graph_inputs(&self) -> Vec<Input> {
        ["nodes.csv", "edges.csv", "stats.json"]
            .into_iter()
            .map(|f| self.produced(Stage::BuildGraph, f))
            .collect()
    }

    fn node2vec_config(&self) -> Node2VecConfig {
        Node2VecConfig {
            seed: module_seed(self.config.seed, "node2vec"),
            ..self.config.node2vec.clone()
        }
    }

    fn gnn_config(&self, kind: EmbeddingKind) -> GnnConfig {
        GnnConfig {
            variant: if kind == EmbeddingKind::Sage {
                GnnVariant::Sage
            } else {
                GnnVariant::Gcn
            },
            seed: module_seed(self.config.seed, kind.name()),
            ..self.config.gnn.clone()
        }
    }

    fn synth_config(&self) -> Option<SynthConfig> {
        self.config.synth.as_ref().map(|s| SynthConfig {
            seed: module_seed(self.config.seed, "synthgen"),
            ..s.generator.clone()
        })
    }

    fn cv_config(&self) -> CvConfig {
        CvConfig {
            seed: module_seed(self.config.seed, "classify"),
            ..self.config.classify.clone()
        }
    }

    fn plan(&self, stage: Stage) -> Plan {
        let c = &self.config;
        let mut seeds = BTreeMap::new();
        let hash = |settings: serde_json::Value| {
            sha256_json(&Hashed {
                stage: stage.name(),
                settings,
            })
        };
        let (inputs, outputs, config_hash) = match stage {
            Stage::Synth => {
                let gen = self.synth_config().unwrap_or_default();
                seeds.insert("synthgen".into(), gen.seed);
                let halo = c.synth.as_ref().map_or(0.0, |s| s.halo_factor);
                (
                    vec![],
                    vec![
                        self.out(stage, "records.jsonl"),
                        self.out(stage, "features.csv"),
                        self.out(stage, "labels.csv"),
                    ],
                    hash(serde_json::json!({ "generator": gen, "halo_factor": halo })),
                )
            }
            Stage::BuildGraph => (
                vec![self.raw_input("records"), self.raw_input("labels")],
                vec![
                    self.out(stage, "nodes.csv"),
                    self.out(stage, "edges.csv"),
                    self.out(stage, "stats.json"),
                ],
                hash(serde_json::json!({ "max_level": c.graph.max_level })),
            ),
            Stage::Impute => {
                let mut inputs = self.graph_inputs();
                inputs.push(self.raw_input("features"));
                (
                    inputs,
                    vec![self.out(stage, "features.csv"), self.out(stage, "imputation.json")],
                    hash(serde_json::json!({ "k": c.graph.imputation_k })),
                )
            }
            Stage::Embed => {
                let mut inputs = self.graph_inputs();
                let mut outputs = Vec::new();
                let mut settings = serde_json::Map::new();
                for &kind in &c.embeddings {
                    outputs.push(self.out(stage, &format!("{}.csv", kind.name())));
                    outputs.push(self.out(stage, &format!("{}.json", kind.name())));
                    if kind.is_gnn() {
                        outputs.push(self.out(stage, &format!("{}.checkpoint.json", kind.name())));
                        let cfg = self.gnn_config(kind);
                        seeds.insert(kind.name().into(), cfg.seed);
                        settings.insert(kind.name().into(), serde_json::to_value(cfg).expect("serializable"));
                    } else {
                        let cfg = self.node2vec_config();
                        seeds.insert(kind.name().into(), cfg.seed);
                        settings.insert(kind.name().into(), serde_json::to_value(cfg).expect("serializable"));
                    }
                }
                if c.embeddings.iter().any(|k| k.is_gnn()) {
                    inputs.push(self.produced(Stage::Impute, "features.csv"));
                    inputs.push(self.raw_input("labels"));
                    let split = module_seed(c.seed, "gnn_split");
                    seeds.insert("gnn_split".into(), split);
                    settings.insert("task".into(), serde_json::to_value(c.task).expect("serializable"));
                    settings.insert("train_fraction".into(), c.gnn_train_fraction.into());
                    settings.insert("split_seed".into(), split.into());
                }
                (inputs, outputs, hash(serde_json::Value::Object(settings)))
            }
            Stage::Train => {
                let mut inputs = vec![
                    self.produced(Stage::BuildGraph, "nodes.csv"),
                    self.raw_input("labels"),
                ];
                for &kind in &c.embeddings {
                    inputs.push(self.produced(Stage::Embed, &format!("{}.csv", kind.name())));
                }
                if c.alexametrics_channel {
                    inputs.push(self.produced(Stage::Impute, "features.csv"));
                }
                for ext in &c.external_channels {
                    inputs.push(Input {
                        path: ext.path.clone(),
                        producer: None,
                    });
                }
                let cv = self.cv_config();
                seeds.insert("classify".into(), cv.seed);
                (
                    inputs,
                    vec![self.out(stage, "cv.json")],
                    hash(serde_json::json!({
                        "task": c.task,
                        "channels": c.channel_names(),
                        "cv": CvConfig { fusion: FusionMode::Uniform, ..cv },
                    })),
                )
            }
            Stage::Fuse => (
                vec![self.produced(Stage::Train, "cv.json")],
                vec![self.out(stage, "fusion.json")],
                hash(serde_json::json!({ "mode": c.classify.fusion })),
            ),
            Stage::Evaluate => (
                vec![
                    self.produced(Stage::Train, "cv.json"),
                    self.produced(Stage::Fuse, "fusion.json"),
                ],
                vec![self.out(stage, "reports.json")],
                hash(serde_json::json!({})),
            ),
            Stage::Report => (
                vec![
                    self.produced(Stage::Evaluate, "reports.json"),
                    self.produced(Stage::BuildGraph, "stats.json"),
                ],
                vec![self.out(stage, "report.json"), self.out(stage, "report.txt")],
                hash(serde_json::json!({ "master_seed": c.seed })),
            ),
        };
        Plan {
            inputs,
            outputs,
            config_hash,
            seeds,
        }
    }

    /// Stages whose outputs `stage` reads.
    pub fn dependencies(&self, stage: Stage) -> BTreeSet<Stage> {
        self.plan(stage)
            .inputs
            .iter()
            .filter_map(|i| i.producer)
            .collect()
    }

    /// Runs one stage. `force` ignores the manifest.
    pub fn run_stage(&self, stage: Stage, force: bool) -> Result<bool> {
        self.run_one(stage, force)
    }

    fn run_one(&self, stage: Stage, force: bool) -> Result<bool> {
        if stage == Stage::Synth && self.config.synth.is_none() {
            return Err(Error::Config {
                path: "synth".into(),
                message: "the `synth` stage needs a `synth` section in the config".into(),
            });
        }
        let plan = self.plan(stage);
        for input in &plan.inputs {
            if !input.path.is_file() {
                return Err(match input.producer {
                    Some(upstream) => Error::MissingDependency {
                        stage,
                        upstream,
                        artifact: input.path.clone(),
                    },
                    None => Error::io(
                        &input.path,
                        std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found"),
                    ),
                });
            }
        }
        let root = self.root();
        let input_paths: Vec<PathBuf> = plan.inputs.iter().map(|i| i.path.clone()).collect();
        if !force {
            if let Some(m) = Manifest::read(&self.manifest_path(stage)) {
                match m.staleness(root, &plan.config_hash, &input_paths) {
                    None => {
                        log::info!("{stage}: up to date");
                        return Ok(false);
                    }
                    Some(why) => log::info!("{stage}: {why}; rerunning"),
                }
            }
        }
        log::info!("{stage}: running");
        let inputs = hash_files(root, &input_paths)?;
        if let Err(e) = self.execute(stage) {
            let _ = std::fs::remove_file(self.manifest_path(stage));
            return Err(e);
        }
        Manifest {
            stage: stage.name().into(),
            tool_version: TOOL_VERSION.into(),
            config_hash: plan.config_hash,
            seeds: plan.seeds,
            inputs,
            outputs: hash_files(root, &plan.outputs)?,
        }
        .write(&self.manifest_path(stage))?;
        Ok(true)
    }

    /// Runs every applicable stage in order, up to and including `until`.
    pub fn run_all(&self, until: Option<Stage>, force: bool) -> Result<RunSummary> {
        let mut summary = RunSummary::default();
        for stage in self.stages() {
            if until.is_some_and(|u| stage > u) {
                break;
            }
            let upstream_ran = self
                .dependencies(stage)
                .iter()
                .any(|d| summary.executed.contains(d));
            if self.run_one(stage, force || upstream_ran)? {
                summary.executed.push(stage);
            } else {
                summary.skipped.push(stage);
            }
        }
        Ok(summary)
    }

    fn execute(&self, stage: Stage) -> Result<()> {
        match stage {
            Stage::Synth => self.exec_synth(),
            Stage::BuildGraph => self.exec_build_graph(),
            Stage::Impute => self.exec_impute(),
            Stage::Embed => self.exec_embed(),
            Stage::Train => self.exec_train(),
            Stage::Fuse => self.exec_fuse(),
            Stage::Evaluate => self.exec_evaluate(),
            Stage::Report => self.exec_report(),
        }
    }

    fn exec_synth(&self) -> Result<()> {
        let section = self.config.synth.as_ref().expect("checked by run_one");
        let gen = self.synth_config().expect("synth section present");
        let base = generate(&gen)?;
        let data = plant_unlabeled_halo(&base, section.halo_factor)?;
        let stage = Stage::Synth;
        write_records(&self.out(stage, "records.jsonl"), &data.records)?;
        let rows: Vec<_> = data.domains.iter().cloned().zip(data.metrics.iter().cloned()).collect();
        write_features(&self.out(stage, "features.csv"), &rows)?;
        let mut labels = LabelTable::default();
        for (d, l) in data.domains.iter().zip(&data.labels) {
            let f = l.factuality.as_deref().and_then(|s| Task::Factuality.class_index(s));
            let b = l.bias.as_deref().and_then(|s| Task::Bias.class_index(s));
            labels.rows.insert(d.clone(), [f, b]);
        }
        write_labels(&self.out(stage, "labels.csv"), &labels)?;
        log::info!(
            "synth: {} nodes, {} edges, {} labeled",
            data.domains.len(),
            data.edges.len(),
            data.labeled_count()
        );
        Ok(())
    }

    fn exec_build_graph(&self) -> Result<()> {
        let records = read_records(&self.raw_input("records").path)?;
        let source = RecordMap::from_records(records)?;
        let seeds = read_labels(&self.raw_input("labels").path)?.seeds();
        let mut graph = MediaGraph::build_level0(&seeds, &source)?;
        graph.expand_to(&source, self.config.graph.max_level)?;
        let stage = Stage::BuildGraph;
        write_graph(&self.out(stage, "nodes.csv"), &self.out(stage, "edges.csv"), &graph)?;
        let stats = graph.stats();
        log::info!(
            "build-graph: level {}: {} nodes, {} edges",
            graph.max_level(),
            stats.node_count,
            stats.edge_count
        );
        write_json(
            &self.out(stage, "stats.json"),
            &GraphStatsFile {
                max_level: graph.max_level(),
                stats,
            },
        )
    }

    fn load_graph(&self) -> Result<IndexedGraph> {
        let stats: GraphStatsFile = read_json(&self.out(Stage::BuildGraph, "stats.json"))?;
        let graph = read_graph(
            &self.out(Stage::BuildGraph, "nodes.csv"),
            &self.out(Stage::BuildGraph, "edges.csv"),
            Some(stats.max_level),
        )?;
        Ok(graph.indexed())
    }

    fn exec_impute(&self) -> Result<()> {
        let graph = self.load_graph()?;
        let raw: BTreeMap<String, _> = read_features(&self.raw_input("features").path)?
            .into_iter()
            .collect();
        let outside = raw.keys().filter(|d| graph.index_of(d).is_none()).count();
        if outside > 0 {
            log::info!("impute: {outside} feature rows name domains outside the graph");
        }
        let features: Vec<NodeFeatures> = graph
            .domains()
            .iter()
            .map(|d| raw.get(d).map_or_else(NodeFeatures::empty, NodeFeatures::from_raw))
            .collect();
        let (imputed, summary) = impute_missing(&graph, &features, self.config.graph.imputation_k)?;
        let stage = Stage::Impute;
        write_feature_table(&self.out(stage, "features.csv"), graph.domains(), &imputed)?;
        write_json(
            &self.out(stage, "imputation.json"),
            &serde_json::json!({
                "nodes": graph.node_count(),
                "rows_outside_graph": outside,
                "presence_rates": presence_rates(&features),
                "summary": summary,
            }),
        )
    }

    fn task_labels(&self, order: &[String]) -> Result<Vec<Option<usize>>> {
        let labels = read_labels(&self.raw_input("labels").path)?;
        Ok(order.iter().map(|d| labels.get(d, self.config.task)).collect())
    }

    fn standardized_features(&self, graph: &IndexedGraph) -> Result<Array2<f64>> {
        let path = self.out(Stage::Impute, "features.csv");
        let (domains, x) = read_feature_table(&path)?;
        if domains != graph.domains() {
            return Err(Error::format(&path, 0, "feature rows do not match the graph nodes; rerun `impute`"));
        }
        let std = Standardizer::fit(x.view())?;
        Ok(std.transform(x.view())?)
    }

    fn exec_embed(&self) -> Result<()> {
        let graph = self.load_graph()?;
        let stage = Stage::Embed;
        for &kind in &self.config.embeddings {
            let name = kind.name();
            let (emb, sidecar): (EmbeddingMatrix, serde_json::Value) = match kind {
                EmbeddingKind::Node2vec => {
                    let cfg = self.node2vec_config();
                    let (emb, report) = node2vec(&graph, &cfg)?;
                    let untrained: Vec<&str> =
                        report.untrained.iter().map(|&v| graph.domain(v)).collect();
                    let side = serde_json::json!({
                        "provenance": name,
                        "nodes": emb.domains.len(),
                        "dim": emb.dim(),
                        "seed": cfg.seed,
                        "config": cfg,
                        "epoch_losses": report.epoch_losses,
                        "untrained": untrained,
                    });
                    (emb, side)
                }
                EmbeddingKind::Gcn | EmbeddingKind::Sage => {
                    let cfg = self.gnn_config(kind);
                    let x = self.standardized_features(&graph)?;
                    let labels = self.task_labels(graph.domains())?;
                    let split_seed = module_seed(self.config.seed, "gnn_split");
                    let mask = LabelMask::stratified(
                        labels,
                        self.config.task.classes().len(),
                        self.config.gnn_train_fraction,
                        split_seed,
                    )?;
                    let (model, emb, report) = train_semi_supervised(&graph, x.view(), &mask, &cfg)?;
                    write_checkpoint(&self.out(stage, &format!("{name}.checkpoint.json")), &model)?;
                    log::info!(
                        "embed: {name} train accuracy {:.4}, held-out {:?}",
                        report.train_accuracy,
                        report.test_accuracy
                    );
                    let side = serde_json::json!({
                        "provenance": name,
                        "nodes": emb.domains.len(),
                        "dim": emb.dim(),
                        "seed": cfg.seed,
                        "split_seed": split_seed,
                        "task": self.config.task,
                        "train_fraction": self.config.gnn_train_fraction,
                        "config": cfg,
                        "report": report,
                    });
                    (emb, side)
                }
            };
            if !emb.is_finite() {
                return Err(mediaprof_core::Error::Diverged {
                    epoch: 0,
                    loss: f64::NAN,
                }
                .into());
            }
            write_matrix_csv(&self.out(stage, &format!("{name}.csv")), "e", &emb.domains, &emb.vectors)?;
            write_json(&self.out(stage, &format!("{name}.json")), &sidecar)?;
        }
        Ok(())
    }

    fn channels(&self, order: &[String]) -> Result<Vec<RepresentationChannel>> {
        let mut channels = Vec::new();
        for &kind in &self.config.embeddings {
            let path = self.out(Stage::Embed, &format!("{}.csv", kind.name()));
            let rows = read_matrix_csv(&path, "e")?;
            let ch = RepresentationChannel::align(kind.name(), order, &rows)
                .map_err(|e| Error::format(&path, 0, e.to_string()))?;
            channels.push(ch);
        }
        if self.config.alexametrics_channel {
            let (domains, x) = read_feature_table(&self.out(Stage::Impute, "features.csv"))?;
            let rows: Vec<(String, Vec<f64>)> = domains
                .into_iter()
                .zip(x.rows().into_iter().map(|r| r.to_vec()))
                .collect();
            channels.push(RepresentationChannel::align("alexametrics", order, &rows)?);
        }
        for ext in &self.config.external_channels {
            channels.push(ingest_external_representation(&ext.path, &ext.name, order)?);
        }
        Ok(channels)
    }

    fn exec_train(&self) -> Result<()> {
        let nodes = self.out(Stage::BuildGraph, "nodes.csv");
        let order: Vec<String> = read_graph(&nodes, &self.out(Stage::BuildGraph, "edges.csv"), None)
            .map(|g| g.nodes().map(|n| n.domain).collect())
            .or_else(|_| -> Result<Vec<String>> {
                // The edge file is not an input of this stage; read nodes alone.
                let empty = self.root().join(".empty-edges.csv");
                write_bytes(&empty, b"domain_a,domain_b,score\n")?;
                let g = read_graph(&nodes, &empty, None);
                let _ = std::fs::remove_file(&empty);
                Ok(g?.nodes().map(|n| n.domain).collect())
            })?;
        let task = self.config.task;
        let labels = self.task_labels(&order)?;
        let (rows, y): (Vec<usize>, Vec<usize>) = labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.map(|c| (i, c)))
            .unzip();
        if rows.is_empty() {
            return Err(mediaprof_core::Error::InvalidArgument(format!(
                "no graph node carries a {} label",
                task.name()
            ))
            .into());
        }
        let channels = self.channels(&order)?;
        let (folds, results) = cross_validate_channels(&channels, &rows, &y, task, &self.cv_config())?;
        let artifact = CvArtifact {
            task,
            domains: rows.iter().map(|&i| order[i].clone()).collect(),
            labels: y,
            folds,
            channels: results.iter().map(ChannelArtifact::from_result).collect(),
        };
        write_json(&self.out(Stage::Train, "cv.json"), &artifact)?;
        let leaked: Vec<String> = results
            .iter()
            .filter(|r| r.leakage_ok == Some(false))
            .map(|r| r.report.system.clone())
            .collect();
        if !leaked.is_empty() {
            return Err(Error::Leakage(leaked));
        }
        Ok(())
    }

    fn load_cv(&self) -> Result<(CvArtifact, Vec<ChannelResult>)> {
        let cv: CvArtifact = read_json(&self.out(Stage::Train, "cv.json"))?;
        let n_classes = cv.task.classes().len();
        let results = cv
            .channels
            .iter()
            .map(|c| c.to_result(n_classes))
            .collect::<Result<Vec<_>>>()?;
        Ok((cv, results))
    }

    fn exec_fuse(&self) -> Result<()> {
        let (cv, results) = self.load_cv()?;
        let mode = self.config.classify.fusion;
        let report = if results.len() > 1 {
            Some(fuse_results(&results, &cv.folds, &cv.labels, cv.task, mode)?)
        } else {
            None
        };
        write_json(&self.out(Stage::Fuse, "fusion.json"), &FusionArtifact { mode, report })
    }

    fn exec_evaluate(&self) -> Result<()> {
        let (cv, results) = self.load_cv()?;
        let fusion: FusionArtifact = read_json(&self.out(Stage::Fuse, "fusion.json"))?;
        let baseline = majority_cv_report(cv.task, &cv.folds, &cv.labels)?;
        let mut systems: Vec<EvalReport> = results.iter().map(|r| r.report.clone()).collect();
        systems.extend(fusion.report);
        write_json(
            &self.out(Stage::Evaluate, "reports.json"),
            &EvaluationArtifact {
                task: cv.task,
                labeled_nodes: cv.labels.len(),
                leakage_ok: results.iter().all(|r| r.leakage_ok != Some(false)),
                baseline,
                systems,
            },
        )
    }

    fn exec_report(&self) -> Result<()> {
        let eval: EvaluationArtifact = read_json(&self.out(Stage::Evaluate, "reports.json"))?;
        let stats: GraphStatsFile = read_json(&self.out(Stage::BuildGraph, "stats.json"))?;
        let mut systems = eval.systems;
        systems.push(eval.baseline);
        let doc = ReportDocument::new(
            eval.task,
            self.config.seed,
            eval.labeled_nodes,
            Some(stats.stats),
            eval.leakage_ok,
            systems,
        );
        write_bytes(&self.out(Stage::Report, "report.json"), &doc.to_json())?;
        write_bytes(&self.out(Stage::Report, "report.txt"), doc.render_text().as_bytes())?;
        print!("{}", doc.render_text());
        Ok(())
    }

    /// Reads the final report of a completed run.
    pub fn read_report(&self) -> Result<ReportDocument> {
        read_json(&self.report_json_path())
    }
}
