//! End-to-end run driven by one JSON config.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::artifacts::{self, load_table};
use super::commands::*;
use crate::bagging::{DEFAULT_HIGH_THRESH, DEFAULT_LOW_THRESH, DEFAULT_MIN_RETAIN};
use crate::error::{Error, Result};
use crate::harness::{TrainConfig, DEFAULT_FOLDS};
use crate::losses::Method;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default = "default_low")]
    pub low: usize,
    #[serde(default = "default_high")]
    pub high: usize,
    #[serde(default = "default_min_retain")]
    pub min_retain: f64,
}

fn default_low() -> usize {
    DEFAULT_LOW_THRESH
}
fn default_high() -> usize {
    DEFAULT_HIGH_THRESH
}
fn default_min_retain() -> f64 {
    DEFAULT_MIN_RETAIN
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { low: DEFAULT_LOW_THRESH, high: DEFAULT_HIGH_THRESH, min_retain: DEFAULT_MIN_RETAIN }
    }
}

/// `"all-pairs"` or a list of comma-separated column-name keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KeySpec {
    Named(String),
    List(Vec<String>),
}

impl Default for KeySpec {
    fn default() -> Self {
        KeySpec::List(Vec::new())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSettings {
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_batch")]
    pub batch_bags: usize,
    #[serde(default = "default_patience")]
    pub patience: usize,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    #[serde(default)]
    pub monitor: Option<String>,
    #[serde(default)]
    pub hidden: Option<(usize, usize)>,
    #[serde(default)]
    pub instance_level: bool,
}

fn default_lr() -> f64 {
    TrainConfig::DEFAULT_LR
}
fn default_batch() -> usize {
    TrainConfig::DEFAULT_BATCH
}
fn default_patience() -> usize {
    TrainConfig::DEFAULT_PATIENCE
}
fn default_max_epochs() -> usize {
    TrainConfig::DEFAULT_MAX_EPOCHS
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            lr: TrainConfig::DEFAULT_LR,
            batch_bags: TrainConfig::DEFAULT_BATCH,
            patience: TrainConfig::DEFAULT_PATIENCE,
            max_epochs: TrainConfig::DEFAULT_MAX_EPOCHS,
            monitor: None,
            hidden: None,
            instance_level: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub schema: PathBuf,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub keys: KeySpec,
    /// Random-bag sizes.
    #[serde(default)]
    pub bag_sizes: Vec<usize>,
    #[serde(default)]
    pub methods: Vec<Method>,
    /// Seeds for bagging and training; the global seed when empty.
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub train: TrainSettings,
    #[serde(default = "default_k")]
    pub cluster_k: usize,
    #[serde(default)]
    pub svg: bool,
}

fn default_folds() -> usize {
    DEFAULT_FOLDS
}
fn default_k() -> usize {
    4
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = artifacts::read_artifact(path)?;
        let mut cfg: PipelineConfig = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.input, &mut cfg.schema, &mut cfg.out_dir] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.thresholds;
        if t.low == 0 || t.high == 0 || t.low > t.high {
            return Err(Error::Config("thresholds must be positive with low <= high".into()));
        }
        if !(t.min_retain > 0.0 && t.min_retain <= 1.0) {
            return Err(Error::Config(format!("min_retain must lie in (0, 1], got {}", t.min_retain)));
        }
        if let KeySpec::Named(s) = &self.keys {
            if s != "all-pairs" {
                return Err(Error::Config(format!("keys must be \"all-pairs\" or a list, got {s:?}")));
            }
        }
        if self.bag_sizes.contains(&0) {
            return Err(Error::Config("bag sizes must be positive".into()));
        }
        if self.cluster_k == 0 {
            return Err(Error::Config("cluster_k must be positive".into()));
        }
        Ok(())
    }
}

fn monitor_arg(s: &str) -> Result<MonitorArg> {
    match s {
        "accuracy" => Ok(MonitorArg::Accuracy),
        "auc" => Ok(MonitorArg::Auc),
        "mse" => Ok(MonitorArg::Mse),
        other => Err(Error::Config(format!("unknown monitor {other:?}"))),
    }
}

/// Runs preprocess, bag, filter, metrics, cluster, train and report in sequence.
pub fn run(cfg: &PipelineConfig, ctx: &Ctx) -> Result<()> {
    let out = &cfg.out_dir;
    let table_dir = out.join("table");
    preprocess(&PreprocessArgs {
        input: cfg.input.clone(),
        schema: cfg.schema.clone(),
        out: table_dir.clone(),
    })?;

    let seeds = if cfg.seeds.is_empty() { vec![ctx.seed] } else { cfg.seeds.clone() };
    let bags_dir = out.join("bags");
    let (key_list, all_pairs) = match &cfg.keys {
        KeySpec::Named(_) => (Vec::new(), true),
        KeySpec::List(l) => (l.clone(), false),
    };
    if key_list.is_empty() && !all_pairs && cfg.bag_sizes.is_empty() {
        return Err(Error::Config("config builds no datasets: set keys or bag_sizes".into()));
    }
    if !key_list.is_empty() || all_pairs {
        bag(
            &BagArgs {
                table: table_dir.clone(),
                key: key_list,
                all_pairs,
                random: Vec::new(),
                fixed_feature: None,
                size: None,
                out: bags_dir.clone(),
            },
            ctx,
        )?;
    }
    if !cfg.bag_sizes.is_empty() {
        for &seed in &seeds {
            let sub = Ctx::new(seed, Some(ctx.pool.current_num_threads()))?;
            bag(
                &BagArgs {
                    table: table_dir.clone(),
                    key: Vec::new(),
                    all_pairs: false,
                    random: cfg.bag_sizes.clone(),
                    fixed_feature: None,
                    size: None,
                    out: bags_dir.clone(),
                },
                &sub,
            )?;
        }
    }

    let filtered_dir = out.join("filtered");
    let kept = filter(
        &FilterArgs {
            table: table_dir.clone(),
            bags: bags_dir,
            low: cfg.thresholds.low,
            high: cfg.thresholds.high,
            min_retain: cfg.thresholds.min_retain,
            out: filtered_dir.clone(),
        },
        ctx,
    )?;
    if kept.is_empty() {
        return Err(Error::Validation("no dataset passed the filters".into()));
    }

    let metrics_dir = out.join("metrics");
    let metrics_csv = metrics(
        &MetricsArgs {
            table: table_dir.clone(),
            bags: filtered_dir,
            space: SpaceArg::Multihot,
            out: metrics_dir,
        },
        ctx,
    )?;

    let clusters_dir = out.join("clusters");
    let k = cfg.cluster_k.min(kept.len());
    let clusters = match cluster(
        &ClusterArgs {
            metrics: metrics_csv.clone(),
            axis: AxisArg::All,
            k,
            names: Vec::new(),
            out: clusters_dir,
        },
        ctx,
    ) {
        Ok(p) => Some(p),
        Err(Error::InvalidArgument(msg)) => {
            eprintln!("skipping clustering: {msg}");
            None
        }
        Err(e) => return Err(e),
    };

    let runs_dir = out.join("runs");
    let methods = if cfg.methods.is_empty() { vec![Method::DllpBce] } else { cfg.methods.clone() };
    let task = load_table(&table_dir)?.task();
    let monitor = cfg.train.monitor.as_deref().map(monitor_arg).transpose()?;
    let hidden = cfg.train.hidden.map(|(a, b)| vec![a, b]).unwrap_or_default();
    for f in &kept {
        let mut a = TrainArgs::with_defaults(table_dir.clone(), Some(f.clone()), runs_dir.clone());
        a.method = methods.iter().copied().filter(|m| m.supports(task)).collect();
        if a.method.is_empty() {
            return Err(Error::Config(format!("none of the configured methods applies to a {task:?} task")));
        }
        a.folds = cfg.folds;
        a.seeds = seeds.clone();
        a.lr = cfg.train.lr;
        a.batch_bags = cfg.train.batch_bags;
        a.patience = cfg.train.patience;
        a.max_epochs = cfg.train.max_epochs;
        a.monitor = monitor;
        a.hidden = hidden.clone();
        train_cmd(&a, ctx)?;
    }
    if cfg.train.instance_level {
        let mut a = TrainArgs::with_defaults(table_dir.clone(), None, runs_dir.clone());
        a.seeds = seeds.clone();
        a.lr = cfg.train.lr;
        a.batch_bags = cfg.train.batch_bags;
        a.patience = cfg.train.patience;
        a.max_epochs = cfg.train.max_epochs;
        a.monitor = monitor;
        a.hidden = hidden;
        train_cmd(&a, ctx)?;
    }

    report(&ReportArgs {
        metrics: metrics_csv,
        runs: runs_dir,
        clusters,
        svg: cfg.svg,
        out: out.join("report"),
    })?;
    Ok(())
}
