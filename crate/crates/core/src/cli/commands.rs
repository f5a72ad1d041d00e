use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::artifacts::*;
use super::svg;
use crate::bagging::{
    enumerate_candidate_keys, filter_bags, fixed_size_feature_bags, group_by_key,
    passes_dataset_filter, random_fixed_bags, read_bag_file, retained_instance_fraction,
    write_bag_file, GroupingKey, DEFAULT_HIGH_THRESH, DEFAULT_LOW_THRESH,
    DEFAULT_MIN_RETAIN,
};
use crate::characterize::{self, Axis, ClusterAssignment};
use crate::error::{Error, Result};
use crate::harness::{
    instance_level_train, k_fold_split, train, Monitor, TrainConfig, TrainRun, DEFAULT_FOLDS,
};
use crate::ingest::{self, CsvOptions, InstanceTable, SchemaFile, Task};
use crate::losses::Method;
use crate::metrics::{
    compute_report, skewed_large_bag_fraction, FeatureSpace, HardnessReport, CSV_COLUMNS,
};
use crate::model::encode_table;

/// Label-proportion cutoffs at which the skewed large-bag fraction is reported.
pub const SKEW_EPS: [f64; 2] = [0.1, 0.05];

pub struct Ctx {
    pub seed: u64,
    pub pool: rayon::ThreadPool,
}

impl Ctx {
    pub fn new(seed: u64, jobs: Option<usize>) -> Result<Self> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = jobs {
            if n == 0 {
                return Err(Error::Config("--jobs must be at least 1".into()));
            }
            b = b.num_threads(n);
        }
        let pool = b
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        Ok(Ctx { seed, pool })
    }
}

fn fp_hex(table: &InstanceTable) -> String {
    crate::fingerprint::to_hex(table.fingerprint())
}

// ---------------------------------------------------------------- preprocess

#[derive(Args, Debug, Clone)]
pub struct PreprocessArgs {
    /// Raw CSV/TSV file.
    #[arg(long)]
    pub input: PathBuf,
    /// JSON schema sidecar.
    #[arg(long)]
    pub schema: PathBuf,
    /// Output directory for the encoded table, its metadata and vocabulary.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn preprocess(a: &PreprocessArgs) -> Result<()> {
    require(&a.schema)?;
    require(&a.input)?;
    let schema = SchemaFile::load(&a.schema)?;
    let opts = CsvOptions {
        header: schema.header,
        delimiter: schema.delimiter,
        na_values: schema.na_values.clone(),
    };
    let raw = ingest::load_csv(&a.input, &schema.column_specs(), &opts)?;
    let (table, vocab) = ingest::preprocess(&raw, &schema)?;
    let hash = config_hash(&json!({"command": "preprocess", "schema": schema}))?;
    let mut meta = table.meta(Some(schema.mode));
    meta.config_hash = Some(hash);
    write_atomic(&a.out.join(TABLE_CSV), &table.to_csv_bytes())?;
    write_json(&a.out.join(TABLE_META), &meta)?;
    write_json(&a.out.join(VOCAB_JSON), &vocab)?;
    eprintln!("encoded {} rows into {}", table.len(), a.out.display());
    Ok(())
}

// ---------------------------------------------------------------------- bag

#[derive(Args, Debug, Clone)]
pub struct BagArgs {
    /// Directory holding the encoded table.
    #[arg(long)]
    pub table: PathBuf,
    /// Grouping key as comma-separated column names; repeat for several datasets.
    #[arg(long)]
    pub key: Vec<String>,
    /// One dataset per single column and per pair of columns.
    #[arg(long)]
    pub all_pairs: bool,
    /// Random bags of this size; repeat or comma-separate for several sizes.
    #[arg(long, value_delimiter = ',')]
    pub random: Vec<usize>,
    /// Fixed-size feature bags grouped by this key (needs --size).
    #[arg(long)]
    pub fixed_feature: Option<String>,
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

enum BagJob {
    Key(GroupingKey),
    Random(usize),
    Fixed(GroupingKey, usize),
}

pub fn bag(a: &BagArgs, ctx: &Ctx) -> Result<Vec<PathBuf>> {
    let table = load_table(&a.table)?;
    let mut jobs = Vec::new();
    for k in &a.key {
        jobs.push(BagJob::Key(GroupingKey::parse_names(k, &table)?));
    }
    if a.all_pairs {
        for k in enumerate_candidate_keys(table.n_cat(), 2)? {
            jobs.push(BagJob::Key(k));
        }
    }
    for &q in &a.random {
        jobs.push(BagJob::Random(q));
    }
    if let Some(k) = &a.fixed_feature {
        let q = a
            .size
            .ok_or_else(|| Error::Config("--fixed-feature needs --size".into()))?;
        jobs.push(BagJob::Fixed(GroupingKey::parse_names(k, &table)?, q));
    }
    if jobs.is_empty() {
        return Err(Error::Config(
            "nothing to build: pass --key, --all-pairs, --random or --fixed-feature".into(),
        ));
    }
    let seed = ctx.seed;
    let written: Vec<Result<PathBuf>> = ctx.pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let (id, coll) = match job {
                    BagJob::Key(k) => (format!("key-{}", k.display_name(&table)), group_by_key(&table, k)?),
                    BagJob::Random(q) => (format!("random-q{q}-s{seed}"), random_fixed_bags(&table, *q, seed)?),
                    BagJob::Fixed(k, q) => (
                        format!("fixed-{}-q{q}-s{seed}", k.display_name(&table)),
                        fixed_size_feature_bags(&table, k, *q, seed)?,
                    ),
                };
                let hash = config_hash(&json!({"command": "bag", "provenance": coll.provenance}))?;
                let path = a.out.join(format!("{id}{BAGS_SUFFIX}"));
                let mut buf = Vec::new();
                write_bag_file(&mut buf, &coll, &table, Some(hash))?;
                write_atomic(&path, &buf)?;
                Ok(path)
            })
            .collect()
    });
    let written = written.into_iter().collect::<Result<Vec<_>>>()?;
    eprintln!("wrote {} bag files to {}", written.len(), a.out.display());
    Ok(written)
}

// ------------------------------------------------------------------- filter

#[derive(Args, Debug, Clone)]
pub struct FilterArgs {
    #[arg(long)]
    pub table: PathBuf,
    /// A bag file or a directory of bag files.
    #[arg(long)]
    pub bags: PathBuf,
    /// Smallest bag size kept.
    #[arg(long, default_value_t = DEFAULT_LOW_THRESH)]
    pub low: usize,
    /// Largest bag size kept.
    #[arg(long, default_value_t = DEFAULT_HIGH_THRESH)]
    pub high: usize,
    /// Minimum fraction of instances a dataset must retain to be kept.
    #[arg(long, default_value_t = DEFAULT_MIN_RETAIN)]
    pub min_retain: f64,
    #[arg(long)]
    pub out: PathBuf,
}

pub const FILTER_COLUMNS: [&str; 11] = [
    "dataset_id",
    "bags_before",
    "bags_after",
    "instances_before",
    "instances_after",
    "retained_fraction",
    "kept",
    "skewed_large_eps0.1",
    "skewed_large_eps0.05",
    "table_fingerprint",
    "config_hash",
];

pub fn filter(a: &FilterArgs, ctx: &Ctx) -> Result<Vec<PathBuf>> {
    if a.low == 0 || a.low > a.high {
        return Err(Error::Config(format!(
            "thresholds must satisfy 0 < low <= high, got low {} high {}",
            a.low, a.high
        )));
    }
    if !(a.min_retain > 0.0 && a.min_retain <= 1.0) {
        return Err(Error::Config(format!("min_retain must lie in (0, 1], got {}", a.min_retain)));
    }
    let table = load_table(&a.table)?;
    let files = bag_files(&a.bags)?;
    let hash = config_hash(&json!({
        "command": "filter", "low": a.low, "high": a.high, "min_retain": a.min_retain
    }))?;
    let fp = fp_hex(&table);
    let results: Vec<Result<(Vec<String>, Option<PathBuf>)>> = ctx.pool.install(|| {
        files
            .par_iter()
            .map(|f| {
                let id = dataset_id(f);
                let (_, coll) = read_bag_file(f, &table)?;
                let kept = filter_bags(&coll, a.low, Some(a.high))?;
                let pass = !kept.is_empty() && passes_dataset_filter(&kept, &table, a.min_retain);
                let mut skew = Vec::new();
                for eps in SKEW_EPS {
                    skew.push(fmt_f64(skewed_large_bag_fraction(&table, &coll, a.high, eps)?));
                }
                let row = vec![
                    id.clone(),
                    coll.len().to_string(),
                    kept.len().to_string(),
                    coll.num_instances().to_string(),
                    kept.num_instances().to_string(),
                    fmt_f64(retained_instance_fraction(&kept, &table)),
                    pass.to_string(),
                    skew[0].clone(),
                    skew[1].clone(),
                    fp.clone(),
                    hash.clone(),
                ];
                let path = if pass {
                    let p = a.out.join(format!("{id}{BAGS_SUFFIX}"));
                    let mut buf = Vec::new();
                    write_bag_file(&mut buf, &kept, &table, Some(hash.clone()))?;
                    write_atomic(&p, &buf)?;
                    Some(p)
                } else {
                    None
                };
                Ok((row, path))
            })
            .collect()
    });
    let mut rows = Vec::new();
    let mut kept_files = Vec::new();
    for r in results {
        let (row, path) = r?;
        rows.push(row);
        kept_files.extend(path);
    }
    write_csv(&a.out.join(FILTER_SUMMARY), &FILTER_COLUMNS, &rows)?;
    eprintln!("kept {} of {} datasets", kept_files.len(), rows.len());
    Ok(kept_files)
}

// ------------------------------------------------------------------ metrics

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceArg {
    Multihot,
    RawNumeric,
}

#[derive(Args, Debug, Clone)]
pub struct MetricsArgs {
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long)]
    pub bags: PathBuf,
    /// Instance space used for bag separation.
    #[arg(long, value_enum, default_value_t = SpaceArg::Multihot)]
    pub space: SpaceArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsArtifact {
    pub dataset_id: String,
    pub table_fingerprint: String,
    pub bags_fingerprint: String,
    pub config_hash: String,
    pub report: HardnessReport,
}

pub fn metrics(a: &MetricsArgs, ctx: &Ctx) -> Result<PathBuf> {
    let table = load_table(&a.table)?;
    let files = bag_files(&a.bags)?;
    let space = match a.space {
        SpaceArg::Multihot => FeatureSpace::multihot(&table),
        SpaceArg::RawNumeric => FeatureSpace::raw_numeric(&table)?,
    };
    let hash = config_hash(&json!({"command": "metrics", "space": a.space}))?;
    let fp = fp_hex(&table);
    let rows: Vec<Result<Vec<String>>> = ctx.pool.install(|| {
        files
            .par_iter()
            .map(|f| {
                let id = dataset_id(f);
                let (_, coll) = read_bag_file(f, &table)?;
                let report = compute_report(&table, &coll, &space)?;
                let row = report.csv_row(&id);
                let art = MetricsArtifact {
                    dataset_id: id.clone(),
                    table_fingerprint: fp.clone(),
                    bags_fingerprint: file_fingerprint(f)?,
                    config_hash: hash.clone(),
                    report,
                };
                write_json(&a.out.join(format!("{id}{METRICS_JSON_SUFFIX}")), &art)?;
                write_csv(&a.out.join(format!("{id}{METRICS_CSV_SUFFIX}")), &CSV_COLUMNS, std::slice::from_ref(&row))?;
                Ok(row)
            })
            .collect()
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let path = a.out.join(METRICS_CSV);
    write_csv(&path, &CSV_COLUMNS, &rows)?;
    eprintln!("metrics for {} datasets in {}", rows.len(), path.display());
    Ok(path)
}

// ------------------------------------------------------------------ cluster

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    All,
    TailSize,
    LabelVariation,
    BagSeparation,
}

#[derive(Args, Debug, Clone)]
pub struct ClusterArgs {
    /// Aggregate metrics CSV written by `metrics`.
    #[arg(long)]
    pub metrics: PathBuf,
    #[arg(long, value_enum, default_value_t = AxisArg::All)]
    pub axis: AxisArg,
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// Cluster names in increasing order of the axis statistic (single axis only).
    #[arg(long, value_delimiter = ',')]
    pub names: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
struct ClusterArtifact {
    metrics_fingerprint: String,
    config_hash: String,
    clusterings: Vec<ClusterAssignment>,
}

pub const CLUSTERS_CSV: &str = "clusters.csv";
pub const CLUSTERS_JSON: &str = "clusters.json";

pub fn cluster(a: &ClusterArgs, ctx: &Ctx) -> Result<PathBuf> {
    let (header, rows) = read_csv_records(&a.metrics)?;
    let col = |n: &str| column(&header, n, &a.metrics);
    let id_c = col("dataset_id")?;
    let num = |row: &[String], c: usize| -> Result<f64> {
        row[c].parse::<f64>().map_err(|_| {
            Error::Validation(format!("{}: {:?} is not a number", a.metrics.display(), row[c]))
        })
    };
    let axes: Vec<Axis> = match a.axis {
        AxisArg::All => vec![Axis::TailSize, Axis::LabelVariation, Axis::BagSeparation],
        AxisArg::TailSize => vec![Axis::TailSize],
        AxisArg::LabelVariation => vec![Axis::LabelVariation],
        AxisArg::BagSeparation => vec![Axis::BagSeparation],
    };
    if !a.names.is_empty() && axes.len() != 1 {
        return Err(Error::Config("--names needs a single --axis".into()));
    }
    let names = (!a.names.is_empty()).then(|| a.names.clone());
    let mut out = Vec::new();
    for axis in &axes {
        let res = match axis {
            Axis::TailSize => {
                let cs = ["pct50", "pct70", "pct85", "pct95"]
                    .into_iter()
                    .map(col)
                    .collect::<Result<Vec<_>>>()?;
                let mut items = Vec::new();
                for r in &rows {
                    let mut t = [0.0; 4];
                    for (v, &c) in t.iter_mut().zip(&cs) {
                        *v = num(r, c)?;
                    }
                    items.push((r[id_c].clone(), t));
                }
                characterize::classify_tail_size(&items, a.k, ctx.seed, names.clone())?
            }
            Axis::LabelVariation | Axis::BagSeparation => {
                let c = col(if *axis == Axis::LabelVariation {
                    "label_prop_stdev"
                } else {
                    "inter_intra_ratio"
                })?;
                let items = rows
                    .iter()
                    .map(|r| Ok((r[id_c].clone(), num(r, c)?)))
                    .collect::<Result<Vec<_>>>()?;
                if *axis == Axis::LabelVariation {
                    characterize::classify_label_variation(&items, a.k, ctx.seed, names.clone())?
                } else {
                    characterize::classify_bag_separation(&items, a.k, ctx.seed, names.clone())?
                }
            }
        };
        out.push(res);
    }
    let mut csv_rows = Vec::new();
    for res in &out {
        for (id, c) in &res.assignments {
            csv_rows.push(vec![id.clone(), res.axis.as_str().to_string(), res.names[*c].clone()]);
        }
    }
    let path = a.out.join(CLUSTERS_CSV);
    write_csv(&path, &["dataset_id", "axis", "cluster_name"], &csv_rows)?;
    let art = ClusterArtifact {
        metrics_fingerprint: file_fingerprint(&a.metrics)?,
        config_hash: config_hash(&json!({
            "command": "cluster", "k": a.k, "seed": ctx.seed,
            "axes": axes, "names": a.names
        }))?,
        clusterings: out,
    };
    write_json(&a.out.join(CLUSTERS_JSON), &art)?;
    Ok(path)
}

// -------------------------------------------------------------------- train

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MonitorArg {
    Accuracy,
    Auc,
    Mse,
}

impl From<MonitorArg> for Monitor {
    fn from(m: MonitorArg) -> Self {
        match m {
            MonitorArg::Accuracy => Monitor::Accuracy,
            MonitorArg::Auc => Monitor::Auc,
            MonitorArg::Mse => Monitor::Mse,
        }
    }
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse::<Method>().map_err(|e| e.to_string())
}

#[derive(Args, Debug, Clone)]
pub struct TrainArgs {
    #[arg(long)]
    pub table: PathBuf,
    /// Filtered bag file of the dataset to train on.
    #[arg(long, required_unless_present = "instance_level")]
    pub bags: Option<PathBuf>,
    /// Train on individual labels with an 80:20 split instead of bags.
    #[arg(long)]
    pub instance_level: bool,
    /// Methods to run; repeat or comma-separate.
    #[arg(long, value_delimiter = ',', value_parser = parse_method, default_value = "dllp-bce")]
    pub method: Vec<Method>,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    pub folds: usize,
    /// Seeds to run; defaults to the global seed.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = TrainConfig::DEFAULT_LR)]
    pub lr: f64,
    /// Bags per minibatch.
    #[arg(long, default_value_t = TrainConfig::DEFAULT_BATCH)]
    pub batch_bags: usize,
    #[arg(long, default_value_t = TrainConfig::DEFAULT_PATIENCE)]
    pub patience: usize,
    #[arg(long, default_value_t = TrainConfig::DEFAULT_MAX_EPOCHS)]
    pub max_epochs: usize,
    /// Early-stopping metric; accuracy for binary labels and MSE for regression by default.
    #[arg(long, value_enum)]
    pub monitor: Option<MonitorArg>,
    /// Hidden layer widths, e.g. 128,64.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub ot_epochs: usize,
    #[arg(long, default_value_t = 1.0)]
    pub sim_lambda: f64,
    /// Record wall-clock seconds in run files (makes them differ between runs).
    #[arg(long)]
    pub time: bool,
    #[arg(long)]
    pub out: PathBuf,
}

impl TrainArgs {
    pub fn with_defaults(table: PathBuf, bags: Option<PathBuf>, out: PathBuf) -> Self {
        TrainArgs {
            table,
            instance_level: bags.is_none(),
            bags,
            method: vec![Method::DllpBce],
            folds: DEFAULT_FOLDS,
            seeds: Vec::new(),
            lr: TrainConfig::DEFAULT_LR,
            batch_bags: TrainConfig::DEFAULT_BATCH,
            patience: TrainConfig::DEFAULT_PATIENCE,
            max_epochs: TrainConfig::DEFAULT_MAX_EPOCHS,
            monitor: None,
            hidden: Vec::new(),
            ot_epochs: 10,
            sim_lambda: 1.0,
            time: false,
            out,
        }
    }

    fn config(&self, method: Method, seed: u64) -> Result<TrainConfig> {
        let mut c = TrainConfig::new(method, seed);
        c.lr = self.lr;
        c.bags_per_batch = self.batch_bags;
        c.patience = self.patience;
        c.max_epochs = self.max_epochs;
        c.monitor = self.monitor.map(Monitor::from);
        c.ot_epochs = self.ot_epochs;
        c.sim_lambda = self.sim_lambda;
        c.record_time = self.time;
        match self.hidden.as_slice() {
            [] => {}
            [h1, h2] if *h1 > 0 && *h2 > 0 => c.hidden = (*h1, *h2),
            _ => return Err(Error::Config("--hidden takes two positive widths".into())),
        }
        Ok(c)
    }
}

/// One training run with the provenance it was produced under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub dataset_id: String,
    /// Method name, or `instance-level` for the individually supervised reference.
    pub label: String,
    pub seed: u64,
    pub task: Task,
    pub table_fingerprint: String,
    pub bags_fingerprint: Option<String>,
    pub config_hash: String,
    #[serde(flatten)]
    pub run: TrainRun,
}

impl RunArtifact {
    /// AUC for binary tasks, MSE for regression.
    pub fn score(&self) -> Option<f64> {
        match self.task {
            Task::Binary => self.run.final_eval.auc,
            Task::Regression => Some(self.run.final_eval.mse),
        }
    }
}

pub fn score_name(task: Task) -> &'static str {
    match task {
        Task::Binary => "auc",
        Task::Regression => "mse",
    }
}

pub const INSTANCE_LABEL: &str = "instance-level";
pub const SUMMARY_COLUMNS: [&str; 8] =
    ["dataset_id", "method", "seed", "metric", "mean", "std", "n_folds", "config_hash"];

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn train_cmd(a: &TrainArgs, ctx: &Ctx) -> Result<Vec<PathBuf>> {
    let table = load_table(&a.table)?;
    let inputs = encode_table(&table);
    let seeds = if a.seeds.is_empty() { vec![ctx.seed] } else { a.seeds.clone() };
    let fp = fp_hex(&table);
    let mut written = Vec::new();

    if a.instance_level {
        let id = "instance".to_string();
        for &seed in &seeds {
            let cfg = a.config(Method::DllpBce, seed)?;
            let hash = config_hash(&json!({"command": "train", "instance_level": true, "config": cfg}))?;
            let out = instance_level_train(&table, &inputs, &cfg, seed)?;
            let art = RunArtifact {
                dataset_id: id.clone(),
                label: INSTANCE_LABEL.into(),
                seed,
                task: table.task(),
                table_fingerprint: fp.clone(),
                bags_fingerprint: None,
                config_hash: hash,
                run: out.run,
            };
            let p = a.out.join(format!("{id}.{INSTANCE_LABEL}.s{seed}{RUN_SUFFIX}"));
            write_json(&p, &art)?;
            written.push(p);
        }
        return Ok(written);
    }

    let bags_path = a
        .bags
        .as_ref()
        .ok_or_else(|| Error::Config("--bags is required unless --instance-level".into()))?;
    let (_, coll) = read_bag_file(bags_path, &table)?;
    let bags_fp = file_fingerprint(bags_path)?;
    let id = dataset_id(bags_path);
    for &m in &a.method {
        a.config(m, 0)?;
        if !m.supports(table.task()) {
            return Err(Error::Config(format!("method {m} does not apply to a {:?} task", table.task())));
        }
    }
    let mut plans = BTreeMap::new();
    for &seed in &seeds {
        let plan = k_fold_split(&table, &coll, a.folds, seed)?;
        plan.check_invariants()?;
        plans.insert(seed, plan);
    }
    let items: Vec<(Method, u64, usize)> = a
        .method
        .iter()
        .flat_map(|&m| seeds.iter().flat_map(move |&s| (0..a.folds).map(move |f| (m, s, f))))
        .collect();
    let runs: Vec<Result<((Method, u64), RunArtifact, PathBuf)>> = ctx.pool.install(|| {
        items
            .par_iter()
            .map(|&(m, seed, f)| {
                let cfg = a.config(m, seed)?;
                let hash = config_hash(&json!({"command": "train", "folds": a.folds, "config": cfg}))?;
                let out = train(&table, &inputs, &plans[&seed].folds[f], &cfg)?;
                let art = RunArtifact {
                    dataset_id: id.clone(),
                    label: m.as_str().into(),
                    seed,
                    task: table.task(),
                    table_fingerprint: fp.clone(),
                    bags_fingerprint: Some(bags_fp.clone()),
                    config_hash: hash,
                    run: out.run,
                };
                let p = a.out.join(format!("{id}.{m}.s{seed}.fold{f}{RUN_SUFFIX}"));
                write_json(&p, &art)?;
                Ok(((m, seed), art, p))
            })
            .collect()
    });
    let mut groups: BTreeMap<(String, u64), Vec<RunArtifact>> = BTreeMap::new();
    for r in runs {
        let ((m, seed), art, p) = r?;
        written.push(p);
        groups.entry((m.as_str().to_string(), seed)).or_default().push(art);
    }
    for ((m, seed), arts) in &groups {
        let scores: Vec<f64> = arts.iter().filter_map(RunArtifact::score).collect();
        let (mean, std) = mean_std(&scores);
        let row = vec![
            id.clone(),
            m.clone(),
            seed.to_string(),
            score_name(table.task()).to_string(),
            fmt_f64(mean),
            fmt_f64(std),
            scores.len().to_string(),
            arts[0].config_hash.clone(),
        ];
        let p = a.out.join(format!("{id}.{m}.s{seed}{SUMMARY_SUFFIX}"));
        write_csv(&p, &SUMMARY_COLUMNS, &[row])?;
        eprintln!("{id} {m} seed {seed}: {} = {} ± {}", score_name(table.task()), fmt_f64(mean), fmt_f64(std));
    }
    Ok(written)
}

// ------------------------------------------------------------------- report

#[derive(Args, Debug, Clone)]
pub struct ReportArgs {
    /// Aggregate metrics CSV written by `metrics`.
    #[arg(long)]
    pub metrics: PathBuf,
    /// Directory of run files written by `train`.
    #[arg(long)]
    pub runs: PathBuf,
    /// Optional cluster CSV written by `cluster`; adds one column per axis.
    #[arg(long)]
    pub clusters: Option<PathBuf>,
    /// Also write scatter plots of metrics and scores per dataset.
    #[arg(long)]
    pub svg: bool,
    #[arg(long)]
    pub out: PathBuf,
}

pub const RESULTS_CSV: &str = "results.csv";
const REPORT_METRICS: [&str; 3] = ["mean_bag_size", "label_prop_stdev", "inter_intra_ratio"];
const AXES: [&str; 3] = ["tail_size", "label_variation", "bag_separation"];

pub fn report(a: &ReportArgs) -> Result<PathBuf> {
    let (header, rows) = read_csv_records(&a.metrics)?;
    let id_c = column(&header, "dataset_id", &a.metrics)?;
    let metric_cols = REPORT_METRICS
        .iter()
        .map(|m| column(&header, m, &a.metrics))
        .collect::<Result<Vec<_>>>()?;
    let mut metric_of: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for r in &rows {
        metric_of.insert(r[id_c].clone(), metric_cols.iter().map(|&c| r[c].clone()).collect());
    }

    let mut cluster_of: BTreeMap<(String, String), String> = BTreeMap::new();
    if let Some(cp) = &a.clusters {
        let (h, rs) = read_csv_records(cp)?;
        let (i, ax, n) = (column(&h, "dataset_id", cp)?, column(&h, "axis", cp)?, column(&h, "cluster_name", cp)?);
        for r in rs {
            cluster_of.insert((r[i].clone(), r[ax].clone()), r[n].clone());
        }
    }

    let run_files = files_with_suffix(&a.runs, RUN_SUFFIX)?;
    if run_files.is_empty() {
        return Err(Error::MissingArtifact(a.runs.join(format!("*{RUN_SUFFIX}"))));
    }
    let mut groups: BTreeMap<(String, String), (Task, Vec<f64>)> = BTreeMap::new();
    for f in &run_files {
        let art: RunArtifact = serde_json::from_slice(&read_artifact(f)?)?;
        let e = groups
            .entry((art.dataset_id.clone(), art.label.clone()))
            .or_insert((art.task, Vec::new()));
        e.1.extend(art.score());
    }

    let mut cols: Vec<&str> = vec!["dataset_id", "method", "metric", "mean", "std", "n_runs"];
    cols.extend(REPORT_METRICS);
    if a.clusters.is_some() {
        cols.extend(AXES);
    }
    let mut out_rows = Vec::new();
    let mut points: BTreeMap<String, Vec<(String, f64, Vec<f64>)>> = BTreeMap::new();
    for ((id, label), (task, scores)) in &groups {
        let (mean, std) = mean_std(scores);
        let ms = metric_of.get(id).cloned().unwrap_or_else(|| vec![String::new(); REPORT_METRICS.len()]);
        let mut row = vec![
            id.clone(),
            label.clone(),
            score_name(*task).to_string(),
            fmt_f64(mean),
            fmt_f64(std),
            scores.len().to_string(),
        ];
        row.extend(ms.iter().cloned());
        if a.clusters.is_some() {
            for ax in AXES {
                row.push(cluster_of.get(&(id.clone(), ax.to_string())).cloned().unwrap_or_default());
            }
        }
        out_rows.push(row);
        if metric_of.contains_key(id) {
            let xs = ms.iter().map(|s| s.parse::<f64>().unwrap_or(f64::NAN)).collect();
            points.entry(label.clone()).or_default().push((id.clone(), mean, xs));
        }
    }
    let path = a.out.join(RESULTS_CSV);
    write_csv(&path, &cols, &out_rows)?;

    if a.svg {
        let dir = a.out.join("svg");
        for (mi, m) in REPORT_METRICS.iter().enumerate() {
            let mut vals: Vec<(String, f64)> = metric_of
                .iter()
                .map(|(id, v)| (id.clone(), v[mi].parse::<f64>().unwrap_or(f64::NAN)))
                .filter(|(_, v)| v.is_finite())
                .collect();
            vals.sort_by(|x, y| x.1.total_cmp(&y.1).then_with(|| x.0.cmp(&y.0)));
            let series = vec![svg::Series {
                name: m.to_string(),
                points: vals.iter().enumerate().map(|(i, (_, v))| (i as f64, *v)).collect(),
            }];
            let doc = svg::scatter(&format!("{m} per dataset"), "dataset (sorted)", m, &series);
            write_atomic(&dir.join(format!("datasets_{m}.svg")), doc.as_bytes())?;

            let series: Vec<svg::Series> = points
                .iter()
                .map(|(label, ps)| svg::Series {
                    name: label.clone(),
                    points: ps
                        .iter()
                        .map(|(_, score, xs)| (xs[mi], *score))
                        .filter(|(x, y)| x.is_finite() && y.is_finite())
                        .collect(),
                })
                .collect();
            let doc = svg::scatter(&format!("score vs {m}"), m, "score", &series);
            write_atomic(&dir.join(format!("score_vs_{m}.svg")), doc.as_bytes())?;
        }
    }
    eprintln!("{} result rows in {}", out_rows.len(), path.display());
    Ok(path)
}
