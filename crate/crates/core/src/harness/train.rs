use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::eval::{accuracy, auc, mse};
use super::{derive_seed, Fold};
use crate::bagging::{singleton_bags, BagCollection};
use crate::error::{Error, Result};
use crate::ingest::{InstanceTable, Task};
use crate::losses::{self, BagBatch, GradWrt, LossOutput, Method, SinkhornMode, SinkhornOptions};
use crate::model::{self, adam_step, AdamState, GradTarget, Head, ModelParams, ModelShape, SparseInput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monitor {
    Accuracy,
    Auc,
    Mse,
}

impl Monitor {
    fn higher_is_better(self) -> bool {
        !matches!(self, Monitor::Mse)
    }

    fn improves(self, new: f64, best: f64) -> bool {
        if self.higher_is_better() {
            new > best
        } else {
            new < best
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub method: Method,
    pub lr: f64,
    pub bags_per_batch: usize,
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
    /// Defaults to accuracy (binary) or MSE (regression).
    pub monitor: Option<Monitor>,
    pub hidden: (usize, usize),
    /// Epoch budget of the pseudo-label phase of the transport methods.
    pub ot_epochs: usize,
    pub sinkhorn: SinkhornOptions,
    pub sim_lambda: f64,
    /// Record wall-clock seconds in the run (makes output non-reproducible).
    pub record_time: bool,
}

impl TrainConfig {
    pub const DEFAULT_LR: f64 = 1e-5;
    pub const DEFAULT_BATCH: usize = 8;
    pub const DEFAULT_PATIENCE: usize = 3;
    pub const DEFAULT_MAX_EPOCHS: usize = 50;

    pub fn new(method: Method, seed: u64) -> Self {
        TrainConfig {
            method,
            lr: Self::DEFAULT_LR,
            bags_per_batch: Self::DEFAULT_BATCH,
            patience: Self::DEFAULT_PATIENCE,
            max_epochs: Self::DEFAULT_MAX_EPOCHS,
            seed,
            monitor: None,
            hidden: (ModelShape::H1, ModelShape::H2),
            ot_epochs: 10,
            sinkhorn: SinkhornOptions::default(),
            sim_lambda: 1.0,
            record_time: false,
        }
    }

    pub fn monitor_for(&self, task: Task) -> Monitor {
        self.monitor.unwrap_or(match task {
            Task::Binary => Monitor::Accuracy,
            Task::Regression => Monitor::Mse,
        })
    }

    fn validate(&self, task: Task) -> Result<()> {
        if self.bags_per_batch == 0 || self.patience == 0 {
            return Err(Error::Config("bags per batch and patience must be at least 1".into()));
        }
        if !(self.lr > 0.0) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if !self.method.supports(task) {
            return Err(Error::Config(format!("method {} does not apply to a {task:?} task", self.method)));
        }
        if task == Task::Regression && self.monitor_for(task) != Monitor::Mse {
            return Err(Error::Config("regression runs are monitored by MSE".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Bags,
    PseudoLabels,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub phase: Phase,
    pub train_loss: f64,
    pub test_metric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub auc: Option<f64>,
    pub accuracy: Option<f64>,
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRun {
    pub method: Method,
    pub fold: Option<usize>,
    pub monitor: Monitor,
    pub history: Vec<EpochRecord>,
    /// Epoch (1-based, counted across phases) whose parameters were kept; `None` when
    /// the initial parameters were kept.
    pub best_epoch: Option<usize>,
    pub best_metric: Option<f64>,
    pub final_eval: EvalSummary,
    pub seconds: Option<f64>,
}

pub struct TrainOutcome {
    pub run: TrainRun,
    pub params: ModelParams,
}

/// Batches of bag indices for one epoch: a seeded permutation cut into runs of `b`.
pub fn epoch_batches(num_bags: usize, b: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..num_bags).collect();
    order.shuffle(rng);
    order.chunks(b.max(1)).map(<[usize]>::to_vec).collect()
}

pub fn evaluate(params: &ModelParams, inputs: &[SparseInput], table: &InstanceTable, rows: &[usize]) -> Result<EvalSummary> {
    let head = Head::for_task(table.task());
    let preds = predict_rows(params, inputs, rows, head);
    let labels: Vec<f64> = rows.iter().map(|&i| table.label(i)).collect();
    Ok(match table.task() {
        Task::Binary => EvalSummary {
            auc: auc(&preds, &labels).ok(),
            accuracy: Some(accuracy(&preds, &labels)?),
            mse: mse(&preds, &labels)?,
        },
        Task::Regression => EvalSummary { auc: None, accuracy: None, mse: mse(&preds, &labels)? },
    })
}

fn predict_rows(params: &ModelParams, inputs: &[SparseInput], rows: &[usize], head: Head) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows.len());
    for chunk in rows.chunks(4096) {
        let batch: Vec<&SparseInput> = chunk.iter().map(|&i| &inputs[i]).collect();
        out.extend(model::predict(params, &batch, head));
    }
    out
}

fn metric_value(monitor: Monitor, e: &EvalSummary) -> Result<f64> {
    match monitor {
        Monitor::Accuracy => e.accuracy.ok_or_else(|| Error::Config("accuracy needs binary labels".into())),
        Monitor::Auc => e.auc.ok_or_else(|| Error::Validation("test split lacks one of the classes".into())),
        Monitor::Mse => Ok(e.mse),
    }
}

struct Trainer<'a> {
    table: &'a InstanceTable,
    inputs: &'a [SparseInput],
    fold: &'a Fold,
    cfg: &'a TrainConfig,
    head: Head,
    monitor: Monitor,
    params: ModelParams,
    adam: AdamState,
    rng: ChaCha8Rng,
    prior: f64,
    history: Vec<EpochRecord>,
    best: Option<(usize, f64, ModelParams)>,
}

enum Objective<'p> {
    Method(Method),
    Pseudo(&'p [Vec<f64>]),
}

impl Trainer<'_> {
    fn batch_loss(&mut self, objective: &Objective<'_>, bag_ids: &[usize], batch: &BagBatch, refs: &[&SparseInput], preds: &[f64], logits: &[f64]) -> Result<Option<LossOutput>> {
        let regression = self.table.task() == Task::Regression;
        let out = match objective {
            Objective::Pseudo(labels) => {
                let targets: Vec<f64> = bag_ids.iter().flat_map(|&k| labels[k].iter().copied()).collect();
                losses::pseudo_label_bce(preds, &targets)?
            }
            Objective::Method(m) => match m {
                Method::DllpBce | Method::OtLlp | Method::HardErotLlp | Method::SoftErotLlp => {
                    losses::dllp_bce(batch, preds)?
                }
                Method::DllpMse => losses::dllp_mse(batch, preds)?,
                Method::DllpMae => losses::dllp_mae(batch, preds)?,
                Method::GenBags => {
                    if batch.bags.len() < losses::GENBAG_BLOCK {
                        return Ok(None);
                    }
                    losses::genbags_loss(batch, preds, &mut self.rng)?
                }
                Method::EasyLlp => losses::easyllp_loss(batch, preds, self.prior)?,
                Method::SimLlp => losses::simllp_loss(batch, preds, refs, self.cfg.sim_lambda, regression, &mut self.rng)?,
                Method::MeanMap => losses::meanmap_loss(batch, logits)?,
            },
        };
        Ok(Some(out))
    }

    fn run_epoch(&mut self, bags: &BagCollection, objective: &Objective<'_>) -> Result<f64> {
        let batches = epoch_batches(bags.len(), self.cfg.bags_per_batch, &mut self.rng);
        debug_assert_eq!(batches.iter().map(Vec::len).sum::<usize>(), bags.len());
        let mut total = 0.0;
        let mut steps = 0usize;
        for ids in &batches {
            let batch = BagBatch::from_collection(bags, ids)?;
            let refs: Vec<&SparseInput> = batch.instances.iter().map(|&i| &self.inputs[i]).collect();
            let (preds, cache) = model::forward(&self.params, &refs, self.head);
            let logits = cache.logits.clone();
            let Some(out) = self.batch_loss(objective, ids, &batch, &refs, &preds, &logits)? else {
                continue;
            };
            if !out.value.is_finite() {
                return Err(Error::Validation(format!("non-finite training loss with {}", self.cfg.method)));
            }
            let target = match out.wrt {
                GradWrt::Predictions => GradTarget::Predictions(&out.grad),
                GradWrt::Logits => GradTarget::Logits(&out.grad),
            };
            let grad = model::backward(&self.params, &refs, &cache, target);
            adam_step(self.params.as_mut_slice(), &grad, &mut self.adam, self.cfg.lr)?;
            total += out.value;
            steps += 1;
        }
        Ok(if steps > 0 { total / steps as f64 } else { 0.0 })
    }

    fn test_metric(&self) -> Result<f64> {
        let e = evaluate(&self.params, self.inputs, self.table, &self.fold.test)?;
        metric_value(self.monitor, &e)
    }

    /// Trains up to `epochs` epochs with patience-based early stopping, then restores
    /// the best parameters seen (including those on entry).
    fn phase(&mut self, phase: Phase, epochs: usize, bags: &BagCollection, method: Method, ot: Option<SinkhornMode>) -> Result<()> {
        let mut bad = 0;
        for _ in 0..epochs {
            let pseudo = match ot {
                Some(mode) => Some(self.pseudo_labels(bags, method, mode)?),
                None => None,
            };
            let objective = match &pseudo {
                Some(p) => Objective::Pseudo(p),
                None => Objective::Method(method),
            };
            let train_loss = self.run_epoch(bags, &objective)?;
            let metric = self.test_metric()?;
            let epoch = self.history.len() + 1;
            self.history.push(EpochRecord { epoch, phase, train_loss, test_metric: metric });
            let better = match &self.best {
                None => true,
                Some((_, best, _)) => self.monitor.improves(metric, *best),
            };
            if better {
                self.best = Some((epoch, metric, self.params.clone()));
                bad = 0;
            } else {
                bad += 1;
                if bad >= self.cfg.patience {
                    break;
                }
            }
        }
        if let Some((_, _, p)) = &self.best {
            self.params = p.clone();
        }
        Ok(())
    }

    fn pseudo_labels(&self, bags: &BagCollection, method: Method, mode: SinkhornMode) -> Result<Vec<Vec<f64>>> {
        bags.bags
            .iter()
            .map(|b| {
                let preds = predict_rows(&self.params, self.inputs, b.members(), self.head);
                let p = match method {
                    Method::OtLlp => losses::ot_greedy_pseudolabels(&preds, b.label_sum())?,
                    _ => losses::sinkhorn_pseudolabels(&preds, b.label_sum(), &self.cfg.sinkhorn, mode)?,
                };
                Ok(p.labels)
            })
            .collect()
    }
}

/// Trains the multihot MLP on `fold.train_bags` and monitors the metric on
/// `fold.test`. `inputs` holds the encoded row of every table instance.
pub fn train(table: &InstanceTable, inputs: &[SparseInput], fold: &Fold, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let task = table.task();
    cfg.validate(task)?;
    if inputs.len() != table.len() {
        return Err(Error::invalid("one encoded input per table row required"));
    }
    if fold.train_bags.is_empty() || fold.test.is_empty() {
        return Err(Error::invalid("fold needs training bags and test instances"));
    }
    let start = Instant::now();
    let mut shape = ModelShape::for_table(table);
    (shape.h1, shape.h2) = cfg.hidden;
    let params = ModelParams::init(shape, cfg.seed);
    let bags = &fold.train_bags;
    let prior = bags.bags.iter().map(|b| b.label_sum()).sum::<f64>() / bags.num_instances() as f64;
    let monitor = cfg.monitor_for(task);
    let mut t = Trainer {
        table,
        inputs,
        fold,
        cfg,
        head: Head::for_task(task),
        monitor,
        adam: AdamState::new(shape.num_params()),
        params,
        rng: ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0x5eed_ba65)),
        prior,
        history: Vec::new(),
        best: None,
    };
    t.phase(Phase::Bags, cfg.max_epochs, bags, cfg.method, None)?;
    if cfg.method.is_ot() && cfg.max_epochs > 0 {
        let mode = if cfg.method == Method::SoftErotLlp { SinkhornMode::Soft } else { SinkhornMode::Hard };
        t.phase(Phase::PseudoLabels, cfg.ot_epochs, bags, cfg.method, Some(mode))?;
    }
    let final_eval = evaluate(&t.params, inputs, table, &fold.test)?;
    let run = TrainRun {
        method: cfg.method,
        fold: Some(fold.index),
        monitor,
        history: t.history,
        best_epoch: t.best.as_ref().map(|b| b.0),
        best_metric: t.best.as_ref().map(|b| b.1),
        final_eval,
        seconds: cfg.record_time.then(|| start.elapsed().as_secs_f64()),
    };
    Ok(TrainOutcome { run, params: t.params })
}

/// Reference run with instance labels: an 80:20 seeded split, one bag per training
/// instance, trained with DLLP-BCE (binary) or DLLP-MSE (regression).
pub fn instance_level_train(table: &InstanceTable, inputs: &[SparseInput], cfg: &TrainConfig, split_seed: u64) -> Result<TrainOutcome> {
    if table.len() < 2 {
        return Err(Error::EmptyTable("instance-level training needs at least two rows".into()));
    }
    let mut order: Vec<usize> = (0..table.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(split_seed));
    let n_test = (table.len() / 5).max(1);
    let mut test = order[..n_test].to_vec();
    let mut train_rows = order[n_test..].to_vec();
    test.sort_unstable();
    train_rows.sort_unstable();
    let fold = Fold {
        index: 0,
        train_bags: singleton_bags(table, &train_rows)?,
        train: train_rows,
        test,
    };
    let mut cfg = cfg.clone();
    cfg.method = match table.task() {
        Task::Binary => Method::DllpBce,
        Task::Regression => Method::DllpMse,
    };
    let mut out = train(table, inputs, &fold, &cfg)?;
    out.run.fold = None;
    Ok(out)
}
