//! Executes experiment specs: data generation → training → detection,
//! persisting every run under `<out>/<scenario>/<cell>/<seed>/`.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use ddlab_core::{
    detect, save_curve, subsample, CurveFormat, DetectError, LearningCurve, Pattern,
    PatternReport, TimeUnit,
};
use ddlab_train::{
    gen_gaussian_pair, inject_swap_noise, split_balanced, train, DataError, MlpModel, NnError,
    OptimizerConfig, OptimizerKind, TrainConfig, TrainOutcome,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::spec::{ExperimentSpec, Scenario};

#[derive(Debug)]
pub enum LabError {
    Spec(String),
    Io(io::Error),
    Json(serde_json::Error),
    Data(DataError),
    Nn(NnError),
    Detect(DetectError),
    Curve(ddlab_core::CurveError),
}

impl fmt::Display for LabError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabError::Spec(msg) => write!(f, "invalid spec: {msg}"),
            LabError::Io(e) => write!(f, "i/o error: {e}"),
            LabError::Json(e) => write!(f, "json error: {e}"),
            LabError::Data(e) => write!(f, "data error: {e}"),
            LabError::Nn(e) => write!(f, "training error: {e}"),
            LabError::Detect(e) => write!(f, "detection error: {e}"),
            LabError::Curve(e) => write!(f, "curve error: {e}"),
        }
    }
}

impl std::error::Error for LabError {}

impl From<io::Error> for LabError {
    fn from(e: io::Error) -> Self {
        LabError::Io(e)
    }
}
impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Json(e)
    }
}
impl From<DataError> for LabError {
    fn from(e: DataError) -> Self {
        LabError::Data(e)
    }
}
impl From<NnError> for LabError {
    fn from(e: NnError) -> Self {
        LabError::Nn(e)
    }
}
impl From<DetectError> for LabError {
    fn from(e: DetectError) -> Self {
        LabError::Detect(e)
    }
}
impl From<ddlab_core::CurveError> for LabError {
    fn from(e: ddlab_core::CurveError) -> Self {
        LabError::Curve(e)
    }
}

/// splitmix64; stretches one seed into independent per-purpose streams.
fn mix(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed streams of one cell run, all derived from the sweep seed. Train and
/// validation sets are split from one generated dataset (one `data` seed) so
/// they share the class geometry; each set's swap noise has its own stream.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SeedPlan {
    pub data: u64,
    pub train_noise: u64,
    pub val_noise: u64,
    pub init: u64,
    pub shuffle: u64,
}

impl SeedPlan {
    fn derive(seed: u64) -> SeedPlan {
        SeedPlan {
            data: mix(seed, 1),
            train_noise: mix(seed, 3),
            val_noise: mix(seed, 4),
            init: mix(seed, 5),
            shuffle: mix(seed, 6),
        }
    }
}

/// Everything persisted about one trained-and-classified cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellRecord {
    pub scenario: String,
    pub cell: String,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub n_train: usize,
    pub epochs_run: usize,
    /// Detector verdict; halted runs are labeled monotone_increase.
    pub verdict: Pattern,
    pub halted_at: Option<usize>,
    pub seeds: SeedPlan,
    /// Full detector report when detection ran (it is skipped only when a
    /// halted run left too few evaluations to fit).
    pub report: Option<PatternReport>,
    /// Stride of the alias sweep; 1 elsewhere.
    pub stride: usize,
}

/// One (cell, seed) training job.
struct Job {
    cell: String,
    seed: u64,
    noisy_train: bool,
    noisy_val: bool,
    n_train: usize,
    optimizer: OptimizerConfig,
}

fn train_job(spec: &ExperimentSpec, job: &Job) -> Result<(TrainOutcome, SeedPlan), LabError> {
    let plan = SeedPlan::derive(job.seed);
    let d = spec.data;
    let pool = gen_gaussian_pair(job.n_train + d.n_val, d.dim, d.separation, plan.data)?;
    let (mut train_ds, mut val_ds) = split_balanced(&pool, job.n_train)?;
    if job.noisy_train {
        train_ds = inject_swap_noise(&train_ds, d.noise_fraction, plan.train_noise)?;
    }
    if job.noisy_val {
        val_ds = inject_swap_noise(&val_ds, d.noise_fraction, plan.val_noise)?;
    }

    let mut model = MlpModel::init(&spec.arch(d.dim), plan.init)?;
    let cfg = TrainConfig {
        optimizer: job.optimizer,
        epochs: spec.epochs,
        eval_every: spec.eval_every,
        batch: spec.batch,
        seed: plan.shuffle,
        halt: spec.halt,
    };
    let outcome = train(
        &mut model,
        &train_ds.x,
        &train_ds.labels_f64(),
        &val_ds.x,
        &val_ds.labels_f64(),
        &cfg,
    )?;
    Ok((outcome, plan))
}

fn trace_to_curve(points: &[(f64, f64)], label: &str) -> Result<LearningCurve, LabError> {
    Ok(LearningCurve::new(points.to_vec(), label, TimeUnit::Epoch)?)
}

fn cell_dir(spec: &ExperimentSpec, cell: &str, seed: u64) -> PathBuf {
    spec.out_dir
        .join(spec.scenario.to_string())
        .join(cell)
        .join(seed.to_string())
}

fn write_curve(dir: &Path, name: &str, curve: &LearningCurve) -> Result<(), LabError> {
    fs::write(dir.join(name), save_curve(curve, CurveFormat::Csv))?;
    Ok(())
}

/// Classifies a validation curve, labeling halted runs monotone_increase.
fn classify_outcome(
    spec: &ExperimentSpec,
    outcome: &TrainOutcome,
    val_curve: &LearningCurve,
) -> (Pattern, Option<PatternReport>) {
    let report = detect(val_curve, val_curve.span(), &spec.detector).ok();
    if outcome.halted_at.is_some() {
        // Divergence halt overrides: the run never converged.
        return (Pattern::MonotoneIncrease, report);
    }
    match &report {
        Some(r) => (r.pattern, report),
        None => (Pattern::Inconclusive, None),
    }
}

fn persist_record(dir: &Path, record: &CellRecord) -> Result<(), LabError> {
    fs::create_dir_all(dir)?;
    fs::write(
        dir.join("report.json"),
        serde_json::to_vec_pretty(record)?,
    )?;
    Ok(())
}

fn run_and_persist(spec: &ExperimentSpec, job: Job) -> Result<CellRecord, LabError> {
    let (outcome, plan) = train_job(spec, &job)?;
    let dir = cell_dir(spec, &job.cell, job.seed);
    fs::create_dir_all(&dir)?;

    let train_curve = trace_to_curve(&outcome.train, "train")?;
    let val_curve = trace_to_curve(&outcome.val, "val")?;
    write_curve(&dir, "train.csv", &train_curve)?;
    write_curve(&dir, "val.csv", &val_curve)?;

    let (verdict, report) = classify_outcome(spec, &outcome, &val_curve);
    let record = CellRecord {
        scenario: spec.scenario.to_string(),
        cell: job.cell,
        seed: job.seed,
        optimizer: job.optimizer.kind(),
        lr: job.optimizer.lr(),
        n_train: job.n_train,
        epochs_run: outcome.train.len(),
        verdict,
        halted_at: outcome.halted_at,
        seeds: plan,
        report,
        stride: 1,
    };
    persist_record(&dir, &record)?;
    Ok(record)
}

fn run_jobs(spec: &ExperimentSpec, jobs: Vec<Job>) -> Result<Vec<CellRecord>, LabError> {
    let results: Vec<Result<CellRecord, LabError>> = jobs
        .into_par_iter()
        .map(|job| run_and_persist(spec, job))
        .collect();
    let mut records = Vec::with_capacity(results.len());
    for r in results {
        records.push(r?);
    }
    records.sort_by(|a, b| (&a.cell, a.seed).cmp(&(&b.cell, b.seed)));
    Ok(records)
}

fn write_spec_echo(spec: &ExperimentSpec) -> Result<(), LabError> {
    fs::create_dir_all(&spec.out_dir)?;
    fs::write(
        spec.out_dir.join("spec.json"),
        serde_json::to_vec_pretty(spec)?,
    )?;
    fs::write(
        spec.out_dir.join("environment.json"),
        serde_json::to_vec_pretty(&serde_json::json!({
            "tool": "ddlab",
            "version": env!("CARGO_PKG_VERSION"),
            "arch": std::env::consts::ARCH,
            "os": std::env::consts::OS,
        }))?,
    )?;
    Ok(())
}

/// The four noise-placement cells of §-style label-noise analysis:
/// noise must sit in both sets for double descent to appear.
pub fn run_noise_matrix(spec: &ExperimentSpec) -> Result<Vec<CellRecord>, LabError> {
    spec.validate().map_err(LabError::Spec)?;
    write_spec_echo(spec)?;
    let cells = [
        ("clean_clean", false, false),
        ("noisy_noisy", true, true),
        ("noisy_clean", true, false),
        ("clean_noisy", false, true),
    ];
    let mut jobs = Vec::new();
    for (cell, noisy_train, noisy_val) in cells {
        for &seed in &spec.seeds {
            jobs.push(Job {
                cell: cell.to_string(),
                seed,
                noisy_train,
                noisy_val,
                n_train: spec.data.n_train,
                optimizer: OptimizerConfig::with_lr(spec.optimizer, spec.lr),
            });
        }
    }
    run_jobs(spec, jobs)
}

/// Training-set size sweep at fixed noise fraction (noisy/noisy cells).
pub fn run_size_sweep(spec: &ExperimentSpec) -> Result<Vec<CellRecord>, LabError> {
    spec.validate().map_err(LabError::Spec)?;
    write_spec_echo(spec)?;
    let mut jobs = Vec::new();
    for &n_train in &spec.sizes {
        for &seed in &spec.seeds {
            jobs.push(Job {
                cell: format!("n{n_train}"),
                seed,
                noisy_train: true,
                noisy_val: true,
                n_train,
                optimizer: OptimizerConfig::with_lr(spec.optimizer, spec.lr),
            });
        }
    }
    run_jobs(spec, jobs)
}

/// Optimizer × learning-rate grid on noisy/noisy data.
pub fn run_lr_sweep(spec: &ExperimentSpec) -> Result<Vec<CellRecord>, LabError> {
    spec.validate().map_err(LabError::Spec)?;
    write_spec_echo(spec)?;
    let mut jobs = Vec::new();
    for grid in &spec.lr_grid {
        for &lr in &grid.lrs {
            for &seed in &spec.seeds {
                jobs.push(Job {
                    cell: format!("{}_lr{lr:e}", grid.optimizer),
                    seed,
                    noisy_train: true,
                    noisy_val: true,
                    n_train: spec.data.n_train,
                    optimizer: OptimizerConfig::with_lr(grid.optimizer, lr),
                });
            }
        }
    }
    run_jobs(spec, jobs)
}

/// Trains once per seed with per-epoch evaluation, then derives each coarser
/// curve by stride subsampling of that single run, isolating the sampling
/// effect from the optimization itself.
pub fn run_alias_sweep(spec: &ExperimentSpec) -> Result<Vec<CellRecord>, LabError> {
    spec.validate().map_err(LabError::Spec)?;
    write_spec_echo(spec)?;

    let results: Vec<Result<Vec<CellRecord>, LabError>> = spec
        .seeds
        .par_iter()
        .map(|&seed| {
            let job = Job {
                cell: String::new(), // per-stride cells below
                seed,
                noisy_train: true,
                noisy_val: true,
                n_train: spec.data.n_train,
                optimizer: OptimizerConfig::with_lr(spec.optimizer, spec.lr),
            };
            let (outcome, plan) = train_job(spec, &job)?;
            let train_curve = trace_to_curve(&outcome.train, "train")?;
            let val_curve = trace_to_curve(&outcome.val, "val")?;

            let mut records = Vec::new();
            for &stride in &spec.strides {
                let cell = format!("stride{stride}");
                let dir = cell_dir(spec, &cell, seed);
                fs::create_dir_all(&dir)?;
                let sub = subsample(&val_curve, stride, 0)
                    .map_err(|e| LabError::Spec(format!("stride {stride}: {e}")))?;
                write_curve(&dir, "train.csv", &train_curve)?;
                write_curve(&dir, "val.csv", &sub)?;

                let report = detect(&sub, sub.span(), &spec.detector).ok();
                let verdict = if outcome.halted_at.is_some() {
                    Pattern::MonotoneIncrease
                } else {
                    report.as_ref().map_or(Pattern::Inconclusive, |r| r.pattern)
                };
                let record = CellRecord {
                    scenario: spec.scenario.to_string(),
                    cell,
                    seed,
                    optimizer: job.optimizer.kind(),
                    lr: job.optimizer.lr(),
                    n_train: job.n_train,
                    epochs_run: outcome.train.len(),
                    verdict,
                    halted_at: outcome.halted_at,
                    seeds: plan,
                    report,
                    stride,
                };
                persist_record(&dir, &record)?;
                records.push(record);
            }
            Ok(records)
        })
        .collect();

    let mut records = Vec::new();
    for r in results {
        records.extend(r?);
    }
    records.sort_by(|a, b| (a.stride, a.seed).cmp(&(b.stride, b.seed)));
    Ok(records)
}

/// Dispatches on the spec's scenario.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<Vec<CellRecord>, LabError> {
    match spec.scenario {
        Scenario::NoiseMatrix => run_noise_matrix(spec),
        Scenario::SizeSweep => run_size_sweep(spec),
        Scenario::LrSweep => run_lr_sweep(spec),
        Scenario::AliasSweep => run_alias_sweep(spec),
    }
}
