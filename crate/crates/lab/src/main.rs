//! `ddlab`: learning-curve analysis and the desk-scale training laboratory.

use std::error::Error;
use std::fs::{self, File};
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ddlab_core::{
    aliasing_scan, detect, fit, gen_bump, gen_monotone, load_curve, save_curve, smooth,
    BumpCurveSpec, CurveFormat, DetectorConfig, LearningCurve, Segment, SgConfig, TimeUnit,
};
use ddlab_train::{
    gen_gaussian_pair, inject_swap_noise, split_balanced, train, BatchMode, DivergenceHalt,
    MlpModel, OptimizerConfig, OptimizerKind, TrainConfig,
};
use ddlab::{report, run_sweep, ExperimentSpec};

#[derive(Parser)]
#[command(name = "ddlab", version, about = "Double-descent learning-curve toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Savitzky-Golay smoothing of a curve file.
    Smooth(SmoothArgs),
    /// Least-squares polynomial fit of a curve; prints the fit as JSON.
    Fit(FitArgs),
    /// Classify a curve segment (double descent / plateau / monotone).
    Detect(DetectArgs),
    /// Generate synthetic fixture curves.
    Synth(SynthArgs),
    /// Detect at several subsampling strides and report departures.
    Alias(AliasArgs),
    /// Train one MLP run and emit train/val curves.
    Train(TrainArgs),
    /// Generate a swap-noise classification dataset as CSV.
    Datagen(DatagenArgs),
    /// Run a full experiment sweep from a JSON spec.
    Sweep(SweepArgs),
    /// Rebuild summary.md/summary.csv from a results directory.
    Report(ReportArgs),
}

#[derive(Args)]
struct SmoothArgs {
    /// Input curve (.csv or .jsonl)
    #[arg(short, long)]
    input: PathBuf,
    /// Output curve; format inferred from the extension
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value_t = 11)]
    window: usize,
    #[arg(long, default_value_t = 3)]
    order: usize,
}

#[derive(Args)]
struct FitArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long, default_value_t = 5)]
    degree: usize,
    /// Write the fit JSON here instead of stdout
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long, default_value_t = 5)]
    degree: usize,
    #[arg(long)]
    sg_window: Option<usize>,
    #[arg(long)]
    sg_order: Option<usize>,
    /// Analysis segment as START:END (defaults to the whole curve)
    #[arg(long)]
    segment: Option<String>,
    #[arg(long, default_value_t = 10.0)]
    min_segment_width: f64,
    #[arg(long, default_value_t = 0.02)]
    min_prominence: f64,
    #[arg(long, default_value_t = 1e-3)]
    plateau_eps: f64,
    #[arg(long, default_value_t = 20.0)]
    plateau_min_width: f64,
    /// Write the report JSON here instead of stdout
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write N samples of the fitted curve and derivative as CSV
    #[arg(long, value_name = "N")]
    emit_fit_samples: Option<usize>,
    /// Where the fit samples go (default: <input>.fit.csv)
    #[arg(long)]
    samples_out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[command(subcommand)]
    family: SynthFamily,
}

#[derive(Subcommand)]
enum SynthFamily {
    /// Exponential decay plus a Gaussian bump (double-descent fixture).
    Bump(BumpArgs),
    /// Pure exponential decay.
    Monotone(MonotoneArgs),
}

#[derive(Args)]
struct BumpArgs {
    #[arg(long, default_value_t = 15.0)]
    decay_scale: f64,
    #[arg(long, default_value_t = 0.5)]
    amplitude: f64,
    #[arg(long, default_value_t = 50.0)]
    center: f64,
    #[arg(long, default_value_t = 8.0)]
    width: f64,
    #[arg(long, default_value_t = 0.0)]
    floor: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 201)]
    n_points: usize,
    #[arg(long, default_value_t = 80.0)]
    t_max: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct MonotoneArgs {
    #[arg(long, default_value_t = 100.0)]
    decay_scale: f64,
    #[arg(long, default_value_t = 0.0)]
    floor: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 201)]
    n_points: usize,
    #[arg(long, default_value_t = 200.0)]
    t_max: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct AliasArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// Comma-separated strides, e.g. 1,5,30
    #[arg(long, value_delimiter = ',')]
    strides: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    degree: usize,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, value_parser = parse_optimizer)]
    optimizer: OptimizerKind,
    #[arg(long)]
    lr: f64,
    #[arg(long)]
    epochs: usize,
    #[arg(long, default_value_t = 1)]
    eval_every: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 300)]
    n: usize,
    #[arg(long, default_value_t = 300)]
    n_val: usize,
    #[arg(long = "d", default_value_t = 20)]
    dim: usize,
    #[arg(long, default_value_t = 4.0)]
    sep: f64,
    /// Swap-noise fraction applied to the training set
    #[arg(long, default_value_t = 0.0)]
    noise_train: f64,
    /// Swap-noise fraction applied to the validation set
    #[arg(long, default_value_t = 0.0)]
    noise_val: f64,
    /// Hidden layer widths
    #[arg(long, value_delimiter = ',', default_value = "64,128")]
    hidden: Vec<usize>,
    /// Mini-batch size; trains full-batch when omitted
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    out_train: PathBuf,
    #[arg(long)]
    out_val: PathBuf,
}

#[derive(Args)]
struct DatagenArgs {
    #[arg(long, default_value_t = 300)]
    n: usize,
    #[arg(long = "d", default_value_t = 20)]
    dim: usize,
    #[arg(long, default_value_t = 4.0)]
    sep: f64,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment spec (JSON document mirroring ExperimentSpec)
    #[arg(long)]
    spec: PathBuf,
    /// Override the spec's output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    dir: PathBuf,
}

fn parse_optimizer(s: &str) -> Result<OptimizerKind, String> {
    match s {
        "sgd" => Ok(OptimizerKind::Sgd),
        "adam" => Ok(OptimizerKind::Adam),
        "adadelta" => Ok(OptimizerKind::Adadelta),
        other => Err(format!("unknown optimizer '{other}' (sgd|adam|adadelta)")),
    }
}

fn format_of(path: &Path) -> CurveFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") => CurveFormat::Jsonl,
        _ => CurveFormat::Csv,
    }
}

fn read_curve(path: &Path) -> Result<LearningCurve, Box<dyn Error>> {
    let file = File::open(path)?;
    Ok(load_curve(BufReader::new(file), format_of(path))?)
}

fn write_curve_file(path: &Path, curve: &LearningCurve) -> Result<(), Box<dyn Error>> {
    fs::write(path, save_curve(curve, format_of(path)))?;
    Ok(())
}

fn parse_segment(s: &str) -> Result<Segment, Box<dyn Error>> {
    let (a, b) = s
        .split_once(':')
        .ok_or("segment must be START:END, e.g. 0:2000")?;
    Ok(Segment::new(a.trim().parse()?, b.trim().parse()?)?)
}

fn emit_json(value: &impl serde::Serialize, output: Option<&Path>) -> Result<(), Box<dyn Error>> {
    let text = serde_json::to_string_pretty(value)?;
    match output {
        Some(path) => fs::write(path, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<(), Box<dyn Error>> {
    match cli.command {
        Command::Smooth(args) => {
            let curve = read_curve(&args.input)?;
            let cfg = SgConfig::new(args.window, args.order)?;
            let smoothed = smooth(&curve, cfg)?;
            write_curve_file(&args.output, &smoothed)?;
        }
        Command::Fit(args) => {
            let curve = read_curve(&args.input)?;
            if !(3..=6).contains(&args.degree) {
                eprintln!(
                    "warning: degree {} is outside the recommended range [3, 6]",
                    args.degree
                );
            }
            let f = fit(&curve, args.degree)?;
            emit_json(&f, args.output.as_deref())?;
        }
        Command::Detect(args) => {
            let curve = read_curve(&args.input)?;
            let sg = match (args.sg_window, args.sg_order) {
                (Some(w), Some(o)) => Some(SgConfig::new(w, o)?),
                (None, None) => None,
                _ => return Err("pass both --sg-window and --sg-order or neither".into()),
            };
            let cfg = DetectorConfig {
                degree: args.degree,
                sg,
                min_segment_width: args.min_segment_width,
                min_prominence: args.min_prominence,
                plateau_eps: args.plateau_eps,
                plateau_min_width: args.plateau_min_width,
                grid_points: 1000,
            };
            for w in cfg.warnings() {
                eprintln!("warning: {w}");
            }
            let segment = match &args.segment {
                Some(s) => parse_segment(s)?,
                None => curve.span(),
            };
            let report = detect(&curve, segment, &cfg)?;

            match (report.pattern, report.t_s) {
                (p, Some(t_s)) => eprintln!("verdict: {p} (t_s = {t_s:.2})"),
                (p, None) if report.undersampled => {
                    eprintln!("verdict: {p} (undersampled segment)")
                }
                (p, None) => eprintln!("verdict: {p}"),
            }

            if let Some(n) = args.emit_fit_samples {
                let samples_out = args.samples_out.clone().unwrap_or_else(|| {
                    let mut p = args.input.clone();
                    p.set_extension("fit.csv");
                    p
                });
                let dfit = report.fit.derivative()?;
                let (lo, hi) = report.segment;
                let mut csv = String::from("t,fit,derivative\n");
                for i in 0..n.max(2) {
                    let t = lo + (hi - lo) * i as f64 / (n.max(2) - 1) as f64;
                    csv.push_str(&format!(
                        "{t:.16e},{:.16e},{:.16e}\n",
                        report.fit.evaluate(t),
                        dfit.evaluate(t)
                    ));
                }
                fs::write(&samples_out, csv)?;
                eprintln!("fit samples written to {}", samples_out.display());
            }
            emit_json(&report, args.output.as_deref())?;
        }
        Command::Synth(args) => match args.family {
            SynthFamily::Bump(a) => {
                let spec = BumpCurveSpec {
                    decay_scale: a.decay_scale,
                    bump_amplitude: a.amplitude,
                    bump_center: a.center,
                    bump_width: a.width,
                    floor: a.floor,
                    noise_sigma: a.sigma,
                    n_points: a.n_points,
                    t_max: a.t_max,
                    seed: a.seed,
                };
                write_curve_file(&a.output, &gen_bump(&spec)?)?;
            }
            SynthFamily::Monotone(a) => {
                let curve =
                    gen_monotone(a.decay_scale, a.floor, a.sigma, a.n_points, a.t_max, a.seed)?;
                write_curve_file(&a.output, &curve)?;
            }
        },
        Command::Alias(args) => {
            let curve = read_curve(&args.input)?;
            let cfg = DetectorConfig {
                degree: args.degree,
                ..DetectorConfig::default()
            };
            let scan = aliasing_scan(&curve, &cfg, &args.strides);
            println!("stride,verdict");
            for row in &scan.rows {
                match &row.outcome {
                    Ok(r) => println!("{},{}", row.stride, r.pattern),
                    Err(e) => println!("{},error: {e}", row.stride),
                }
            }
            match scan.first_departure {
                Some(s) => eprintln!("verdict departs from stride-1 baseline at stride {s}"),
                None => eprintln!("all strides agree with the stride-1 baseline"),
            }
        }
        Command::Train(args) => {
            let pool = gen_gaussian_pair(args.n + args.n_val, args.dim, args.sep, args.seed)?;
            let (mut tr, mut va) = split_balanced(&pool, args.n)?;
            if args.noise_train > 0.0 {
                tr = inject_swap_noise(&tr, args.noise_train, args.seed.wrapping_add(1))?;
            }
            if args.noise_val > 0.0 {
                va = inject_swap_noise(&va, args.noise_val, args.seed.wrapping_add(2))?;
            }
            let mut dims = vec![args.dim];
            dims.extend_from_slice(&args.hidden);
            dims.push(1);
            let mut model = MlpModel::init(&dims, args.seed.wrapping_add(3))?;
            let cfg = TrainConfig {
                optimizer: OptimizerConfig::with_lr(args.optimizer, args.lr),
                epochs: args.epochs,
                eval_every: args.eval_every,
                batch: match args.batch {
                    Some(size) => BatchMode::Mini { size },
                    None => BatchMode::Full,
                },
                seed: args.seed.wrapping_add(4),
                halt: Some(DivergenceHalt::default()),
            };
            let out = train(&mut model, &tr.x, &tr.labels_f64(), &va.x, &va.labels_f64(), &cfg)?;
            if let Some(epoch) = out.halted_at {
                eprintln!("run halted at epoch {epoch}: validation loss diverged");
            }
            let train_curve = LearningCurve::new(out.train, "train", TimeUnit::Epoch)?;
            let val_curve = LearningCurve::new(out.val, "val", TimeUnit::Epoch)?;
            write_curve_file(&args.out_train, &train_curve)?;
            write_curve_file(&args.out_val, &val_curve)?;
        }
        Command::Datagen(args) => {
            let ds = gen_gaussian_pair(args.n, args.dim, args.sep, args.seed)?;
            let ds = inject_swap_noise(&ds, args.noise, args.seed.wrapping_add(1))?;
            fs::write(&args.output, ds.to_csv())?;
        }
        Command::Sweep(args) => {
            let mut text = String::new();
            File::open(&args.spec)?.read_to_string(&mut text)?;
            let mut spec: ExperimentSpec = serde_json::from_str(&text)?;
            if let Some(out) = args.out {
                spec.out_dir = out;
            }
            let records = run_sweep(&spec)?;
            let summary = report(&spec.out_dir)?;
            eprintln!(
                "{} runs complete; summary at {}",
                records.len(),
                spec.out_dir.join("summary.md").display()
            );
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(summary.markdown.as_bytes())?;
        }
        Command::Report(args) => {
            let summary = report(&args.dir)?;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(summary.markdown.as_bytes())?;
        }
    }
    Ok(())
}
