//! CLI plumbing for the `bws` binary: argument parsing, parameter
//! resolution, and command dispatch. Kept in a library so the report
//! serializers are testable.

pub mod report;

use bws_core::io::{csv_import, load_dataset_auto, save_subset, CsvData, CsvKind};
use bws_core::select::{
    ablation_sweep, best_window_select, AblationFamily, EvalMode, ProxyKind, WindowMode,
};
use bws_core::theory::{toy_sweep, verify_deficient_bound, verify_sufficient_bound};
use bws_core::windows::round_half_up;
use bws_core::{Error, GradientBundle};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "bws", about = "Best-window subset selection for data pruning", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads (0 = auto). Falls back to the BWS_THREADS env var.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Pick the best window subset and write it out.
    Select(SelectArgs),
    /// Evaluate the whole window grid and emit the sweep table.
    Sweep(SelectArgs),
    /// Sweep a generalized window family (two-half or wider).
    Ablation(AblationArgs),
    /// Run the Gaussian toy-model window sweep.
    Toy(ToyArgs),
    /// Numerically check a concentration-bound regime.
    Verify(VerifyArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum ProxyArg {
    Krr,
    GradDiff,
    GradSim,
}

impl From<ProxyArg> for ProxyKind {
    fn from(p: ProxyArg) -> Self {
        match p {
            ProxyArg::Krr => ProxyKind::Krr,
            ProxyArg::GradDiff => ProxyKind::GradDiff,
            ProxyArg::GradSim => ProxyKind::GradSim,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum EvalArg {
    Full,
    Low50,
}

impl From<EvalArg> for EvalMode {
    fn from(e: EvalArg) -> Self {
        match e {
            EvalArg::Full => EvalMode::Full,
            EvalArg::Low50 => EvalMode::Low50,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum WindowModeArg {
    Global,
    PerClass,
}

#[derive(Args, Debug)]
pub struct DataArgs {
    /// Feature file (.bwsf binary or .csv).
    #[arg(long)]
    pub features: PathBuf,
    /// Label file (.bwsl binary or .csv).
    #[arg(long)]
    pub labels: PathBuf,
    /// Score file (.bwss binary or .csv).
    #[arg(long)]
    pub scores: PathBuf,
}

#[derive(Args, Debug)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Subset size as a fraction of n (exclusive with --m).
    #[arg(long, conflicts_with = "m")]
    pub ratio: Option<f64>,
    /// Subset size as a sample count (exclusive with --ratio).
    #[arg(long)]
    pub m: Option<usize>,
    /// Grid step: a fraction (< 1) of n or a sample count (>= 1).
    #[arg(long)]
    pub step: f64,
    /// Ridge strength.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value_t = ProxyArg::Krr)]
    pub proxy: ProxyArg,
    #[arg(long, value_enum, default_value_t = EvalArg::Full)]
    pub eval: EvalArg,
    #[arg(long, value_enum, default_value_t = WindowModeArg::Global)]
    pub window_mode: WindowModeArg,
    /// CSV of per-sample surrogate gradients (for the grad proxies).
    #[arg(long)]
    pub gradients: Option<PathBuf>,
    /// Subset output path (select only).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON sweep report output path.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// CSV sweep table output path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Print one line per candidate.
    #[arg(long)]
    pub verbose: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum FamilyArg {
    TwoHalf,
    Wider,
}

#[derive(Args, Debug)]
pub struct AblationArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long, conflicts_with = "m")]
    pub ratio: Option<f64>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub step: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Widening factor c (> 1, wider family only).
    #[arg(long, default_value_t = 2.0)]
    pub factor: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = EvalArg::Full)]
    pub eval: EvalArg,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ToyArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    /// Grid step: fraction (< 1) of n or sample count (>= 1).
    #[arg(long)]
    pub step: f64,
    /// Number of seeds to average (seed values 0..seeds offset by --seed).
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum RegimeArg {
    Deficient,
    Sufficient,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub regime: RegimeArg,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub m: usize,
    /// Nominal n entering the deficient-regime bound.
    #[arg(long, default_value_t = 100)]
    pub n_label: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV path (defaults to stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn resolve_m(ratio: Option<f64>, m: Option<usize>, n: usize) -> Result<usize, Error> {
    match (ratio, m) {
        (Some(r), None) => {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::validation(format!("--ratio {r} out of (0, 1]")));
            }
            Ok(round_half_up(r * n as f64).clamp(1, n))
        }
        (None, Some(m)) => {
            if m < 1 || m > n {
                return Err(Error::validation(format!("--m {m} out of [1, {n}]")));
            }
            Ok(m)
        }
        (None, None) => Err(Error::validation("one of --ratio or --m is required")),
        (Some(_), Some(_)) => Err(Error::validation("--ratio and --m are exclusive")),
    }
}

fn resolve_step(step: f64, n: usize) -> Result<usize, Error> {
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::validation(format!("--step {step} must be positive")));
    }
    let t = if step < 1.0 { round_half_up(step * n as f64) } else { step as usize };
    if t == 0 {
        return Err(Error::validation(format!(
            "--step {step} resolves to zero samples for n={n}"
        )));
    }
    Ok(t)
}

fn load_gradients(path: &PathBuf) -> Result<GradientBundle, Error> {
    match csv_import(path, CsvKind::Features)? {
        CsvData::Features { n, d, data } => {
            let rows: Vec<Vec<f64>> = data.chunks_exact(d).map(|r| r.to_vec()).collect();
            debug_assert_eq!(rows.len(), n);
            GradientBundle::new(rows)
        }
        _ => unreachable!(),
    }
}

fn write_out(path: &PathBuf, contents: &str) -> Result<(), Error> {
    fs::write(path, contents).map_err(|e| Error::io(path.display().to_string(), e.to_string()))
}

fn run_select(args: &SelectArgs, want_subset: bool) -> Result<(), Error> {
    let ds = load_dataset_auto(&args.data.features, &args.data.labels, &args.data.scores)?;
    let n = ds.n();
    let m = resolve_m(args.ratio, args.m, n)?;
    let step = resolve_step(args.step, n)?;
    let gradients = args.gradients.as_ref().map(load_gradients).transpose()?;
    let window_mode = match args.window_mode {
        WindowModeArg::Global => WindowMode::Global,
        WindowModeArg::PerClass => WindowMode::PerClass,
    };
    let (sweep, subset) = best_window_select(
        &ds,
        m,
        step,
        args.lambda,
        args.proxy.into(),
        args.eval.into(),
        window_mode,
        gradients.as_ref(),
    )?;
    if args.verbose {
        for c in &sweep.candidates {
            eprintln!("candidate {:?} score {}", c.spec.start_key(), c.score);
        }
    }
    if want_subset {
        if let Some(out) = &args.out {
            save_subset(&subset, out)?;
        }
    }
    if let Some(path) = &args.report {
        write_out(path, &report::serialize_report(&sweep))?;
    }
    if let Some(path) = &args.csv {
        write_out(path, &report::sweep_csv(&sweep))?;
    }
    let winner = sweep.winner_candidate();
    println!(
        "winner start {:?} score {}",
        winner.spec.start_key(),
        report::fmt_f64(winner.score)
    );
    Ok(())
}

fn run_ablation(args: &AblationArgs) -> Result<(), Error> {
    let ds = load_dataset_auto(&args.data.features, &args.data.labels, &args.data.scores)?;
    let n = ds.n();
    let m = resolve_m(args.ratio, args.m, n)?;
    let step = resolve_step(args.step, n)?;
    let family = match args.family {
        FamilyArg::TwoHalf => AblationFamily::TwoHalf,
        FamilyArg::Wider => AblationFamily::Wider { factor: args.factor, seed: args.seed },
    };
    let sweep = ablation_sweep(&ds, family, m, step, args.lambda, args.eval.into())?;
    if let Some(path) = &args.report {
        write_out(path, &report::serialize_report(&sweep))?;
    }
    if let Some(path) = &args.csv {
        write_out(path, &report::sweep_csv(&sweep))?;
    }
    let winner = sweep.winner_candidate();
    println!(
        "winner start {:?} score {}",
        winner.spec.start_key(),
        report::fmt_f64(winner.score)
    );
    Ok(())
}

fn run_toy(args: &ToyArgs) -> Result<(), Error> {
    let step = resolve_step(args.step, args.n)?;
    let seeds: Vec<u64> = (0..args.seeds).map(|i| args.seed + i).collect();
    let rows = toy_sweep(args.n, args.d, args.m, step, &seeds)?;
    write_out(&args.out, &report::toy_csv(&rows))?;
    println!("toy sweep: {} windows, {} seeds", rows.len(), seeds.len());
    Ok(())
}

fn run_verify(args: &VerifyArgs) -> Result<(), Error> {
    let r = match args.regime {
        RegimeArg::Deficient => {
            verify_deficient_bound(args.d, args.n_label, args.m, args.trials, args.seed)?
        }
        RegimeArg::Sufficient => {
            let a = vec![1.0; args.m];
            verify_sufficient_bound(args.d, args.m, &a, args.seed)?
        }
    };
    let csv = report::regime_csv(&r);
    match &args.out {
        Some(path) => write_out(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

/// Resolves the thread count: flag, then BWS_THREADS, then auto.
pub fn resolve_threads(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("BWS_THREADS").ok().and_then(|v| v.parse().ok())
    })
    .unwrap_or(0)
}

/// Runs a parsed command; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let threads = resolve_threads(cli.threads);
    // num_threads(0) means automatic sizing
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        eprintln!("error: failed to initialize worker pool: {e}");
        return EXIT_NUMERICAL;
    }
    let result = match &cli.command {
        Command::Select(args) => run_select(args, true),
        Command::Sweep(args) => run_select(args, false),
        Command::Ablation(args) => run_ablation(args),
        Command::Toy(args) => run_toy(args),
        Command::Verify(args) => run_verify(args),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Validation(_) => EXIT_VALIDATION,
                Error::Io { .. } => EXIT_IO,
                Error::Numerical(_) => EXIT_NUMERICAL,
            }
        }
    }
}
