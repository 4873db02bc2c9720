//! `trustwalk`: fit, simulate and synthesize reliability-rating sessions
//! under the quantum random walk model.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use trustwalk::fitter::{self, Bounds, FitConfig};
use trustwalk::io;
use trustwalk::synth::{self, ProtocolConfig};
use trustwalk::{ModelParams, TrialOutcome};

/// Evaluations between progress lines on stderr.
const PROGRESS_EVERY: usize = 500;

#[derive(Parser, Debug)]
#[command(name = "trustwalk", version, about = "Quantum random walk model of reliability ratings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit gamma, alpha, beta, sigma to a session's block ratings.
    Fit(FitArgs),
    /// Replay a session with fixed parameters and export the propensity trajectory.
    Simulate(SimulateArgs),
    /// Generate a synthetic session from the model.
    Synth(SynthArgs),
    /// Evolve one Gaussian state under a single fixed Hamiltonian.
    Insilico(InsilicoArgs),
    /// Re-fit across a grid of collapse standard deviations.
    SweepStd(SweepArgs),
}

#[derive(Args, Debug)]
struct FitOpts {
    /// Random seed for the optimizer.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Maximum number of cost evaluations.
    #[arg(long, default_value_t = 5000)]
    budget: usize,
    /// Search box as `lo:hi` pairs for gamma,alpha,beta,sigma, e.g.
    /// `0.01:1,0.01:10,0.01:10,0.01:10`.
    #[arg(long)]
    bounds: Option<String>,
}

impl FitOpts {
    fn config(&self, collapse_std: f64) -> Result<FitConfig> {
        let bounds = match &self.bounds {
            Some(spec) => parse_bounds(spec)?,
            None => Bounds::default(),
        };
        let config = FitConfig {
            bounds,
            seed: self.seed,
            budget: self.budget,
            collapse_std,
            ..FitConfig::default()
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Session JSON file.
    #[arg(long)]
    input: PathBuf,
    /// Output fit JSON; the per-block table goes to `<stem>.blocks.csv`.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    opts: FitOpts,
    /// Collapse standard deviation held fixed during the fit, level units.
    #[arg(long, default_value_t = trustwalk::hamiltonians::DEFAULT_COLLAPSE_STD)]
    collapse_std: f64,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    input: PathBuf,
    /// Output propensity CSV; the per-block table goes to `<stem>.blocks.csv`.
    #[arg(long)]
    out: PathBuf,
    /// Model parameters `gamma,alpha,beta,sigma,std`.
    #[arg(long)]
    params: Option<String>,
    /// Skip the re-preparation at block ends.
    #[arg(long)]
    no_collapse: bool,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output session JSON.
    #[arg(long)]
    out: PathBuf,
    /// Generating parameters `gamma,alpha,beta,sigma,std`.
    #[arg(long)]
    params: Option<String>,
    /// Gaussian rating noise, percent.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 20)]
    blocks: usize,
    #[arg(long, default_value_t = 28)]
    trials_per_block: usize,
    #[arg(long, default_value_t = 0.75)]
    match_prob: f64,
    #[arg(long, default_value_t = 0.05)]
    no_response_prob: f64,
    /// Median inter-trial gap, seconds.
    #[arg(long, default_value_t = 2.5)]
    median_time: f64,
    /// Initial rating, percent.
    #[arg(long, default_value_t = 50.0)]
    initial_rating: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum HamiltonianKind {
    Plus,
    Minus,
    Zero,
}

impl From<HamiltonianKind> for TrialOutcome {
    fn from(k: HamiltonianKind) -> Self {
        match k {
            HamiltonianKind::Plus => TrialOutcome::Match,
            HamiltonianKind::Minus => TrialOutcome::Mismatch,
            HamiltonianKind::Zero => TrialOutcome::NoResponse,
        }
    }
}

#[derive(Args, Debug)]
struct InsilicoArgs {
    #[arg(long, value_enum)]
    hamiltonian: HamiltonianKind,
    /// Mean of the initial Gaussian, level units (0..10).
    #[arg(long)]
    init_mean: f64,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    /// Seconds per step.
    #[arg(long, default_value_t = 1.0)]
    dt: f64,
    #[arg(long)]
    params: Option<String>,
    /// Output propensity CSV; expected ratings go to `<stem>.ratings.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    input: PathBuf,
    /// Grid `start:stop:step` (stop exclusive), level units.
    #[arg(long, default_value = "0.05:2:0.1")]
    grid: String,
    /// Output CSV `collapse_std,mae`.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    opts: FitOpts,
}

/// Bad flags or input detected before any work is done.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match err.downcast_ref::<trustwalk::Error>() {
        Some(e) if e.is_validation() => 2,
        _ => 1,
    }
}

fn parse_params(spec: Option<&str>) -> Result<ModelParams> {
    let Some(spec) = spec else {
        return Ok(ModelParams::default());
    };
    let values = spec
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| usage(format!("--params {spec:?}: {e}")))?;
    let [gamma, alpha, beta, sigma, std] = values[..] else {
        return Err(usage(format!(
            "--params expects gamma,alpha,beta,sigma,std, got {} values",
            values.len()
        )));
    };
    let params = ModelParams::new(gamma, alpha, beta, sigma, std);
    params.validate()?;
    let outside = params.out_of_fit_bounds();
    if !outside.is_empty() {
        log::warn!("parameters outside the default fit box: {}", outside.join(", "));
    }
    Ok(params)
}

fn parse_bounds(spec: &str) -> Result<Bounds> {
    let pairs: Vec<&str> = spec.split(',').collect();
    if pairs.len() != 4 {
        return Err(usage(format!("--bounds expects 4 lo:hi pairs, got {}", pairs.len())));
    }
    let mut out = [(0.0, 0.0); 4];
    for (slot, pair) in out.iter_mut().zip(&pairs) {
        let (lo, hi) = pair
            .split_once(':')
            .ok_or_else(|| usage(format!("--bounds entry {pair:?} is not lo:hi")))?;
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("--bounds entry {pair:?} is not numeric")))
        };
        *slot = (num(lo)?, num(hi)?);
    }
    let bounds = Bounds::from_array(out);
    bounds.validate()?;
    Ok(bounds)
}

fn require_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(usage(format!("input file {} does not exist", path.display())));
    }
    Ok(())
}

fn require_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(usage(format!(
            "output directory {} does not exist",
            dir.display()
        ))),
        _ => Ok(()),
    }
}

fn progress_printer(label: String) -> impl Fn(usize, f64) + Sync {
    let next = AtomicUsize::new(PROGRESS_EVERY);
    move |evals, best| {
        let due = next.load(Ordering::Relaxed);
        if evals >= due {
            next.store((evals / PROGRESS_EVERY + 1) * PROGRESS_EVERY, Ordering::Relaxed);
            eprintln!("{label}: {evals} evaluations, best MAE {best:.6}");
        }
    }
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let config = args.opts.config(args.collapse_std)?;
    require_file(&args.input)?;
    require_parent(&args.out)?;
    let session = io::load_session(&args.input)?;
    let result = fitter::fit_with_progress(&session, &config, &progress_printer("fit".into()))?;
    io::export_fit(&result, &args.out)?;
    let blocks = io::sibling(&args.out, "blocks.csv");
    io::write_atomic(&blocks, io::fit_blocks_csv(&result).as_bytes())?;
    eprintln!(
        "fit: MAE {:.6} after {} evaluations -> {}",
        result.mae,
        result.evaluations,
        args.out.display()
    );
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let params = parse_params(args.params.as_deref())?;
    require_file(&args.input)?;
    require_parent(&args.out)?;
    let session = io::load_session(&args.input)?;
    let traj = trustwalk::run_session(&session, &params, !args.no_collapse)?;
    let blocks = io::export_trajectory(&traj, &args.out)?;
    info!("wrote {} and {}", args.out.display(), blocks.display());
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let params = parse_params(args.params.as_deref())?;
    if !args.noise.is_finite() || args.noise < 0.0 {
        return Err(usage(format!("--noise must be non-negative, got {}", args.noise)));
    }
    let config = ProtocolConfig {
        blocks: args.blocks,
        trials_per_block: args.trials_per_block,
        match_prob: args.match_prob,
        no_response_prob: args.no_response_prob,
        median_time_s: args.median_time,
        initial_rating: args.initial_rating,
        seed: args.seed,
        ..ProtocolConfig::default()
    };
    config.validate()?;
    require_parent(&args.out)?;
    let protocol = synth::generate_protocol(&config)?;
    let session = synth::generate_ratings(&protocol, &params, args.noise)?;
    io::save_session(&session, &args.out)?;
    info!("wrote {} ({} trials)", args.out.display(), session.trial_count());
    Ok(())
}

fn cmd_insilico(args: &InsilicoArgs) -> Result<()> {
    let params = parse_params(args.params.as_deref())?;
    if !(0.0..=10.0).contains(&args.init_mean) {
        return Err(usage(format!("--init-mean must lie in [0, 10], got {}", args.init_mean)));
    }
    require_parent(&args.out)?;
    let run = trustwalk::insilico(args.hamiltonian.into(), &params, args.init_mean, args.steps, args.dt)?;
    io::write_atomic(&args.out, io::insilico_csv(&run).as_bytes())?;
    let ratings = io::sibling(&args.out, "ratings.csv");
    io::write_atomic(&ratings, io::insilico_ratings_csv(&run).as_bytes())?;
    let last = run.expected.last().copied().unwrap_or(f64::NAN);
    eprintln!("insilico: final expected rating {last:.6}");
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let grid = fitter::parse_grid(&args.grid).with_context(|| format!("--grid {:?}", args.grid))?;
    let config = args.opts.config(FitConfig::default().collapse_std)?;
    require_file(&args.input)?;
    require_parent(&args.out)?;
    let session = io::load_session(&args.input)?;
    eprintln!("sweep-std: {} grid points, {} evaluations each", grid.len(), config.budget);
    let rows = fitter::sweep_collapse_std(&session, &config, &grid)?;
    io::write_atomic(&args.out, io::sweep_csv(&rows).as_bytes())?;
    if let Some((std, mae)) = rows.iter().min_by(|a, b| a.1.total_cmp(&b.1)) {
        eprintln!("sweep-std: minimum MAE {mae:.6} at collapse_std {std}");
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Insilico(a) => cmd_insilico(a),
        Command::SweepStd(a) => cmd_sweep(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
