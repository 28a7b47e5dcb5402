//! `bondmm`: run the speculator experiment, quote single trades, dump curves.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;

use bondmm_core::invariant::{self, InvariantError};
use bondmm_core::market::RNG_IDENTIFIER;
use bondmm_core::pool::Size;
use bondmm_core::ratemath::discount;
use bondmm_core::sim::{self, SimError, Simulation, StepDiagnostics};
use bondmm_core::{
    AnchorFn, CoreState, CurveParams, PoolAccount, PoolError, SimConfig, StepMetrics, TradeKind,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

const BUILD_ID: &str = env!("BONDMM_BUILD_ID");

#[derive(Debug, Parser)]
#[command(name = "bondmm", version, about = "Arbitrary-maturity fixed-income AMM toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the speculator simulation and write per-step CSVs.
    Simulate(SimulateArgs),
    /// Price one trade against given pool balances; prints JSON.
    Quote(QuoteArgs),
    /// Print the rate curve `tenor,rate,price` as CSV.
    Curve(CurveArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scale {
    /// N=100000 steps, M=1000 trades per step.
    Paper,
    /// N=2000 steps, M=200 trades per step.
    Desk,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// TOML file with every SimConfig field; unknown keys are rejected.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Runs several seeds concurrently, one `seed-<n>` subdirectory each.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    seeds: Option<Vec<u64>>,
    /// Step and trade counts preset; overrides the config's values.
    #[arg(long, value_enum)]
    scale: Option<Scale>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Appends a pool snapshot line to checkpoints.txt every this many steps.
    #[arg(long, value_name = "STEPS")]
    checkpoint_every: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Lend,
    Withdraw,
    Borrow,
    Repay,
}

impl From<Kind> for TradeKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Lend => TradeKind::Lend,
            Kind::Withdraw => TradeKind::Withdraw,
            Kind::Borrow => TradeKind::Borrow,
            Kind::Repay => TradeKind::Repay,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Denom {
    Cash,
    Face,
}

#[derive(Debug, Args)]
struct QuoteArgs {
    /// Bond present value X.
    #[arg(long)]
    x: f64,
    /// Cash balance y.
    #[arg(long)]
    y: f64,
    #[arg(long)]
    kappa: f64,
    /// Anchor rate r* (flat across tenors).
    #[arg(long, allow_hyphen_values = true)]
    r_star: f64,
    /// Tenor in years.
    #[arg(long)]
    t: f64,
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    size: f64,
    #[arg(long, value_enum, default_value = "cash")]
    denom: Denom,
}

#[derive(Debug, Args)]
struct CurveArgs {
    #[arg(long)]
    x: f64,
    #[arg(long)]
    y: f64,
    #[arg(long)]
    kappa: f64,
    /// Anchor polynomial coefficients in tenor, constant term first.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    anchor: Vec<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_min: f64,
    #[arg(long)]
    t_max: f64,
    #[arg(long)]
    n_points: usize,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Rejected(String),
    #[error("{0}")]
    Insolvency(String),
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Rejected(_) => 3,
            CliError::Insolvency(_) => 4,
            CliError::Failure(_) => 1,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Failure(format!("i/o error: {e}"))
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) => CliError::Usage(e.to_string()),
            SimError::Market(_) => CliError::Usage(format!("invalid config: {e}")),
            SimError::Insolvency { .. } => CliError::Insolvency(e.to_string()),
            SimError::Pool(_) => CliError::Failure(e.to_string()),
        }
    }
}

impl From<PoolError> for CliError {
    fn from(e: PoolError) -> Self {
        match e {
            PoolError::Invariant(
                InvariantError::ExceedsCapacity(_) | InvariantError::EmptyBondPool,
            )
            | PoolError::Halted => CliError::Rejected(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(&args),
        Command::Quote(args) => quote(&args),
        Command::Curve(args) => curve(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bondmm: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn load_config(args: &SimulateArgs) -> Result<SimConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            toml::from_str::<SimConfig>(&text).map_err(|e| {
                CliError::Usage(format!("invalid config {}: {}", path.display(), e.message()))
            })?
        }
        None => match args.scale {
            Some(Scale::Paper) => SimConfig::paper(42),
            Some(Scale::Desk) => SimConfig::desk(42),
            None => return Err(CliError::Usage("simulate needs --config or --scale".into())),
        },
    };
    match args.scale {
        Some(Scale::Paper) => {
            let preset = SimConfig::paper(config.seed);
            config.n_steps = preset.n_steps;
            config.trades_per_step = preset.trades_per_step;
            eprintln!(
                "bondmm: paper scale runs 1e8 trades and keeps tens of millions of positions open; \
                 expect hours of runtime and several GB of memory"
            );
        }
        Some(Scale::Desk) => {
            let preset = SimConfig::desk(config.seed);
            config.n_steps = preset.n_steps;
            config.trades_per_step = preset.trades_per_step;
        }
        None => {}
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate().map_err(CliError::from)?;
    Ok(config)
}

fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let config = load_config(args)?;
    if args.checkpoint_every == Some(0) {
        return Err(CliError::Usage("--checkpoint-every must be positive".into()));
    }
    fs::create_dir_all(&args.out).map_err(|e| {
        CliError::Usage(format!("cannot create output directory {}: {e}", args.out.display()))
    })?;

    let Some(seeds) = &args.seeds else {
        return run_one(config, &args.out, args.checkpoint_every);
    };
    let results: Vec<Result<(), CliError>> = thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                let mut cfg = config.clone();
                cfg.seed = seed;
                let dir = args.out.join(format!("seed-{seed}"));
                let every = args.checkpoint_every;
                scope.spawn(move || {
                    fs::create_dir_all(&dir)?;
                    run_one(cfg, &dir, every)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(CliError::Failure("worker panicked".into()))))
            .collect()
    });
    // report the first failure in seed order
    results.into_iter().collect()
}

fn run_one(config: SimConfig, dir: &Path, checkpoint_every: Option<usize>) -> Result<(), CliError> {
    let mut sim = Simulation::new(config.clone())?;
    let mut metrics: Vec<StepMetrics> = Vec::with_capacity(config.n_steps);
    let mut diagnostics: Vec<StepDiagnostics> = Vec::with_capacity(config.n_steps);
    let mut checkpoints = match checkpoint_every {
        Some(_) => Some(BufWriter::new(File::create(dir.join("checkpoints.txt"))?)),
        None => None,
    };

    let mut failure = None;
    while let Some(step) = sim.step() {
        match step {
            Ok((m, d)) => {
                metrics.push(m);
                diagnostics.push(d);
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
        if let (Some(out), Some(every)) = (checkpoints.as_mut(), checkpoint_every) {
            if sim.step_index() % every == 0 {
                writeln!(out, "step={} {}", sim.step_index(), sim.pool().snapshot())?;
            }
        }
    }
    if let Some(out) = checkpoints.as_mut() {
        out.flush()?;
    }

    // partial output is still written so an aborted run can be inspected
    write_with(dir.join("metrics.csv"), |w| sim::write_metrics_csv(&metrics, w))?;
    write_with(dir.join("diagnostics.csv"), |w| sim::write_diagnostics_csv(&diagnostics, w))?;
    write_with(dir.join("market.csv"), |w| sim.path().write_csv(w))?;

    let halted_steps = metrics.iter().filter(|m| m.halted).count();
    let metadata = json!({
        "config": config,
        "seed": config.seed,
        "rng": RNG_IDENTIFIER,
        "build": BUILD_ID,
        "version": env!("CARGO_PKG_VERSION"),
        "steps_completed": metrics.len(),
        "halted_steps": halted_steps,
        "final_pool": sim.pool().snapshot().to_string(),
        "error": failure.as_ref().map(|e| e.to_string()),
    });
    write_with(dir.join("metadata.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &metadata).map_err(io::Error::from)?;
        writeln!(w)
    })?;

    match failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn write_with<F>(path: PathBuf, body: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
{
    let mut w = BufWriter::new(File::create(&path)?);
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

fn quote(args: &QuoteArgs) -> Result<(), CliError> {
    let core = CoreState::new(args.x, args.y).map_err(|e| CliError::Usage(e.to_string()))?;
    let params =
        CurveParams::flat(args.kappa, args.r_star).map_err(|e| CliError::Usage(e.to_string()))?;
    let pool = PoolAccount::from_state(core, params)?;
    let size = match args.denom {
        Denom::Cash => Size::Cash(args.size),
        Denom::Face => Size::Face(args.size),
    };
    let q = pool.quote(args.kind.into(), args.t, size)?;
    let out = json!({
        "kind": q.kind,
        "tenor": q.tenor,
        "dx": q.dx,
        "dy": q.dy,
        "average_price": q.average_price,
        "pre_trade_rate": q.pre_trade_rate,
        "post_trade_rate": q.post_trade_rate,
        "realized_rate": q.realized_rate(),
        "collateral": q.collateral,
    });
    println!("{out}");
    Ok(())
}

fn curve(args: &CurveArgs) -> Result<(), CliError> {
    if !(args.t_min >= 0.0) {
        return Err(CliError::Usage(format!("--t-min must be non-negative, got {}", args.t_min)));
    }
    if !(args.t_max >= args.t_min) {
        return Err(CliError::Usage("--t-max must not be below --t-min".into()));
    }
    if args.n_points < 2 {
        return Err(CliError::Usage("--n-points must be at least 2".into()));
    }
    let core = CoreState::new(args.x, args.y).map_err(|e| CliError::Usage(e.to_string()))?;
    let anchor = AnchorFn::polynomial(args.anchor.clone()).map_err(|e| CliError::Usage(e.to_string()))?;
    let params = CurveParams::new(args.kappa, anchor).map_err(|e| CliError::Usage(e.to_string()))?;

    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    writeln!(out, "tenor,rate,price")?;
    let span = args.t_max - args.t_min;
    let last = (args.n_points - 1) as f64;
    for i in 0..args.n_points {
        let t = args.t_min + span * i as f64 / last;
        let r = invariant::rate(&core, t, &params).map_err(|e| CliError::Usage(e.to_string()))?;
        writeln!(out, "{t:.16e},{r:.16e},{:.16e}", discount(r, t))?;
    }
    out.flush()?;
    Ok(())
}
