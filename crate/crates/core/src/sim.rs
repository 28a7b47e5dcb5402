//! Speculator-driven market simulation along a CIR short-rate path.
//!
//! Each step advances the pool clock, settles positions that have matured,
//! launches `trades_per_step` active trades that lend when the pool quotes
//! above the market rate and borrow otherwise, interleaves those with the
//! settlements, re-evaluates the lending halt, records [`StepMetrics`], and
//! finally resets the anchor to the step's market rate.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::invariant::{AnchorFn, CurveParams, InvariantError};
use crate::market::{self, CirParams, GaussianStream, MarketError, MarketPath, NormalSource};
use crate::pool::{PoolAccount, PoolError, PoolSnapshot, Size, TradeKind};
use crate::ratemath::Rate;

/// Column header of the per-step metrics CSV.
pub const METRICS_HEADER: &str = "step,time_years,market_rate,mean_pool_rate,rate_diff,rate_std,equity_minus_y0,n_active_executed,n_passive_settled,halted";

/// Column header of the per-step diagnostics CSV.
pub const DIAGNOSTICS_HEADER: &str = "step,mean_marginal_rate,marginal_rate_std,tenor_curve_std,accrual,liabilities,open_positions,n_halt_skips,n_rejected";

/// Floor applied to sampled trade sizes.
pub const MIN_TRADE_SIZE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Pool(#[from] PoolError),
    #[error("insolvency at step {step}: {source} [{snapshot}]")]
    Insolvency {
        step: usize,
        source: PoolError,
        snapshot: PoolSnapshot,
    },
}

/// How the second parameter of the maturity distribution `N(T-t, T-t)` is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaturitySpread {
    /// `T-t` is the variance; the standard deviation is `sqrt(T-t)`.
    Variance,
    /// `T-t` is the standard deviation.
    StdDev,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Denomination {
    Cash,
    Face,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub y0: f64,
    pub r0: Rate,
    pub kappa: f64,
    pub cir: CirParams,
    pub horizon: f64,
    pub n_steps: usize,
    pub trades_per_step: usize,
    #[serde(default = "default_spread")]
    pub maturity_spread: MaturitySpread,
    pub size_mean: f64,
    pub size_var: f64,
    #[serde(default = "default_denomination")]
    pub size_denomination: Denomination,
    pub halt_threshold: f64,
    pub seed: u64,
}

fn default_spread() -> MaturitySpread {
    MaturitySpread::Variance
}

fn default_denomination() -> Denomination {
    Denomination::Cash
}

impl SimConfig {
    /// Full experiment: 100 000 steps of 1000 trades over one year.
    pub fn paper(seed: u64) -> Self {
        Self {
            y0: 1000.0,
            r0: 0.05,
            kappa: 0.02,
            cir: CirParams {
                k: 0.4,
                theta: 0.05,
                sigma: 0.2,
                r_init: 0.05,
            },
            horizon: 1.0,
            n_steps: 100_000,
            trades_per_step: 1000,
            maturity_spread: MaturitySpread::Variance,
            size_mean: 0.72,
            size_var: 1.0,
            size_denomination: Denomination::Cash,
            halt_threshold: 0.99,
            seed,
        }
    }

    /// Reduced scale: 2000 steps of 200 trades.
    pub fn desk(seed: u64) -> Self {
        Self {
            n_steps: 2000,
            trades_per_step: 200,
            ..Self::paper(seed)
        }
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let fail = |m: &str| Err(SimError::Config(m.to_string()));
        if self.n_steps == 0 {
            return fail("n_steps must be at least 1");
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return fail("horizon must be positive");
        }
        if !(self.halt_threshold > 0.0 && self.halt_threshold < 1.0) {
            return fail("halt_threshold must lie in (0, 1)");
        }
        if !(self.y0 > 0.0) {
            return fail("y0 must be positive");
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return fail("kappa must lie in (0, 1)");
        }
        if !(self.size_var >= 0.0 && self.size_mean.is_finite()) {
            return fail("size distribution must have finite mean and non-negative variance");
        }
        self.cir.validate()?;
        Ok(())
    }
}

/// One step of the run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMetrics {
    pub step: usize,
    pub time_years: f64,
    pub market_rate: Rate,
    /// Unweighted mean of executed active trades' realized rates; NaN if none.
    pub mean_pool_rate: Rate,
    pub rate_diff: f64,
    /// Population std of executed active trades' realized rates.
    pub rate_std: f64,
    pub equity_minus_y0: f64,
    pub n_active: usize,
    pub n_passive: usize,
    pub halted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    /// Mean pre-trade marginal rate of executed active trades.
    pub mean_marginal_rate: Rate,
    pub marginal_rate_std: f64,
    /// Std of the end-of-step curve sampled at the step's executed tenors.
    pub tenor_curve_std: f64,
    /// Change in L from advancing the clock this step; trades and
    /// settlements leave equity unchanged, so this is the step's equity drift.
    pub accrual: f64,
    pub liabilities: f64,
    pub open_positions: usize,
    pub n_halt_skips: usize,
    pub n_rejected: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledTrade {
    pub maturity: f64,
    pub size: f64,
}

/// Draws one speculator trade: maturity `|N(T-now, T-now)|` floored at `dt`,
/// size `|N(mean, var)|` floored at [`MIN_TRADE_SIZE`].
pub fn sample_trade<N: NormalSource>(
    now: f64,
    config: &SimConfig,
    normals: &mut N,
) -> SampledTrade {
    let remaining = (config.horizon - now).max(0.0);
    let spread = match config.maturity_spread {
        MaturitySpread::Variance => remaining.sqrt(),
        MaturitySpread::StdDev => remaining,
    };
    let maturity = (normals.gaussian() * spread + remaining).abs().max(config.dt());
    let size = (normals.gaussian() * config.size_var.sqrt() + config.size_mean)
        .abs()
        .max(MIN_TRADE_SIZE);
    SampledTrade { maturity, size }
}

/// Speculator rule: lend when the pool pays more than the market, else borrow.
pub fn direction(pool_rate: Rate, market_rate: Rate) -> TradeKind {
    if pool_rate > market_rate {
        TradeKind::Lend
    } else {
        TradeKind::Borrow
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Active,
    Passive,
}

/// Spreads passive slots evenly among active ones: the k-th passive (1-based)
/// follows the `ceil(k·n_active/n_passive)`-th active.
pub fn interleave(n_active: usize, n_passive: usize) -> Vec<Slot> {
    let mut out = Vec::with_capacity(n_active + n_passive);
    let mut placed = 0;
    for k in 1..=n_passive {
        let after = (k * n_active).div_ceil(n_passive);
        out.extend(std::iter::repeat_n(Slot::Active, after - placed));
        placed = after;
        out.push(Slot::Passive);
    }
    out.extend(std::iter::repeat_n(Slot::Active, n_active - placed));
    out
}

/// Mean and population standard deviation; `(NaN, 0)` for an empty slice.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Step-by-step driver. [`run`] is the whole-run convenience wrapper.
pub struct Simulation {
    config: SimConfig,
    path: MarketPath,
    pool: PoolAccount,
    normals: GaussianStream,
    step: usize,
    rates: Vec<f64>,
    marginals: Vec<f64>,
    tenors: Vec<f64>,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let dt = config.dt();
        let path = market::generate(&config.cir, config.n_steps, dt, config.seed)?;
        let params = CurveParams::flat(config.kappa, config.r0)
            .map_err(|e| SimError::Config(e.to_string()))?;
        let pool = PoolAccount::new(config.y0, config.r0, params)?
            .with_halt_threshold(config.halt_threshold)?;
        let normals = GaussianStream::new(config.seed, market::TRADE_STREAM);
        let cap = config.trades_per_step;
        Ok(Self {
            config,
            path,
            pool,
            normals,
            step: 0,
            rates: Vec::with_capacity(cap),
            marginals: Vec::with_capacity(cap),
            tenors: Vec::with_capacity(cap),
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn path(&self) -> &MarketPath {
        &self.path
    }

    pub fn pool(&self) -> &PoolAccount {
        &self.pool
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.config.n_steps
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    /// Runs one step; `None` once the horizon is reached.
    pub fn step(&mut self) -> Option<Result<(StepMetrics, StepDiagnostics), SimError>> {
        if self.is_finished() {
            return None;
        }
        let out = self.run_step();
        self.step += 1;
        Some(out)
    }

    fn run_step(&mut self) -> Result<(StepMetrics, StepDiagnostics), SimError> {
        let n = self.step;
        let dt = self.config.dt();
        let start = n as f64 * dt;
        let now = (n + 1) as f64 * dt;
        let market_rate = self.path.rates[n + 1];

        let before = self.pool.liabilities();
        self.pool.advance_to(now)?;
        let accrual = self.pool.liabilities() - before;
        let due = self.pool.due_positions();
        let schedule = interleave(self.config.trades_per_step, due.len());

        self.rates.clear();
        self.marginals.clear();
        self.tenors.clear();
        let (mut halt_skips, mut rejected, mut passive) = (0, 0, 0);
        let mut due_iter = due.into_iter();

        for slot in schedule {
            match slot {
                Slot::Passive => {
                    let id = due_iter.next().expect("one passive slot per due position");
                    self.pool
                        .settle_position(id)
                        .map_err(|source| SimError::Insolvency {
                            step: n,
                            source,
                            snapshot: self.pool.snapshot(),
                        })?;
                    passive += 1;
                }
                Slot::Active => {
                    let draw = sample_trade(start, &self.config, &mut self.normals);
                    // snap maturity up to the grid so settlement lands exactly on it
                    let ticks = ((draw.maturity / dt) - 1e-9).ceil().max(1.0);
                    let tenor = ticks * dt;
                    let pool_rate = self.pool.rate(tenor)?;
                    let kind = direction(pool_rate, market_rate);
                    if kind == TradeKind::Lend && self.pool.is_halted() {
                        halt_skips += 1;
                        continue;
                    }
                    let size = match self.config.size_denomination {
                        Denomination::Cash => Size::Cash(draw.size),
                        Denomination::Face => Size::Face(draw.size),
                    };
                    let quote = match self.pool.quote(kind, tenor, size) {
                        Ok(q) => q,
                        Err(PoolError::Invariant(
                            InvariantError::ExceedsCapacity(_) | InvariantError::EmptyBondPool,
                        )) => {
                            rejected += 1;
                            continue;
                        }
                        Err(e) => return Err(e.into()),
                    };
                    self.pool.execute(&quote)?;
                    self.rates.push(quote.realized_rate());
                    self.marginals.push(quote.pre_trade_rate);
                    self.tenors.push(tenor);
                }
            }
        }

        let halted = self.pool.update_halt();
        let (mean_pool_rate, rate_std) = mean_std(&self.rates);
        let (mean_marginal_rate, marginal_rate_std) = mean_std(&self.marginals);
        let curve: Vec<f64> = self
            .tenors
            .iter()
            .map(|&t| self.pool.rate(t))
            .collect::<Result<_, _>>()?;
        let (_, tenor_curve_std) = mean_std(&curve);

        let metrics = StepMetrics {
            step: n,
            time_years: now,
            market_rate,
            mean_pool_rate,
            rate_diff: mean_pool_rate - market_rate,
            rate_std,
            equity_minus_y0: self.pool.equity() - self.config.y0,
            n_active: self.rates.len(),
            n_passive: passive,
            halted,
        };
        let diagnostics = StepDiagnostics {
            step: n,
            mean_marginal_rate,
            marginal_rate_std,
            tenor_curve_std,
            accrual,
            liabilities: self.pool.liabilities(),
            open_positions: self.pool.open_positions(),
            n_halt_skips: halt_skips,
            n_rejected: rejected,
        };

        // this step's market rate anchors the next step
        self.pool.set_anchor(AnchorFn::constant(market_rate));
        Ok((metrics, diagnostics))
    }
}

/// Output of a complete run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: Vec<StepMetrics>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub path: MarketPath,
    pub final_snapshot: PoolSnapshot,
}

pub fn run(config: SimConfig) -> Result<RunOutput, SimError> {
    let mut sim = Simulation::new(config)?;
    let mut metrics = Vec::with_capacity(sim.config.n_steps);
    let mut diagnostics = Vec::with_capacity(sim.config.n_steps);
    while let Some(step) = sim.step() {
        let (m, d) = step?;
        metrics.push(m);
        diagnostics.push(d);
    }
    Ok(RunOutput {
        metrics,
        diagnostics,
        final_snapshot: sim.pool.snapshot(),
        path: sim.path,
    })
}

pub fn write_metrics_csv<W: Write>(metrics: &[StepMetrics], mut out: W) -> io::Result<()> {
    writeln!(out, "{METRICS_HEADER}")?;
    for m in metrics {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{}",
            m.step,
            m.time_years,
            m.market_rate,
            m.mean_pool_rate,
            m.rate_diff,
            m.rate_std,
            m.equity_minus_y0,
            m.n_active,
            m.n_passive,
            u8::from(m.halted),
        )?;
    }
    Ok(())
}

pub fn write_diagnostics_csv<W: Write>(diags: &[StepDiagnostics], mut out: W) -> io::Result<()> {
    writeln!(out, "{DIAGNOSTICS_HEADER}")?;
    for d in diags {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{}",
            d.step,
            d.mean_marginal_rate,
            d.marginal_rate_std,
            d.tenor_curve_std,
            d.accrual,
            d.liabilities,
            d.open_positions,
            d.n_halt_skips,
            d.n_rejected,
        )?;
    }
    Ok(())
}
