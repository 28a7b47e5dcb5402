//! Exogenous market short rate: a seeded Cox–Ingersoll–Ross path.
//!
//! ```text
//! dr = k(θ − r) dt + σ √r dW
//! ```
//!
//! discretized with full-truncation Euler and floored at zero.

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ratemath::Rate;

/// Recorded in run metadata so paths can be regenerated elsewhere.
pub const RNG_IDENTIFIER: &str =
    "ChaCha20Rng (rand_chacha 0.9) seeded via seed_from_u64; stream 0 = market path, stream 1 = trade sampling; normals via rand_distr 0.5 StandardNormal (ziggurat)";

/// Stream id of the market path generator.
pub const MARKET_STREAM: u64 = 0;
/// Stream id of the simulator's trade sampler.
pub const TRADE_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarketError {
    #[error("invalid CIR parameter: {0}")]
    InvalidParams(&'static str),
    #[error("path needs at least one step and a positive dt")]
    InvalidGrid,
}

/// Seeded standard-normal generator on one ChaCha stream.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: ChaCha20Rng,
}

impl GaussianStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    #[inline]
    pub fn next_gaussian(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

/// Source of standard normal deviates.
pub trait NormalSource {
    fn gaussian(&mut self) -> f64;
}

impl NormalSource for GaussianStream {
    fn gaussian(&mut self) -> f64 {
        self.next_gaussian()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CirParams {
    pub k: f64,
    pub theta: f64,
    pub sigma: f64,
    pub r_init: Rate,
}

impl CirParams {
    pub fn validate(&self) -> Result<(), MarketError> {
        if !(self.k > 0.0) {
            return Err(MarketError::InvalidParams("k must be positive"));
        }
        if !(self.theta >= 0.0) {
            return Err(MarketError::InvalidParams("theta must be non-negative"));
        }
        if !(self.sigma >= 0.0) {
            return Err(MarketError::InvalidParams("sigma must be non-negative"));
        }
        if !(self.r_init >= 0.0) {
            return Err(MarketError::InvalidParams("r_init must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketPath {
    pub rates: Vec<Rate>,
    pub dt: f64,
    pub seed: u64,
}

impl MarketPath {
    pub fn n_steps(&self) -> usize {
        self.rates.len() - 1
    }

    /// Writes `step,time_years,rate` rows, one per grid point.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "step,time_years,rate")?;
        for (n, r) in self.rates.iter().enumerate() {
            writeln!(out, "{n},{:.16e},{:.16e}", n as f64 * self.dt, r)?;
        }
        Ok(())
    }
}

/// One full-truncation Euler step.
#[inline]
pub fn cir_step(params: &CirParams, r: Rate, dt: f64, z: f64) -> Rate {
    let pos = r.max(0.0);
    let next = r + params.k * (params.theta - pos) * dt + params.sigma * pos.sqrt() * dt.sqrt() * z;
    next.max(0.0)
}

pub fn generate(
    params: &CirParams,
    n_steps: usize,
    dt: f64,
    seed: u64,
) -> Result<MarketPath, MarketError> {
    params.validate()?;
    if n_steps == 0 || !(dt > 0.0) {
        return Err(MarketError::InvalidGrid);
    }
    let mut normals = GaussianStream::new(seed, MARKET_STREAM);
    let mut rates = Vec::with_capacity(n_steps + 1);
    let mut r = params.r_init;
    rates.push(r);
    for _ in 0..n_steps {
        r = cir_step(params, r, dt, normals.next_gaussian());
        rates.push(r);
    }
    Ok(MarketPath { rates, dt, seed })
}
