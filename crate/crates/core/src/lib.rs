//! Fixed-income AMM supporting arbitrary maturities from one liquidity pool,
//! with the baselines it improves on and a speculator market simulator.
//!
//! - [`ratemath`]: compounding, discounting, annualized rates.
//! - [`invariant`]: state-to-rate mapping and closed-form trade pricing.
//! - [`baselines`]: Yield and Notional pricing rules.
//! - [`pool`]: positions, collateral, settlement, equity and the lending halt.
//! - [`market`]: seeded CIR short-rate paths.
//! - [`sim`]: the speculator experiment and its per-step metrics.

// `!(x > 0.0)` rejects NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod invariant;
pub mod market;
pub mod pool;
pub mod ratemath;
pub mod sim;

pub use invariant::{AnchorFn, CoreState, CurveParams, InvariantError};
pub use pool::{PoolAccount, PoolError, PositionId, Side, Size, TradeKind, TradeQuote};
pub use sim::{SimConfig, StepMetrics};
