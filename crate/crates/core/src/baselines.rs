//! Reference pricing rules of two earlier fixed-income AMMs, kept as foils.
//!
//! [`YieldPool`] uses the time-decaying power invariant
//! `x^{1-t/T} + y^{1-t/T} = C(t)`, which quotes negative rates whenever the
//! pool holds more bonds than cash. [`NotionalPool`] prices from a formula on
//! the post-trade ratio rather than a conserved quantity, so splitting a trade
//! changes its cost.
//!
//! Each pool follows its own ratio convention: `φ = y/x` for Yield and
//! `φ = x/y` for Notional.

use thiserror::Error;

use crate::ratemath::{Rate, Tenor};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("balances must be positive (x={x}, y={y})")]
    InvalidBalances { x: f64, y: f64 },
    #[error("tenor {t} outside [0, {horizon}]")]
    TenorOutOfRange { t: f64, horizon: f64 },
    #[error("parameter out of range: {0}")]
    InvalidParameter(&'static str),
    #[error("trade rejected: {0}")]
    Rejected(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YieldPool {
    pub x: f64,
    pub y: f64,
    pub horizon: Tenor,
}

impl YieldPool {
    pub fn new(x: f64, y: f64, horizon: Tenor) -> Result<Self, BaselineError> {
        if !(x > 0.0 && y > 0.0) {
            return Err(BaselineError::InvalidBalances { x, y });
        }
        if !(horizon > 0.0) {
            return Err(BaselineError::InvalidParameter("horizon must be positive"));
        }
        Ok(Self { x, y, horizon })
    }

    /// Marginal price `(y/x)^{t/T}`; exceeds 1 when `y > x`.
    pub fn price(&self, t: Tenor) -> Result<f64, BaselineError> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(BaselineError::TenorOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        Ok((self.y / self.x).powf(t / self.horizon))
    }

    /// `(1/T)·ln(y/x)`, independent of the quoted tenor. Not clamped.
    ///
    /// This is the published formula; it is the negative of the rate implied
    /// by [`YieldPool::price`].
    pub fn rate(&self) -> Rate {
        (self.y / self.x).ln() / self.horizon
    }
}

/// Outcome of a Notional trade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NotionalFill {
    pub dy: f64,
    pub average_price: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NotionalPool {
    pub x: f64,
    pub y: f64,
    pub kappa: f64,
    pub r_star: Rate,
}

impl NotionalPool {
    pub fn new(x: f64, y: f64, kappa: f64, r_star: Rate) -> Result<Self, BaselineError> {
        if !(x > 0.0 && y > 0.0) {
            return Err(BaselineError::InvalidBalances { x, y });
        }
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(BaselineError::InvalidParameter("kappa must lie in (0, 1)"));
        }
        if !(r_star > 0.0 && r_star < 1.0) {
            return Err(BaselineError::InvalidParameter("anchor must lie in (0, 1)"));
        }
        Ok(Self {
            x,
            y,
            kappa,
            r_star,
        })
    }

    /// Simple-interest marginal price `1/(1 + t·(κ·ln(x/y) + r*))`.
    pub fn marginal_price(&self, t: Tenor) -> f64 {
        1.0 / (1.0 + t * (self.kappa * (self.x / self.y).ln() + self.r_star))
    }

    /// Prices `dx` at `p̄ = (1 + tκ·ln φ̄ + t·r*)^{-1}` with
    /// `φ̄ = (x+Δx)/(y-Δx)`, then moves the pool by `(Δx, -p̄·Δx)`.
    pub fn trade(&mut self, t: Tenor, dx: f64) -> Result<NotionalFill, BaselineError> {
        if t < 0.0 {
            return Err(BaselineError::TenorOutOfRange {
                t,
                horizon: f64::INFINITY,
            });
        }
        let num = self.x + dx;
        let den = self.y - dx;
        if !(num > 0.0 && den > 0.0) {
            return Err(BaselineError::Rejected("ratio leaves the positive domain"));
        }
        let denom = 1.0 + t * self.kappa * (num / den).ln() + t * self.r_star;
        if !(denom > 0.0) {
            return Err(BaselineError::Rejected("price formula is undefined"));
        }
        let average_price = 1.0 / denom;
        let dy = -average_price * dx;
        if !(self.y + dy > 0.0) {
            return Err(BaselineError::Rejected("cash balance would be exhausted"));
        }
        self.x = num;
        self.y += dy;
        Ok(NotionalFill { dy, average_price })
    }
}
