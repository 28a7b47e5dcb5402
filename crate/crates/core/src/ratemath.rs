//! Fixed-income arithmetic for single-cash-flow instruments.
//!
//! All rates are continuously compounded and annualized; all tenors are in
//! years. A zero-coupon instrument pays `price` today and receives `face` at
//! maturity, so `face = price · e^{r·t}`.

use thiserror::Error;

/// Continuously-compounded annualized rate.
pub type Rate = f64;

/// Time to maturity in years.
pub type Tenor = f64;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum RateError {
    #[error("simple rate {0} is at or below -100%")]
    SimpleRateDomain(f64),
    #[error("face and price must be positive (face={face}, price={price})")]
    NonPositiveAmount { face: f64, price: f64 },
    #[error("tenor must be non-negative, got {0}")]
    NegativeTenor(f64),
    #[error("no rate reconciles face {face} and price {price} at zero tenor")]
    NoSolution { face: f64, price: f64 },
}

/// Converts a simple annualized rate `R` to its continuous equivalent `ln(1+R)`.
pub fn simple_to_continuous(simple: f64) -> Result<Rate, RateError> {
    if !(simple > -1.0) {
        return Err(RateError::SimpleRateDomain(simple));
    }
    Ok(simple.ln_1p())
}

/// Constant rate that grows `price` into `face` over `t` years.
///
/// At `t = 0` the only consistent pair is `face == price`, for which the rate
/// is reported as zero.
pub fn annualized_rate(face: f64, price: f64, t: Tenor) -> Result<Rate, RateError> {
    if !(face > 0.0 && price > 0.0) {
        return Err(RateError::NonPositiveAmount { face, price });
    }
    if t < 0.0 {
        return Err(RateError::NegativeTenor(t));
    }
    if t == 0.0 {
        return if face == price {
            Ok(0.0)
        } else {
            Err(RateError::NoSolution { face, price })
        };
    }
    Ok((face / price).ln() / t)
}

/// Price per unit face: `e^{-rate·t}`.
#[inline]
pub fn discount(rate: Rate, t: Tenor) -> f64 {
    (-rate * t).exp()
}
