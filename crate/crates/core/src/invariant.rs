//! The pricing core: mapping pool state to rates, the per-tenor invariant
//! family, and closed-form trade pricing.
//!
//! The pool holds cash `y` and bonds whose aggregate present value is `X`.
//! For a trade of tenor `t` the marginal rate is
//!
//! ```text
//! r(t) = κ·ln(X/y) + r*(t)
//! ```
//!
//! and the face value equivalent to `X` is `x = X·e^{r·t}`. Every tenor has its
//! own conserved quantity
//!
//! ```text
//! K·x^α + y^α = C,   α = 1/(1+κt),   K = e^{-t·r*·α}
//! ```
//!
//! which, written in present-value terms, is `y^α·(X/y + 1) = C`. A trade of
//! tenor `t` moves along that curve only; every other tenor's `C` changes.
//!
//! Closed-form pricing is evaluated with `u = Δx/x` and `v = Δy/y`:
//!
//! ```text
//! Δy = y·expm1( ln1p(-ψ·expm1(α·ln1p(u))) / α )
//! Δx = x·expm1( ln1p(-expm1(α·ln1p(v))/ψ) / α )
//! ```
//!
//! which is algebraically the textbook `[C - K(x+Δx)^α]^{1/α} - y` and its
//! inverse, without the cancellation those forms suffer for small trades.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ratemath::{Rate, Tenor};

/// Relative tolerance for algebraic identities checked at run time.
pub const IDENTITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvariantError {
    #[error("invalid pool state (X={bond_pv}, y={cash})")]
    InvalidState { bond_pv: f64, cash: f64 },
    #[error("pool holds no bond value and cannot quote")]
    EmptyBondPool,
    #[error("tenor must be non-negative, got {0}")]
    NegativeTenor(f64),
    #[error("kappa must lie in (0, 1), got {0}")]
    InvalidKappa(f64),
    #[error("anchor polynomial must have finite coefficients")]
    InvalidAnchor,
    #[error("anchor rate {anchor} at t=0 differs from initial rate {initial}")]
    AnchorMismatch { anchor: f64, initial: f64 },
    #[error("trade exceeds pool capacity: {0}")]
    ExceedsCapacity(&'static str),
    #[error("trade (dx={dx}, dy={dy}) does not satisfy the tenor-{tenor} invariant")]
    InconsistentTrade { tenor: f64, dx: f64, dy: f64 },
}

/// Anchor rate as a polynomial in tenor, `r*(t) = c0 + c1·t + c2·t² + ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorFn {
    coefficients: Vec<f64>,
}

impl AnchorFn {
    pub fn constant(rate: Rate) -> Self {
        Self {
            coefficients: vec![rate],
        }
    }

    pub fn polynomial(coefficients: Vec<f64>) -> Result<Self, InvariantError> {
        if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
            return Err(InvariantError::InvalidAnchor);
        }
        Ok(Self { coefficients })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    #[inline]
    pub fn eval(&self, t: Tenor) -> Rate {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveParams {
    kappa: f64,
    anchor: AnchorFn,
}

impl CurveParams {
    pub fn new(kappa: f64, anchor: AnchorFn) -> Result<Self, InvariantError> {
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(InvariantError::InvalidKappa(kappa));
        }
        Ok(Self { kappa, anchor })
    }

    /// Constant anchor across tenors.
    pub fn flat(kappa: f64, anchor: Rate) -> Result<Self, InvariantError> {
        Self::new(kappa, AnchorFn::constant(anchor))
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn anchor(&self) -> &AnchorFn {
        &self.anchor
    }

    pub fn set_anchor(&mut self, anchor: AnchorFn) {
        self.anchor = anchor;
    }

    #[inline]
    pub fn anchor_rate(&self, t: Tenor) -> Rate {
        self.anchor.eval(t)
    }

    /// `α = 1/(1+κt)`
    #[inline]
    pub fn alpha(&self, t: Tenor) -> f64 {
        1.0 / (1.0 + self.kappa * t)
    }
}

/// Tenor-local invariant `K·x^α + y^α = C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantParams {
    pub alpha: f64,
    pub k: f64,
    pub c: f64,
}

/// Live balances of the pool: bond present value `X` and cash `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoreState {
    pub bond_pv: f64,
    pub cash: f64,
}

impl CoreState {
    pub fn new(bond_pv: f64, cash: f64) -> Result<Self, InvariantError> {
        let state = Self { bond_pv, cash };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<(), InvariantError> {
        if self.bond_pv >= 0.0 && self.cash > 0.0 && self.bond_pv.is_finite() && self.cash.is_finite()
        {
            Ok(())
        } else {
            Err(InvariantError::InvalidState {
                bond_pv: self.bond_pv,
                cash: self.cash,
            })
        }
    }

    /// `ψ = X/y`
    #[inline]
    pub fn psi(&self) -> f64 {
        self.bond_pv / self.cash
    }
}

fn check_tenor(t: Tenor) -> Result<(), InvariantError> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(InvariantError::NegativeTenor(t))
    }
}

fn check_quotable(state: &CoreState, t: Tenor) -> Result<(), InvariantError> {
    state.validate()?;
    check_tenor(t)?;
    if state.bond_pv == 0.0 {
        return Err(InvariantError::EmptyBondPool);
    }
    Ok(())
}

/// Marginal rate for tenor `t`: `κ·ln(X/y) + r*(t)`.
pub fn rate(state: &CoreState, t: Tenor, params: &CurveParams) -> Result<Rate, InvariantError> {
    check_quotable(state, t)?;
    Ok(params.kappa * state.psi().ln() + params.anchor_rate(t))
}

/// Face value of a tenor-`t` bond worth the pool's present value `X`.
pub fn equivalent_face(
    state: &CoreState,
    t: Tenor,
    params: &CurveParams,
) -> Result<f64, InvariantError> {
    let r = rate(state, t, params)?;
    if t == 0.0 {
        return Ok(state.bond_pv);
    }
    Ok(state.bond_pv * (r * t).exp())
}

/// `α`, `K` and the conserved `C` of the tenor-`t` invariant at the current state.
pub fn invariant_params(
    state: &CoreState,
    t: Tenor,
    params: &CurveParams,
) -> Result<InvariantParams, InvariantError> {
    state.validate()?;
    check_tenor(t)?;
    let alpha = params.alpha(t);
    let k = (-t * params.anchor_rate(t) * alpha).exp();
    // y^α·(X/y + 1) == y^(α-1)·(X + y); the latter is exactly X + y at α = 1.
    let c = state.cash.powf(alpha - 1.0) * (state.bond_pv + state.cash);
    Ok(InvariantParams { alpha, k, c })
}

/// Cash change `Δy` for a face change `Δx` at tenor `t` (pool's perspective).
pub fn delta_y(
    state: &CoreState,
    t: Tenor,
    params: &CurveParams,
    dx: f64,
) -> Result<f64, InvariantError> {
    if t == 0.0 {
        state.validate()?;
        return par_exchange(state, dx, -dx).map(|_| -dx);
    }
    check_quotable(state, t)?;
    if dx == 0.0 {
        return Ok(0.0);
    }
    let x = equivalent_face(state, t, params)?;
    let u = dx / x;
    if u < -1.0 {
        return Err(InvariantError::ExceedsCapacity("bond balance would go negative"));
    }
    let alpha = params.alpha(t);
    let s = (alpha * u.ln_1p()).exp_m1();
    let base = 1.0 - state.psi() * s;
    if !(base > 0.0) {
        return Err(InvariantError::ExceedsCapacity("cash balance would be exhausted"));
    }
    Ok(state.cash * ((-state.psi() * s).ln_1p() / alpha).exp_m1())
}

/// Face change `Δx` for a cash change `Δy` at tenor `t`; inverse of [`delta_y`].
pub fn delta_x(
    state: &CoreState,
    t: Tenor,
    params: &CurveParams,
    dy: f64,
) -> Result<f64, InvariantError> {
    if t == 0.0 {
        state.validate()?;
        return par_exchange(state, -dy, dy).map(|_| -dy);
    }
    check_quotable(state, t)?;
    if dy == 0.0 {
        return Ok(0.0);
    }
    let v = dy / state.cash;
    if !(v > -1.0) {
        return Err(InvariantError::ExceedsCapacity("cash balance would be exhausted"));
    }
    let alpha = params.alpha(t);
    let w = -(alpha * v.ln_1p()).exp_m1() / state.psi();
    if w < -1.0 {
        return Err(InvariantError::ExceedsCapacity("bond balance would go negative"));
    }
    let x = equivalent_face(state, t, params)?;
    Ok(x * (w.ln_1p() / alpha).exp_m1())
}

fn par_exchange(state: &CoreState, dx: f64, dy: f64) -> Result<(), InvariantError> {
    if state.bond_pv + dx < 0.0 {
        return Err(InvariantError::ExceedsCapacity("bond balance would go negative"));
    }
    if !(state.cash + dy > 0.0) {
        return Err(InvariantError::ExceedsCapacity("cash balance would be exhausted"));
    }
    Ok(())
}

/// Applies a priced tenor-`t` trade. The new `X` is recovered from the
/// conserved `C` of tenor `t`: `X' = C·y'^{1-α} - y'`.
pub fn apply_trade(
    state: &CoreState,
    t: Tenor,
    params: &CurveParams,
    dx: f64,
    dy: f64,
) -> Result<CoreState, InvariantError> {
    state.validate()?;
    check_tenor(t)?;
    if dx == 0.0 && dy == 0.0 {
        return Ok(*state);
    }
    let cash = state.cash + dy;
    if !(cash > 0.0) {
        return Err(InvariantError::ExceedsCapacity("cash balance would be exhausted"));
    }
    let inconsistent = InvariantError::InconsistentTrade { tenor: t, dx, dy };

    if t == 0.0 {
        let scale = state.bond_pv.max(dx.abs()).max(dy.abs());
        if (dx + dy).abs() > IDENTITY_TOLERANCE * scale {
            return Err(inconsistent);
        }
        let bond_pv = state.bond_pv + dx;
        if bond_pv < 0.0 {
            return Err(InvariantError::ExceedsCapacity("bond balance would go negative"));
        }
        return Ok(CoreState { bond_pv, cash });
    }

    let face_before = equivalent_face(state, t, params)?;
    let inv = invariant_params(state, t, params)?;
    let mut bond_pv = inv.c * cash.powf(1.0 - inv.alpha) - cash;
    let face_after_expected = face_before + dx;
    let scale = face_before.max(face_after_expected.abs());
    if bond_pv < 0.0 {
        // Selling out the entire bond balance lands a hair below zero.
        if bond_pv > -IDENTITY_TOLERANCE * (state.bond_pv + state.cash) {
            bond_pv = 0.0;
        } else {
            return Err(InvariantError::ExceedsCapacity("bond balance would go negative"));
        }
    }
    let next = CoreState { bond_pv, cash };
    let face_after = if bond_pv == 0.0 {
        0.0
    } else {
        equivalent_face(&next, t, params)?
    };
    if (face_after - face_after_expected).abs() > IDENTITY_TOLERANCE * scale {
        return Err(inconsistent);
    }
    Ok(next)
}

/// Rate in face-value terms: `(κ·ln(x/y) + r*)/(1+κt)`.
pub fn bondmm_closed_form_rate(
    face: f64,
    cash: f64,
    t: Tenor,
    kappa: f64,
    anchor: Rate,
) -> Result<Rate, InvariantError> {
    if !(face > 0.0 && cash > 0.0) {
        return Err(InvariantError::InvalidState {
            bond_pv: face,
            cash,
        });
    }
    check_tenor(t)?;
    Ok((kappa * (face / cash).ln() + anchor) / (1.0 + kappa * t))
}

/// Fresh pool: `X₀ = y₀` so that every tenor quotes its anchor rate.
pub fn initialize(y0: f64, r0: Rate, params: &CurveParams) -> Result<CoreState, InvariantError> {
    let anchor = params.anchor_rate(0.0);
    if (anchor - r0).abs() > 1e-12 {
        return Err(InvariantError::AnchorMismatch {
            anchor,
            initial: r0,
        });
    }
    CoreState::new(y0, y0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fresh() -> (CoreState, CurveParams) {
        (
            CoreState::new(1000.0, 1000.0).unwrap(),
            CurveParams::flat(0.02, 0.05).unwrap(),
        )
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn anchor_polynomial_evaluates() {
        let a = AnchorFn::polynomial(vec![0.04, 0.01]).unwrap();
        assert!((a.eval(2.0) - 0.06).abs() < 1e-15);
        assert_eq!(AnchorFn::constant(0.05).eval(7.0), 0.05);
        assert!(AnchorFn::polynomial(vec![]).is_err());
        assert!(AnchorFn::polynomial(vec![f64::NAN]).is_err());
    }

    #[test]
    fn kappa_bounds() {
        assert!(CurveParams::flat(0.0, 0.05).is_err());
        assert!(CurveParams::flat(1.0, 0.05).is_err());
        assert!(CurveParams::flat(0.5, 0.05).is_ok());
    }

    #[test]
    fn rate_examples() {
        let (s, p) = fresh();
        assert_eq!(rate(&s, 1.0, &p).unwrap(), 0.05);
        let s = CoreState::new(1000.0 * std::f64::consts::E, 1000.0).unwrap();
        assert!((rate(&s, 1.0, &p).unwrap() - 0.07).abs() < 1e-15);
        let s = CoreState::new(1100.0, 900.0).unwrap();
        let p = CurveParams::flat(0.02, 0.04).unwrap();
        let r = rate(&s, 0.5, &p).unwrap();
        assert!((r - 0.04401341390924302).abs() < 1e-15, "{r}");
    }

    #[test]
    fn rate_refuses_empty_bond_pool() {
        let p = CurveParams::flat(0.02, 0.05).unwrap();
        let s = CoreState::new(0.0, 1000.0).unwrap();
        assert_eq!(rate(&s, 1.0, &p), Err(InvariantError::EmptyBondPool));
        assert!(CoreState::new(10.0, 0.0).is_err());
        assert!(CoreState::new(-1.0, 10.0).is_err());
        let (s, p) = fresh();
        assert!(matches!(
            rate(&s, -0.1, &p),
            Err(InvariantError::NegativeTenor(_))
        ));
    }

    #[test]
    fn equivalent_face_examples() {
        let (s, p) = fresh();
        assert_eq!(equivalent_face(&s, 0.0, &p).unwrap(), 1000.0);
        let f1 = equivalent_face(&s, 1.0, &p).unwrap();
        assert!(close(f1, 1051.271096376024, 1e-14), "{f1}");
        let f2 = equivalent_face(&s, 2.0, &p).unwrap();
        assert!(close(f2, 1105.1709180756476, 1e-14), "{f2}");
    }

    #[test]
    fn invariant_params_examples() {
        let s = CoreState::new(123.4, 567.8).unwrap();
        let p = CurveParams::flat(0.02, 0.05).unwrap();
        let inv = invariant_params(&s, 0.0, &p).unwrap();
        assert_eq!(inv.alpha, 1.0);
        assert_eq!(inv.k, 1.0);
        assert_eq!(inv.c, 123.4 + 567.8);

        let (s, p) = fresh();
        let inv = invariant_params(&s, 1.0, &p).unwrap();
        assert!(close(inv.alpha, 0.9803921568627451, 1e-15));
        assert!(close(inv.k, 0.9521624596633156, 1e-14));
        assert!(close(inv.c, 1746.6523247656866, 1e-13), "{}", inv.c);

        let s = CoreState::new(0.0, 1000.0).unwrap();
        let inv = invariant_params(&s, 1.0, &p).unwrap();
        assert!(close(inv.c, 873.3261623828433, 1e-13), "{}", inv.c);
    }

    #[test]
    fn x_and_big_x_invariants_agree() {
        let s = CoreState::new(1234.0, 987.0).unwrap();
        let p = CurveParams::new(0.03, AnchorFn::polynomial(vec![0.02, 0.01]).unwrap()).unwrap();
        for &t in &[0.0, 0.3, 1.0, 4.0, 12.0] {
            let inv = invariant_params(&s, t, &p).unwrap();
            let x = equivalent_face(&s, t, &p).unwrap();
            let lhs = inv.k * x.powf(inv.alpha) + s.cash.powf(inv.alpha);
            assert!(close(lhs, inv.c, 1e-13), "t={t}: {lhs} vs {}", inv.c);
        }
    }

    #[test]
    fn delta_y_examples() {
        let (s, p) = fresh();
        assert_eq!(delta_y(&s, 0.0, &p, 12.5).unwrap(), -12.5);
        let up = delta_y(&s, 1.0, &p, 10.0).unwrap();
        assert!(close(up, -9.510520358883432, 1e-13), "{up}");
        let down = delta_y(&s, 1.0, &p, -10.0).unwrap();
        assert!(close(down, 9.51406879298845, 1e-13), "{down}");
        // reversing from the post-trade state returns to the start
        let after = apply_trade(&s, 1.0, &p, 10.0, up).unwrap();
        let back = delta_y(&after, 1.0, &p, -10.0).unwrap();
        assert!((up + back).abs() < 1e-9 * 1000.0);
    }

    #[test]
    fn delta_x_examples() {
        let (s, p) = fresh();
        assert_eq!(delta_x(&s, 0.0, &p, 3.0).unwrap(), -3.0);
        assert_eq!(delta_x(&s, 1.0, &p, 0.0).unwrap(), 0.0);
        let dy = delta_y(&s, 1.0, &p, 10.0).unwrap();
        let dx = delta_x(&s, 1.0, &p, dy).unwrap();
        assert!(close(dx, 10.0, 1e-12), "{dx}");
    }

    #[test]
    fn capacity_errors() {
        let (s, p) = fresh();
        // cannot take more face than the pool holds
        assert!(matches!(
            delta_y(&s, 1.0, &p, -1100.0),
            Err(InvariantError::ExceedsCapacity(_))
        ));
        // borrowing that would drain all cash
        assert!(matches!(
            delta_y(&s, 1.0, &p, 1e7),
            Err(InvariantError::ExceedsCapacity(_))
        ));
        assert!(matches!(
            delta_x(&s, 1.0, &p, -1000.0),
            Err(InvariantError::ExceedsCapacity(_))
        ));
        assert!(matches!(
            delta_y(&s, 0.0, &p, 1000.0),
            Err(InvariantError::ExceedsCapacity(_))
        ));
        let msg = delta_y(&s, 1.0, &p, 1e7).unwrap_err().to_string();
        assert!(msg.contains("trade exceeds pool capacity"), "{msg}");
    }

    #[test]
    fn apply_trade_examples() {
        let (s, p) = fresh();
        let next = apply_trade(&s, 0.0, &p, 7.0, -7.0).unwrap();
        assert_eq!(next, CoreState::new(1007.0, 993.0).unwrap());
        assert_eq!(apply_trade(&s, 1.0, &p, 0.0, 0.0).unwrap(), s);

        let dy = delta_y(&s, 1.0, &p, 10.0).unwrap();
        let next = apply_trade(&s, 1.0, &p, 10.0, dy).unwrap();
        assert!(close(next.bond_pv, 1009.1358090277355, 1e-12), "{next:?}");
        assert!(close(next.cash, 990.4894796411166, 1e-13), "{next:?}");
        assert!(rate(&next, 1.0, &p).unwrap() > rate(&s, 1.0, &p).unwrap());
    }

    #[test]
    fn apply_trade_rejects_off_curve() {
        let (s, p) = fresh();
        assert!(matches!(
            apply_trade(&s, 1.0, &p, 10.0, -9.0),
            Err(InvariantError::InconsistentTrade { .. })
        ));
        assert!(matches!(
            apply_trade(&s, 0.0, &p, 10.0, -9.0),
            Err(InvariantError::InconsistentTrade { .. })
        ));
    }

    #[test]
    fn closed_form_rate_bridge() {
        let r = bondmm_closed_form_rate(1000.0, 1000.0, 2.0, 0.02, 0.05).unwrap();
        assert!((r - 0.05 / 1.04).abs() < 1e-16);
        assert_eq!(bondmm_closed_form_rate(5.0, 5.0, 0.0, 0.02, 0.05).unwrap(), 0.05);
        let r = bondmm_closed_form_rate(1051.271096376024, 1000.0, 1.0, 0.02, 0.05).unwrap();
        assert!((r - 0.05).abs() < 1e-14, "{r}");
        assert!(bondmm_closed_form_rate(0.0, 1.0, 1.0, 0.02, 0.05).is_err());
    }

    #[test]
    fn initialize_examples() {
        let p = CurveParams::flat(0.02, 0.05).unwrap();
        let s = initialize(1000.0, 0.05, &p).unwrap();
        assert_eq!(s, CoreState::new(1000.0, 1000.0).unwrap());
        let p0 = CurveParams::flat(0.02, 0.0).unwrap();
        assert_eq!(initialize(1.0, 0.0, &p0).unwrap(), CoreState::new(1.0, 1.0).unwrap());
        assert!(initialize(0.0, 0.05, &p).is_err());
        assert!(matches!(
            initialize(10.0, 0.03, &p),
            Err(InvariantError::AnchorMismatch { .. })
        ));
        let curved = CurveParams::new(0.02, AnchorFn::polynomial(vec![0.05, 0.01]).unwrap()).unwrap();
        let s = initialize(10.0, 0.05, &curved).unwrap();
        for &t in &[0.0, 0.5, 3.0] {
            assert!((rate(&s, t, &curved).unwrap() - curved.anchor_rate(t)).abs() < 1e-15);
        }
    }

    fn state_strategy() -> impl Strategy<Value = CoreState> {
        (100.0f64..5000.0, 0.5f64..2.0).prop_map(|(y, psi)| CoreState {
            bond_pv: y * psi,
            cash: y,
        })
    }

    proptest! {
        #[test]
        fn par_redemption_is_exact(s in state_strategy(), dx in -50.0f64..50.0) {
            let p = CurveParams::flat(0.02, 0.05).unwrap();
            prop_assert_eq!(delta_y(&s, 0.0, &p, dx).unwrap(), -dx);
        }

        #[test]
        fn lending_lowers_and_borrowing_raises_rate(
            s in state_strategy(),
            t in 0.01f64..10.0,
            size in 0.01f64..50.0,
        ) {
            let p = CurveParams::flat(0.02, 0.05).unwrap();
            let before = rate(&s, t, &p).unwrap();
            let lend_dx = delta_x(&s, t, &p, size).unwrap();
            prop_assert!(lend_dx < 0.0);
            let lent = apply_trade(&s, t, &p, lend_dx, size).unwrap();
            prop_assert!(rate(&lent, t, &p).unwrap() < before);
            let borrow_dx = delta_x(&s, t, &p, -size).unwrap();
            prop_assert!(borrow_dx > 0.0);
            let borrowed = apply_trade(&s, t, &p, borrow_dx, -size).unwrap();
            prop_assert!(rate(&borrowed, t, &p).unwrap() > before);
        }

        #[test]
        fn sound_when_bonds_cover_cash(y in 100.0f64..5000.0, psi in 1.0f64..3.0, t in 0.0f64..30.0, anchor in 0.0f64..0.2) {
            let p = CurveParams::flat(0.02, anchor).unwrap();
            let s = CoreState { bond_pv: y * psi, cash: y };
            let r = rate(&s, t, &p).unwrap();
            prop_assert!(r >= 0.0);
            prop_assert!(crate::ratemath::discount(r, t) <= 1.0);
        }

        #[test]
        fn bought_bonds_trade_below_par(s in state_strategy(), t in 0.01f64..10.0, dx in 0.01f64..50.0) {
            let p = CurveParams::flat(0.02, 0.05).unwrap();
            let dy = delta_y(&s, t, &p, dx).unwrap();
            prop_assume!(rate(&s, t, &p).unwrap() > 0.0);
            prop_assert!(dy < 0.0 && dy.abs() < dx);
        }
    }
}
