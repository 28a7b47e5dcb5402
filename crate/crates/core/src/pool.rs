//! Arbitrary-maturity lending pool: positions, collateral escrow, settlement
//! at maturity, net equity and the lending halt.
//!
//! Sign convention is the pool's: lending and repaying move `(Δx < 0, Δy > 0)`,
//! borrowing and withdrawing move `(Δx > 0, Δy < 0)`.
//!
//! Every position accrues at the rate locked at execution, so its present value
//! is `face·e^{-r·(maturity - clock)}`, reaches face exactly at maturity and
//! holds there until settled. The signed sum of these, `L`, is carried
//! incrementally by [`AccrualBook`] and can be audited against a full
//! per-position revaluation at any time.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Bound;
use std::str::FromStr;

use thiserror::Error;

use crate::invariant::{self, AnchorFn, CoreState, CurveParams, InvariantError};
use crate::ratemath::{discount, Rate, Tenor};

pub type PositionId = u64;

/// Collateral posted per unit of cash disbursed to a borrower.
pub const COLLATERAL_RATIO: f64 = 1.5;

/// Escrow amounts are integers at this resolution (currency units per tick).
pub const ESCROW_TICK: f64 = 1e-9;

/// Positions are due once the clock is within this many years of maturity.
pub const MATURITY_EPSILON: f64 = 1e-9;

/// Relative tolerance of the incremental-vs-revalued ledger audit.
pub const LEDGER_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PoolError {
    #[error(transparent)]
    Invariant(#[from] InvariantError),
    #[error("lending is halted")]
    Halted,
    #[error("quote was priced against a different pool state")]
    StaleQuote,
    #[error("trade size must be positive and finite, got {0}")]
    InvalidSize(f64),
    #[error("new positions need a positive tenor, got {0}")]
    InvalidTenor(f64),
    #[error("time can only move forward (dt={0})")]
    NegativeTimeStep(f64),
    #[error("invalid pool configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("no open position {0}")]
    UnknownPosition(PositionId),
    #[error("{kind:?} does not apply to a {side:?} position")]
    WrongSide { kind: TradeKind, side: Side },
    #[error("{kind:?} must name the position it closes")]
    MissingPosition { kind: TradeKind },
    #[error("position {id} holds face {available}, trade needs {requested}")]
    InsufficientFace {
        id: PositionId,
        available: f64,
        requested: f64,
    },
    #[error("position {0} is not yet due")]
    NotDue(PositionId),
    #[error("insolvent settling position {id}: {reason}")]
    Insolvency { id: PositionId, reason: String },
    #[error("ledger drift: incremental L={incremental}, revalued L={revalued}")]
    LedgerDrift { incremental: f64, revalued: f64 },
    #[error("collateral escrow out of balance")]
    CollateralMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Loan,
    Borrow,
}

impl Side {
    /// Sign of this side's contribution to `L`.
    fn sign(self) -> f64 {
        match self {
            Side::Loan => -1.0,
            Side::Borrow => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TradeKind {
    Lend,
    Withdraw,
    Borrow,
    Repay,
}

impl TradeKind {
    /// `true` when the user pays cash into the pool.
    fn pays_cash(self) -> bool {
        matches!(self, TradeKind::Lend | TradeKind::Repay)
    }
}

impl FromStr for TradeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lend" => Ok(TradeKind::Lend),
            "withdraw" => Ok(TradeKind::Withdraw),
            "borrow" => Ok(TradeKind::Borrow),
            "repay" => Ok(TradeKind::Repay),
            other => Err(format!("unknown trade kind `{other}`")),
        }
    }
}

/// Trade size, denominated either in cash or in bond face value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Size {
    Cash(f64),
    Face(f64),
}

impl Size {
    fn amount(self) -> f64 {
        match self {
            Size::Cash(a) | Size::Face(a) => a,
        }
    }
}

fn to_ticks(amount: f64) -> u64 {
    // even tick counts keep 1.5x exact
    2 * (amount / ESCROW_TICK / 2.0).round() as u64
}

fn from_ticks(ticks: u64) -> f64 {
    ticks as f64 * ESCROW_TICK
}

#[derive(Debug, Clone, PartialEq)]
pub struct Position {
    pub id: PositionId,
    pub side: Side,
    pub face: f64,
    pub maturity: f64,
    pub locked_rate: Rate,
    pub opened_at: f64,
    disbursed_ticks: u64,
    collateral_ticks: u64,
}

impl Position {
    /// Locked-rate present value at `clock`; stays at face once matured.
    pub fn present_value(&self, clock: f64) -> f64 {
        self.face * discount(self.locked_rate, (self.maturity - clock).max(0.0))
    }

    /// Cash disbursed to the borrower and still outstanding (zero for loans).
    pub fn disbursed(&self) -> f64 {
        from_ticks(self.disbursed_ticks)
    }

    pub fn collateral(&self) -> f64 {
        from_ticks(self.collateral_ticks)
    }

    pub fn disbursed_ticks(&self) -> u64 {
        self.disbursed_ticks
    }

    pub fn collateral_ticks(&self) -> u64 {
        self.collateral_ticks
    }
}

const ACCRUAL_ORDER: usize = 24;
const REBASE_SPREAD: f64 = 0.5;

/// Rate a position carries in the accrual book: its locked rate until
/// maturity, zero afterwards so its value holds at face until settled.
fn book_rate(p: &Position, clock: f64) -> Rate {
    if p.maturity <= clock {
        0.0
    } else {
        p.locked_rate
    }
}

/// Running value of `Σ sign·face·e^{-r_i(M_i - τ)}` without touching every
/// position on each clock tick.
///
/// With `A_i = sign·face·e^{-r_i(M_i - τ_b)}`, `δ_i = r_i - c` and `h = τ - τ_b`,
///
/// ```text
/// L(τ) = e^{c·h} · Σ_k (h^k / k!) · Σ_i A_i·δ_i^k
/// ```
///
/// so adding or removing a position updates a fixed number of moments. The
/// base time is reset whenever `max|δ|·h` grows past [`REBASE_SPREAD`], which
/// keeps the truncated series accurate far below `f64` resolution.
#[derive(Debug, Clone)]
struct AccrualBook {
    center: Rate,
    base_time: f64,
    moments: [f64; ACCRUAL_ORDER + 1],
    max_spread: f64,
}

impl AccrualBook {
    fn new(center: Rate, base_time: f64) -> Self {
        Self {
            center,
            base_time,
            moments: [0.0; ACCRUAL_ORDER + 1],
            max_spread: 0.0,
        }
    }

    fn accumulate(&mut self, signed_face: f64, rate: Rate, maturity: f64) {
        let weight = signed_face * (-rate * (maturity - self.base_time)).exp();
        let spread = rate - self.center;
        let mut term = weight;
        for m in self.moments.iter_mut() {
            *m += term;
            term *= spread;
        }
        self.max_spread = self.max_spread.max(spread.abs());
    }

    fn add(&mut self, side: Side, face: f64, rate: Rate, maturity: f64) {
        self.accumulate(side.sign() * face, rate, maturity);
    }

    fn remove(&mut self, side: Side, face: f64, rate: Rate, maturity: f64) {
        self.accumulate(-side.sign() * face, rate, maturity);
    }

    fn value(&self, clock: f64) -> f64 {
        let h = clock - self.base_time;
        let mut acc = self.moments[ACCRUAL_ORDER];
        for k in (0..ACCRUAL_ORDER).rev() {
            acc = self.moments[k] + acc * h / (k + 1) as f64;
        }
        (self.center * h).exp() * acc
    }

    fn needs_rebase(&self, clock: f64) -> bool {
        self.max_spread * (clock - self.base_time).abs() > REBASE_SPREAD
    }

    fn rebuild<'a>(&mut self, clock: f64, positions: impl Iterator<Item = &'a Position>) {
        *self = Self::new(self.center, clock);
        for p in positions {
            self.add(p.side, p.face, book_rate(p, clock), p.maturity);
        }
    }
}

/// A priced, not yet executed trade.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeQuote {
    pub kind: TradeKind,
    pub tenor: Tenor,
    pub dx: f64,
    pub dy: f64,
    pub average_price: f64,
    pub pre_trade_rate: Rate,
    pub post_trade_rate: Rate,
    /// Collateral a borrower must post; zero for other kinds.
    pub collateral: f64,
    pub position: Option<PositionId>,
    version: u64,
    post_state: CoreState,
}

impl TradeQuote {
    /// Rate implied by the fill: `ln(|Δx|/|Δy|)/t`. Zero at `t = 0`.
    pub fn realized_rate(&self) -> Rate {
        if self.tenor == 0.0 {
            return 0.0;
        }
        (self.dx.abs() / self.dy.abs()).ln() / self.tenor
    }
}

/// Result of an incremental-vs-revalued ledger audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerAudit {
    pub incremental: f64,
    pub revalued: f64,
    pub gross: f64,
}

/// Outcome of settling one matured position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settlement {
    pub id: PositionId,
    pub side: Side,
    pub face: f64,
    pub collateral_returned: f64,
}

#[derive(Debug, Clone)]
pub struct PoolAccount {
    core: CoreState,
    params: CurveParams,
    y0: f64,
    halt_threshold: f64,
    halted: bool,
    clock: f64,
    version: u64,
    next_id: PositionId,
    positions: BTreeMap<PositionId, Position>,
    by_maturity: BTreeSet<(u64, PositionId)>,
    book: AccrualBook,
    disbursed_ticks: u64,
    collateral_ticks: u64,
    audit_every: Option<u64>,
    ops: u64,
}

impl PoolAccount {
    /// Opens a pool with `y0` cash at initial rate `r0`; the anchor must quote
    /// `r0` at zero tenor.
    pub fn new(y0: f64, r0: Rate, params: CurveParams) -> Result<Self, PoolError> {
        let core = invariant::initialize(y0, r0, &params)?;
        Ok(Self {
            core,
            params,
            y0,
            halt_threshold: 0.99,
            halted: false,
            clock: 0.0,
            version: 0,
            next_id: 1,
            positions: BTreeMap::new(),
            by_maturity: BTreeSet::new(),
            book: AccrualBook::new(r0, 0.0),
            disbursed_ticks: 0,
            collateral_ticks: 0,
            audit_every: None,
            ops: 0,
        })
    }

    /// Pool with arbitrary balances and no positions; `y0` is the current cash.
    pub fn from_state(core: CoreState, params: CurveParams) -> Result<Self, PoolError> {
        core.validate()?;
        let anchor = params.anchor_rate(0.0);
        let mut pool = Self::new(core.cash, anchor, params)?;
        pool.core = core;
        Ok(pool)
    }

    pub fn with_halt_threshold(mut self, threshold: f64) -> Result<Self, PoolError> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(PoolError::InvalidConfig("halt threshold must lie in (0, 1)"));
        }
        self.halt_threshold = threshold;
        Ok(self)
    }

    /// Audits the ledger against full revaluation every `ops` operations.
    pub fn with_ledger_audit(mut self, ops: u64) -> Self {
        self.audit_every = (ops > 0).then_some(ops);
        self
    }

    pub fn core(&self) -> CoreState {
        self.core
    }

    pub fn params(&self) -> &CurveParams {
        &self.params
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    pub fn is_halted(&self) -> bool {
        self.halted
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn position(&self, id: PositionId) -> Option<&Position> {
        self.positions.get(&id)
    }

    pub fn positions(&self) -> impl Iterator<Item = &Position> {
        self.positions.values()
    }

    pub fn open_positions(&self) -> usize {
        self.positions.len()
    }

    /// Marginal rate the pool quotes at tenor `t`.
    pub fn rate(&self, t: Tenor) -> Result<Rate, PoolError> {
        Ok(invariant::rate(&self.core, t, &self.params)?)
    }

    /// Net present value of borrows minus loans, `L`.
    pub fn liabilities(&self) -> f64 {
        self.book.value(self.clock)
    }

    /// `E = y + L`.
    pub fn equity(&self) -> f64 {
        self.core.cash + self.liabilities()
    }

    /// Equity with positions marked to the pool's current curve rather than
    /// their locked rates. Diagnostic only.
    pub fn curve_marked_equity(&self) -> Result<f64, PoolError> {
        let mut marked = 0.0;
        for p in self.positions.values() {
            let t = (p.maturity - self.clock).max(0.0);
            let r = invariant::rate(&self.core, t, &self.params)?;
            marked += p.side.sign() * p.face * discount(r, t);
        }
        Ok(self.core.cash + marked)
    }

    pub fn total_collateral(&self) -> f64 {
        from_ticks(self.collateral_ticks)
    }

    pub fn total_disbursed(&self) -> f64 {
        from_ticks(self.disbursed_ticks)
    }

    pub fn quote(&self, kind: TradeKind, t: Tenor, size: Size) -> Result<TradeQuote, PoolError> {
        if kind == TradeKind::Lend && self.halted {
            return Err(PoolError::Halted);
        }
        let amount = size.amount();
        if !(amount > 0.0 && amount.is_finite()) {
            return Err(PoolError::InvalidSize(amount));
        }
        if t < 0.0 {
            return Err(InvariantError::NegativeTenor(t).into());
        }
        let sign = if kind.pays_cash() { 1.0 } else { -1.0 };
        let (dx, dy) = match size {
            Size::Cash(c) => {
                let dy = sign * c;
                (invariant::delta_x(&self.core, t, &self.params, dy)?, dy)
            }
            Size::Face(f) => {
                let dx = -sign * f;
                (dx, invariant::delta_y(&self.core, t, &self.params, dx)?)
            }
        };
        let pre_trade_rate = self.rate(t)?;
        let post_state = invariant::apply_trade(&self.core, t, &self.params, dx, dy)?;
        let post_trade_rate = invariant::rate(&post_state, t, &self.params)?;
        let collateral = if kind == TradeKind::Borrow {
            COLLATERAL_RATIO * dy.abs()
        } else {
            0.0
        };
        Ok(TradeQuote {
            kind,
            tenor: t,
            dx,
            dy,
            average_price: (dy / dx).abs(),
            pre_trade_rate,
            post_trade_rate,
            collateral,
            position: None,
            version: self.version,
            post_state,
        })
    }

    /// Prices a withdrawal or repayment against an open position at its
    /// remaining tenor.
    pub fn quote_close(
        &self,
        id: PositionId,
        kind: TradeKind,
        size: Size,
    ) -> Result<TradeQuote, PoolError> {
        let pos = self.positions.get(&id).ok_or(PoolError::UnknownPosition(id))?;
        let expected = match kind {
            TradeKind::Withdraw => Side::Loan,
            TradeKind::Repay => Side::Borrow,
            _ => {
                return Err(PoolError::WrongSide {
                    kind,
                    side: pos.side,
                })
            }
        };
        if pos.side != expected {
            return Err(PoolError::WrongSide {
                kind,
                side: pos.side,
            });
        }
        let t = (pos.maturity - self.clock).max(0.0);
        let mut quote = self.quote(kind, t, size)?;
        if quote.dx.abs() > pos.face * (1.0 + invariant::IDENTITY_TOLERANCE) {
            return Err(PoolError::InsufficientFace {
                id,
                available: pos.face,
                requested: quote.dx.abs(),
            });
        }
        quote.position = Some(id);
        Ok(quote)
    }

    /// Executes a fresh quote. Opening trades return the new position's id;
    /// closing trades return the id of the position they reduced.
    pub fn execute(&mut self, quote: &TradeQuote) -> Result<PositionId, PoolError> {
        if quote.version != self.version {
            return Err(PoolError::StaleQuote);
        }
        let id = match quote.kind {
            TradeKind::Lend | TradeKind::Borrow => self.open(quote)?,
            TradeKind::Withdraw | TradeKind::Repay => self.close(quote)?,
        };
        self.core = quote.post_state;
        self.touch()?;
        Ok(id)
    }

    fn open(&mut self, quote: &TradeQuote) -> Result<PositionId, PoolError> {
        if quote.kind == TradeKind::Lend && self.halted {
            return Err(PoolError::Halted);
        }
        if quote.position.is_some() {
            return Err(PoolError::WrongSide {
                kind: quote.kind,
                side: if quote.kind == TradeKind::Lend {
                    Side::Loan
                } else {
                    Side::Borrow
                },
            });
        }
        if !(quote.tenor > 0.0) {
            return Err(PoolError::InvalidTenor(quote.tenor));
        }
        let side = if quote.kind == TradeKind::Lend {
            Side::Loan
        } else {
            Side::Borrow
        };
        let face = quote.dx.abs();
        let cash = quote.dy.abs();
        let maturity = self.clock + quote.tenor;
        let locked_rate = (face / cash).ln() / quote.tenor;
        let (disbursed_ticks, collateral_ticks) = match side {
            Side::Loan => (0, 0),
            Side::Borrow => {
                let d = to_ticks(cash);
                (d, d / 2 * 3)
            }
        };
        let id = self.next_id;
        self.next_id += 1;
        let pos = Position {
            id,
            side,
            face,
            maturity,
            locked_rate,
            opened_at: self.clock,
            disbursed_ticks,
            collateral_ticks,
        };
        self.book.add(side, face, locked_rate, maturity);
        self.disbursed_ticks += disbursed_ticks;
        self.collateral_ticks += collateral_ticks;
        self.by_maturity.insert((maturity.to_bits(), id));
        self.positions.insert(id, pos);
        Ok(id)
    }

    fn close(&mut self, quote: &TradeQuote) -> Result<PositionId, PoolError> {
        let id = quote.position.ok_or(PoolError::MissingPosition { kind: quote.kind })?;
        let pos = self.positions.get(&id).ok_or(PoolError::UnknownPosition(id))?;
        let requested = quote.dx.abs();
        if requested > pos.face * (1.0 + invariant::IDENTITY_TOLERANCE) {
            return Err(PoolError::InsufficientFace {
                id,
                available: pos.face,
                requested,
            });
        }
        let (side, face, rate, maturity) = (pos.side, pos.face, book_rate(pos, self.clock), pos.maturity);
        let closes_fully = requested >= face * (1.0 - invariant::IDENTITY_TOLERANCE);
        let removed = if closes_fully { face } else { requested };
        self.book.remove(side, removed, rate, maturity);

        if closes_fully {
            self.remove_position(id);
        } else {
            let pos = self.positions.get_mut(&id).expect("checked above");
            let keep = (face - removed) / face;
            let kept_disbursed = 2 * ((pos.disbursed_ticks / 2) as f64 * keep).round() as u64;
            let released_disbursed = pos.disbursed_ticks - kept_disbursed;
            let released_collateral = released_disbursed / 2 * 3;
            pos.face -= removed;
            pos.disbursed_ticks = kept_disbursed;
            pos.collateral_ticks -= released_collateral;
            self.disbursed_ticks -= released_disbursed;
            self.collateral_ticks -= released_collateral;
        }
        Ok(id)
    }

    fn remove_position(&mut self, id: PositionId) -> Option<Position> {
        let pos = self.positions.remove(&id)?;
        self.by_maturity.remove(&(pos.maturity.to_bits(), id));
        self.disbursed_ticks -= pos.disbursed_ticks;
        self.collateral_ticks -= pos.collateral_ticks;
        Some(pos)
    }

    fn touch(&mut self) -> Result<(), PoolError> {
        self.version += 1;
        self.ops += 1;
        if let Some(every) = self.audit_every {
            if self.ops.is_multiple_of(every) {
                self.audit_ledger()?;
            }
        }
        Ok(())
    }

    /// Moves the clock forward by `dt` years. Balances are present values and
    /// do not change; positions accrue at their locked rates.
    pub fn advance_time(&mut self, dt: f64) -> Result<(), PoolError> {
        if !(dt >= 0.0) {
            return Err(PoolError::NegativeTimeStep(dt));
        }
        self.set_clock(self.clock + dt);
        Ok(())
    }

    /// Moves the clock to an absolute time, avoiding accumulated rounding
    /// when a caller drives time from an integer step count.
    pub fn advance_to(&mut self, time: f64) -> Result<(), PoolError> {
        if !(time >= self.clock) {
            return Err(PoolError::NegativeTimeStep(time - self.clock));
        }
        self.set_clock(time);
        Ok(())
    }

    fn set_clock(&mut self, time: f64) {
        if time == self.clock {
            return;
        }
        self.version += 1;
        // positions maturing in (clock, time] stop accruing at their maturity
        let from = Bound::Excluded((self.clock.to_bits(), PositionId::MAX));
        let to = Bound::Included((time.to_bits(), PositionId::MAX));
        for &(_, id) in self.by_maturity.range((from, to)) {
            let p = &self.positions[&id];
            self.book.remove(p.side, p.face, p.locked_rate, p.maturity);
            self.book.add(p.side, p.face, 0.0, p.maturity);
        }
        self.clock = time;
        if self.book.needs_rebase(time) {
            let positions = self.positions.values();
            self.book.rebuild(time, positions);
        }
    }

    /// Ids of positions at or past maturity, earliest first.
    pub fn due_positions(&self) -> Vec<PositionId> {
        let limit = (self.clock + MATURITY_EPSILON).to_bits();
        self.by_maturity
            .range(..=(limit, PositionId::MAX))
            .map(|&(_, id)| id)
            .collect()
    }

    /// Settles one matured position at par. Loans are paid their face in cash;
    /// borrowers pay face in cash (or it is taken from their collateral) and the
    /// escrowed collateral is released.
    pub fn settle_position(&mut self, id: PositionId) -> Result<Settlement, PoolError> {
        let pos = self.positions.get(&id).ok_or(PoolError::UnknownPosition(id))?;
        if pos.maturity > self.clock + MATURITY_EPSILON {
            return Err(PoolError::NotDue(id));
        }
        let (dx, dy) = match pos.side {
            Side::Loan => (pos.face, -pos.face),
            Side::Borrow => (-pos.face, pos.face),
        };
        let core = invariant::apply_trade(&self.core, 0.0, &self.params, dx, dy).map_err(|e| {
            PoolError::Insolvency {
                id,
                reason: e.to_string(),
            }
        })?;
        let (side, face, rate, maturity) = (pos.side, pos.face, book_rate(pos, self.clock), pos.maturity);
        self.book.remove(side, face, rate, maturity);
        let pos = self.remove_position(id).expect("present");
        self.core = core;
        self.touch()?;
        Ok(Settlement {
            id,
            side,
            face,
            collateral_returned: pos.collateral(),
        })
    }

    pub fn settle_maturities(&mut self) -> Result<Vec<PositionId>, PoolError> {
        let due = self.due_positions();
        for &id in &due {
            self.settle_position(id)?;
        }
        Ok(due)
    }

    /// Halts lending while equity is strictly below the threshold fraction of
    /// initial capital; lifts the halt once equity recovers.
    pub fn update_halt(&mut self) -> bool {
        self.halted = self.equity() < self.halt_threshold * self.y0;
        self.halted
    }

    pub fn set_anchor(&mut self, anchor: AnchorFn) {
        self.params.set_anchor(anchor);
        self.version += 1;
    }

    /// Recomputes `L` position by position.
    pub fn revalued_liabilities(&self) -> (f64, f64) {
        let mut net = 0.0;
        let mut gross = 0.0;
        for p in self.positions.values() {
            let pv = p.present_value(self.clock);
            net += p.side.sign() * pv;
            gross += pv;
        }
        (net, gross)
    }

    /// Compares the incremental `L` with a full revaluation. The tolerance is
    /// relative to `|L|`, floored at one unit of currency.
    pub fn audit_ledger(&self) -> Result<LedgerAudit, PoolError> {
        let incremental = self.liabilities();
        let (revalued, gross) = self.revalued_liabilities();
        if (incremental - revalued).abs() > LEDGER_TOLERANCE * revalued.abs().max(1.0) {
            return Err(PoolError::LedgerDrift {
                incremental,
                revalued,
            });
        }
        Ok(LedgerAudit {
            incremental,
            revalued,
            gross,
        })
    }

    /// Checks escrow totals against the open positions: held collateral is
    /// exactly 1.5x the outstanding disbursements.
    pub fn audit_collateral(&self) -> Result<(), PoolError> {
        let (mut disbursed, mut collateral) = (0u64, 0u64);
        for p in self.positions.values() {
            if p.side == Side::Loan && (p.disbursed_ticks | p.collateral_ticks) != 0 {
                return Err(PoolError::CollateralMismatch);
            }
            if 2 * p.collateral_ticks != 3 * p.disbursed_ticks {
                return Err(PoolError::CollateralMismatch);
            }
            disbursed += p.disbursed_ticks;
            collateral += p.collateral_ticks;
        }
        if disbursed != self.disbursed_ticks
            || collateral != self.collateral_ticks
            || 2 * self.collateral_ticks != 3 * self.disbursed_ticks
        {
            return Err(PoolError::CollateralMismatch);
        }
        Ok(())
    }

    pub fn snapshot(&self) -> PoolSnapshot {
        PoolSnapshot {
            clock: self.clock,
            bond_pv: self.core.bond_pv,
            cash: self.core.cash,
            liabilities: self.liabilities(),
            halted: self.halted,
            positions: self.positions.len(),
        }
    }
}

/// One-line checkpoint record of a pool.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolSnapshot {
    pub clock: f64,
    pub bond_pv: f64,
    pub cash: f64,
    pub liabilities: f64,
    pub halted: bool,
    pub positions: usize,
}

impl fmt::Display for PoolSnapshot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "clock={:.16e} X={:.16e} y={:.16e} L={:.16e} halted={} positions={}",
            self.clock, self.bond_pv, self.cash, self.liabilities, self.halted, self.positions
        )
    }
}

impl FromStr for PoolSnapshot {
    type Err = String;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let mut fields = BTreeMap::new();
        for token in line.split_whitespace() {
            let (k, v) = token
                .split_once('=')
                .ok_or_else(|| format!("malformed field `{token}`"))?;
            if fields.insert(k, v).is_some() {
                return Err(format!("duplicate field `{k}`"));
            }
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| format!("missing `{k}`"));
        let num = |k: &str| -> Result<f64, String> {
            get(k)?.parse().map_err(|e| format!("bad `{k}`: {e}"))
        };
        if fields.len() != 6 {
            return Err(format!("expected 6 fields, found {}", fields.len()));
        }
        Ok(Self {
            clock: num("clock")?,
            bond_pv: num("X")?,
            cash: num("y")?,
            liabilities: num("L")?,
            halted: get("halted")?.parse().map_err(|e| format!("bad `halted`: {e}"))?,
            positions: get("positions")?
                .parse()
                .map_err(|e| format!("bad `positions`: {e}"))?,
        })
    }
}
