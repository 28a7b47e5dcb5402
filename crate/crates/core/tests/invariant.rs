use bondmm_core::invariant::{
    apply_trade, delta_x, delta_y, equivalent_face, invariant_params, rate,
};
use bondmm_core::{AnchorFn, CoreState, CurveParams};
use proptest::prelude::*;

fn state() -> impl Strategy<Value = CoreState> {
    (2.0f64..4.0, -1.386f64..1.386).prop_map(|(log_cash, log_psi)| {
        let cash = 10f64.powf(log_cash);
        CoreState::new(cash * log_psi.exp(), cash).unwrap()
    })
}

fn params() -> impl Strategy<Value = CurveParams> {
    (0.005f64..0.1, 0.0f64..0.15).prop_map(|(k, a)| CurveParams::flat(k, a).unwrap())
}

/// Face change as a signed fraction of the equivalent face, log-uniform in
/// magnitude between `10^lo` and about one half.
fn fraction_from(lo: f64) -> impl Strategy<Value = f64> {
    (lo..-0.3, any::<bool>()).prop_map(|(e, neg)| if neg { -(10f64.powf(e)) } else { 10f64.powf(e) })
}

fn fraction() -> impl Strategy<Value = f64> {
    fraction_from(-6.0)
}

/// RK4 integration of `dy/dx = -e^{-r t}` with `X = (x·e^{-r*t}·y^{κt})^α`.
fn integrate(s: &CoreState, t: f64, kappa: f64, anchor: f64, dx: f64, slices: usize) -> f64 {
    let alpha = 1.0 / (1.0 + kappa * t);
    let slope = |x: f64, y: f64| {
        let ln_bond_pv = alpha * (x.ln() - anchor * t + kappa * t * y.ln());
        -(-(kappa * (ln_bond_pv - y.ln()) + anchor) * t).exp()
    };
    let x0 = s.bond_pv * ((kappa * s.psi().ln() + anchor) * t).exp();
    let h = dx / slices as f64;
    // accumulate the change itself so small trades keep full precision
    let mut dy = 0.0;
    for i in 0..slices {
        let x = x0 + h * i as f64;
        let y = s.cash + dy;
        let k1 = slope(x, y);
        let k2 = slope(x + 0.5 * h, y + 0.5 * h * k1);
        let k3 = slope(x + 0.5 * h, y + 0.5 * h * k2);
        let k4 = slope(x + h, y + h * k3);
        dy += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    dy
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn splitting_a_trade_does_not_change_its_cost(
        s in state(), p in params(), t in 0.0f64..10.0, f in fraction(), split in 0.01f64..0.99,
    ) {
        let dx = f * equivalent_face(&s, t, &p).unwrap();
        let whole = match delta_y(&s, t, &p, dx) {
            Ok(v) => v,
            Err(_) => return Err(TestCaseError::reject("beyond capacity")),
        };
        let first = delta_y(&s, t, &p, split * dx).unwrap();
        let mid = apply_trade(&s, t, &p, split * dx, first).unwrap();
        let second = delta_y(&mid, t, &p, (1.0 - split) * dx).unwrap();
        prop_assert!(((first + second) - whole).abs() <= 1e-9 * whole.abs());

        let end_whole = apply_trade(&s, t, &p, dx, whole).unwrap();
        let end_split = apply_trade(&mid, t, &p, (1.0 - split) * dx, second).unwrap();
        prop_assert!((end_whole.cash - end_split.cash).abs() <= 1e-9 * s.cash);
        prop_assert!((end_whole.bond_pv - end_split.bond_pv).abs() <= 1e-9 * (s.cash + s.bond_pv));
    }

    #[test]
    fn pricing_inverts(s in state(), p in params(), t in 0.0f64..10.0, f in fraction()) {
        let dx = f * equivalent_face(&s, t, &p).unwrap();
        let Ok(dy) = delta_y(&s, t, &p, dx) else {
            return Err(TestCaseError::reject("beyond capacity"));
        };
        let back = delta_x(&s, t, &p, dy).unwrap();
        prop_assert!((back - dx).abs() <= 1e-9 * dx.abs());
    }

    #[test]
    fn only_the_traded_tenor_keeps_its_invariant(
        s in state(), p in params(), t in 0.05f64..10.0, gap in 0.25f64..5.0, f in fraction_from(-2.0),
    ) {
        let other = if t + gap <= 10.0 { t + gap } else { t - gap };
        let dx = f * equivalent_face(&s, t, &p).unwrap();
        let Ok(dy) = delta_y(&s, t, &p, dx) else {
            return Err(TestCaseError::reject("beyond capacity"));
        };
        let after = apply_trade(&s, t, &p, dx, dy).unwrap();
        let c = |st: &CoreState, tenor: f64| invariant_params(st, tenor, &p).unwrap().c;
        prop_assert!((c(&after, t) / c(&s, t) - 1.0).abs() <= 1e-9);
        prop_assert!((c(&after, other) / c(&s, other) - 1.0).abs() > 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn marginal_price_is_the_discount_factor(s in state(), p in params(), t in 0.0f64..10.0) {
        let h = 1e-4 * equivalent_face(&s, t, &p).unwrap();
        let slope = -(delta_y(&s, t, &p, h).unwrap() - delta_y(&s, t, &p, -h).unwrap()) / (2.0 * h);
        let r = rate(&s, t, &p).unwrap();
        prop_assert!((slope - (-r * t).exp()).abs() < 1e-5);
    }

    #[test]
    fn tenor_shaped_anchor_prices_each_tenor_on_its_own_curve(
        s in state(), t in 0.05f64..10.0, f in fraction(), slope in -0.005f64..0.005,
    ) {
        let p = CurveParams::new(0.02, AnchorFn::polynomial(vec![0.05, slope]).unwrap()).unwrap();
        let flat = CurveParams::flat(0.02, 0.05 + slope * t).unwrap();
        let dx = f * equivalent_face(&s, t, &p).unwrap();
        let (Ok(a), Ok(b)) = (delta_y(&s, t, &p, dx), delta_y(&s, t, &flat, dx)) else {
            return Err(TestCaseError::reject("beyond capacity"));
        };
        prop_assert!((a - b).abs() <= 1e-12 * a.abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn closed_form_matches_slice_integration(
        s in state(), kappa in 0.005f64..0.1, anchor in 0.0f64..0.15, t in 0.05f64..10.0, f in fraction(),
    ) {
        let p = CurveParams::flat(kappa, anchor).unwrap();
        let dx = f * equivalent_face(&s, t, &p).unwrap();
        let Ok(closed) = delta_y(&s, t, &p, dx) else {
            return Err(TestCaseError::reject("beyond capacity"));
        };
        let numeric = integrate(&s, t, kappa, anchor, dx, 100_000);
        prop_assert!((closed - numeric).abs() <= 1e-8 * closed.abs(), "{closed} vs {numeric}");
    }
}

#[test]
fn par_redemption_is_exact_for_any_state() {
    let p = CurveParams::flat(0.03, 0.07).unwrap();
    for (x, y) in [(1.0, 1.0), (0.0, 5.0), (1e6, 3.0), (2.5, 1e5)] {
        let s = CoreState::new(x, y).unwrap();
        for dx in [-0.5, 0.25, 1e-9] {
            if x + dx < 0.0 || y - dx <= 0.0 {
                continue;
            }
            assert_eq!(delta_y(&s, 0.0, &p, dx).unwrap(), -dx);
            assert_eq!(delta_x(&s, 0.0, &p, -dx).unwrap(), dx);
            let next = apply_trade(&s, 0.0, &p, dx, -dx).unwrap();
            assert_eq!(next.bond_pv, x + dx);
            assert_eq!(next.cash, y - dx);
        }
    }
}
