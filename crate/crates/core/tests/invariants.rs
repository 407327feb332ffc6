mod common;

use proptest::prelude::*;

use noarb::arbitrage::Market;
use noarb::cev_grid::{closed_form, CevParams};
use noarb::exponential::classify;
use noarb::scale::{ScaleOptions, TiltSpec, TiltedModel};
use noarb::Truth;

/// Exponents on a 1/4 grid keep all three cases, including the balanced
/// one, reachable.
fn cev() -> impl Strategy<Value = CevParams> {
    (
        -4i32..=12,
        -4i32..=10,
        prop_oneof![-3.0..-0.1f64, 0.1..3.0f64],
        0.2..2.5f64,
    )
        .prop_map(|(a, b, mu0, sigma0)| CevParams::new(a as f64 / 4.0, b as f64 / 4.0, mu0, sigma0))
}

fn implies(a: Truth, b: Truth) -> bool {
    a != Truth::Holds || b != Truth::Fails
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn engine_matches_the_closed_form(p in cev()) {
        let m = p.model(1.0).unwrap();
        let z = classify(&TiltedModel::new(&m, &TiltSpec::market(&m).unwrap(), &ScaleOptions::default()).unwrap());
        let want = closed_form(&p);
        prop_assert_eq!(z.strictly_positive_finite_t.value, Truth::from(want.positive_t));
        prop_assert_eq!(z.positive_at_infinity.value, Truth::from(want.positive_at_infinity));
        prop_assert_eq!(z.vanishes_at_infinity.value, Truth::from(want.vanishes_at_infinity));
    }

    #[test]
    fn z_verdicts_are_consistent(p in cev()) {
        let m = p.model(1.0).unwrap();
        let z = classify(&TiltedModel::new(&m, &TiltSpec::market(&m).unwrap(), &ScaleOptions::default()).unwrap());
        prop_assert!(implies(z.positive_at_infinity.value, z.strictly_positive_finite_t.value));
        prop_assert!(!(z.positive_at_infinity.is_holds() && z.vanishes_at_infinity.is_holds()));
    }

    #[test]
    fn market_verdicts_are_consistent(p in cev()) {
        let m = p.model(1.0).unwrap();
        let r = Market::new(&m, &ScaleOptions::default()).unwrap().report(None);
        let a = &r.assumptions;
        prop_assert!(implies(a.no_explosion.value, a.no_explosion_at_infinity.value));
        prop_assert!(implies(r.nga_finite_t.value, r.nflvr_finite_t.value));
        prop_assert!(implies(r.nflvr_infinite.value, r.nflvr_finite_t.value));
        prop_assert!(r.nga_infinite.is_fails() || r.nga_infinite.is_unknown());
        prop_assert!(!r.nra_routes_agree.is_fails(), "{}", r.nra_routes_agree.note);
        prop_assert!(!r.zero_dichotomy.is_fails(), "{}", r.zero_dichotomy.note);
        for v in [&r.comparison.nflvr_iff_zero_condition, &r.comparison.nra_iff_infinity_condition, &r.comparison.nga_iff_nflvr_and_nra] {
            prop_assert!(!v.is_fails(), "{}", v.note);
        }
    }

    #[test]
    fn anchor_does_not_change_verdicts(p in cev(), k in 0.2..5.0f64) {
        let m = p.model(1.0).unwrap();
        let tilt = TiltSpec::market(&m).unwrap();
        let at = |anchor: Option<f64>| {
            let opts = ScaleOptions { anchor, ..Default::default() };
            let z = classify(&TiltedModel::new(&m, &tilt, &opts).unwrap());
            let r = Market::new(&m, &opts).unwrap().report(None);
            [
                z.strictly_positive_finite_t.value,
                z.positive_at_infinity.value,
                z.vanishes_at_infinity.value,
                z.martingale.value,
                r.nflvr_finite_t.value,
                r.nra_finite_t.value,
                r.nga_finite_t.value,
            ]
        };
        prop_assert_eq!(at(None), at(Some(k)));
    }

    #[test]
    fn starting_point_does_not_change_verdicts(p in cev(), x0 in 0.1..10.0f64) {
        let a = p.model(1.0).unwrap();
        let b = p.model(x0).unwrap();
        let va = Market::new(&a, &ScaleOptions::default()).unwrap().report(None);
        let vb = Market::new(&b, &ScaleOptions::default()).unwrap().report(None);
        prop_assert_eq!(va.nflvr_finite_t.value, vb.nflvr_finite_t.value);
        prop_assert_eq!(va.nra_finite_t.value, vb.nra_finite_t.value);
    }
}
