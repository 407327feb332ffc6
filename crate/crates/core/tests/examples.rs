mod common;

use noarb::arbitrage::{analyze_market, nga_infinite_horizon, ArbitrageError, Market};
use noarb::scale::{DiffusionModel, ScaleOptions};
use noarb::{parse, Interval, Method, Truth};

use common::{half_line, load};

fn report(file: &str) -> noarb::arbitrage::ArbitrageReport {
    analyze_market(&load(file).model, Some(1.0), &ScaleOptions::default()).unwrap()
}

#[test]
fn complete_market_has_every_no_arbitrage_property() {
    let r = report("linear_vol.model");
    assert!(r.nflvr_finite_t.is_holds());
    assert!(r.nra_finite_t.is_holds());
    assert!(r.nga_finite_t.is_holds());
    assert!(r.nflvr_infinite.is_fails());
    assert_eq!(r.nflvr_finite_t.method, Method::Symbolic);
}

#[test]
fn quadratic_volatility_admits_relative_arbitrage_only() {
    let r = report("quadratic_vol.model");
    assert!(r.nflvr_finite_t.is_holds());
    assert!(r.nra_finite_t.is_fails());
    assert!(r.nga_finite_t.is_fails());
    assert!(r.nra_routes_agree.is_holds(), "{}", r.nra_routes_agree.note);
}

#[test]
fn bessel_type_models_have_a_free_lunch_but_no_relative_arbitrage() {
    for f in ["squared_bessel.model", "bessel3.model"] {
        let r = report(f);
        assert_eq!(
            [r.nflvr_finite_t.value, r.nra_finite_t.value, r.nga_finite_t.value],
            [Truth::Fails, Truth::Holds, Truth::Fails],
            "{f}"
        );
    }
}

#[test]
fn mixed_volatility_fails_both() {
    let r = report("mixed_vol.model");
    assert!(r.nflvr_finite_t.is_fails());
    assert!(r.nra_finite_t.is_fails());
}

#[test]
fn comparison_facts_hold_on_all_examples() {
    for f in [
        "linear_vol.model",
        "quadratic_vol.model",
        "bessel3.model",
        "mixed_vol.model",
        "gbm.model",
    ] {
        let r = report(f);
        let c = &r.comparison;
        for v in [
            &c.nflvr_iff_zero_condition,
            &c.nra_iff_infinity_condition,
            &c.nga_iff_nflvr_and_nra,
        ] {
            assert!(!v.is_fails(), "{f}: {v}");
        }
        assert!(c.nga_iff_nflvr_and_nra.is_holds(), "{f}");
    }
}

#[test]
fn every_market_verdict_carries_a_citation() {
    let r = report("gbm.model");
    for v in [
        &r.nflvr_finite_t,
        &r.nflvr_infinite,
        &r.nga_finite_t,
        &r.nga_infinite,
        &r.nra_finite_t,
    ] {
        assert!(!v.citation.is_empty(), "{v}");
        assert!(r.cited_theorems.values().any(|t| t == &v.citation), "{}", v.citation);
    }
}

#[test]
fn state_space_must_be_the_positive_half_line() {
    let m = DiffusionModel::new(
        parse("0").unwrap(),
        parse("1").unwrap(),
        0.0,
        Interval::new(f64::NEG_INFINITY, f64::INFINITY).unwrap(),
    )
    .unwrap();
    assert!(matches!(nga_infinite_horizon(&m), Err(ArbitrageError::StateSpace(_))));
}

#[test]
fn undecided_assumption_is_named() {
    let m = load("fading_vol.model");
    let market = Market::new(&m.model, &ScaleOptions::default()).unwrap();
    let v = market.nflvr_finite_horizon();
    assert!(v.is_unknown());
    assert!(v.note.contains("no explosion at infinity"), "{}", v.note);
}

#[test]
fn horizon_does_not_change_finite_horizon_verdicts() {
    let m = half_line("x", "x^2", 1.0);
    let a = analyze_market(&m, Some(0.5), &ScaleOptions::default()).unwrap();
    let b = analyze_market(&m, Some(50.0), &ScaleOptions::default()).unwrap();
    assert_eq!(a.nflvr_finite_t, b.nflvr_finite_t);
    assert_eq!(a.nra_finite_t, b.nra_finite_t);
    assert_eq!(a.nga_finite_t, b.nga_finite_t);
}
