//! Positivity and martingale classification of the stochastic exponential
//! `Z = exp(int b(Y) dW - 1/2 int b^2(Y) dt)`.
//!
//! Every verdict here is horizon-free: none of the endpoint conditions
//! depends on `T`.

use serde::{Deserialize, Serialize};

use crate::expr::simplify;
use crate::integrability::scan_grid;
use crate::interval::Side;
use crate::scale::{DiffusionModel, ModelError, ScaleOptions, TiltSpec, TiltedModel};
use crate::verdict::{Method, Verdict};

/// Grid size of the numeric null-tilt check.
pub const NULL_GRID: usize = 1024;
/// Largest `|b|` treated as zero by the numeric null-tilt check.
pub const NULL_TOL: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZClassification {
    /// `Z_T > 0` almost surely, for every finite `T`.
    pub strictly_positive_finite_t: Verdict,
    /// `Z_inf > 0` almost surely.
    pub positive_at_infinity: Verdict,
    /// `Z_inf = 0` almost surely.
    pub vanishes_at_infinity: Verdict,
    /// `Z` is a true martingale.
    pub martingale: Verdict,
    /// `b = 0` almost everywhere on the state space.
    pub b_is_null: Verdict,
}

/// Whether the tilt vanishes a.e. Symbolic when `b` simplifies to the zero
/// literal; otherwise a grid scan whose `Holds` is provisional.
pub fn b_is_null(model: &DiffusionModel, tilt: &TiltSpec) -> Verdict {
    let b = &tilt.b;
    if b.is_zero_literal() || simplify(b).is_zero_literal() {
        return Verdict::symbolic(true, "b simplifies to 0").cite("tilt-null");
    }
    let mut xs = scan_grid(model.interval(), NULL_GRID);
    xs.insert(0, model.x0());
    let mut evaluated = 0;
    for &x in &xs {
        match b.eval(x) {
            Ok(v) if v.is_finite() => {
                evaluated += 1;
                if v.abs() >= NULL_TOL {
                    return Verdict::fails(Method::Numeric, format!("b({}) = {v}", fmt_point(x))).cite("tilt-null");
                }
            }
            _ => {}
        }
    }
    let v = if evaluated == 0 {
        Verdict::unknown(
            Method::Numeric,
            format!("b = {b} could not be evaluated on the scan grid"),
        )
    } else {
        Verdict::holds(
            Method::Numeric,
            format!(
                "provisional: |b| < {NULL_TOL:e} at {evaluated} of {} grid points",
                xs.len()
            ),
        )
    };
    v.cite("tilt-null")
}

fn fmt_point(x: f64) -> String {
    if x != 0.0 && (x.abs() < 1e-4 || x.abs() >= 1e6) {
        format!("{x:.6e}")
    } else {
        format!("{x}")
    }
}

/// `Z_T > 0` a.s.: at each endpoint, either `Y` does not explode there or the
/// endpoint is good.
pub fn classify_z_positive_t(t: &TiltedModel) -> Verdict {
    let side = |s: Side| t.scale().explodes(s).negate().or(&t.good(s));
    side(Side::Right)
        .and(&side(Side::Left))
        .cite("z-positive-finite-horizon")
}

/// `Z_inf > 0` a.s.
pub fn classify_z_positive_infinity(t: &TiltedModel) -> Verdict {
    classify_z_positive_infinity_with(t, &b_is_null(t.model(), t.tilt()))
}

fn classify_z_positive_infinity_with(t: &TiltedModel, null: &Verdict) -> Verdict {
    if null.is_holds() {
        return null.clone().cite("z-positive-at-infinity");
    }
    let (gl, gr) = (t.good(Side::Left), t.good(Side::Right));
    let s_left_infinite = t.scale().s_finite(Side::Left).negate();
    let s_right_infinite = t.scale().s_finite(Side::Right).negate();
    let clauses = [
        null.clone(),
        gr.and(&s_left_infinite),
        gl.and(&s_right_infinite),
        gl.and(&gr),
    ];
    Verdict::any(&clauses).cite("z-positive-at-infinity")
}

/// `Z_inf = 0` a.s.: `b` is not null and both endpoints are bad.
pub fn classify_z_vanishes_infinity(t: &TiltedModel) -> Verdict {
    classify_z_vanishes_infinity_with(t, &b_is_null(t.model(), t.tilt()))
}

fn classify_z_vanishes_infinity_with(t: &TiltedModel, null: &Verdict) -> Verdict {
    let parts = [null.negate(), t.good(Side::Left).negate(), t.good(Side::Right).negate()];
    Verdict::all(&parts).cite("z-vanishes-at-infinity")
}

/// `Z` is a martingale: at each endpoint, either the auxiliary diffusion
/// does not explode there or the endpoint is good.
pub fn classify_z_martingale(t: &TiltedModel) -> Verdict {
    let side = |s: Side| t.auxiliary_scale().explodes(s).negate().or(&t.good(s));
    side(Side::Right).and(&side(Side::Left)).cite("z-martingale")
}

pub fn classify(t: &TiltedModel) -> ZClassification {
    let null = b_is_null(t.model(), t.tilt());
    ZClassification {
        strictly_positive_finite_t: classify_z_positive_t(t),
        positive_at_infinity: classify_z_positive_infinity_with(t, &null),
        vanishes_at_infinity: classify_z_vanishes_infinity_with(t, &null),
        martingale: classify_z_martingale(t),
        b_is_null: null,
    }
}

/// Classification with default options.
pub fn classify_model(model: &DiffusionModel, tilt: &TiltSpec) -> Result<ZClassification, ModelError> {
    classify_with(model, tilt, &ScaleOptions::default())
}

pub fn classify_with(
    model: &DiffusionModel,
    tilt: &TiltSpec,
    opts: &ScaleOptions,
) -> Result<ZClassification, ModelError> {
    Ok(classify(&TiltedModel::new(model, tilt, opts)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Expr};
    use crate::interval::Interval;
    use crate::verdict::Truth;

    fn model(mu: &str, sigma: &str) -> DiffusionModel {
        DiffusionModel::new(
            parse(mu).unwrap(),
            parse(sigma).unwrap(),
            1.0,
            Interval::positive_half_line(),
        )
        .unwrap()
    }

    fn market(mu: &str, sigma: &str) -> ZClassification {
        let m = model(mu, sigma);
        classify_model(&m, &TiltSpec::market(&m).unwrap()).unwrap()
    }

    #[test]
    fn null_tilt_on_the_real_line() {
        let m = DiffusionModel::new(Expr::zero(), Expr::num(1.0), 0.0, Interval::real_line()).unwrap();
        let z = classify_model(&m, &TiltSpec::market(&m).unwrap()).unwrap();
        assert!(z.b_is_null.is_holds() && z.b_is_null.method == Method::Symbolic);
        assert!(z.strictly_positive_finite_t.is_holds());
        assert!(z.positive_at_infinity.is_holds());
        assert!(z.vanishes_at_infinity.is_fails());
        assert!(z.martingale.is_holds());
    }

    #[test]
    fn numeric_null_check_is_provisional() {
        let m = model("1", "1");
        let tilt = TiltSpec::custom(&m, parse("1e-300*x").unwrap()).unwrap();
        let v = b_is_null(&m, &tilt);
        assert!(v.is_holds() && v.method == Method::Numeric);
        assert!(v.note.starts_with("provisional"));
        let tilt = TiltSpec::custom(&m, parse("1e-3*x").unwrap()).unwrap();
        assert!(b_is_null(&m, &tilt).is_fails());
    }

    #[test]
    fn gbm_market_tilt_is_a_martingale() {
        let z = market("0.05*x", "0.2*x");
        assert!(z.martingale.is_holds(), "{}", z.martingale);
        assert!(z.strictly_positive_finite_t.is_holds());
        assert!(z.vanishes_at_infinity.is_holds());
        assert!(z.positive_at_infinity.is_fails());
    }

    #[test]
    fn bessel_three_market_tilt_is_strict() {
        let z = market("1/x", "1");
        assert!(z.martingale.is_fails(), "{}", z.martingale);
        assert!(z.strictly_positive_finite_t.is_holds());
    }

    #[test]
    fn relative_arbitrage_tilt_of_bessel_three_is_null() {
        let m = model("1/x", "1");
        let tilt = TiltSpec::relative_arbitrage(&m).unwrap();
        let v = b_is_null(&m, &tilt);
        assert!(v.is_holds() && v.method == Method::Symbolic, "{v}");
    }

    #[test]
    fn cev_drift_dominated_case() {
        // alpha + 1 > 2 beta: zero is good, infinity bad.
        let down = market("-1*x^0.5", "1*x^0.5");
        assert_eq!(down.positive_at_infinity.value, Truth::Holds);
        assert_eq!(down.vanishes_at_infinity.value, Truth::Fails);
        let up = market("1*x^0.5", "1*x^0.5");
        assert_eq!(up.positive_at_infinity.value, Truth::Fails);
        assert_eq!(up.vanishes_at_infinity.value, Truth::Fails);
        assert_eq!(up.strictly_positive_finite_t.value, Truth::Holds);
    }

    #[test]
    fn verdicts_carry_citations() {
        let z = market("0.5*x", "x");
        for v in [
            &z.strictly_positive_finite_t,
            &z.positive_at_infinity,
            &z.vanishes_at_infinity,
            &z.martingale,
            &z.b_is_null,
        ] {
            assert!(!v.citation.is_empty(), "{v:?}");
        }
    }
}
