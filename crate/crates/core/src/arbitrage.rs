//! Market-level verdicts for a price process on `(0, inf)`: no free lunch
//! with vanishing risk (finite and infinite horizon), no generalized
//! arbitrage, and no relative arbitrage.
//!
//! Every finite-horizon verdict is independent of the horizon; `T` is only
//! carried for labeling.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exponential::classify_z_martingale;
use crate::expr::{simplify, Expr};
use crate::integrability::{loc_integrable_at_boundary, loc_integrable_on_j, IntegrandSpec};
use crate::interval::{Interval, Side};
use crate::scale::{DiffusionModel, ModelError, Scale, ScaleOptions, TiltSpec, TiltedModel};
use crate::verdict::{Method, Truth, Verdict};

pub const HORIZON_NOTE: &str = "finite-horizon verdicts do not depend on T; the horizon is a label";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArbitrageError {
    #[error("market verdicts need the state space (0, inf), got {0}")]
    StateSpace(Interval),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Standing hypotheses of the market criteria.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketAssumptions {
    /// `sigma != 0` on `(0, inf)`.
    pub sigma_nonzero: Verdict,
    /// `1/sigma^2` locally integrable on `(0, inf)`.
    pub inv_sigma2_integrable: Verdict,
    /// `mu/sigma^2` locally integrable on `(0, inf)`.
    pub drift_ratio_integrable: Verdict,
    /// `mu^2/sigma^4` locally integrable on `(0, inf)`.
    pub drift_square_integrable: Verdict,
    /// `Y` does not explode at infinity.
    pub no_explosion_at_infinity: Verdict,
    /// `Y` explodes neither at 0 nor at infinity.
    pub no_explosion: Verdict,
}

/// The three drift/volatility integrability conditions the market criteria
/// are built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftConditions {
    /// `mu^2/sigma^4` locally integrable on `(0, inf)`.
    pub drift_square_integrable: Verdict,
    /// `x mu^2/sigma^4` integrable near 0.
    pub weighted_drift_square_at_zero: Verdict,
    /// `x/sigma^2` not integrable near 0.
    pub variance_ratio_divergent_at_zero: Verdict,
}

/// Consistency facts between the criteria, checked when the drift is
/// square integrable and `Y` does not explode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonFacts {
    /// NFLVR on `[0, T]` iff `x/sigma^2` is not integrable near 0.
    pub nflvr_iff_zero_condition: Verdict,
    /// NRA iff `x/sigma^2` is not integrable near infinity.
    pub nra_iff_infinity_condition: Verdict,
    /// NGA iff NFLVR and NRA.
    pub nga_iff_nflvr_and_nra: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArbitrageReport {
    pub horizon: Option<f64>,
    pub horizon_note: String,
    pub assumptions: MarketAssumptions,
    pub conditions: DriftConditions,
    pub nflvr_finite_t: Verdict,
    pub nflvr_infinite: Verdict,
    pub nga_finite_t: Verdict,
    pub nga_infinite: Verdict,
    pub nra_finite_t: Verdict,
    /// NRA read off the martingale property of `ZY` (the relative-arbitrage
    /// tilt); a cross-check of `nra_finite_t`.
    pub nra_martingale_route: Verdict,
    /// Holds when both NRA routes are decided and agree.
    pub nra_routes_agree: Verdict,
    /// Under square-integrable drift with `x mu^2/sigma^4` integrable near
    /// 0, exactly one of "divergent `x/sigma^2` and no explosion at 0" and
    /// "integrable `x/sigma^2` and explosion at 0" holds.
    pub zero_dichotomy: Verdict,
    pub comparison: ComparisonFacts,
    /// Verdict name to criterion tag.
    pub cited_theorems: BTreeMap<String, String>,
}

/// Shared state of the market analysis of one model.
#[derive(Debug, Clone)]
pub struct Market {
    model: DiffusionModel,
    scale: Scale,
    opts: ScaleOptions,
    assumptions: MarketAssumptions,
    conditions: DriftConditions,
}

impl Market {
    pub fn new(model: &DiffusionModel, opts: &ScaleOptions) -> Result<Market, ArbitrageError> {
        if !model.interval().is_positive_half_line() {
            return Err(ArbitrageError::StateSpace(*model.interval()));
        }
        let scale = Scale::new(model, opts)?;
        let conditions = drift_conditions_with(model, opts);
        let gate = model.gate();
        let no_inf = scale.explodes(Side::Right).negate().cite("feller-explosion");
        let no_zero = scale.explodes(Side::Left).negate();
        let assumptions = MarketAssumptions {
            sigma_nonzero: gate.sigma_nonzero.clone(),
            inv_sigma2_integrable: gate.inv_sigma2.clone(),
            drift_ratio_integrable: gate.drift_ratio.clone(),
            drift_square_integrable: conditions.drift_square_integrable.clone(),
            no_explosion: no_zero.and(&no_inf).cite("feller-explosion"),
            no_explosion_at_infinity: no_inf,
        };
        Ok(Market {
            model: model.clone(),
            scale,
            opts: *opts,
            assumptions,
            conditions,
        })
    }

    pub fn model(&self) -> &DiffusionModel {
        &self.model
    }

    pub fn assumptions(&self) -> &MarketAssumptions {
        &self.assumptions
    }

    pub fn conditions(&self) -> &DriftConditions {
        &self.conditions
    }

    fn standard_gate(&self) -> Option<Verdict> {
        let a = &self.assumptions;
        gate(&[
            ("sigma nonzero", &a.sigma_nonzero),
            ("1/sigma^2 locally integrable", &a.inv_sigma2_integrable),
            ("mu/sigma^2 locally integrable", &a.drift_ratio_integrable),
            ("no explosion at infinity", &a.no_explosion_at_infinity),
        ])
    }

    fn strong_gate(&self) -> Option<Verdict> {
        let a = &self.assumptions;
        gate(&[
            ("sigma nonzero", &a.sigma_nonzero),
            ("1/sigma^2 locally integrable", &a.inv_sigma2_integrable),
            ("mu^2/sigma^4 locally integrable", &a.drift_square_integrable),
            ("no explosion at 0 or infinity", &a.no_explosion),
        ])
    }

    /// NFLVR on a finite horizon.
    pub fn nflvr_finite_horizon(&self) -> Verdict {
        if let Some(v) = self.standard_gate() {
            return v.cite("nflvr-finite-horizon");
        }
        let c = &self.conditions;
        let no_zero = self.scale.explodes(Side::Left).negate();
        let first = c.drift_square_integrable.and(&c.weighted_drift_square_at_zero);
        let second = Verdict::all([
            &c.drift_square_integrable,
            &c.variance_ratio_divergent_at_zero,
            &no_zero,
        ]);
        first.or(&second).cite("nflvr-finite-horizon")
    }

    /// NFLVR on `[0, inf)`.
    pub fn nflvr_infinite_horizon(&self) -> Verdict {
        if let Some(v) = self.standard_gate() {
            return v.cite("nflvr-infinite-horizon");
        }
        let c = &self.conditions;
        let s_inf = self.scale.s_finite(Side::Right).negate();
        Verdict::all([&c.drift_square_integrable, &c.weighted_drift_square_at_zero, &s_inf])
            .cite("nflvr-infinite-horizon")
    }

    /// NRA on a finite horizon: `x/sigma^2` is not integrable near infinity.
    pub fn nra_finite_horizon(&self) -> Verdict {
        if let Some(v) = self.strong_gate() {
            return v.cite("nra-finite-horizon");
        }
        variance_ratio_divergent_at_infinity_with(&self.model, &self.opts).cite("nra-finite-horizon")
    }

    /// NRA through the martingale property of `ZY`, i.e. of the exponential
    /// with the relative-arbitrage tilt.
    pub fn nra_martingale_route(&self) -> Verdict {
        if let Some(v) = self.strong_gate() {
            return v.cite("nra-martingale-route");
        }
        let v = TiltSpec::relative_arbitrage(&self.model)
            .and_then(|tilt| TiltedModel::new(&self.model, &tilt, &self.opts))
            .map(|t| classify_z_martingale(&t))
            .unwrap_or_else(|e| Verdict::unknown(Method::Numeric, e.to_string()));
        v.cite("nra-martingale-route")
    }

    /// NGA on a finite horizon: NFLVR and divergence of `x/sigma^2` near
    /// infinity. Unknown whenever NFLVR is, whatever the second conjunct.
    pub fn nga_finite_horizon(&self) -> Verdict {
        let nflvr = self.nflvr_finite_horizon();
        if nflvr.is_unknown() {
            let note = format!("NFLVR is undetermined ({})", nflvr.note);
            return Verdict::unknown(nflvr.method, note).cite("nga-finite-horizon");
        }
        nflvr
            .and(&variance_ratio_divergent_at_infinity_with(&self.model, &self.opts))
            .cite("nga-finite-horizon")
    }

    /// NGA on `[0, inf)` never holds: a generalized arbitrage always exists.
    pub fn nga_infinite_horizon(&self) -> Verdict {
        if let Some(v) = self.standard_gate() {
            return v.cite("nga-infinite-horizon");
        }
        Verdict::symbolic(false, "a generalized arbitrage exists on every infinite horizon")
            .cite("nga-infinite-horizon")
    }

    /// Cross-check of the dichotomy at 0. Holds when exactly one branch is
    /// confirmed, Fails on a contradiction, Unknown when the hypothesis is
    /// not met or a branch is undecided.
    pub fn dichotomy_check(&self) -> Verdict {
        let a = &self.assumptions;
        if let Some(v) = gate(&[
            ("sigma nonzero", &a.sigma_nonzero),
            ("1/sigma^2 locally integrable", &a.inv_sigma2_integrable),
            ("mu/sigma^2 locally integrable", &a.drift_ratio_integrable),
        ]) {
            return v.cite("zero-dichotomy");
        }
        let c = &self.conditions;
        let hyp = c.drift_square_integrable.and(&c.weighted_drift_square_at_zero);
        if !hyp.is_holds() {
            let why = if hyp.is_fails() { "not met" } else { "undecided" };
            return Verdict::unknown(hyp.method, format!("hypothesis {why}: {}", hyp.note)).cite("zero-dichotomy");
        }
        let cond = &c.variance_ratio_divergent_at_zero;
        let explodes = self.scale.explodes(Side::Left);
        let method = if cond.method == Method::Numeric || explodes.method == Method::Numeric {
            Method::Numeric
        } else {
            Method::Symbolic
        };
        let v = match (cond.value.as_bool(), explodes.value.as_bool()) {
            (Some(c4), Some(e)) => {
                let first = c4 && !e;
                let second = !c4 && e;
                if first ^ second {
                    let which = if first {
                        "x/sigma^2 divergent at 0 and no explosion at 0"
                    } else {
                        "x/sigma^2 integrable at 0 and explosion at 0"
                    };
                    Verdict::holds(method, which)
                } else {
                    Verdict::fails(
                        method,
                        format!("contradiction: x/sigma^2 divergent at 0 = {c4}, explosion at 0 = {e}"),
                    )
                }
            }
            _ => Verdict::unknown(method, "a branch is undecided"),
        };
        v.cite("zero-dichotomy")
    }

    pub fn report(&self, horizon: Option<f64>) -> ArbitrageReport {
        let nflvr_finite_t = self.nflvr_finite_horizon();
        let nflvr_infinite = self.nflvr_infinite_horizon();
        let nga_finite_t = self.nga_finite_horizon();
        let nga_infinite = self.nga_infinite_horizon();
        let nra_finite_t = self.nra_finite_horizon();
        let nra_martingale_route = self.nra_martingale_route();
        let nra_routes_agree = agreement(&nra_finite_t, &nra_martingale_route).cite("nra-martingale-route");
        let zero_dichotomy = self.dichotomy_check();

        let strong = self.strong_gate();
        let fact = |lhs: &Verdict, rhs: &Verdict, tag: &str| match &strong {
            Some(v) => Verdict::unknown(v.method, format!("not applicable: {}", v.note)).cite(tag),
            None => agreement(lhs, rhs).cite(tag),
        };
        let nflvr_and_nra = nflvr_finite_t.and(&nra_finite_t);
        let comparison = ComparisonFacts {
            nflvr_iff_zero_condition: fact(
                &nflvr_finite_t,
                &self.conditions.variance_ratio_divergent_at_zero,
                "nflvr-zero-condition",
            ),
            nra_iff_infinity_condition: fact(
                &nra_finite_t,
                &variance_ratio_divergent_at_infinity_with(&self.model, &self.opts),
                "nra-infinity-condition",
            ),
            nga_iff_nflvr_and_nra: fact(&nga_finite_t, &nflvr_and_nra, "nga-nflvr-and-nra"),
        };

        let mut cited_theorems = BTreeMap::new();
        for (name, v) in [
            ("nflvr_finite_t", &nflvr_finite_t),
            ("nflvr_infinite", &nflvr_infinite),
            ("nga_finite_t", &nga_finite_t),
            ("nga_infinite", &nga_infinite),
            ("nra_finite_t", &nra_finite_t),
            ("nra_martingale_route", &nra_martingale_route),
            ("zero_dichotomy", &zero_dichotomy),
        ] {
            cited_theorems.insert(name.to_string(), v.citation.clone());
        }

        ArbitrageReport {
            horizon,
            horizon_note: HORIZON_NOTE.to_string(),
            assumptions: self.assumptions.clone(),
            conditions: self.conditions.clone(),
            nflvr_finite_t,
            nflvr_infinite,
            nga_finite_t,
            nga_infinite,
            nra_finite_t,
            nra_martingale_route,
            nra_routes_agree,
            zero_dichotomy,
            comparison,
            cited_theorems,
        }
    }
}

/// Unknown naming the first hypothesis that does not hold, if any.
fn gate(items: &[(&str, &Verdict)]) -> Option<Verdict> {
    items.iter().find(|(_, v)| !v.is_holds()).map(|(name, v)| {
        let state = if v.is_fails() { "fails" } else { "is undecided" };
        Verdict::unknown(v.method, format!("assumption '{name}' {state}"))
    })
}

/// Holds when both sides are decided and equal, Fails when they differ.
fn agreement(a: &Verdict, b: &Verdict) -> Verdict {
    let method = if a.method == Method::Numeric || b.method == Method::Numeric {
        Method::Numeric
    } else {
        Method::Symbolic
    };
    match (a.value, b.value) {
        (Truth::Unknown, _) | (_, Truth::Unknown) => Verdict::unknown(method, "a side is undecided"),
        (x, y) if x == y => Verdict::new(Truth::Holds, method, format!("both {x}")),
        (x, y) => Verdict::new(Truth::Fails, method, format!("{x} vs {y}")),
    }
}

fn ratio(num: Expr, den: Expr) -> Expr {
    simplify(&(num / den))
}

fn at_boundary(e: &Expr, model: &DiffusionModel, side: Side, opts: &ScaleOptions) -> Verdict {
    let mut spec = IntegrandSpec::from_expr(e, *model.interval(), side, model.x0()).with_settings(opts.settings);
    if !opts.symbolic {
        spec = spec.with_leading(None);
    }
    loc_integrable_at_boundary(&spec)
}

/// The three drift conditions of the market criteria.
pub fn drift_conditions(model: &DiffusionModel) -> DriftConditions {
    drift_conditions_with(model, &ScaleOptions::default())
}

pub fn drift_conditions_with(model: &DiffusionModel, opts: &ScaleOptions) -> DriftConditions {
    let (mu, sigma) = (model.mu(), model.sigma());
    let zero_drift = mu.is_zero_literal();
    let mu2_sigma4 = ratio(mu.clone().pow(2.0), sigma.clone().pow(4.0));
    let drift_square_integrable = if zero_drift {
        Verdict::symbolic(true, "mu = 0")
    } else {
        loc_integrable_on_j(&mu2_sigma4, model.interval())
    }
    .cite("drift-square-integrable");
    let weighted_drift_square_at_zero = if zero_drift {
        Verdict::symbolic(true, "mu = 0")
    } else {
        at_boundary(
            &ratio(Expr::x() * mu.clone().pow(2.0), sigma.clone().pow(4.0)),
            model,
            Side::Left,
            opts,
        )
    }
    .cite("weighted-drift-square-at-zero");
    let variance_ratio_divergent_at_zero = at_boundary(&variance_ratio(model), model, Side::Left, opts)
        .negate()
        .cite("variance-ratio-at-zero");
    DriftConditions {
        drift_square_integrable,
        weighted_drift_square_at_zero,
        variance_ratio_divergent_at_zero,
    }
}

fn variance_ratio(model: &DiffusionModel) -> Expr {
    ratio(Expr::x(), model.sigma().clone().pow(2.0))
}

/// `x/sigma^2` is not integrable near infinity.
pub fn variance_ratio_divergent_at_infinity(model: &DiffusionModel) -> Verdict {
    variance_ratio_divergent_at_infinity_with(model, &ScaleOptions::default())
}

pub fn variance_ratio_divergent_at_infinity_with(model: &DiffusionModel, opts: &ScaleOptions) -> Verdict {
    at_boundary(&variance_ratio(model), model, Side::Right, opts)
        .negate()
        .cite("variance-ratio-at-infinity")
}

pub fn analyze_market(
    model: &DiffusionModel,
    horizon: Option<f64>,
    opts: &ScaleOptions,
) -> Result<ArbitrageReport, ArbitrageError> {
    Ok(Market::new(model, opts)?.report(horizon))
}

pub fn nflvr_finite_horizon(model: &DiffusionModel) -> Result<Verdict, ArbitrageError> {
    Ok(Market::new(model, &ScaleOptions::default())?.nflvr_finite_horizon())
}

pub fn nflvr_infinite_horizon(model: &DiffusionModel) -> Result<Verdict, ArbitrageError> {
    Ok(Market::new(model, &ScaleOptions::default())?.nflvr_infinite_horizon())
}

pub fn nra_finite_horizon(model: &DiffusionModel) -> Result<Verdict, ArbitrageError> {
    Ok(Market::new(model, &ScaleOptions::default())?.nra_finite_horizon())
}

pub fn nga_finite_horizon(model: &DiffusionModel) -> Result<Verdict, ArbitrageError> {
    Ok(Market::new(model, &ScaleOptions::default())?.nga_finite_horizon())
}

pub fn nga_infinite_horizon(model: &DiffusionModel) -> Result<Verdict, ArbitrageError> {
    Ok(Market::new(model, &ScaleOptions::default())?.nga_infinite_horizon())
}

pub fn dichotomy_check(model: &DiffusionModel) -> Result<Verdict, ArbitrageError> {
    Ok(Market::new(model, &ScaleOptions::default())?.dichotomy_check())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn market(mu: &str, sigma: &str) -> Market {
        let m = DiffusionModel::new(
            parse(mu).unwrap(),
            parse(sigma).unwrap(),
            1.0,
            Interval::positive_half_line(),
        )
        .unwrap();
        Market::new(&m, &ScaleOptions::default()).unwrap()
    }

    fn values(r: &ArbitrageReport) -> [Truth; 3] {
        [r.nflvr_finite_t.value, r.nra_finite_t.value, r.nga_finite_t.value]
    }

    #[test]
    fn rejects_other_state_spaces() {
        let m = DiffusionModel::new(Expr::zero(), Expr::num(1.0), 0.0, Interval::real_line()).unwrap();
        assert!(matches!(
            Market::new(&m, &ScaleOptions::default()),
            Err(ArbitrageError::StateSpace(_))
        ));
    }

    #[test]
    fn geometric_brownian_motion() {
        let r = market("x", "x").report(Some(1.0));
        use Truth::*;
        assert_eq!(values(&r), [Holds, Holds, Holds]);
        assert!(r.conditions.variance_ratio_divergent_at_zero.is_holds());
        assert!(r.nflvr_infinite.is_fails(), "{}", r.nflvr_infinite);
        assert!(r.nga_infinite.is_fails());
        assert!(r.zero_dichotomy.is_unknown());
    }

    #[test]
    fn bessel_three() {
        let r = market("1/x", "1").report(None);
        use Truth::*;
        assert_eq!(values(&r), [Fails, Holds, Fails]);
        assert!(r.nra_routes_agree.is_holds(), "{}", r.nra_routes_agree);
    }

    #[test]
    fn quadratic_volatility_admits_relative_arbitrage() {
        let r = market("x", "x^2").report(None);
        use Truth::*;
        assert_eq!(values(&r), [Holds, Fails, Fails]);
        assert!(r.nra_routes_agree.is_holds(), "{}", r.nra_routes_agree);
    }

    #[test]
    fn driftless_market_is_free_of_lunch_forever() {
        let r = market("0", "x").report(None);
        assert!(r.nflvr_infinite.is_holds());
        assert!(r.conditions.drift_square_integrable.is_holds());
        assert!(r.conditions.weighted_drift_square_at_zero.is_holds());
        assert!(r.zero_dichotomy.is_holds(), "{}", r.zero_dichotomy);
    }

    #[test]
    fn exploding_market_is_gated() {
        // Explodes at infinity: standing hypotheses fail.
        let m = market("x^3", "x");
        let v = m.nflvr_finite_horizon();
        assert!(v.is_unknown() && v.note.contains("no explosion at infinity"), "{v}");
        assert!(m.nga_finite_horizon().is_unknown());
        assert!(m.nga_infinite_horizon().is_unknown());
    }

    #[test]
    fn every_verdict_is_cited() {
        let r = market("2", "sqrt(x)+x^2").report(Some(2.0));
        for (name, tag) in &r.cited_theorems {
            assert!(!tag.is_empty(), "{name}");
        }
        let s = serde_json::to_string(&r).unwrap();
        let back: ArbitrageReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
