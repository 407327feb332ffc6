//! Leading-order behavior of an expression at an endpoint.

use serde::{Deserialize, Serialize};

use crate::interval::{Chart, Interval, Side};

use super::germ::{germ_of, Germ, Mono};
use super::{EvalError, Expr};

/// Number of sample points of the numeric power-law fit.
pub const FIT_POINTS: usize = 24;
/// Geometric ratio between consecutive sample points.
pub const FIT_RATIO: f64 = 2.0;
/// Largest accepted absolute residual of `ln|f|` against the fitted line.
pub const FIT_RESIDUAL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Confidence {
    Exact,
    Estimated,
    Unavailable,
}

/// `f ~ coefficient * u^exponent`, where `u` is the distance to a finite
/// endpoint or `|x|` at an infinite one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Asymptotics {
    pub endpoint: Side,
    pub exponent: f64,
    pub coefficient: f64,
    pub confidence: Confidence,
}

impl Asymptotics {
    pub fn unavailable(endpoint: Side) -> Asymptotics {
        Asymptotics {
            endpoint,
            exponent: f64::NAN,
            coefficient: f64::NAN,
            confidence: Confidence::Unavailable,
        }
    }
}

/// Leading term of an asymptotic expansion, richer than [`Asymptotics`]:
/// `coefficient * u^exponent * log(1/t)^log_power * exp(sum a t^q)` with `t`
/// the local coordinate of the endpoint (`t = u` at a finite endpoint,
/// `t = 1/|x|` at an infinite one).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadingOrder {
    pub coefficient: f64,
    pub exponent: f64,
    pub log_power: f64,
    /// `(q, a)` pairs of the exponential factor, in the local coordinate.
    pub exp_terms: Vec<(f64, f64)>,
    /// False when the coefficient is only known up to a positive factor.
    pub exact: bool,
}

impl LeadingOrder {
    pub(crate) fn from_germ(g: &Germ, chart: Chart) -> Option<LeadingOrder> {
        let lead = g.lead()?;
        Some(LeadingOrder {
            coefficient: lead.c,
            exponent: chart.to_x_power(lead.mono.p),
            log_power: lead.mono.m,
            exp_terms: lead.mono.phi.clone(),
            exact: g.is_exact(),
        })
    }

    pub(crate) fn mono(&self, chart: Chart) -> Mono {
        Mono {
            p: chart.to_x_power(self.exponent),
            m: self.log_power,
            phi: self.exp_terms.clone(),
        }
    }

    pub fn is_pure_power(&self) -> bool {
        self.log_power == 0.0 && self.exp_terms.is_empty()
    }

    /// Human-readable form in the natural distance variable `u`.
    pub fn describe(&self, chart: Chart) -> String {
        let u = if chart.is_infinite() { "x" } else { "u" };
        let mut s = format!("{}*{u}^{}", self.coefficient, self.exponent);
        if self.log_power != 0.0 {
            let l = if chart.is_infinite() { "log(x)" } else { "log(1/u)" };
            s.push_str(&format!("*{l}^{}", self.log_power));
        }
        if !self.exp_terms.is_empty() {
            let parts: Vec<String> = self
                .exp_terms
                .iter()
                .map(|(q, a)| format!("{a}*{u}^{}", chart.to_x_power(*q)))
                .collect();
            s.push_str(&format!("*exp({})", parts.join(" + ")));
        }
        if !self.exact {
            s.push_str(" (up to a positive factor)");
        }
        s
    }
}

/// Leading order of `e` at the given endpoint, when the symbolic rules apply.
pub fn leading_order_at(e: &Expr, interval: &Interval, side: Side) -> Option<LeadingOrder> {
    let chart = interval.chart(side);
    let g = germ_of(e, chart)?;
    LeadingOrder::from_germ(&g, chart)
}

/// Power-law leading order of `e` at an endpoint: exact when the symbolic
/// expansion is a plain power, otherwise estimated from a log-log fit.
pub fn asymptotics_at(e: &Expr, interval: &Interval, side: Side) -> Asymptotics {
    if let Some(lo) = leading_order_at(e, interval, side) {
        if lo.is_pure_power() && lo.exact {
            return Asymptotics {
                endpoint: side,
                exponent: lo.exponent,
                coefficient: lo.coefficient,
                confidence: Confidence::Exact,
            };
        }
    }
    let f = |x: f64| e.eval(x);
    match numeric_power_fit(&f, interval, side) {
        Some(fit) => Asymptotics {
            endpoint: side,
            exponent: fit.exponent,
            coefficient: fit.coefficient,
            confidence: Confidence::Estimated,
        },
        None => Asymptotics::unavailable(side),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub exponent: f64,
    pub coefficient: f64,
    pub max_residual: f64,
}

/// Sample points approaching an endpoint, as `(u, x)` pairs.
pub fn fit_grid(interval: &Interval, side: Side) -> Vec<(f64, f64)> {
    let chart = interval.chart(side);
    let other = interval.endpoint(side.other());
    let mut out = Vec::with_capacity(FIT_POINTS);
    match chart {
        Chart::Lower(e) | Chart::Upper(e) => {
            let d0 = if other.is_finite() {
                ((other - e).abs() / 2.0).min(1.0)
            } else {
                1.0
            };
            for k in 0..FIT_POINTS {
                let u = d0 / FIT_RATIO.powi(k as i32);
                out.push((u, chart.x(u)));
            }
        }
        Chart::PosInf | Chart::NegInf => {
            let start = if other.is_finite() {
                (2.0 * other.abs()).max(1.0)
            } else {
                1.0
            };
            for k in 0..FIT_POINTS {
                let u = start * FIT_RATIO.powi(k as i32);
                let x = if chart == Chart::PosInf { u } else { -u };
                out.push((u, x));
            }
        }
    }
    out
}

/// Least-squares fit of `ln|f| = ln k + p ln u` over [`fit_grid`]; `None`
/// when `f` fails, changes sign, vanishes, or the residual exceeds
/// [`FIT_RESIDUAL`].
pub fn numeric_power_fit(
    f: &dyn Fn(f64) -> Result<f64, EvalError>,
    interval: &Interval,
    side: Side,
) -> Option<PowerFit> {
    let grid = fit_grid(interval, side);
    let mut xs = Vec::with_capacity(grid.len());
    let mut ys = Vec::with_capacity(grid.len());
    let mut sign = 0.0;
    for &(u, x) in &grid {
        let v = f(x).ok()?;
        if v == 0.0 || !v.is_finite() {
            return None;
        }
        if sign == 0.0 {
            sign = v.signum();
        } else if v.signum() != sign {
            return None;
        }
        xs.push(u.ln());
        ys.push(v.abs().ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let p = sxy / sxx;
    let c = my - p * mx;
    let max_residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (c + p * x)).abs())
        .fold(0.0, f64::max);
    (max_residual < FIT_RESIDUAL).then(|| PowerFit {
        exponent: p,
        coefficient: sign * c.exp(),
        max_residual,
    })
}
