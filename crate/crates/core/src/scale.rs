//! Scale density and scale function of a diffusion, Feller's test for
//! explosions, and the good/bad classification of endpoints under a tilt.
//!
//! Endpoint tests run on germs in the local chart coordinate whenever the
//! coefficients stay in the symbolic class; otherwise they fall back to a
//! numeric profile of `rho` and `s` on a geometric grid.

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::germ::{germ_of, Germ, Mono};
use crate::expr::{simplify, EvalError, Expr, LeadingOrder};
use crate::integrability::{
    improper_integral_finite, loc_integrable_at_boundary, loc_integrable_on_j, nonvanishing_on_j, IntegrandSpec,
    NumericSettings, TailAccumulator, TailDecision,
};
use crate::interval::{ext_real, fmt_endpoint, Chart, Interval, Side};
use crate::quadrature;
use crate::verdict::{Method, Verdict};

/// Grid nodes per side of the anchor in [`ScaleData`].
pub const NODES_PER_SIDE: usize = 512;
/// Grid steps per halving of the distance to the endpoint; 512 steps reach
/// a relative distance of `2^(-512/19) < 1e-8`.
pub const STEPS_PER_OCTAVE: usize = 19;
/// Depth of the extended profile used by the numeric endpoint tests.
const DEEP_OCTAVES: usize = 64;
/// On-the-fly steps allowed past the extended profile.
const EXTRA_STEPS: usize = 4096;
/// Range of `log rho` within one step beyond which the step is integrated
/// as piecewise exponential.
const STEEP_SPREAD: f64 = 4.0;
/// `log rho` beyond this is reported as overflow.
const LOG_OVERFLOW: f64 = 700.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{what} = {value} is not inside {interval}")]
    NotInInterval {
        what: &'static str,
        value: f64,
        interval: Interval,
    },
    #[error("model rejected, {what}: {note}")]
    Gate { what: &'static str, note: String },
    #[error("tilt b = {b} is not admissible: {note}")]
    Tilt { b: String, note: String },
}

/// Outcome of the existence-and-uniqueness gate on the coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    /// `sigma != 0` on the state space.
    pub sigma_nonzero: Verdict,
    /// `1/sigma^2` locally integrable on the state space.
    pub inv_sigma2: Verdict,
    /// `mu/sigma^2` locally integrable on the state space.
    pub drift_ratio: Verdict,
}

impl GateReport {
    pub fn overall(&self) -> Verdict {
        Verdict::all([&self.sigma_nonzero, &self.inv_sigma2, &self.drift_ratio])
    }
}

/// `dY = mu(Y) dt + sigma(Y) dW` on an open interval, started at `x0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct DiffusionModel {
    mu: Expr,
    sigma: Expr,
    x0: f64,
    interval: Interval,
    gate: GateReport,
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    mu: Expr,
    sigma: Expr,
    x0: f64,
    interval: Interval,
}

impl TryFrom<ModelRepr> for DiffusionModel {
    type Error = ModelError;

    fn try_from(r: ModelRepr) -> Result<Self, Self::Error> {
        DiffusionModel::new(r.mu, r.sigma, r.x0, r.interval)
    }
}

impl From<DiffusionModel> for ModelRepr {
    fn from(m: DiffusionModel) -> Self {
        ModelRepr {
            mu: m.mu,
            sigma: m.sigma,
            x0: m.x0,
            interval: m.interval,
        }
    }
}

impl DiffusionModel {
    /// Validates `x0` and runs the gate. Only a definite failure rejects the
    /// model; undecided conditions are kept in [`DiffusionModel::gate`].
    pub fn new(mu: Expr, sigma: Expr, x0: f64, interval: Interval) -> Result<DiffusionModel, ModelError> {
        if !interval.contains(x0) {
            return Err(ModelError::NotInInterval {
                what: "x0",
                value: x0,
                interval,
            });
        }
        let gate = GateReport {
            sigma_nonzero: nonvanishing_on_j(&sigma, &interval).cite("nondegenerate-volatility"),
            inv_sigma2: loc_integrable_on_j(&(Expr::num(1.0) / sigma.clone().pow(2.0)), &interval)
                .cite("local-integrability"),
            drift_ratio: loc_integrable_on_j(&(mu.clone() / sigma.clone().pow(2.0)), &interval)
                .cite("local-integrability"),
        };
        for (what, v) in [
            ("sigma vanishes", &gate.sigma_nonzero),
            ("1/sigma^2 is not locally integrable", &gate.inv_sigma2),
            ("mu/sigma^2 is not locally integrable", &gate.drift_ratio),
        ] {
            if v.is_fails() {
                return Err(ModelError::Gate {
                    what,
                    note: v.note.clone(),
                });
            }
        }
        Ok(DiffusionModel {
            mu,
            sigma,
            x0,
            interval,
            gate,
        })
    }

    pub fn mu(&self) -> &Expr {
        &self.mu
    }

    pub fn sigma(&self) -> &Expr {
        &self.sigma
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn interval(&self) -> &Interval {
        &self.interval
    }

    pub fn gate(&self) -> &GateReport {
        &self.gate
    }

    /// Same coefficients, different starting point. The gate does not depend
    /// on `x0` and is kept.
    pub fn with_x0(&self, x0: f64) -> Result<DiffusionModel, ModelError> {
        if !self.interval.contains(x0) {
            return Err(ModelError::NotInInterval {
                what: "x0",
                value: x0,
                interval: self.interval,
            });
        }
        Ok(DiffusionModel { x0, ..self.clone() })
    }

    /// `2 mu / sigma^2`, simplified.
    pub fn drift_ratio(&self) -> Expr {
        if self.mu.is_zero_literal() {
            return Expr::zero();
        }
        simplify(&(Expr::num(2.0) * self.mu.clone() / self.sigma.clone().pow(2.0)))
    }
}

impl fmt::Display for DiffusionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "dY = ({}) dt + ({}) dW on {}, Y0 = {}",
            self.mu, self.sigma, self.interval, self.x0
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiltKind {
    /// `b = -mu/sigma`, the candidate market price of risk.
    Market,
    /// `b = sigma/x - mu/sigma`.
    RelativeArbitrage,
    Custom,
}

/// The integrand `b` of the stochastic exponential
/// `Z = exp(int b(Y) dW - 1/2 int b^2(Y) dt)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltSpec {
    pub b: Expr,
    pub kind: TiltKind,
    /// `b^2/sigma^2` locally integrable on the state space.
    pub admissible: Verdict,
}

impl TiltSpec {
    pub fn market(model: &DiffusionModel) -> Result<TiltSpec, ModelError> {
        let b = if model.mu.is_zero_literal() {
            Expr::zero()
        } else {
            simplify(&-(model.mu.clone() / model.sigma.clone()))
        };
        TiltSpec::checked(model, b, TiltKind::Market)
    }

    pub fn relative_arbitrage(model: &DiffusionModel) -> Result<TiltSpec, ModelError> {
        let b = model.sigma.clone() / Expr::x() - model.mu.clone() / model.sigma.clone();
        TiltSpec::checked(model, simplify(&b), TiltKind::RelativeArbitrage)
    }

    pub fn custom(model: &DiffusionModel, b: Expr) -> Result<TiltSpec, ModelError> {
        TiltSpec::checked(model, b, TiltKind::Custom)
    }

    /// Whether `b^2/sigma^2` is locally integrable on the state space.
    pub fn admissibility(model: &DiffusionModel, b: &Expr) -> Verdict {
        if b.is_zero_literal() {
            return Verdict::symbolic(true, "b = 0").cite("tilt-admissible");
        }
        let e = b.clone().pow(2.0) / model.sigma.clone().pow(2.0);
        loc_integrable_on_j(&e, &model.interval).cite("tilt-admissible")
    }

    fn checked(model: &DiffusionModel, b: Expr, kind: TiltKind) -> Result<TiltSpec, ModelError> {
        let admissible = TiltSpec::admissibility(model, &b);
        if admissible.is_fails() {
            return Err(ModelError::Tilt {
                b: b.to_string(),
                note: admissible.note,
            });
        }
        Ok(TiltSpec { b, kind, admissible })
    }
}

/// The diffusion with drift `mu + b sigma` and the same volatility, start and
/// state space. Under the market tilt the drift is identically zero.
pub fn auxiliary_model(model: &DiffusionModel, tilt: &TiltSpec) -> DiffusionModel {
    let mu = match tilt.kind {
        TiltKind::Market => Expr::zero(),
        _ if tilt.b.is_zero_literal() => model.mu.clone(),
        _ => simplify(&(model.mu.clone() + tilt.b.clone() * model.sigma.clone())),
    };
    // (mu + b sigma)/sigma^2 = mu/sigma^2 + b/sigma, and b/sigma is locally
    // square integrable, so the gate carries over.
    let gate = GateReport {
        drift_ratio: model.gate.drift_ratio.and(&tilt.admissible).cite("local-integrability"),
        ..model.gate.clone()
    };
    DiffusionModel {
        mu,
        sigma: model.sigma.clone(),
        x0: model.x0,
        interval: model.interval,
        gate,
    }
}

fn side_index(side: Side) -> usize {
    match side {
        Side::Left => 0,
        Side::Right => 1,
    }
}

/// One step of the scale profile from `xa` to `xb`.
struct Step {
    log_rho: f64,
    /// `log |s(xb) - s(xa)|`.
    log_ds: f64,
    /// Sign of `s(xb) - s(xa)`.
    sign: f64,
}

/// Carries `log rho` and `s` from `xa` to `xb`. `log rho` at the quadrature
/// nodes comes from the spectral integration matrix, so a step costs one
/// evaluation of the drift ratio per node.
fn advance(ratio: &Expr, xa: f64, lra: f64, xb: f64) -> Result<Step, EvalError> {
    let rule = quadrature::default_rule();
    let half = 0.5 * (xb - xa);
    let mid = 0.5 * (xa + xb);
    let d = rule
        .nodes
        .iter()
        .map(|t| ratio.eval(mid + half * t))
        .collect::<Result<Vec<f64>, _>>()?;
    let rel: Vec<f64> = rule.cumulate(&d, xa, xb).into_iter().map(|v| -v).collect();
    let total: f64 = rule.weights.iter().zip(&d).map(|(w, v)| w * v).sum();
    let log_rho = lra - half * total;
    let rel_b = log_rho - lra;
    let top = rel.iter().copied().fold(rel_b.max(0.0), f64::max);
    let bottom = rel.iter().copied().fold(rel_b.min(0.0), f64::min);
    let log_ds = if top - bottom <= STEEP_SPREAD {
        let scaled: f64 = rule.weights.iter().zip(&rel).map(|(w, r)| w * (r - top).exp()).sum();
        lra + top + (scaled * half.abs()).ln()
    } else {
        // The density varies over many e-folds within the step: integrate
        // the log-linear interpolant exactly instead.
        let mut ys = Vec::with_capacity(rel.len() + 2);
        ys.push((xa, 0.0));
        ys.extend(rule.nodes.iter().zip(&rel).map(|(t, &r)| (mid + half * t, r)));
        ys.push((xb, rel_b));
        let scaled: f64 = ys
            .windows(2)
            .map(|w| {
                let (y0, r0) = w[0];
                let (y1, r1) = w[1];
                let dy = (y1 - y0).abs();
                let (e0, e1) = ((r0 - top).exp(), (r1 - top).exp());
                if (r1 - r0).abs() < 1e-12 {
                    dy * e0
                } else {
                    dy * (e1 - e0) / (r1 - r0)
                }
            })
            .sum();
        lra + top + scaled.ln()
    };
    if !log_rho.is_finite() || log_ds.is_nan() || log_ds == f64::INFINITY {
        return Err(EvalError::Overflow {
            op: "scale density",
            x: xb,
        });
    }
    Ok(Step {
        log_rho,
        log_ds,
        sign: half.signum(),
    })
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `log rho` and `s` at the nodes of a geometric grid from the anchor toward
/// one endpoint.
#[derive(Debug, Clone)]
struct SideProfile {
    chart: Chart,
    anchor: f64,
    /// Distance to a finite endpoint from the anchor, or the unit of the
    /// geometric growth toward an infinite one.
    unit: f64,
    x: Vec<f64>,
    log_rho: Vec<f64>,
    s: Vec<f64>,
    /// `log |s(x_{k+1}) - s(x_k)|`, kept separately to avoid cancellation
    /// and underflow.
    log_ds: Vec<f64>,
    stop: Option<String>,
}

impl SideProfile {
    fn new(interval: &Interval, side: Side, anchor: f64, x0: f64) -> SideProfile {
        let chart = interval.chart(side);
        let unit = if chart.is_infinite() {
            if x0 != 0.0 {
                x0.abs()
            } else {
                1.0
            }
        } else {
            (anchor - interval.endpoint(side)).abs()
        };
        SideProfile {
            chart,
            anchor,
            unit,
            x: vec![anchor],
            log_rho: vec![0.0],
            s: vec![0.0],
            log_ds: Vec::new(),
            stop: None,
        }
    }

    fn octaves(k: usize) -> f64 {
        (k as f64 / STEPS_PER_OCTAVE as f64).exp2()
    }

    /// Power-law variable at node `k`: distance to a finite endpoint, or a
    /// shifted distance from the anchor growing like `|x|`.
    fn u(&self, k: usize) -> f64 {
        if self.chart.is_infinite() {
            self.unit * Self::octaves(k)
        } else {
            self.unit / Self::octaves(k)
        }
    }

    fn node(&self, k: usize) -> f64 {
        if k == 0 {
            return self.anchor;
        }
        match self.chart {
            Chart::Lower(_) | Chart::Upper(_) => self.chart.x(self.u(k)),
            Chart::PosInf => self.anchor + (self.u(k) - self.unit),
            Chart::NegInf => self.anchor - (self.u(k) - self.unit),
        }
    }

    fn grow(&mut self, ratio: &Expr, target: usize) {
        while self.x.len() < target && self.stop.is_none() {
            let k = self.x.len() - 1;
            let xa = self.x[k];
            let xb = self.node(k + 1);
            if xb == xa || !xb.is_finite() {
                self.stop = Some(format!("floating-point resolution reached at x = {xa}"));
                break;
            }
            match advance(ratio, xa, self.log_rho[k], xb) {
                Ok(st) => {
                    self.x.push(xb);
                    self.log_rho.push(st.log_rho);
                    self.s.push(self.s[k] + st.sign * st.log_ds.exp());
                    self.log_ds.push(st.log_ds);
                }
                Err(e) => self.stop = Some(e.to_string()),
            }
        }
    }

    fn increasing(&self) -> bool {
        matches!(self.chart, Chart::Upper(_) | Chart::PosInf)
    }

    /// Index `k` with `x` between nodes `k` and `k + 1`.
    fn locate(&self, x: f64) -> Option<usize> {
        let n = self.x.len();
        let idx = if self.increasing() {
            self.x.partition_point(|&v| v <= x)
        } else {
            self.x.partition_point(|&v| v >= x)
        };
        if idx == 0 {
            None
        } else if idx < n || self.x[n - 1] == x {
            Some((idx - 1).min(n - 1))
        } else {
            None
        }
    }

    fn between(x: f64, a: f64, b: f64) -> bool {
        (a <= x && x <= b) || (b <= x && x <= a)
    }
}

struct Profiles {
    ratio: Expr,
    anchor: f64,
    sides: [SideProfile; 2],
    deep: [OnceLock<SideProfile>; 2],
}

impl Profiles {
    fn deep(&self, i: usize) -> &SideProfile {
        self.deep[i].get_or_init(|| {
            let mut p = self.sides[i].clone();
            p.grow(&self.ratio, DEEP_OCTAVES * STEPS_PER_OCTAVE + 1);
            p
        })
    }

    /// `(log rho(x), s(x))`.
    fn eval(&self, x: f64) -> Result<(f64, f64), EvalError> {
        if x == self.anchor {
            return Ok((0.0, 0.0));
        }
        let i = if x < self.anchor { 0 } else { 1 };
        let mut p = &self.sides[i];
        if p.locate(x).is_none() {
            p = self.deep(i);
        }
        if let Some(k) = p.locate(x) {
            if x == p.x[k] {
                return Ok((p.log_rho[k], p.s[k]));
            }
            let st = advance(&self.ratio, p.x[k], p.log_rho[k], x)?;
            return Ok((st.log_rho, p.s[k] + st.sign * st.log_ds.exp()));
        }
        let mut k = p.x.len() - 1;
        let (mut xa, mut lra, mut sa) = (p.x[k], p.log_rho[k], p.s[k]);
        for _ in 0..EXTRA_STEPS {
            let xb = p.node(k + 1);
            if SideProfile::between(x, xa, xb) {
                let st = advance(&self.ratio, xa, lra, x)?;
                return Ok((st.log_rho, sa + st.sign * st.log_ds.exp()));
            }
            if xb == xa {
                break;
            }
            let st = advance(&self.ratio, xa, lra, xb)?;
            xa = xb;
            lra = st.log_rho;
            sa += st.sign * st.log_ds.exp();
            k += 1;
        }
        Err(EvalError::Overflow {
            op: "scale function",
            x,
        })
    }
}

/// Limit of `s` at an endpoint, relative to `s(anchor) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLimit {
    /// `+-inf` when the limit is infinite, NaN when undetermined.
    #[serde(with = "ext_real")]
    pub value: f64,
    pub finite: Verdict,
}

/// `rho = exp(-int_c^x 2 mu/sigma^2)` and `s = int_c^x rho` for an anchor
/// `c`, with the limits of `s` at both endpoints.
#[derive(Clone)]
pub struct ScaleData {
    profiles: Arc<Profiles>,
    interval: Interval,
    left: BoundaryLimit,
    right: BoundaryLimit,
}

impl fmt::Debug for ScaleData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScaleData")
            .field("anchor", &self.profiles.anchor)
            .field("interval", &self.interval)
            .field("s_at_left", &self.left)
            .field("s_at_right", &self.right)
            .finish()
    }
}

impl ScaleData {
    fn build(
        model: &DiffusionModel,
        anchor: f64,
        settings: NumericSettings,
        leading: [Option<LeadingOrder>; 2],
    ) -> Result<ScaleData, ModelError> {
        if !model.interval.contains(anchor) {
            return Err(ModelError::NotInInterval {
                what: "anchor",
                value: anchor,
                interval: model.interval,
            });
        }
        let ratio = model.drift_ratio();
        let mut sides = [Side::Left, Side::Right].map(|side| SideProfile::new(&model.interval, side, anchor, model.x0));
        for p in &mut sides {
            p.grow(&ratio, NODES_PER_SIDE);
        }
        let profiles = Arc::new(Profiles {
            ratio,
            anchor,
            sides,
            deep: [OnceLock::new(), OnceLock::new()],
        });
        let [lead_l, lead_r] = leading;
        let limit = |side: Side, leading: Option<LeadingOrder>| {
            let (finite, value) =
                improper_integral_finite(&rho_spec(&profiles, model.interval, side, settings, leading));
            let sign = if side == Side::Left { -1.0 } else { 1.0 };
            let value = if finite.is_fails() {
                sign * f64::INFINITY
            } else if finite.is_holds() {
                value.map_or(f64::NAN, |v| sign * v)
            } else {
                f64::NAN
            };
            BoundaryLimit {
                value,
                finite: finite.cite("scale-finite"),
            }
        };
        let left = limit(Side::Left, lead_l);
        let right = limit(Side::Right, lead_r);
        Ok(ScaleData {
            interval: model.interval,
            profiles,
            left,
            right,
        })
    }

    pub fn anchor(&self) -> f64 {
        self.profiles.anchor
    }

    pub fn interval(&self) -> &Interval {
        &self.interval
    }

    pub fn log_rho(&self, x: f64) -> Result<f64, EvalError> {
        self.check(x)?;
        Ok(self.profiles.eval(x)?.0)
    }

    pub fn rho(&self, x: f64) -> Result<f64, EvalError> {
        let lr = self.log_rho(x)?;
        if lr > LOG_OVERFLOW {
            return Err(EvalError::Overflow { op: "scale density", x });
        }
        Ok(lr.exp())
    }

    pub fn s(&self, x: f64) -> Result<f64, EvalError> {
        self.check(x)?;
        Ok(self.profiles.eval(x)?.1)
    }

    fn check(&self, x: f64) -> Result<(), EvalError> {
        if self.interval.contains(x) {
            Ok(())
        } else {
            Err(EvalError::Domain {
                op: "scale function",
                x,
                arg: x,
            })
        }
    }

    pub fn s_at(&self, side: Side) -> &BoundaryLimit {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    /// Cached grid nodes `(x, rho, s)` from the anchor toward `side`.
    pub fn nodes(&self, side: Side) -> Vec<(f64, f64, f64)> {
        let p = &self.profiles.sides[side_index(side)];
        (0..p.x.len()).map(|k| (p.x[k], p.log_rho[k].exp(), p.s[k])).collect()
    }
}

fn rho_spec(
    profiles: &Arc<Profiles>,
    interval: Interval,
    side: Side,
    settings: NumericSettings,
    leading: Option<LeadingOrder>,
) -> IntegrandSpec {
    let p = profiles.clone();
    IntegrandSpec::from_fn(
        Arc::new(move |x| {
            let lr = p.eval(x)?.0;
            if lr > LOG_OVERFLOW {
                return Err(EvalError::Overflow { op: "scale density", x });
            }
            Ok(lr.exp())
        }),
        interval,
        side,
        profiles.anchor,
    )
    .with_leading(leading)
    .with_settings(settings)
    .with_label("rho")
}

/// [`ScaleData`] anchored at `anchor`, with default numeric settings.
pub fn build_scale(model: &DiffusionModel, anchor: f64) -> Result<ScaleData, ModelError> {
    let leading = [Side::Left, Side::Right].map(|side| {
        let chart = model.interval.chart(side);
        symbolic_side(model, side).and_then(|s| LeadingOrder::from_germ(&s.rho, chart))
    });
    ScaleData::build(model, anchor, NumericSettings::default(), leading)
}

/// Germs of `rho`, of the tail `|s(e) - s|` and of `sigma^2` in the chart of
/// one endpoint. Germs of `rho` and the tail carry an unknown positive
/// factor, which cancels in every ratio used below.
#[derive(Debug, Clone)]
struct SymbolicSide {
    chart: Chart,
    rho: Germ,
    /// Present exactly when `s` has a finite limit at the endpoint.
    tail: Option<Germ>,
    sigma2: Germ,
}

/// `dx/dt` with its sign.
fn signed_jacobian(chart: Chart) -> Germ {
    match chart {
        Chart::Lower(_) => Germ::constant(1.0),
        Chart::Upper(_) => Germ::constant(-1.0),
        Chart::PosInf => Germ::term(-1.0, Mono::power(-2.0)),
        Chart::NegInf => Germ::term(1.0, Mono::power(-2.0)),
    }
}

fn symbolic_side(model: &DiffusionModel, side: Side) -> Option<SymbolicSide> {
    let chart = model.interval.chart(side);
    let ratio = germ_of(&model.drift_ratio(), chart)?;
    let (a, _) = ratio.mul(&signed_jacobian(chart))?.antiderivative()?;
    let mut rho = a.neg().exp()?;
    rho.kpow = 1.0;
    let (tail, convergent) = rho.mul(&Germ::chart_jacobian(chart))?.antiderivative()?;
    let sigma = germ_of(&model.sigma, chart)?;
    let sigma2 = sigma.mul(&sigma)?;
    Some(SymbolicSide {
        chart,
        rho,
        tail: convergent.then_some(tail),
        sigma2,
    })
}

/// Integrability near the endpoint of `tail * weight / (rho sigma^2)`.
fn symbolic_clause(sym: &SymbolicSide, weight: Option<&Germ>) -> Option<(bool, String)> {
    let mut num = sym.tail.clone()?;
    if let Some(w) = weight {
        num = num.mul(w)?;
    }
    if num.is_zero() {
        return Some((true, "vanishes identically".into()));
    }
    let f = num.div(&sym.rho.mul(&sym.sigma2)?)?;
    let ok = f.mul(&Germ::chart_jacobian(sym.chart))?.integrable()?;
    let desc = LeadingOrder::from_germ(&f, sym.chart)
        .map(|lo| lo.describe(sym.chart))
        .unwrap_or_else(|| "an unresolved germ".into());
    Some((ok, format!("~ {desc}")))
}

/// `log int |f| du` over `[ua, ub]` for `f` interpolated as a power of `u`
/// between the endpoint values `exp(la)` and `exp(lb)`.
fn log_power_piece(ua: f64, ub: f64, la: f64, lb: f64) -> f64 {
    if la == f64::NEG_INFINITY || lb == f64::NEG_INFINITY {
        return log_add(la, lb) + (0.5 * (ub - ua).abs()).ln();
    }
    let l = (ub / ua).ln();
    let e1 = (lb - la) / l + 1.0;
    let v = if (e1 * l).abs() < 1e-8 {
        l * (1.0 + 0.5 * e1 * l)
    } else {
        (e1 * l).exp_m1() / e1
    };
    la + ua.ln() + v.abs().ln()
}

/// `log sum exp` of a slice.
fn log_sum(v: &[f64]) -> f64 {
    v.iter().fold(f64::NEG_INFINITY, |acc, &x| log_add(acc, x))
}

/// Numeric integrability of `|s(e) - s| * weight^2 / (rho sigma^2)` toward
/// the endpoint, from the extended profile. Everything stays in log space,
/// so densities far below the floating-point range are handled.
fn numeric_clause(
    profiles: &Profiles,
    interval: &Interval,
    side: Side,
    sigma: &Expr,
    weight: Option<&Expr>,
    settings: NumericSettings,
    label: &str,
) -> Verdict {
    let place = format!("{label} near {}", fmt_endpoint(interval.endpoint(side)));
    let unknown = |why: String| Verdict::unknown(Method::Numeric, format!("{place}: {why}"));
    let p = profiles.deep(side_index(side));
    let n = p.x.len();
    if n < 8 * STEPS_PER_OCTAVE + 1 {
        let why = p.stop.clone().unwrap_or_default();
        return unknown(format!("scale profile stopped early ({why})"));
    }
    // Remainder of s beyond the deepest node, from the last octave ratio.
    let groups: Vec<f64> = p.log_ds.chunks_exact(STEPS_PER_OCTAVE).map(log_sum).collect();
    let m = groups.len();
    let log_r = groups[m - 1] - groups[m - 2];
    if !(log_r < 0.0) || !(groups[m - 2] - groups[m - 3] < 0.0) {
        return unknown("tail of s does not settle".into());
    }
    let r = log_r.exp();
    let mut log_tail = vec![groups[m - 1] + (r / (1.0 - r)).ln(); n];
    for k in (0..n - 1).rev() {
        log_tail[k] = log_add(log_tail[k + 1], p.log_ds[k]);
    }
    let mut log_f = Vec::with_capacity(n);
    for k in 0..n {
        let x = p.x[k];
        let sg = match sigma.eval(x) {
            Ok(v) => v,
            Err(e) => return unknown(e.to_string()),
        };
        let lw = match weight {
            Some(b) => match b.eval(x) {
                Ok(v) => 2.0 * v.abs().ln(),
                Err(e) => return unknown(e.to_string()),
            },
            None => 0.0,
        };
        log_f.push(log_tail[k] + lw - p.log_rho[k] - 2.0 * sg.abs().ln());
    }
    let mut acc = TailAccumulator::new(settings);
    let mut reference = None;
    for chunk in (0..n - 1).collect::<Vec<_>>().chunks_exact(STEPS_PER_OCTAVE) {
        let pieces: Vec<f64> = chunk
            .iter()
            .map(|&k| log_power_piece(p.u(k), p.u(k + 1), log_f[k], log_f[k + 1]))
            .collect();
        let g = log_sum(&pieces);
        let base = *reference.get_or_insert(if g.is_finite() { g } else { 0.0 });
        let inc = (g - base).exp();
        if inc.is_nan() || inc == f64::INFINITY {
            return Verdict::fails(
                Method::Numeric,
                format!("{place}: integrand overflows toward the endpoint"),
            );
        }
        match acc.push(inc) {
            Some(TailDecision::Converged { note, .. }) => {
                return Verdict::holds(Method::Numeric, format!("{place}: {note}"))
            }
            Some(TailDecision::Diverged { note }) => {
                return Verdict::fails(Method::Numeric, format!("{place}: {note}"))
            }
            None => {}
        }
    }
    unknown(acc.undecided_note())
}

/// Options shared by the endpoint tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleOptions {
    /// Anchor of `rho` and `s`; `x0` when absent.
    pub anchor: Option<f64>,
    pub settings: NumericSettings,
    /// Whether the germ-based path may be used.
    pub symbolic: bool,
}

impl Default for ScaleOptions {
    fn default() -> Self {
        ScaleOptions {
            anchor: None,
            settings: NumericSettings::default(),
            symbolic: true,
        }
    }
}

struct ScaleInner {
    model: DiffusionModel,
    anchor: f64,
    settings: NumericSettings,
    symbolic: [Option<SymbolicSide>; 2],
    data: OnceLock<ScaleData>,
    s_finite: [OnceLock<Verdict>; 2],
    explodes: [OnceLock<Verdict>; 2],
}

/// Endpoint analysis of one diffusion. Results are computed on demand and
/// cached; numeric data is built only when a symbolic test is unavailable.
#[derive(Clone)]
pub struct Scale {
    inner: Arc<ScaleInner>,
}

impl fmt::Debug for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scale")
            .field("model", &self.inner.model.to_string())
            .field("anchor", &self.inner.anchor)
            .finish()
    }
}

impl Scale {
    pub fn new(model: &DiffusionModel, opts: &ScaleOptions) -> Result<Scale, ModelError> {
        let anchor = opts.anchor.unwrap_or(model.x0);
        if !model.interval.contains(anchor) {
            return Err(ModelError::NotInInterval {
                what: "anchor",
                value: anchor,
                interval: model.interval,
            });
        }
        let symbolic = if opts.symbolic {
            [symbolic_side(model, Side::Left), symbolic_side(model, Side::Right)]
        } else {
            [None, None]
        };
        Ok(Scale {
            inner: Arc::new(ScaleInner {
                model: model.clone(),
                anchor,
                settings: opts.settings,
                symbolic,
                data: OnceLock::new(),
                s_finite: [OnceLock::new(), OnceLock::new()],
                explodes: [OnceLock::new(), OnceLock::new()],
            }),
        })
    }

    pub fn model(&self) -> &DiffusionModel {
        &self.inner.model
    }

    pub fn anchor(&self) -> f64 {
        self.inner.anchor
    }

    fn leading(&self, side: Side) -> Option<LeadingOrder> {
        let sym = self.inner.symbolic[side_index(side)].as_ref()?;
        LeadingOrder::from_germ(&sym.rho, sym.chart)
    }

    /// Numeric profile of `rho` and `s`, built on first use.
    pub fn data(&self) -> &ScaleData {
        self.inner.data.get_or_init(|| {
            let i = &self.inner;
            ScaleData::build(
                &i.model,
                i.anchor,
                i.settings,
                [self.leading(Side::Left), self.leading(Side::Right)],
            )
            .expect("anchor validated on construction")
        })
    }

    fn endpoint(&self, side: Side) -> String {
        fmt_endpoint(self.inner.model.interval.endpoint(side))
    }

    /// Whether `s` has a finite limit at the endpoint.
    pub fn s_finite(&self, side: Side) -> Verdict {
        self.inner.s_finite[side_index(side)]
            .get_or_init(|| match self.leading(side) {
                Some(lo) => {
                    let inner = self.inner.clone();
                    let spec = IntegrandSpec::from_fn(
                        Arc::new(move |x| Scale { inner: inner.clone() }.data().rho(x)),
                        self.inner.model.interval,
                        side,
                        self.inner.anchor,
                    )
                    .with_leading(Some(lo))
                    .with_settings(self.inner.settings)
                    .with_label("rho");
                    loc_integrable_at_boundary(&spec).cite("scale-finite")
                }
                None => self.data().s_at(side).finite.clone(),
            })
            .clone()
    }

    /// Integrability near the endpoint of `|s(e) - s| b^2 / (rho sigma^2)`,
    /// or of `|s(e) - s| / (rho sigma^2)` without a weight. Meaningful only
    /// when `s(e)` is finite.
    pub fn tail_clause(&self, side: Side, weight: Option<&Expr>) -> Verdict {
        let label = match weight {
            Some(_) => "(s(e) - s) b^2/(rho sigma^2)",
            None => "(s(e) - s)/(rho sigma^2)",
        };
        let chart = self.inner.model.interval.chart(side);
        if let Some(sym) = &self.inner.symbolic[side_index(side)] {
            if sym.tail.is_none() {
                return Verdict::symbolic(false, format!("s is infinite at {}", self.endpoint(side)));
            }
            let w = match weight {
                Some(b) if b.is_zero_literal() => Some(Some(Germ::zero())),
                Some(b) => germ_of(b, chart).and_then(|g| g.mul(&g)).map(Some),
                None => Some(None),
            };
            if let Some(w) = w {
                if let Some((ok, desc)) = symbolic_clause(sym, w.as_ref()) {
                    let rel = if ok { "integrable" } else { "not integrable" };
                    return Verdict::symbolic(ok, format!("{label} near {}: {desc}, {rel}", self.endpoint(side)));
                }
            }
        }
        let data = self.data();
        numeric_clause(
            &data.profiles,
            &data.interval,
            side,
            &self.inner.model.sigma,
            weight,
            self.inner.settings,
            label,
        )
    }

    /// Feller's test: the diffusion reaches the endpoint in finite time with
    /// positive probability.
    pub fn explodes(&self, side: Side) -> Verdict {
        self.inner.explodes[side_index(side)]
            .get_or_init(|| {
                let s = self.s_finite(side);
                let v = if s.is_fails() {
                    s.clone()
                } else {
                    s.and(&self.tail_clause(side, None))
                };
                v.cite("feller-explosion")
            })
            .clone()
    }

    /// `s(e)` finite and the `b`-weighted tail clause.
    pub fn good(&self, side: Side, b: &Expr) -> Verdict {
        let s = self.s_finite(side);
        if s.is_fails() {
            return s;
        }
        s.and(&self.tail_clause(side, Some(b)))
    }
}

/// Which pair of scale functions the good-endpoint test uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    /// `rho`, `s` of the diffusion itself.
    Direct,
    /// `rho~`, `s~` of the auxiliary diffusion with drift `mu + b sigma`.
    Auxiliary,
}

/// Endpoint conclusions for one diffusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub endpoint: Side,
    #[serde(with = "ext_real")]
    pub point: f64,
    pub s_finite: Verdict,
    pub explodes: Verdict,
    pub good: Verdict,
    pub details: Vec<String>,
}

/// A diffusion together with a tilt and the auxiliary diffusion.
#[derive(Debug, Clone)]
pub struct TiltedModel {
    tilt: TiltSpec,
    y: Scale,
    aux: Scale,
    good: [[OnceLock<Verdict>; 2]; 2],
}

impl TiltedModel {
    pub fn new(model: &DiffusionModel, tilt: &TiltSpec, opts: &ScaleOptions) -> Result<TiltedModel, ModelError> {
        let aux_model = auxiliary_model(model, tilt);
        Ok(TiltedModel {
            tilt: tilt.clone(),
            y: Scale::new(model, opts)?,
            aux: Scale::new(&aux_model, opts)?,
            good: Default::default(),
        })
    }

    pub fn model(&self) -> &DiffusionModel {
        self.y.model()
    }

    pub fn auxiliary(&self) -> &DiffusionModel {
        self.aux.model()
    }

    pub fn tilt(&self) -> &TiltSpec {
        &self.tilt
    }

    pub fn scale(&self) -> &Scale {
        &self.y
    }

    pub fn auxiliary_scale(&self) -> &Scale {
        &self.aux
    }

    /// The auxiliary form when its drift is no more complex than the
    /// original one.
    pub fn preferred_form(&self) -> Form {
        if self.auxiliary().mu().node_count() <= self.model().mu().node_count() {
            Form::Auxiliary
        } else {
            Form::Direct
        }
    }

    pub fn good_in(&self, side: Side, form: Form) -> Verdict {
        let i = match form {
            Form::Direct => 0,
            Form::Auxiliary => 1,
        };
        self.good[i][side_index(side)]
            .get_or_init(|| match form {
                Form::Direct => self.y.good(side, &self.tilt.b).cite("good-endpoint"),
                Form::Auxiliary => self.aux.good(side, &self.tilt.b).cite("good-endpoint-auxiliary"),
            })
            .clone()
    }

    /// Goodness of the endpoint: the preferred form, then the other form,
    /// then the bad-endpoint shortcut.
    pub fn good(&self, side: Side) -> Verdict {
        let first = self.preferred_form();
        let v = self.good_in(side, first);
        if !v.is_unknown() {
            return v;
        }
        let other = match first {
            Form::Direct => Form::Auxiliary,
            Form::Auxiliary => Form::Direct,
        };
        let w = self.good_in(side, other);
        if !w.is_unknown() {
            return w;
        }
        let bad = self.bad_shortcut(side);
        if bad.is_holds() {
            return bad.negate().cite("bad-endpoint-shortcut");
        }
        v
    }

    /// Holds (the endpoint is bad) when exactly one of the diffusion and the
    /// auxiliary diffusion explodes there; Unknown otherwise.
    pub fn bad_shortcut(&self, side: Side) -> Verdict {
        let y = self.y.explodes(side);
        let a = self.aux.explodes(side);
        let method = if y.method == Method::Numeric || a.method == Method::Numeric {
            Method::Numeric
        } else {
            Method::Symbolic
        };
        let v = match (y.value.as_bool(), a.value.as_bool()) {
            (Some(p), Some(q)) if p != q => {
                let who = if p {
                    "Y explodes, Y~ does not"
                } else {
                    "Y~ explodes, Y does not"
                };
                Verdict::holds(method, who)
            }
            (Some(_), Some(_)) => Verdict::unknown(method, "Y and Y~ agree; shortcut is silent"),
            _ => Verdict::unknown(method, "an explosion test is undecided"),
        };
        v.cite("bad-endpoint-shortcut")
    }

    /// Report for the diffusion itself, with goodness in the direct form.
    pub fn report(&self, side: Side) -> BoundaryReport {
        self.make_report(&self.y, side, Form::Direct)
    }

    /// Report for the auxiliary diffusion, with goodness in the auxiliary
    /// form.
    pub fn auxiliary_report(&self, side: Side) -> BoundaryReport {
        self.make_report(&self.aux, side, Form::Auxiliary)
    }

    fn make_report(&self, scale: &Scale, side: Side, form: Form) -> BoundaryReport {
        let s_finite = scale.s_finite(side);
        let explodes = scale.explodes(side);
        let good = self.good_in(side, form);
        let mut details = Vec::new();
        for (what, v) in [("s finite", &s_finite), ("explodes", &explodes), ("good", &good)] {
            if !v.note.is_empty() {
                details.push(format!("{what}: {}", v.note));
            }
        }
        let bad = self.bad_shortcut(side);
        if bad.is_holds() {
            details.push(format!("bad by shortcut: {}", bad.note));
        }
        BoundaryReport {
            endpoint: side,
            point: scale.model().interval.endpoint(side),
            s_finite,
            explodes,
            good,
            details,
        }
    }
}

/// Feller's explosion test at one endpoint, anchored at `x0`.
pub fn feller_explodes(model: &DiffusionModel, side: Side) -> Verdict {
    feller_explodes_with(model, side, &ScaleOptions::default())
}

pub fn feller_explodes_with(model: &DiffusionModel, side: Side, opts: &ScaleOptions) -> Verdict {
    match Scale::new(model, opts) {
        Ok(s) => s.explodes(side),
        Err(e) => Verdict::unknown(Method::Numeric, e.to_string()),
    }
}

/// Whether the endpoint is good for the tilt, in the requested form.
pub fn endpoint_good(model: &DiffusionModel, tilt: &TiltSpec, side: Side, form: Form) -> Verdict {
    endpoint_good_with(model, tilt, side, form, &ScaleOptions::default())
}

pub fn endpoint_good_with(
    model: &DiffusionModel,
    tilt: &TiltSpec,
    side: Side,
    form: Form,
    opts: &ScaleOptions,
) -> Verdict {
    match TiltedModel::new(model, tilt, opts) {
        Ok(t) => t.good_in(side, form),
        Err(e) => Verdict::unknown(Method::Numeric, e.to_string()),
    }
}

/// Holds when the endpoint is bad because exactly one of the diffusion and
/// its auxiliary diffusion explodes there.
pub fn endpoint_bad_shortcut(model: &DiffusionModel, tilt: &TiltSpec, side: Side) -> Verdict {
    match TiltedModel::new(model, tilt, &ScaleOptions::default()) {
        Ok(t) => t.bad_shortcut(side),
        Err(e) => Verdict::unknown(Method::Numeric, e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
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

    fn numeric() -> ScaleOptions {
        ScaleOptions {
            symbolic: false,
            ..Default::default()
        }
    }

    #[test]
    fn gate_rejects_vanishing_sigma() {
        let r = DiffusionModel::new(
            Expr::zero(),
            parse("x - 2").unwrap(),
            1.0,
            Interval::positive_half_line(),
        );
        assert!(matches!(r, Err(ModelError::Gate { .. })), "{r:?}");
        let r = DiffusionModel::new(Expr::zero(), Expr::x(), 5.0, Interval::new(0.0, 1.0).unwrap());
        assert!(matches!(r, Err(ModelError::NotInInterval { .. })));
    }

    #[test]
    fn zero_drift_gives_unit_density() {
        let m = model("0", "x");
        let d = build_scale(&m, 1.0).unwrap();
        for x in [1e-6, 0.3, 1.0, 7.0, 1e5, 1e10] {
            assert!((d.rho(x).unwrap() - 1.0).abs() < 1e-12, "rho({x})");
            assert!((d.s(x).unwrap() - (x - 1.0)).abs() < 1e-9 * x.max(1.0), "s({x})");
        }
        assert!(d.s_at(Side::Left).finite.is_holds());
        assert!((d.s_at(Side::Left).value + 1.0).abs() < 1e-9);
        assert!(d.s_at(Side::Right).finite.is_fails());
        assert_eq!(d.s_at(Side::Right).value, f64::INFINITY);
    }

    #[test]
    fn gbm_density_matches_closed_form() {
        let (mu0, s0, c) = (0.3, 0.5, 2.0);
        let m = DiffusionModel::new(
            parse(&format!("{mu0}*x")).unwrap(),
            parse(&format!("{s0}*x")).unwrap(),
            2.0,
            Interval::positive_half_line(),
        )
        .unwrap();
        let d = build_scale(&m, c).unwrap();
        let k = -2.0 * mu0 / (s0 * s0);
        for x in [1e-7, 0.01, 0.5, 2.0, 3.3, 1e4, 1e8] {
            let want: f64 = (x / c).powf(k);
            let got = d.rho(x).unwrap();
            assert!((got / want - 1.0).abs() < 1e-10, "rho({x}) = {got}, want {want}");
        }
        // s(x) = c/(k+1) ((x/c)^(k+1) - 1), k + 1 = -1.4
        let s = |x: f64| c / (k + 1.0) * ((x / c).powf(k + 1.0) - 1.0);
        for x in [0.1, 1.0, 5.0, 100.0] {
            assert!((d.s(x).unwrap() - s(x)).abs() < 1e-9 * s(x).abs().max(1.0), "s({x})");
        }
        assert!(d.s_at(Side::Left).finite.is_fails());
        assert!(d.s_at(Side::Right).finite.is_holds());
        assert!((d.s_at(Side::Right).value - c / 1.4).abs() < 1e-6);
    }

    #[test]
    fn relative_arbitrage_auxiliary_scale() {
        // Bessel-3 market: sigma = 1, mu = 1/x; auxiliary drift sigma^2/x.
        let m = DiffusionModel::new(
            parse("1/x").unwrap(),
            Expr::num(1.0),
            2.0,
            Interval::positive_half_line(),
        )
        .unwrap();
        let tilt = TiltSpec::relative_arbitrage(&m).unwrap();
        let aux = auxiliary_model(&m, &tilt);
        assert_eq!(aux.mu().eval(3.0).unwrap(), 1.0 / 3.0);
        let c = 2.0;
        let d = build_scale(&aux, c).unwrap();
        for x in [1e-3, 0.5, 2.0, 40.0] {
            assert!((d.rho(x).unwrap() - c * c / (x * x)).abs() < 1e-10 * c * c / (x * x));
            assert!((d.s(x).unwrap() - (c - c * c / x)).abs() < 1e-9 * (c * c / x).max(1.0));
        }
        assert!(d.s_at(Side::Left).finite.is_fails());
        assert!(!feller_explodes(&aux, Side::Left).is_holds());
    }

    #[test]
    fn market_tilt_gives_driftless_auxiliary() {
        let m = model("0.7*x^2", "0.4*x^1.5");
        let tilt = TiltSpec::market(&m).unwrap();
        assert!(auxiliary_model(&m, &tilt).mu().is_zero_literal());
        assert!((tilt.b.eval(2.0).unwrap() + 0.7 / 0.4 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn driftless_linear_volatility_does_not_explode_at_zero() {
        let m = model("0", "x");
        let v = feller_explodes(&m, Side::Left);
        assert!(v.is_fails() && v.method == Method::Symbolic, "{v}");
        let v = feller_explodes_with(&m, Side::Left, &numeric());
        assert!(!v.is_holds(), "{v}");
    }

    #[test]
    fn bessel_three_and_brownian_motion() {
        // Driftless BM on (0, inf) reaches 0; Bessel-3 does not.
        let bm = model("0", "1");
        assert!(feller_explodes(&bm, Side::Left).is_holds());
        assert!(feller_explodes(&bm, Side::Right).is_fails());
        let b3 = model("1/x", "1");
        assert!(feller_explodes(&b3, Side::Left).is_fails());
        for opts in [ScaleOptions::default(), numeric()] {
            let v = feller_explodes_with(&bm, Side::Left, &opts);
            assert!(v.is_holds(), "{v}");
        }
    }

    #[test]
    fn cev_explosion_at_infinity() {
        // alpha = 2, beta = 3/2: explodes at inf iff 2 mu0 > sigma0^2.
        let up = model("1*x^2", "1*x^1.5");
        let down = model("0.2*x^2", "1*x^1.5");
        assert!(feller_explodes(&up, Side::Right).is_holds());
        assert!(feller_explodes(&down, Side::Right).is_fails());
        assert!(feller_explodes_with(&up, Side::Right, &numeric()).is_holds());
        assert!(!feller_explodes_with(&down, Side::Right, &numeric()).is_holds());
        // Super-linear drift with linear noise: s(inf) finite, explosion.
        let strong = model("x^3", "x");
        assert!(feller_explodes(&strong, Side::Right).is_holds());
    }

    #[test]
    fn anchor_does_not_change_verdicts() {
        let m = model("0.5*x^0.5", "0.8*x^0.75");
        let tilt = TiltSpec::market(&m).unwrap();
        let base = TiltedModel::new(&m, &tilt, &ScaleOptions::default()).unwrap();
        for c in [0.5, 2.0] {
            let opts = ScaleOptions {
                anchor: Some(c),
                ..Default::default()
            };
            let t = TiltedModel::new(&m, &tilt, &opts).unwrap();
            for side in [Side::Left, Side::Right] {
                assert_eq!(t.scale().explodes(side).value, base.scale().explodes(side).value);
                assert_eq!(t.good(side).value, base.good(side).value);
            }
        }
    }

    #[test]
    fn forms_agree_on_cev_zero() {
        // alpha + 1 > 2 beta: zero is good.
        let m = model("0.5*x^0.5", "0.8*x^0.5");
        let tilt = TiltSpec::market(&m).unwrap();
        let t = TiltedModel::new(&m, &tilt, &ScaleOptions::default()).unwrap();
        assert_eq!(t.good_in(Side::Left, Form::Direct).value, Truth::Holds);
        assert_eq!(t.good_in(Side::Left, Form::Auxiliary).value, Truth::Holds);
        assert_eq!(t.good(Side::Right).value, Truth::Fails);
    }

    #[test]
    fn null_tilt_is_good_where_s_is_finite() {
        let m = model("1/x", "1");
        let tilt = TiltSpec::custom(&m, Expr::zero()).unwrap();
        assert!(endpoint_good(&m, &tilt, Side::Right, Form::Direct).is_holds());
        assert!(endpoint_good(&m, &tilt, Side::Left, Form::Direct).is_fails());
    }

    #[test]
    fn shortcut_flags_one_sided_explosion() {
        let m = model("1*x^2", "1*x");
        let tilt = TiltSpec::market(&m).unwrap();
        assert!(endpoint_bad_shortcut(&m, &tilt, Side::Right).is_holds());
        let quiet = model("0", "x");
        let tilt = TiltSpec::market(&quiet).unwrap();
        assert!(endpoint_bad_shortcut(&quiet, &tilt, Side::Right).is_unknown());
    }

    #[test]
    fn reports_respect_implications() {
        for (mu, sigma) in [("1/x", "1"), ("x", "x^2"), ("0.3*x^2", "x"), ("2", "2*sqrt(x)")] {
            let m = model(mu, sigma);
            let tilt = TiltSpec::market(&m).unwrap();
            let t = TiltedModel::new(&m, &tilt, &ScaleOptions::default()).unwrap();
            for side in [Side::Left, Side::Right] {
                for r in [t.report(side), t.auxiliary_report(side)] {
                    if r.good.is_holds() || r.explodes.is_holds() {
                        assert!(r.s_finite.is_holds(), "{mu}, {sigma}: {r:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn model_json_round_trip_revalidates() {
        let m = model("0.1*x", "0.2*x");
        let s = serde_json::to_string(&m).unwrap();
        let back: DiffusionModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let bad = s.replace("\"x0\":1.0", "\"x0\":-1.0");
        assert!(serde_json::from_str::<DiffusionModel>(&bad).is_err());
    }

    #[test]
    fn numeric_fallback_never_contradicts_symbolic_path() {
        for a in [0.0, 1.0, 2.0] {
            for b in [0.25, 0.75, 1.5] {
                for mu0 in [-0.5, 1.0] {
                    let m = model(&format!("{mu0}*x^{a}"), &format!("x^{b}"));
                    let tilt = TiltSpec::market(&m).unwrap();
                    let sy = TiltedModel::new(&m, &tilt, &ScaleOptions::default()).unwrap();
                    let nu = TiltedModel::new(&m, &tilt, &numeric()).unwrap();
                    for side in [Side::Left, Side::Right] {
                        let pairs = [
                            (sy.scale().explodes(side), nu.scale().explodes(side)),
                            (sy.good_in(side, Form::Direct), nu.good_in(side, Form::Direct)),
                            (sy.good_in(side, Form::Auxiliary), nu.good_in(side, Form::Auxiliary)),
                        ];
                        for (x, y) in pairs {
                            assert!(x.value.is_known(), "{a} {b} {mu0} {side}: {x}");
                            assert!(
                                y.is_unknown() || y.value == x.value,
                                "alpha {a}, beta {b}, mu0 {mu0}, {side}: {x} vs {y}"
                            );
                        }
                    }
                }
            }
        }
    }
}
