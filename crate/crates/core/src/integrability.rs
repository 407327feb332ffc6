//! Local integrability near an endpoint, on compact subsets of the state
//! space, and finiteness of improper integrals.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::expr::germ::{germ_of, Germ, Mono};
use crate::expr::{leading_order_at, Asymptotics, Confidence, EvalError, Expr, Func, LeadingOrder};
use crate::interval::{Chart, Interval, Side};
use crate::quadrature;
use crate::verdict::{Method, Verdict};

pub type Integrand = Arc<dyn Fn(f64) -> Result<f64, EvalError> + Send + Sync>;

/// Stopping rules of the numeric tail test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericSettings {
    /// Relative size of the estimated remaining tail at which the integral
    /// counts as converged.
    pub cauchy_tol: f64,
    /// Partial sums beyond this multiple of the first increment, with
    /// non-decreasing increments, count as divergent.
    pub divergence_cap: f64,
    pub max_levels: usize,
}

impl Default for NumericSettings {
    fn default() -> Self {
        NumericSettings {
            cauchy_tol: 1e-9,
            divergence_cap: 1e12,
            max_levels: 60,
        }
    }
}

/// Ratio stability required before a geometric regime is trusted.
const RATIO_AGREEMENT: f64 = 1e-6;
/// Number of consecutive agreeing ratios for the geometric rules.
const RATIO_RUN: usize = 8;
/// Geometric ratios within this log2-distance of 1 stay undecided; this is
/// the `|p + 1| < 0.015` dead zone around the critical power.
const DEAD_ZONE_LOG2: f64 = 0.015;
/// Consecutive non-decreasing increments taken as a logarithmic divergence.
const PLATEAU_RUN: usize = 24;
/// Ratio below one still counted as non-decreasing, for quadrature noise.
const PLATEAU_SLACK: f64 = 1e-9;

/// An integrand near one endpoint of `interval`, integrated over
/// `(from, endpoint)` or `(endpoint, from)`.
#[derive(Clone)]
pub struct IntegrandSpec {
    pub function: Integrand,
    pub interval: Interval,
    pub boundary: Side,
    /// Interior starting point of the tail.
    pub from: f64,
    pub known_asymptotics: Option<Asymptotics>,
    /// Symbolic leading order, when available.
    pub leading: Option<LeadingOrder>,
    pub settings: NumericSettings,
    pub label: String,
}

impl fmt::Debug for IntegrandSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IntegrandSpec")
            .field("label", &self.label)
            .field("interval", &self.interval)
            .field("boundary", &self.boundary)
            .field("from", &self.from)
            .field("known_asymptotics", &self.known_asymptotics)
            .field("leading", &self.leading)
            .finish()
    }
}

impl IntegrandSpec {
    pub fn from_fn(function: Integrand, interval: Interval, boundary: Side, from: f64) -> IntegrandSpec {
        IntegrandSpec {
            function,
            interval,
            boundary,
            from,
            known_asymptotics: None,
            leading: None,
            settings: NumericSettings::default(),
            label: String::new(),
        }
    }

    /// Builds the spec of `|e|`, attaching its symbolic leading order.
    pub fn from_expr(e: &Expr, interval: Interval, boundary: Side, from: f64) -> IntegrandSpec {
        let owned = e.clone();
        let mut spec = IntegrandSpec::from_fn(Arc::new(move |x| owned.eval(x)), interval, boundary, from);
        spec.leading = leading_order_at(e, &interval, boundary);
        spec.label = e.to_string();
        spec
    }

    pub fn with_asymptotics(mut self, a: Asymptotics) -> Self {
        self.known_asymptotics = Some(a);
        self
    }

    pub fn with_leading(mut self, lo: Option<LeadingOrder>) -> Self {
        self.leading = lo;
        self
    }

    pub fn with_settings(mut self, s: NumericSettings) -> Self {
        self.settings = s;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    fn chart(&self) -> Chart {
        self.interval.chart(self.boundary)
    }

    fn where_(&self) -> String {
        let e = crate::interval::fmt_endpoint(self.interval.endpoint(self.boundary));
        if self.label.is_empty() {
            format!("near {e}")
        } else {
            format!("{} near {e}", self.label)
        }
    }
}

/// Symbolic decision from a leading-order term.
fn decide_leading(lo: &LeadingOrder, chart: Chart) -> (bool, String) {
    let mut mono = lo.mono(chart);
    mono.p += chart.jacobian_power();
    let ok = mono.integrable();
    let desc = lo.describe(chart);
    (ok, desc)
}

/// Symbolic decision from a power-law exponent in the natural variable.
fn decide_exponent(p: f64, chart: Chart) -> Option<bool> {
    let finite = !chart.is_infinite();
    if (p + 1.0).abs() <= crate::expr::germ::EXPONENT_TOL {
        return Some(false);
    }
    Some(if finite { p > -1.0 } else { p < -1.0 })
}

/// Whether `f` is integrable near the spec's endpoint.
pub fn loc_integrable_at_boundary(spec: &IntegrandSpec) -> Verdict {
    decide(spec, false).0
}

/// Finiteness of the improper integral of `|f|` from `spec.from` to the
/// endpoint, with its value when finite.
pub fn improper_integral_finite(spec: &IntegrandSpec) -> (Verdict, Option<f64>) {
    decide(spec, true)
}

fn decide(spec: &IntegrandSpec, want_value: bool) -> (Verdict, Option<f64>) {
    let chart = spec.chart();
    let place = spec.where_();
    let symbolic = if let Some(lo) = &spec.leading {
        let (ok, desc) = decide_leading(lo, chart);
        let rel = if ok { "integrable" } else { "not integrable" };
        Some(Verdict::symbolic(ok, format!("{place}: ~ {desc}, {rel}")))
    } else if let Some(a) = spec.known_asymptotics.as_ref() {
        match a.confidence {
            Confidence::Exact => decide_exponent(a.exponent, chart)
                .map(|ok| Verdict::symbolic(ok, format!("{place}: exponent {}", a.exponent))),
            Confidence::Estimated if (a.exponent + 1.0).abs() >= 0.05 => decide_exponent(a.exponent, chart).map(|ok| {
                Verdict::new(
                    ok.into(),
                    Method::Numeric,
                    format!("{place}: fitted exponent {:.4}", a.exponent),
                )
            }),
            _ => None,
        }
    } else {
        None
    };

    match symbolic {
        Some(v) if !want_value || v.is_fails() => (v, None),
        Some(v) => {
            let n = numeric_tail(spec);
            (v, n.value)
        }
        None => {
            let n = numeric_tail(spec);
            let value = if n.verdict.is_holds() { n.value } else { None };
            (n.verdict, value)
        }
    }
}

/// Outcome of the dyadic tail test.
#[derive(Debug, Clone)]
pub struct NumericTail {
    pub verdict: Verdict,
    /// Partial sum plus the extrapolated remainder, when the increments
    /// settled into a convergent pattern.
    pub value: Option<f64>,
    pub levels: usize,
}

fn piece(chart: Chart, from: f64, k: usize) -> (f64, f64) {
    match chart {
        Chart::Lower(e) | Chart::Upper(e) => {
            let d0 = (from - e).abs();
            let u0 = d0 / 2f64.powi(k as i32);
            let u1 = u0 / 2.0;
            (chart.x(u0), chart.x(u1))
        }
        Chart::PosInf | Chart::NegInf => {
            let s = from.abs().max(1.0);
            let a = s * (2f64.powi(k as i32) - 1.0);
            let b = s * (2f64.powi(k as i32 + 1) - 1.0);
            if chart == Chart::PosInf {
                (from + a, from + b)
            } else {
                (from - a, from - b)
            }
        }
    }
}

/// Decision reached by a [`TailAccumulator`].
#[derive(Debug, Clone, PartialEq)]
pub enum TailDecision {
    Converged { value: f64, note: String },
    Diverged { note: String },
}

/// Convergence rules applied to the nonnegative increments of a series whose
/// terms cover successive dyadic pieces toward an endpoint.
#[derive(Debug, Clone)]
pub struct TailAccumulator {
    settings: NumericSettings,
    incs: Vec<f64>,
    ratios: Vec<f64>,
    sum: f64,
}

impl TailAccumulator {
    pub fn new(settings: NumericSettings) -> TailAccumulator {
        TailAccumulator {
            settings,
            incs: Vec::new(),
            ratios: Vec::new(),
            sum: 0.0,
        }
    }

    pub fn levels(&self) -> usize {
        self.incs.len()
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }

    pub fn increments(&self) -> &[f64] {
        &self.incs
    }

    /// Whether the increments never decreased so far.
    pub fn growing(&self) -> bool {
        self.incs.windows(2).all(|w| w[1] >= w[0])
    }

    /// Adds the next increment and applies the stopping rules.
    pub fn push(&mut self, inc: f64) -> Option<TailDecision> {
        let st = self.settings;
        if let Some(&prev) = self.incs.last() {
            self.ratios.push(if prev > 0.0 {
                inc / prev
            } else if inc == 0.0 {
                0.0
            } else {
                f64::INFINITY
            });
        }
        self.incs.push(inc);
        self.sum += inc;
        let levels = self.incs.len();
        let incs = &self.incs;
        let ratios = &self.ratios;
        let sum = self.sum;

        if incs.len() >= 3 && incs[incs.len() - 3..].iter().all(|&v| v == 0.0) {
            return Some(TailDecision::Converged {
                value: sum,
                note: "integrand vanishes".into(),
            });
        }
        if ratios.len() >= 3 {
            let last = &ratios[ratios.len() - 3..];
            let r = *last.last().unwrap();
            if last.iter().all(|&q| q < 1.0) {
                let tail = inc * r / (1.0 - r);
                if tail <= st.cauchy_tol * sum {
                    return Some(TailDecision::Converged {
                        value: sum + tail,
                        note: format!("tail below {:e} after {levels} levels", st.cauchy_tol),
                    });
                }
            }
        }
        if ratios.len() >= RATIO_RUN {
            let run = &ratios[ratios.len() - RATIO_RUN..];
            let r = *run.last().unwrap();
            let stable = r.is_finite() && r > 0.0 && run.iter().all(|&q| (q - r).abs() <= RATIO_AGREEMENT * r);
            if stable {
                let l2 = r.log2();
                if l2 < -DEAD_ZONE_LOG2 {
                    let tail = inc * r / (1.0 - r);
                    return Some(TailDecision::Converged {
                        value: sum + tail,
                        note: format!("geometric tail, ratio {r:.6}"),
                    });
                }
                if l2 > DEAD_ZONE_LOG2 {
                    return Some(TailDecision::Diverged {
                        note: format!("geometric growth, ratio {r:.6}"),
                    });
                }
            }
        }
        if ratios.len() >= PLATEAU_RUN && incs[0] > 0.0 {
            let run = &ratios[ratios.len() - PLATEAU_RUN..];
            if run.iter().all(|&q| q >= 1.0 - PLATEAU_SLACK) {
                return Some(TailDecision::Diverged {
                    note: format!("increments do not decay over {PLATEAU_RUN} levels"),
                });
            }
        }
        let first = incs[0];
        if first > 0.0 && sum > st.divergence_cap * first {
            let tail = &incs[incs.len().saturating_sub(4)..];
            if tail.windows(2).all(|w| w[1] >= w[0]) {
                return Some(TailDecision::Diverged {
                    note: format!("partial sums exceed {:e}", st.divergence_cap),
                });
            }
        }
        None
    }

    /// Geometric estimate of what lies beyond the last increment, when the
    /// last ratio is below one.
    pub fn remainder(&self) -> Option<f64> {
        let inc = *self.incs.last()?;
        let r = *self.ratios.last()?;
        (r < 1.0).then(|| inc * r / (1.0 - r))
    }

    pub fn undecided_note(&self) -> String {
        let r = self.ratios.last().copied().unwrap_or(f64::NAN);
        format!(
            "undecided after {} levels (partial sum {:.6e}, last ratio {r:.6})",
            self.incs.len(),
            self.sum
        )
    }
}

/// Numeric decision by dyadic partial sums toward the endpoint.
pub fn numeric_tail(spec: &IntegrandSpec) -> NumericTail {
    let chart = spec.chart();
    let place = spec.where_();
    let st = spec.settings;
    let f = spec.function.clone();
    let mut g = |x: f64| f(x).map(f64::abs);
    let mut acc = TailAccumulator::new(st);
    let unknown = |note: String, levels| NumericTail {
        verdict: Verdict::unknown(Method::Numeric, note),
        value: None,
        levels,
    };
    for k in 0..st.max_levels {
        let (a, b) = piece(chart, spec.from, k);
        if a == b || !a.is_finite() || !b.is_finite() {
            return unknown(
                format!("{place}: ran out of floating-point resolution after {k} levels"),
                k,
            );
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let inc = match quadrature::integrate(&mut g, lo, hi) {
            Ok(v) if v.is_finite() => v,
            Ok(_) | Err(EvalError::Overflow { .. }) => {
                if acc.growing() {
                    return NumericTail {
                        verdict: Verdict::fails(
                            Method::Numeric,
                            format!("{place}: integrand overflows toward the endpoint"),
                        ),
                        value: None,
                        levels: k,
                    };
                }
                return unknown(format!("{place}: overflow at level {k}"), k);
            }
            Err(e) => return unknown(format!("{place}: {e}"), k),
        };
        match acc.push(inc) {
            Some(TailDecision::Converged { value, note }) => {
                return NumericTail {
                    verdict: Verdict::holds(Method::Numeric, format!("{place}: {note}")),
                    value: Some(value),
                    levels: k + 1,
                }
            }
            Some(TailDecision::Diverged { note }) => {
                return NumericTail {
                    verdict: Verdict::fails(Method::Numeric, format!("{place}: {note}")),
                    value: None,
                    levels: k + 1,
                }
            }
            None => {}
        }
    }
    unknown(format!("{place}: {}", acc.undecided_note()), st.max_levels)
}

/// Kind of constraint a subexpression imposes on the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Critical {
    /// Must not vanish.
    NonZero,
    /// Must be nonnegative.
    NonNegative,
    /// Must be positive.
    Positive,
}

fn collect_critical(e: &Expr, out: &mut Vec<(Expr, Critical)>) {
    match e {
        Expr::Num(_) | Expr::Var => {}
        Expr::Neg(a) => collect_critical(a, out),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
            collect_critical(a, out);
            collect_critical(b, out);
        }
        Expr::Div(a, b) => {
            collect_critical(a, out);
            collect_critical(b, out);
            if b.contains_var() {
                out.push(((**b).clone(), Critical::NonZero));
            }
        }
        Expr::Pow(a, p) => {
            collect_critical(a, out);
            if a.contains_var() {
                if *p < 0.0 {
                    out.push(((**a).clone(), Critical::NonZero));
                }
                if p.fract() != 0.0 {
                    out.push(((**a).clone(), Critical::NonNegative));
                }
            }
        }
        Expr::Call(f, a) => {
            collect_critical(a, out);
            if a.contains_var() {
                match f {
                    Func::Log => out.push(((**a).clone(), Critical::Positive)),
                    Func::Sqrt => out.push(((**a).clone(), Critical::NonNegative)),
                    Func::Exp | Func::Abs => {}
                }
            }
        }
    }
}

/// Scan points across the whole interval, dense near finite endpoints and
/// spreading geometrically toward infinite ones.
pub fn scan_grid(j: &Interval, n: usize) -> Vec<f64> {
    let (l, r) = (j.left(), j.right());
    let mut xs = Vec::with_capacity(n);
    for i in 0..n {
        let s = -30.0 + 60.0 * (i as f64 + 0.5) / n as f64;
        let x = match (l.is_finite(), r.is_finite()) {
            (true, true) => {
                let w = 0.5 * (1.0 + (s / 2.0).tanh());
                l + (r - l) * w
            }
            (true, false) => l + s.exp(),
            (false, true) => r - (-s).exp(),
            (false, false) => s.sinh(),
        };
        if j.contains(x) && xs.last().is_none_or(|&p| x > p) {
            xs.push(x);
        }
    }
    xs
}

const SCAN_POINTS: usize = 4001;

/// Whether `g` is exactly `k * x^p`, so that its zero set is known.
fn is_monomial(g: &Expr) -> bool {
    if !g.contains_var() {
        return true;
    }
    match germ_of(g, Chart::PosInf) {
        Some(germ) => {
            germ.is_exact() && germ.err.is_none() && germ.terms.len() == 1 && germ.terms[0].mono.is_pure_power()
        }
        None => false,
    }
}

/// Candidate zeros of `g` inside `j`, located from sign changes, exact
/// zeros, pole-like errors and near-touching minima on the scan grid.
fn candidate_roots(g: &Expr, xs: &[f64]) -> Vec<f64> {
    // Signs come from the wide evaluation so that values beyond the f64
    // range are not mistaken for zeros or poles.
    let signs: Vec<Option<f64>> = xs.iter().map(|&x| g.eval_wide(x).ok().map(|w| w.sign)).collect();
    let vals: Vec<Option<f64>> = xs.iter().map(|&x| g.eval(x).ok().filter(|v| *v != 0.0)).collect();
    let mut roots = Vec::new();
    for i in 0..xs.len() {
        match signs[i] {
            Some(0.0) | None => roots.push(xs[i]),
            _ => {}
        }
        if i + 1 < xs.len() {
            if let (Some(a), Some(b)) = (signs[i], signs[i + 1]) {
                if a != 0.0 && b != 0.0 && a != b {
                    roots.push(bisect(g, xs[i], xs[i + 1]));
                }
            }
        }
        if i >= 1 && i + 1 < xs.len() {
            if let (Some(a), Some(m), Some(b)) = (vals[i - 1], vals[i], vals[i + 1]) {
                if m.abs() < a.abs() && m.abs() < b.abs() && a.signum() == m.signum() && m.signum() == b.signum() {
                    let (x, v) = golden_min(g, xs[i - 1], xs[i + 1]);
                    if v <= 1e-10 * a.abs().max(b.abs()) {
                        roots.push(x);
                    }
                }
            }
        }
    }
    roots
}

fn bisect(g: &Expr, mut a: f64, mut b: f64) -> f64 {
    let sign = |x: f64| g.eval_wide(x).map(|w| w.sign);
    let sa = sign(a).unwrap_or(0.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        match sign(m) {
            Ok(0.0) => return m,
            Ok(s) if s == sa => a = m,
            Ok(_) => b = m,
            Err(_) => return m,
        }
    }
    0.5 * (a + b)
}

fn golden_min(g: &Expr, mut a: f64, mut b: f64) -> (f64, f64) {
    let h = |x: f64| g.eval(x).map(f64::abs).unwrap_or(0.0);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    for _ in 0..200 {
        if h(c) < h(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - phi * (b - a);
        d = a + phi * (b - a);
        if (b - a).abs() <= 1e-15 * a.abs().max(b.abs()).max(1e-300) {
            break;
        }
    }
    let x = 0.5 * (a + b);
    (x, h(x))
}

/// Replaces an approximate root by a nearby simple rational at which `g`
/// vanishes exactly (or is undefined), when there is one.
fn snap_root(g: &Expr, x: f64) -> Option<f64> {
    let exact = |c: f64| match g.eval_wide(c) {
        Ok(w) => w.sign == 0.0,
        Err(EvalError::DivisionByZero { .. }) => true,
        Err(_) => false,
    };
    if exact(x) {
        return Some(x);
    }
    for d in 1..=1000 {
        let df = d as f64;
        let c = (x * df).round() / df;
        if (c - x).abs() <= 1e-9 * x.abs().max(1.0) && exact(c) {
            return Some(c);
        }
    }
    None
}

/// Integrability of `|f|` on every compact subinterval of `j`.
pub fn loc_integrable_on_j(f: &Expr, j: &Interval) -> Verdict {
    let mut critical = Vec::new();
    collect_critical(f, &mut critical);
    let xs = scan_grid(j, SCAN_POINTS);

    // Domain failures on whole stretches of the interval.
    for &x in &xs {
        if let Err(e @ EvalError::Domain { .. }) = f.eval(x) {
            let sym = critical.iter().all(|(g, _)| is_monomial(g));
            return Verdict::new(
                false.into(),
                if sym { Method::Symbolic } else { Method::Numeric },
                format!("{f} is undefined inside {j}: {e}"),
            );
        }
    }

    let mut roots: Vec<f64> = Vec::new();
    let mut symbolic = true;
    for (g, kind) in &critical {
        if is_monomial(g) {
            if j.contains(0.0) && g.contains_var() {
                roots.push(0.0);
            }
            continue;
        }
        symbolic = false;
        if *kind == Critical::NonNegative {
            // Touching zero from above is harmless for a nonnegative
            // constraint unless the base also sits in a denominator.
            if !critical.iter().any(|(h, k)| h == g && *k != Critical::NonNegative) {
                continue;
            }
        }
        roots.extend(candidate_roots(g, &xs));
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));

    let method = if symbolic { Method::Symbolic } else { Method::Numeric };
    let mut verdict = Verdict::new(
        true.into(),
        method,
        if roots.is_empty() {
            format!("no interior singularity of {f} in {j}")
        } else {
            format!("interior singularities of {f} are integrable")
        },
    );
    for x in roots {
        let v = singularity_verdict(f, j, x, &critical);
        verdict = verdict.and(&v);
        if verdict.is_fails() {
            break;
        }
    }
    verdict
}

fn singularity_verdict(f: &Expr, j: &Interval, approx: f64, critical: &[(Expr, Critical)]) -> Verdict {
    let snapped = critical
        .iter()
        .find_map(|(g, _)| snap_root(g, approx))
        .filter(|x| j.contains(*x));
    let x = snapped.unwrap_or(approx);
    let mut v = Verdict::symbolic(true, "");
    for side in [Side::Left, Side::Right] {
        // Side::Left of the sub-interval (x, ..) approaches x from above.
        let chart = match side {
            Side::Left => Chart::Lower(x),
            Side::Right => Chart::Upper(x),
        };
        let germ_decision = snapped
            .and_then(|_| germ_of(f, chart))
            .and_then(|g: Germ| g.integrable().map(|ok| (ok, g)));
        let one = match germ_decision {
            Some((ok, g)) => {
                let lead = g.lead().map(|t| t.mono.clone()).unwrap_or_else(Mono::one);
                Verdict::symbolic(
                    ok,
                    format!(
                        "{f} at x = {x} ({}): ~ u^{}{}",
                        if side == Side::Left { "from above" } else { "from below" },
                        lead.p,
                        if lead.m != 0.0 {
                            format!(" log(1/u)^{}", lead.m)
                        } else {
                            String::new()
                        }
                    ),
                )
            }
            None => {
                let width = 0.25 * x.abs().max(1e-3);
                let (lo, hi) = match side {
                    Side::Left => (x, (x + 2.0 * width).min(j.right())),
                    Side::Right => ((x - 2.0 * width).max(j.left()), x),
                };
                let from = 0.5 * (lo + hi);
                match Interval::new(lo, hi) {
                    Ok(sub) => {
                        let owned = f.clone();
                        let spec = IntegrandSpec::from_fn(Arc::new(move |y| owned.eval(y)), sub, side, from)
                            .with_label(f.to_string());
                        let mut t = numeric_tail(&spec).verdict;
                        if t.is_holds() && snapped.is_none() {
                            t = Verdict::unknown(Method::Numeric, format!("suspected singularity of {f} near x = {x}"));
                        }
                        t
                    }
                    Err(_) => Verdict::unknown(Method::Numeric, format!("cannot isolate x = {x}")),
                }
            }
        };
        v = v.and(&one);
    }
    v
}

/// Whether `f` vanishes somewhere inside `j`; `Holds` means `f != 0` on `j`.
pub fn nonvanishing_on_j(f: &Expr, j: &Interval) -> Verdict {
    let xs = scan_grid(j, SCAN_POINTS);
    if is_monomial(f) {
        let zero_inside = f.contains_var() && j.contains(0.0);
        let constant_zero = !f.contains_var() && f.eval(0.0).map(|v| v == 0.0).unwrap_or(false);
        let ok = !zero_inside && !constant_zero;
        return Verdict::symbolic(
            ok,
            if ok {
                format!("{f} has no zero in {j}")
            } else {
                format!("{f} vanishes in {j}")
            },
        );
    }
    let roots = candidate_roots(f, &xs);
    if let Some(&x) = roots.first() {
        let exact = snap_root(f, x).is_some();
        return Verdict::new(
            false.into(),
            if exact { Method::Symbolic } else { Method::Numeric },
            format!("{f} vanishes near x = {x}"),
        );
    }
    Verdict::holds(
        Method::Numeric,
        format!("{f} has no zero on a {}-point scan of {j}", xs.len()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn half() -> Interval {
        Interval::positive_half_line()
    }

    fn spec(src: &str, side: Side) -> IntegrandSpec {
        IntegrandSpec::from_expr(&parse(src).unwrap(), half(), side, 1.0)
    }

    fn numeric_only(src: &str, side: Side) -> Verdict {
        let e = parse(src).unwrap();
        let s = IntegrandSpec::from_fn(Arc::new(move |x| e.eval(x)), half(), side, 1.0);
        loc_integrable_at_boundary(&s)
    }

    #[test]
    fn symbolic_power_rule() {
        assert!(loc_integrable_at_boundary(&spec("x^-0.5", Side::Left)).is_holds());
        assert!(loc_integrable_at_boundary(&spec("x/x^2", Side::Left)).is_fails());
        assert!(loc_integrable_at_boundary(&spec("x/(x^2)^2", Side::Right)).is_holds());
        let v = loc_integrable_at_boundary(&spec("1/x", Side::Right));
        assert!(v.is_fails());
        assert_eq!(v.method, Method::Symbolic);
    }

    #[test]
    fn numeric_tail_agrees_with_power_rule() {
        for p in [-2.0, -1.5, -1.01, -1.0, -0.99, -0.5, 0.0, 1.0] {
            for side in [Side::Left, Side::Right] {
                let src = format!("3*x^{p}");
                let sym = loc_integrable_at_boundary(&spec(&src, side));
                let num = numeric_only(&src, side);
                assert_eq!(sym.method, Method::Symbolic);
                if (p + 1.0f64).abs() < 0.02 {
                    assert!(num.is_unknown() || num.value == sym.value, "{src} {side:?}: {num}");
                } else {
                    assert_eq!(num.value, sym.value, "{src} {side:?}: {num}");
                }
            }
        }
    }

    #[test]
    fn logarithmic_divergence_is_caught_numerically() {
        for side in [Side::Left, Side::Right] {
            let v = numeric_only("2/x", side);
            assert!(v.is_fails(), "{side:?}: {v}");
            assert!(v.note.contains("do not decay"), "{v}");
        }
        // Increments decay like 1/k^2: convergent, and too slow to call.
        assert!(!numeric_only("1/(x*log(x)^2)", Side::Right).is_fails());
    }

    #[test]
    fn improper_integral_values() {
        // int_1^inf y^-2 dy = 1
        let (v, val) = improper_integral_finite(&spec("x^-2", Side::Right));
        assert!(v.is_holds());
        assert!((val.unwrap() - 1.0).abs() < 1e-8);
        // int_0^1 y^-0.5 dy = 2
        let (v, val) = improper_integral_finite(&spec("x^-0.5", Side::Left));
        assert!(v.is_holds());
        assert!((val.unwrap() - 2.0).abs() < 1e-8);
        let (v, val) = improper_integral_finite(&spec("1", Side::Right));
        assert!(v.is_fails());
        assert!(val.is_none());
    }

    #[test]
    fn gbm_scale_density_at_infinity() {
        // rho(y) = y^(-2 mu0 / sigma0^2) is integrable at infinity iff 2 mu0 / sigma0^2 > 1.
        for (mu0, s0) in [(0.05, 0.2), (0.5, 1.0), (1.0, 1.0), (0.1, 0.5)] {
            let k: f64 = 2.0 * mu0 / (s0 * s0);
            let src = format!("x^-{k}");
            let v = loc_integrable_at_boundary(&spec(&src, Side::Right));
            let want = k > 1.0 && (k - 1.0).abs() > 1e-12;
            assert_eq!(v.is_holds(), want, "{src}");
        }
    }

    #[test]
    fn logarithmic_borderline_is_symbolic() {
        assert!(loc_integrable_at_boundary(&spec("1/(x*log(x)^2)", Side::Left)).is_holds());
        assert!(loc_integrable_at_boundary(&spec("1/(x*abs(log(x)))", Side::Left)).is_fails());
    }

    #[test]
    fn interior_singularities() {
        let j = half();
        assert!(loc_integrable_on_j(&parse("1/(0.5*x^0.75)^2").unwrap(), &j).is_holds());
        assert!(loc_integrable_on_j(&parse("(1/x)/1^2").unwrap(), &j).is_holds());
        let v = loc_integrable_on_j(&parse("1/(x - 1)^2").unwrap(), &j);
        assert!(v.is_fails(), "{v}");
        let v = loc_integrable_on_j(&parse("1/abs(x - 1)^0.5").unwrap(), &j);
        assert!(v.is_holds(), "{v}");
        let v = loc_integrable_on_j(&parse("log(x - 1)").unwrap(), &j);
        assert!(v.is_fails(), "{v}");
        let v = loc_integrable_on_j(&parse("1/x^2").unwrap(), &Interval::real_line());
        assert!(v.is_fails(), "{v}");
    }

    #[test]
    fn nonvanishing() {
        let j = half();
        assert!(nonvanishing_on_j(&parse("2*x^0.5").unwrap(), &j).is_holds());
        assert!(nonvanishing_on_j(&parse("x - 3").unwrap(), &j).is_fails());
        assert!(nonvanishing_on_j(&parse("sqrt(x) + x^2").unwrap(), &j).is_holds());
        assert!(nonvanishing_on_j(&parse("0").unwrap(), &j).is_fails());
        assert!(nonvanishing_on_j(&parse("x").unwrap(), &Interval::real_line()).is_fails());
    }

    #[test]
    fn value_implies_integrable() {
        for src in ["x^-1.5", "exp(-x)", "x^2", "1/(1 + x^2)"] {
            for side in [Side::Left, Side::Right] {
                let s = spec(src, side);
                if improper_integral_finite(&s).0.is_holds() {
                    assert!(loc_integrable_at_boundary(&s).is_holds(), "{src}");
                }
            }
        }
    }
}
