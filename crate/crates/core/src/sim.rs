//! Euler–Maruyama simulation of `Y` together with the stochastic exponential
//! `Z`, used as an empirical cross-check of the deterministic verdicts.
//!
//! Each path draws from its own ChaCha8 stream keyed by `(seed, path index)`
//! and per-chunk sums are reduced in index order, so results do not depend
//! on the number of threads.
//!
//! Paths are absorbed within `boundary_eps` of a finite endpoint. At an
//! endpoint that `Y` never reaches, absorption is only a proxy for coming
//! close, and a non-trivial `Z` is set to 0 there; freezing it instead would
//! estimate the stopped martingale, whose mean is 1 for every `eps`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{EvalError, Expr};
use crate::interval::{fmt_endpoint, Side};
use crate::scale::{feller_explodes, DiffusionModel, TiltSpec};
use crate::verdict::{Truth, Verdict};

/// Default absorption distance from a finite endpoint, relative to `|x0|`.
pub const DEFAULT_EPS_FACTOR: f64 = 1e-4;
/// Absorption level at an infinite endpoint, relative to `max(|x0|, 1)`.
pub const INFINITY_CAP_FACTOR: f64 = 1e8;
/// Paths whose running `int b^2 dt` exceeds this are given `Z = 0`.
pub const B2_CAP: f64 = 1e10;
/// Near a finite endpoint at distance `d`, a step is cut so that
/// `sigma^2 dt <= STEP_SHRINK d^2` and `|mu| dt <= sqrt(STEP_SHRINK) d`.
pub const STEP_SHRINK: f64 = 0.01;
/// Smallest substep, relative to `dt`.
pub const MIN_STEP_FRACTION: f64 = 1e-9;
/// Paths per reduction chunk.
const CHUNK: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    EulerMaruyama,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_paths: usize,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    /// Absorption distance from a finite endpoint; `x0 * 1e-4` when absent.
    pub boundary_eps: Option<f64>,
    pub scheme: Scheme,
}

impl SimConfig {
    pub fn new(n_paths: usize, dt: f64, horizon: f64, seed: u64) -> SimConfig {
        SimConfig {
            n_paths,
            dt,
            horizon,
            seed,
            boundary_eps: None,
            scheme: Scheme::EulerMaruyama,
        }
    }

    pub fn eps_for(&self, model: &DiffusionModel) -> f64 {
        self.boundary_eps
            .unwrap_or(DEFAULT_EPS_FACTOR * model.x0().abs().max(f64::MIN_POSITIVE))
    }

    pub fn validate(&self, model: &DiffusionModel) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::Config(msg));
        if self.n_paths == 0 {
            return bad("n_paths must be positive".into());
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.dt > 0.0 && self.dt < self.horizon) {
            return bad(format!("dt must lie in (0, horizon), got {}", self.dt));
        }
        let eps = self.eps_for(model);
        if !(eps > 0.0) {
            return bad(format!("boundary_eps must be positive, got {eps}"));
        }
        let j = model.interval();
        let x0 = model.x0();
        let room = [x0 - j.left(), j.right() - x0, x0.abs()]
            .into_iter()
            .filter(|d| d.is_finite() && *d > 0.0)
            .fold(f64::INFINITY, f64::min);
        if room.is_finite() && eps >= room / 100.0 {
            return bad(format!("boundary_eps = {eps} must be below {}", room / 100.0));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("evaluating {what} at x = {x} on path {path}: {source}")]
    Eval {
        what: &'static str,
        x: f64,
        path: usize,
        source: EvalError,
    },
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEstimates {
    pub p_z_positive: Estimate,
    pub mean_z: Estimate,
    /// `E[Z_T Y_T]` under the market tilt, computed pathwise as `x0` times
    /// the exponential of the relative-arbitrage tilt. Absent when that
    /// tilt does not exist.
    pub mean_zy: Option<Estimate>,
    pub p_explode_by_t: Estimate,
    pub n_effective: usize,
    pub boundary_eps: f64,
}

/// Terminal state of one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOutcome {
    pub y: f64,
    /// `Z_T`, possibly 0.
    pub z: f64,
    /// `Z_T Y_T` for the market tilt, when available.
    pub zy: Option<f64>,
    pub absorbed: bool,
}

struct Coefficients<'a> {
    mu: &'a Expr,
    sigma: &'a Expr,
    b: Option<&'a Expr>,
    /// Whether the relative-arbitrage tilt is identically zero.
    ra: Option<bool>,
}

struct Bounds {
    /// Whether some endpoint is finite, so steps shrink near it.
    finite: bool,
    lo: f64,
    hi: f64,
    lo_at: f64,
    hi_at: f64,
    /// Whether `Z` is set to 0 on absorption at each end: the endpoint is
    /// finite and `Y` does not reach it, so absorption only stands in for
    /// coming close.
    lo_kills: bool,
    hi_kills: bool,
}

impl Bounds {
    fn new(model: &DiffusionModel, eps: f64) -> Bounds {
        let j = model.interval();
        let cap = INFINITY_CAP_FACTOR * model.x0().abs().max(1.0);
        let (lo, lo_at) = if j.left().is_finite() {
            (j.left() + eps, j.left())
        } else {
            (-cap, -cap)
        };
        let (hi, hi_at) = if j.right().is_finite() {
            (j.right() - eps, j.right())
        } else {
            (cap, cap)
        };
        let finite = j.left().is_finite() || j.right().is_finite();
        let kills = |side: Side| {
            let end = match side {
                Side::Left => j.left(),
                Side::Right => j.right(),
            };
            end.is_finite() && feller_explodes(model, side).is_fails()
        };
        Bounds {
            finite,
            lo,
            hi,
            lo_at,
            hi_at,
            lo_kills: kills(Side::Left),
            hi_kills: kills(Side::Right),
        }
    }
}

fn eval(e: &Expr, what: &'static str, x: f64, path: usize) -> Result<f64, SimError> {
    e.eval(x).map_err(|source| SimError::Eval { what, x, path, source })
}

fn run_path(
    c: &Coefficients,
    bounds: &Bounds,
    x0: f64,
    steps: usize,
    h: f64,
    seed: u64,
    path: usize,
) -> Result<PathOutcome, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    let h_min = h * MIN_STEP_FRACTION;
    let (mut y, mut log_z, mut int_b2, mut log_ra) = (x0, 0.0f64, 0.0f64, 0.0f64);
    let mut absorbed = false;
    'outer: for _ in 0..steps {
        let mut left = h;
        while left > 0.0 {
            let mu = eval(c.mu, "mu", y, path)?;
            let sigma = eval(c.sigma, "sigma", y, path)?;
            let d = (y - bounds.lo_at).min(bounds.hi_at - y);
            let mut dt = left;
            if bounds.finite && d.is_finite() {
                let limit = (STEP_SHRINK * d * d / (sigma * sigma)).min(STEP_SHRINK.sqrt() * d / mu.abs());
                dt = dt.min(limit.max(h_min));
            }
            // Avoid a sliver of a step at the end of the outer step.
            if left - dt < 1e-3 * dt {
                dt = left;
            }
            left -= dt;
            let xi: f64 = StandardNormal.sample(&mut rng);
            let dw = dt.sqrt() * xi;
            if let Some(b) = c.b {
                let bv = eval(b, "b", y, path)?;
                log_z += bv * dw - 0.5 * bv * bv * dt;
                int_b2 += bv * bv * dt;
            }
            if c.ra == Some(false) {
                let r = sigma / y - mu / sigma;
                log_ra += r * dw - 0.5 * r * r * dt;
            }
            y += mu * dt + sigma * dw;
            if int_b2 > B2_CAP {
                log_z = f64::NEG_INFINITY;
            }
            let kills = if y.is_nan() || y <= bounds.lo {
                y = bounds.lo_at;
                absorbed = true;
                bounds.lo_kills
            } else if y >= bounds.hi {
                y = bounds.hi_at;
                absorbed = true;
                bounds.hi_kills
            } else {
                false
            };
            if kills && c.b.is_some() {
                log_z = f64::NEG_INFINITY;
            }
            if absorbed {
                break 'outer;
            }
        }
    }
    // Z Y vanishes once Y sits at 0, whatever Z is.
    let zy = c.ra.map(|_| if absorbed && y == 0.0 { 0.0 } else { x0 * log_ra.exp() });
    Ok(PathOutcome {
        y,
        z: log_z.exp(),
        zy,
        absorbed,
    })
}

/// Relative-arbitrage tilt status: `None` when it does not exist, otherwise
/// whether it is identically zero.
fn ra_status(model: &DiffusionModel) -> Option<bool> {
    if model.interval().contains(0.0) {
        return None;
    }
    TiltSpec::relative_arbitrage(model).ok().map(|t| t.b.is_zero_literal())
}

fn steps_for(config: &SimConfig) -> (usize, f64) {
    let n = (config.horizon / config.dt).round().max(1.0) as usize;
    (n, config.horizon / n as f64)
}

/// Terminal states of paths `range` in index order.
pub fn simulate_paths(
    model: &DiffusionModel,
    tilt: &TiltSpec,
    config: &SimConfig,
    range: std::ops::Range<usize>,
) -> Result<Vec<PathOutcome>, SimError> {
    config.validate(model)?;
    let c = coefficients(model, tilt);
    let bounds = Bounds::new(model, config.eps_for(model));
    let (steps, h) = steps_for(config);
    range
        .into_par_iter()
        .map(|i| run_path(&c, &bounds, model.x0(), steps, h, config.seed, i))
        .collect()
}

fn coefficients<'a>(model: &'a DiffusionModel, tilt: &'a TiltSpec) -> Coefficients<'a> {
    Coefficients {
        mu: model.mu(),
        sigma: model.sigma(),
        b: (!tilt.b.is_zero_literal()).then_some(&tilt.b),
        ra: ra_status(model),
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    fn add(&mut self, v: f64) {
        let t = self.s + v;
        if self.s.abs() >= v.abs() {
            self.c += (self.s - t) + v;
        } else {
            self.c += (v - t) + self.s;
        }
        self.s = t;
    }

    fn value(&self) -> f64 {
        self.s + self.c
    }
}

/// Sums and sums of squares of the per-path quantities.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    pos: [Sum; 2],
    z: [Sum; 2],
    zy: [Sum; 2],
    explode: [Sum; 2],
    zy_count: usize,
}

impl Moments {
    fn push(&mut self, p: &PathOutcome) {
        let put = |s: &mut [Sum; 2], v: f64| {
            s[0].add(v);
            s[1].add(v * v);
        };
        self.n += 1;
        put(&mut self.pos, if p.z > 0.0 { 1.0 } else { 0.0 });
        put(&mut self.z, p.z);
        put(&mut self.explode, if p.absorbed { 1.0 } else { 0.0 });
        if let Some(v) = p.zy {
            put(&mut self.zy, v);
            self.zy_count += 1;
        }
    }

    fn merge(&mut self, o: &Moments) {
        self.n += o.n;
        self.zy_count += o.zy_count;
        for (a, b) in [
            (&mut self.pos, &o.pos),
            (&mut self.z, &o.z),
            (&mut self.zy, &o.zy),
            (&mut self.explode, &o.explode),
        ] {
            for k in 0..2 {
                a[k].add(b[k].value());
            }
        }
    }
}

fn estimate(s: &[Sum; 2], n: usize) -> Estimate {
    let nf = n as f64;
    let mean = s[0].value() / nf;
    let var = if n > 1 {
        ((s[1].value() - nf * mean * mean) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    Estimate {
        mean,
        se: (var / nf).sqrt(),
    }
}

pub fn simulate(model: &DiffusionModel, tilt: &TiltSpec, config: &SimConfig) -> Result<SimEstimates, SimError> {
    config.validate(model)?;
    let c = coefficients(model, tilt);
    let eps = config.eps_for(model);
    let bounds = Bounds::new(model, eps);
    let (steps, h) = steps_for(config);
    let chunks: Vec<usize> = (0..config.n_paths.div_ceil(CHUNK)).collect();
    let partial: Vec<Moments> = chunks
        .into_par_iter()
        .map(|k| {
            let mut m = Moments::default();
            for i in k * CHUNK..((k + 1) * CHUNK).min(config.n_paths) {
                m.push(&run_path(&c, &bounds, model.x0(), steps, h, config.seed, i)?);
            }
            Ok(m)
        })
        .collect::<Result<_, SimError>>()?;
    let mut total = Moments::default();
    for m in &partial {
        total.merge(m);
    }
    let n = total.n;
    Ok(SimEstimates {
        p_z_positive: estimate(&total.pos, n),
        mean_z: estimate(&total.z, n),
        mean_zy: (total.zy_count == n).then(|| estimate(&total.zy, n)),
        p_explode_by_t: estimate(&total.explode, n),
        n_effective: n,
        boundary_eps: eps,
    })
}

/// Estimates at the configured absorption distance and at a second one, ten
/// times larger (or smaller when the larger one is not admissible).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub primary: SimEstimates,
    pub sensitivity: SimEstimates,
}

pub fn simulate_with_sensitivity(
    model: &DiffusionModel,
    tilt: &TiltSpec,
    config: &SimConfig,
) -> Result<SimReport, SimError> {
    let primary = simulate(model, tilt, config)?;
    let eps = config.eps_for(model);
    let wider = SimConfig {
        boundary_eps: Some(eps * 10.0),
        ..*config
    };
    let alt = if wider.validate(model).is_ok() {
        wider
    } else {
        SimConfig {
            boundary_eps: Some(eps / 10.0),
            ..*config
        }
    };
    let sensitivity = simulate(model, tilt, &alt)?;
    Ok(SimReport {
        config: *config,
        primary,
        sensitivity,
    })
}

/// One comparison of a verdict against the simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckEntry {
    pub check: String,
    pub verdict: Truth,
    pub estimate: f64,
    pub se: f64,
    /// The value the estimate is compared with.
    pub bound: f64,
    pub flagged: bool,
    pub message: String,
}

/// Verdicts a simulation can contradict.
#[derive(Debug, Clone, PartialEq)]
pub struct CrosscheckInputs<'a> {
    pub martingale: &'a Verdict,
    pub strictly_positive: &'a Verdict,
    pub nra: Option<&'a Verdict>,
    pub x0: f64,
}

/// Flags a Holds verdict the estimates disagree with by more than `z_level`
/// standard errors.
pub fn crosscheck(inputs: &CrosscheckInputs, est: &SimEstimates, z_level: f64) -> Vec<CrosscheckEntry> {
    let mut out = Vec::new();
    let m = est.mean_z;
    let flagged = inputs.martingale.is_holds() && (m.mean - 1.0).abs() > z_level * m.se;
    out.push(CrosscheckEntry {
        check: "martingale".into(),
        verdict: inputs.martingale.value,
        estimate: m.mean,
        se: m.se,
        bound: 1.0,
        flagged,
        message: format!(
            "E[Z_T] = {:.6} +- {:.6}, martingale {}{}",
            m.mean,
            m.se,
            inputs.martingale.value,
            if flagged {
                ": mean is off 1 by more than the allowed standard errors"
            } else {
                ""
            }
        ),
    });

    let p = est.p_z_positive;
    let bound = 1.0 - z_level * p.se;
    let flagged = inputs.strictly_positive.is_holds() && p.mean < bound;
    out.push(CrosscheckEntry {
        check: "strictly_positive".into(),
        verdict: inputs.strictly_positive.value,
        estimate: p.mean,
        se: p.se,
        bound,
        flagged,
        message: format!(
            "P(Z_T > 0) = {:.6} +- {:.6}, strict positivity {}{}",
            p.mean,
            p.se,
            inputs.strictly_positive.value,
            if flagged { ": some paths have Z_T = 0" } else { "" }
        ),
    });

    if let (Some(nra), Some(zy)) = (inputs.nra, est.mean_zy) {
        let bound = inputs.x0 - z_level * zy.se;
        let flagged = nra.is_holds() && zy.mean < bound;
        out.push(CrosscheckEntry {
            check: "nra".into(),
            verdict: nra.value,
            estimate: zy.mean,
            se: zy.se,
            bound,
            flagged,
            message: format!(
                "E[Z_T Y_T] = {:.6} +- {:.6} against x0 = {}, NRA {}{}",
                zy.mean,
                zy.se,
                fmt_endpoint(inputs.x0),
                nra.value,
                if flagged { ": ZY loses mass" } else { "" }
            ),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::interval::Interval;
    use crate::verdict::Method;

    fn model(mu: &str, sigma: &str) -> DiffusionModel {
        DiffusionModel::new(
            parse(mu).unwrap(),
            parse(sigma).unwrap(),
            1.0,
            Interval::positive_half_line(),
        )
        .unwrap()
    }

    #[test]
    fn config_invariants() {
        let m = model("0", "x");
        assert!(SimConfig::new(10, 0.1, 1.0, 0).validate(&m).is_ok());
        assert!(SimConfig::new(10, 2.0, 1.0, 0).validate(&m).is_err());
        assert!(SimConfig::new(0, 0.1, 1.0, 0).validate(&m).is_err());
        let wide = SimConfig {
            boundary_eps: Some(0.05),
            ..SimConfig::new(10, 0.1, 1.0, 0)
        };
        assert!(wide.validate(&m).is_err());
    }

    #[test]
    fn compensated_sum_keeps_small_terms() {
        let mut s = Sum::default();
        s.add(1e16);
        for _ in 0..10 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 10.0);
    }

    #[test]
    fn paths_are_reproducible_and_independent_of_range() {
        let m = model("0.1*x", "0.3*x");
        let tilt = TiltSpec::market(&m).unwrap();
        let cfg = SimConfig::new(64, 0.01, 1.0, 7);
        let all = simulate_paths(&m, &tilt, &cfg, 0..64).unwrap();
        let tail = simulate_paths(&m, &tilt, &cfg, 32..64).unwrap();
        assert_eq!(&all[32..], &tail[..]);
        assert_ne!(all[0], all[1]);
        let a = simulate(&m, &tilt, &cfg).unwrap();
        let b = simulate(&m, &tilt, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn market_identity_for_zero_drift_relative_tilt() {
        // mu = sigma^2/x makes the relative-arbitrage tilt vanish.
        let m = model("1/x", "1");
        let tilt = TiltSpec::market(&m).unwrap();
        let paths = simulate_paths(&m, &tilt, &SimConfig::new(50, 0.01, 1.0, 3), 0..50).unwrap();
        assert!(paths.iter().all(|p| p.zy == Some(1.0)));
    }

    #[test]
    fn coefficient_failure_reports_the_point() {
        let m = model("0", "1");
        let tilt = TiltSpec {
            b: parse("log(x - 0.9)").unwrap(),
            kind: crate::scale::TiltKind::Custom,
            admissible: Verdict::unknown(Method::Numeric, "unchecked"),
        };
        let err = simulate(&m, &tilt, &SimConfig::new(20, 0.01, 1.0, 1)).unwrap_err();
        match err {
            SimError::Eval { what, x, .. } => assert!(what == "b" && x <= 0.9, "{what} {x}"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn corrupted_report_raises_a_flag() {
        let m = model("1/x", "1");
        let tilt = TiltSpec::market(&m).unwrap();
        let est = simulate(&m, &tilt, &SimConfig::new(4000, 0.01, 1.0, 11)).unwrap();
        let wrong = Verdict::holds(Method::Symbolic, "corrupted");
        let right = Verdict::fails(Method::Symbolic, "");
        let flags = crosscheck(
            &CrosscheckInputs {
                martingale: &wrong,
                strictly_positive: &right,
                nra: None,
                x0: 1.0,
            },
            &est,
            3.0,
        );
        assert!(flags.iter().any(|f| f.check == "martingale" && f.flagged), "{flags:?}");
        let flags = crosscheck(
            &CrosscheckInputs {
                martingale: &right,
                strictly_positive: &right,
                nra: None,
                x0: 1.0,
            },
            &est,
            3.0,
        );
        assert!(flags.iter().all(|f| !f.flagged));
    }
}
