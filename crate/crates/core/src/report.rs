//! The full classification of one model file, and its text rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::arbitrage::{ArbitrageReport, Market, MarketAssumptions};
use crate::exponential::{classify, ZClassification};
use crate::integrability::NumericSettings;
use crate::interval::{fmt_endpoint, Interval, Side};
use crate::modelfile::LoadedModel;
use crate::scale::{BoundaryReport, GateReport, ModelError, ScaleOptions, TiltKind, TiltedModel};
use crate::sim::{crosscheck, CrosscheckEntry, CrosscheckInputs, SimReport};
use crate::verdict::{Method, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEcho {
    pub label: Option<String>,
    pub mu: String,
    pub sigma: String,
    pub x0: f64,
    #[serde(with = "crate::modelfile::interval_text")]
    pub interval: Interval,
    pub tilt: String,
    pub tilt_kind: TiltKind,
    pub horizon: Option<f64>,
}

/// Both diffusions at one endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointSection {
    pub endpoint: Side,
    /// `Y` itself, goodness in the direct form.
    pub diffusion: BoundaryReport,
    /// The auxiliary diffusion, goodness in the auxiliary form.
    pub auxiliary: BoundaryReport,
    /// Goodness used by the classification.
    pub good: Verdict,
    pub bad_shortcut: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineInfo {
    pub version: String,
    pub anchor: f64,
    pub settings: NumericSettings,
    pub symbolic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSection {
    pub report: SimReport,
    pub z_level: f64,
    pub crosscheck: Vec<CrosscheckEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub model: ModelEcho,
    pub gate: GateReport,
    pub endpoints: Vec<EndpointSection>,
    pub z: ZClassification,
    /// Present on `(0, inf)` only.
    pub assumptions: Option<MarketAssumptions>,
    pub arbitrage: Option<ArbitrageReport>,
    pub engine: EngineInfo,
    pub simulation: Option<SimulationSection>,
}

impl ClassificationReport {
    /// Headline verdicts; an Unknown among them makes the report
    /// undetermined.
    pub fn consumed(&self) -> Vec<(&'static str, &Verdict)> {
        let z = &self.z;
        let mut out = vec![
            ("b_is_null", &z.b_is_null),
            ("z_strictly_positive_finite_t", &z.strictly_positive_finite_t),
            ("z_positive_at_infinity", &z.positive_at_infinity),
            ("z_vanishes_at_infinity", &z.vanishes_at_infinity),
            ("z_martingale", &z.martingale),
        ];
        if let Some(a) = &self.arbitrage {
            out.extend([
                ("nflvr_finite_t", &a.nflvr_finite_t),
                ("nflvr_infinite", &a.nflvr_infinite),
                ("nga_finite_t", &a.nga_finite_t),
                ("nga_infinite", &a.nga_infinite),
                ("nra_finite_t", &a.nra_finite_t),
            ]);
        }
        out
    }

    pub fn has_unknown(&self) -> bool {
        self.consumed().iter().any(|(_, v)| v.is_unknown())
    }

    pub fn flags(&self) -> Vec<&CrosscheckEntry> {
        self.simulation
            .as_ref()
            .map(|s| s.crosscheck.iter().filter(|c| c.flagged).collect())
            .unwrap_or_default()
    }

    /// Runs the cross-check of `sim` against this report and stores both.
    pub fn attach_simulation(&mut self, sim: SimReport, z_level: f64) {
        let nra = self.arbitrage.as_ref().map(|a| &a.nra_finite_t);
        let entries = crosscheck(
            &CrosscheckInputs {
                martingale: &self.z.martingale,
                strictly_positive: &self.z.strictly_positive_finite_t,
                nra,
                x0: self.model.x0,
            },
            &sim.primary,
            z_level,
        );
        self.simulation = Some(SimulationSection {
            report: sim,
            z_level,
            crosscheck: entries,
        });
    }
}

/// Runs the whole deterministic pipeline on a loaded model.
pub fn analyze(loaded: &LoadedModel, opts: &ScaleOptions) -> Result<ClassificationReport, ModelError> {
    let model = &loaded.model;
    let t = TiltedModel::new(model, &loaded.tilt, opts)?;
    let endpoints = [Side::Left, Side::Right]
        .into_iter()
        .map(|side| EndpointSection {
            endpoint: side,
            diffusion: t.report(side),
            auxiliary: t.auxiliary_report(side),
            good: t.good(side),
            bad_shortcut: t.bad_shortcut(side),
        })
        .collect();
    let z = classify(&t);
    let market = if model.interval().is_positive_half_line() {
        let m = Market::new(model, opts).map_err(|e| match e {
            crate::arbitrage::ArbitrageError::Model(e) => e,
            other => ModelError::Gate {
                what: "state space",
                note: other.to_string(),
            },
        })?;
        Some(m)
    } else {
        None
    };
    Ok(ClassificationReport {
        model: ModelEcho {
            label: loaded.file.label.clone(),
            mu: model.mu().to_string(),
            sigma: model.sigma().to_string(),
            x0: model.x0(),
            interval: *model.interval(),
            tilt: loaded.tilt.b.to_string(),
            tilt_kind: loaded.tilt.kind,
            horizon: loaded.file.horizon,
        },
        gate: model.gate().clone(),
        endpoints,
        z,
        assumptions: market.as_ref().map(|m| m.assumptions().clone()),
        arbitrage: market.as_ref().map(|m| m.report(loaded.file.horizon)),
        engine: EngineInfo {
            version: env!("CARGO_PKG_VERSION").to_string(),
            anchor: t.scale().anchor(),
            settings: opts.settings,
            symbolic: opts.symbolic,
        },
        simulation: None,
    })
}

fn line(out: &mut String, name: &str, v: &Verdict) {
    let method = match v.method {
        Method::Symbolic => "symbolic",
        Method::Numeric => "numeric",
    };
    let _ = write!(out, "  {name:<32} {:<7} [{method}]", v.value.to_string());
    if !v.citation.is_empty() {
        let _ = write!(out, " ({})", v.citation);
    }
    if !v.note.is_empty() {
        let _ = write!(out, ": {}", v.note);
    }
    out.push('\n');
}

/// Human-readable rendering.
pub fn render_text(r: &ClassificationReport) -> String {
    let mut out = String::new();
    let m = &r.model;
    if let Some(l) = &m.label {
        let _ = writeln!(out, "model {l}");
    }
    let _ = writeln!(
        out,
        "dY = ({}) dt + ({}) dW on {}, Y0 = {}",
        m.mu,
        m.sigma,
        m.interval,
        fmt_endpoint(m.x0)
    );
    let _ = writeln!(out, "tilt b = {} ({:?})", m.tilt, m.tilt_kind);
    if let Some(t) = m.horizon {
        let _ = writeln!(out, "horizon T = {t} (finite-horizon verdicts do not depend on T)");
    }

    out.push_str("\nexistence gate\n");
    line(&mut out, "sigma nonzero", &r.gate.sigma_nonzero);
    line(&mut out, "1/sigma^2 locally integrable", &r.gate.inv_sigma2);
    line(&mut out, "mu/sigma^2 locally integrable", &r.gate.drift_ratio);

    for e in &r.endpoints {
        let _ = writeln!(out, "\nendpoint {}", fmt_endpoint(e.diffusion.point));
        line(&mut out, "s finite (Y)", &e.diffusion.s_finite);
        line(&mut out, "explodes (Y)", &e.diffusion.explodes);
        line(&mut out, "s finite (aux)", &e.auxiliary.s_finite);
        line(&mut out, "explodes (aux)", &e.auxiliary.explodes);
        line(&mut out, "good (direct form)", &e.diffusion.good);
        line(&mut out, "good (auxiliary form)", &e.auxiliary.good);
        line(&mut out, "good", &e.good);
    }

    out.push_str("\nstochastic exponential Z\n");
    line(&mut out, "b null", &r.z.b_is_null);
    line(&mut out, "Z_T > 0", &r.z.strictly_positive_finite_t);
    line(&mut out, "Z_inf > 0", &r.z.positive_at_infinity);
    line(&mut out, "Z_inf = 0", &r.z.vanishes_at_infinity);
    line(&mut out, "Z martingale", &r.z.martingale);

    match (&r.assumptions, &r.arbitrage) {
        (Some(a), Some(ar)) => {
            out.push_str("\nmarket assumptions\n");
            line(&mut out, "sigma nonzero", &a.sigma_nonzero);
            line(&mut out, "1/sigma^2 locally integrable", &a.inv_sigma2_integrable);
            line(&mut out, "mu/sigma^2 locally integrable", &a.drift_ratio_integrable);
            line(&mut out, "mu^2/sigma^4 locally integrable", &a.drift_square_integrable);
            line(&mut out, "no explosion at inf", &a.no_explosion_at_infinity);
            line(&mut out, "no explosion", &a.no_explosion);
            out.push_str("\ndrift conditions\n");
            let c = &ar.conditions;
            line(&mut out, "mu^2/sigma^4 loc. integrable", &c.drift_square_integrable);
            line(
                &mut out,
                "x mu^2/sigma^4 integrable at 0",
                &c.weighted_drift_square_at_zero,
            );
            line(
                &mut out,
                "x/sigma^2 divergent at 0",
                &c.variance_ratio_divergent_at_zero,
            );
            out.push_str("\nmarket verdicts\n");
            line(&mut out, "NFLVR on [0, T]", &ar.nflvr_finite_t);
            line(&mut out, "NFLVR on [0, inf)", &ar.nflvr_infinite);
            line(&mut out, "NGA on [0, T]", &ar.nga_finite_t);
            line(&mut out, "NGA on [0, inf)", &ar.nga_infinite);
            line(&mut out, "NRA on [0, T]", &ar.nra_finite_t);
            out.push_str("\ncross-checks\n");
            line(&mut out, "NRA via ZY martingale", &ar.nra_martingale_route);
            line(&mut out, "NRA routes agree", &ar.nra_routes_agree);
            line(&mut out, "dichotomy at 0", &ar.zero_dichotomy);
            line(
                &mut out,
                "NFLVR iff x/sigma^2 divergent at 0",
                &ar.comparison.nflvr_iff_zero_condition,
            );
            line(
                &mut out,
                "NRA iff x/sigma^2 divergent at inf",
                &ar.comparison.nra_iff_infinity_condition,
            );
            line(&mut out, "NGA iff NFLVR and NRA", &ar.comparison.nga_iff_nflvr_and_nra);
        }
        _ => out.push_str("\nmarket verdicts: not applicable (state space is not (0, inf))\n"),
    }

    if let Some(s) = &r.simulation {
        out.push_str(&render_simulation(s));
    }
    let _ = writeln!(
        out,
        "\nengine {} anchor {} cauchy_tol {:e} divergence_cap {:e} max_levels {}",
        r.engine.version,
        r.engine.anchor,
        r.engine.settings.cauchy_tol,
        r.engine.settings.divergence_cap,
        r.engine.settings.max_levels
    );
    out
}

pub fn render_simulation(s: &SimulationSection) -> String {
    let mut out = String::new();
    let c = &s.report.config;
    let _ = writeln!(
        out,
        "\nsimulation: {} paths, dt {}, T {}, seed {}",
        c.n_paths, c.dt, c.horizon, c.seed
    );
    for (name, e) in [("primary", &s.report.primary), ("sensitivity", &s.report.sensitivity)] {
        let _ = writeln!(out, "  {name} (boundary eps {:e})", e.boundary_eps);
        let _ = writeln!(
            out,
            "    P(Z_T > 0)      {:.6} +- {:.6}",
            e.p_z_positive.mean, e.p_z_positive.se
        );
        let _ = writeln!(out, "    E[Z_T]          {:.6} +- {:.6}", e.mean_z.mean, e.mean_z.se);
        if let Some(zy) = e.mean_zy {
            let _ = writeln!(out, "    E[Z_T Y_T]      {:.6} +- {:.6}", zy.mean, zy.se);
        }
        let _ = writeln!(
            out,
            "    P(absorbed)     {:.6} +- {:.6}",
            e.p_explode_by_t.mean, e.p_explode_by_t.se
        );
    }
    let _ = writeln!(out, "  cross-check at {} standard errors", s.z_level);
    for e in &s.crosscheck {
        let tag = if e.flagged { "FLAG" } else { "ok" };
        let _ = writeln!(out, "    {tag:<4} {}: {}", e.check, e.message);
    }
    out
}
