//! The CEV family `mu = mu0 x^alpha`, `sigma = sigma0 x^beta` on `(0, inf)`
//! with the market tilt: engine verdicts next to the closed-form
//! classification of `Z`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::exponential::{classify, ZClassification};
use crate::expr::Expr;
use crate::interval::Interval;
use crate::scale::{DiffusionModel, ModelError, ScaleOptions, TiltSpec, TiltedModel};
use crate::verdict::Truth;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CevParams {
    pub alpha: f64,
    pub beta: f64,
    pub mu0: f64,
    pub sigma0: f64,
}

/// Sign of `alpha + 1 - 2 beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CevCase {
    /// `alpha + 1 < 2 beta`
    VolatilityDominated,
    /// `alpha + 1 = 2 beta`
    Balanced,
    /// `alpha + 1 > 2 beta`
    DriftDominated,
}

impl fmt::Display for CevCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CevCase::VolatilityDominated => "a+1<2b",
            CevCase::Balanced => "a+1=2b",
            CevCase::DriftDominated => "a+1>2b",
        })
    }
}

impl CevParams {
    pub fn new(alpha: f64, beta: f64, mu0: f64, sigma0: f64) -> CevParams {
        CevParams {
            alpha,
            beta,
            mu0,
            sigma0,
        }
    }

    pub fn case(&self) -> CevCase {
        match (self.alpha + 1.0).partial_cmp(&(2.0 * self.beta)) {
            Some(Ordering::Less) => CevCase::VolatilityDominated,
            Some(Ordering::Equal) => CevCase::Balanced,
            _ => CevCase::DriftDominated,
        }
    }

    pub fn model(&self, x0: f64) -> Result<DiffusionModel, ModelError> {
        DiffusionModel::new(
            Expr::monomial(self.mu0, self.alpha),
            Expr::monomial(self.sigma0, self.beta),
            x0,
            Interval::positive_half_line(),
        )
    }
}

/// Closed-form classification of `Z` for `mu0 != 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub positive_t: bool,
    pub positive_at_infinity: bool,
    pub vanishes_at_infinity: bool,
}

pub fn closed_form(p: &CevParams) -> ClosedForm {
    let CevParams { alpha, mu0, sigma0, .. } = *p;
    match p.case() {
        CevCase::VolatilityDominated => ClosedForm {
            positive_t: mu0 > 0.0 || alpha >= 1.0,
            positive_at_infinity: false,
            vanishes_at_infinity: true,
        },
        CevCase::Balanced => ClosedForm {
            positive_t: (alpha - 1.0) * (sigma0 * sigma0 - 2.0 * mu0) >= 0.0,
            positive_at_infinity: false,
            vanishes_at_infinity: true,
        },
        CevCase::DriftDominated => ClosedForm {
            positive_t: mu0 < 0.0 || alpha <= 1.0,
            positive_at_infinity: mu0 < 0.0,
            vanishes_at_infinity: false,
        },
    }
}

/// `(alpha, beta)` pairs of the built-in grid, several per case.
pub const SHAPES: [(f64, f64); 15] = [
    (0.0, 1.0),
    (0.5, 1.0),
    (1.0, 1.5),
    (2.0, 2.0),
    (-0.5, 0.5),
    (0.0, 0.5),
    (1.0, 1.0),
    (2.0, 1.5),
    (0.5, 0.75),
    (3.0, 2.0),
    (0.0, 0.0),
    (0.5, 0.5),
    (1.0, 0.5),
    (2.0, 1.0),
    (1.5, 0.25),
];
pub const DRIFTS: [f64; 4] = [-1.0, 0.5, 1.0, 2.0];
pub const VOLS: [f64; 2] = [0.5, 1.0];

pub fn default_grid() -> Vec<CevParams> {
    let mut out = Vec::new();
    for &(alpha, beta) in &SHAPES {
        for &mu0 in &DRIFTS {
            for &sigma0 in &VOLS {
                out.push(CevParams::new(alpha, beta, mu0, sigma0));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CevGridRow {
    pub params: CevParams,
    pub case: CevCase,
    pub expected: ClosedForm,
    pub engine: ZClassification,
    pub matches: bool,
}

fn agrees(v: Truth, want: bool) -> bool {
    v.as_bool() == Some(want)
}

pub fn evaluate(p: &CevParams, opts: &ScaleOptions) -> Result<CevGridRow, ModelError> {
    let model = p.model(1.0)?;
    let tilt = TiltSpec::market(&model)?;
    let engine = classify(&TiltedModel::new(&model, &tilt, opts)?);
    let expected = closed_form(p);
    let matches = agrees(engine.strictly_positive_finite_t.value, expected.positive_t)
        && agrees(engine.positive_at_infinity.value, expected.positive_at_infinity)
        && agrees(engine.vanishes_at_infinity.value, expected.vanishes_at_infinity);
    Ok(CevGridRow {
        params: *p,
        case: p.case(),
        expected,
        engine,
        matches,
    })
}

pub fn evaluate_grid(grid: &[CevParams], opts: &ScaleOptions) -> Result<Vec<CevGridRow>, ModelError> {
    grid.iter().map(|p| evaluate(p, opts)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spans_all_cases() {
        let g = default_grid();
        for case in [CevCase::VolatilityDominated, CevCase::Balanced, CevCase::DriftDominated] {
            assert!(g.iter().filter(|p| p.case() == case).count() >= 8 * 4);
        }
    }

    #[test]
    fn listed_rows() {
        let opts = ScaleOptions::default();
        for (p, pos, inf) in [
            (CevParams::new(0.0, 1.0, 1.0, 1.0), true, false),
            (CevParams::new(1.0, 1.0, 1.0, 1.0), true, false),
            (CevParams::new(0.0, 0.0, -1.0, 1.0), true, true),
        ] {
            let row = evaluate(&p, &opts).unwrap();
            assert!(row.matches, "{row:?}");
            assert_eq!(row.expected.positive_t, pos);
            assert_eq!(row.expected.positive_at_infinity, inf);
        }
    }
}
