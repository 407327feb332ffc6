//! Plain `key = value` model files.
//!
//! ```text
//! # geometric Brownian motion
//! label    = gbm
//! mu       = 0.05*x
//! sigma    = 0.2*x
//! x0       = 1
//! interval = (0, inf)
//! tilt     = -mu/sigma
//! horizon  = 1
//! ```
//!
//! `mu`, `sigma` and `x0` are required. `interval` defaults to `(0, inf)`,
//! `tilt` to the market tilt. The tilt may refer to `mu` and `sigma`, or be
//! one of the keywords `market` and `relative_arbitrage`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse, parse_with, Expr};
use crate::interval::{fmt_endpoint, parse_endpoint, Interval};
use crate::scale::{DiffusionModel, TiltSpec};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}", self.located())]
pub struct ModelFileError {
    pub file: String,
    /// 1-based; 0 when the problem is not tied to a line.
    pub line: usize,
    pub message: String,
}

impl ModelFileError {
    fn located(&self) -> String {
        match self.line {
            0 => format!("{}: {}", self.file, self.message),
            n => format!("{}:{n}: {}", self.file, self.message),
        }
    }
}

/// Tilt as written in a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "expr")]
pub enum TiltChoice {
    Market,
    RelativeArbitrage,
    Expression(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub mu: String,
    pub sigma: String,
    pub x0: f64,
    #[serde(with = "interval_text")]
    pub interval: Interval,
    pub tilt: TiltChoice,
    pub horizon: Option<f64>,
    pub label: Option<String>,
}

pub(crate) mod interval_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::{parse_interval, Interval};

    pub fn serialize<S: Serializer>(j: &Interval, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&j.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Interval, D::Error> {
        let s = String::deserialize(d)?;
        parse_interval(&s).map_err(serde::de::Error::custom)
    }
}

/// A loaded model with its tilt.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedModel {
    pub file: ModelFile,
    pub model: DiffusionModel,
    pub tilt: TiltSpec,
}

impl fmt::Display for ModelFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = &self.label {
            writeln!(f, "label = {l}")?;
        }
        writeln!(f, "mu = {}", self.mu)?;
        writeln!(f, "sigma = {}", self.sigma)?;
        writeln!(f, "x0 = {}", fmt_endpoint(self.x0))?;
        writeln!(f, "interval = {}", self.interval)?;
        match &self.tilt {
            TiltChoice::Market => writeln!(f, "tilt = market")?,
            TiltChoice::RelativeArbitrage => writeln!(f, "tilt = relative_arbitrage")?,
            TiltChoice::Expression(e) => writeln!(f, "tilt = {e}")?,
        }
        if let Some(t) = self.horizon {
            writeln!(f, "horizon = {t}")?;
        }
        Ok(())
    }
}

/// `(l, r)` or `[l, r]` with `inf` / `-inf` tokens.
pub fn parse_interval(s: &str) -> Result<Interval, String> {
    let t = s.trim();
    let inner = t
        .strip_prefix(['(', '['])
        .and_then(|r| r.strip_suffix([')', ']']))
        .ok_or_else(|| format!("expected an interval like (0, inf), got '{t}'"))?;
    let parts: Vec<&str> = inner.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected two endpoints, got '{inner}'"));
    }
    let end = |p: &str| parse_endpoint(p).ok_or_else(|| format!("bad endpoint '{}'", p.trim()));
    Interval::new(end(parts[0])?, end(parts[1])?).map_err(|e| e.to_string())
}

const KEYS: [&str; 7] = ["mu", "sigma", "x0", "interval", "tilt", "horizon", "label"];

/// Parses model file text. `file` names the source in diagnostics.
pub fn parse_model_file(text: &str, file: &str) -> Result<ModelFile, ModelFileError> {
    let err = |line: usize, message: String| ModelFileError {
        file: file.to_string(),
        line,
        message,
    };
    let mut values: [Option<(usize, String)>; 7] = Default::default();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = match raw.find('#') {
            Some(k) => &raw[..k],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once(['=', ':'])
            .ok_or_else(|| err(n, format!("expected 'key = value', got '{line}'")))?;
        let key = key.trim();
        let value = value.trim().trim_matches('"');
        let k = KEYS
            .iter()
            .position(|&s| s == key)
            .ok_or_else(|| err(n, format!("unknown key '{key}' (expected one of {})", KEYS.join(", "))))?;
        if let Some((first, _)) = &values[k] {
            return Err(err(n, format!("duplicate key '{key}' (first set on line {first})")));
        }
        if value.is_empty() {
            return Err(err(n, format!("empty value for '{key}'")));
        }
        values[k] = Some((n, value.to_string()));
    }
    let [mu, sigma, x0, interval, tilt, horizon, label] = values;
    let need = |v: Option<(usize, String)>, key: &str| v.ok_or_else(|| err(0, format!("missing required key '{key}'")));

    let mu = need(mu, "mu")?;
    let sigma = need(sigma, "sigma")?;
    for (n, src) in [&mu, &sigma] {
        parse(src).map_err(|e| err(*n, format!("cannot parse '{src}': {e}")))?;
    }
    let (n, x0_src) = need(x0, "x0")?;
    let x0 = x0_src
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| err(n, format!("x0 must be a finite number, got '{x0_src}'")))?;
    let interval = match interval {
        Some((n, s)) => parse_interval(&s).map_err(|m| err(n, m))?,
        None => Interval::positive_half_line(),
    };
    let tilt = match tilt {
        None => TiltChoice::Market,
        Some((_, s)) if s == "market" => TiltChoice::Market,
        Some((_, s)) if s == "relative_arbitrage" => TiltChoice::RelativeArbitrage,
        Some((_, s)) => TiltChoice::Expression(s),
    };
    let horizon = match horizon {
        Some((n, s)) => Some(
            s.parse::<f64>()
                .ok()
                .filter(|t| *t > 0.0 && t.is_finite())
                .ok_or_else(|| err(n, format!("horizon must be a positive number, got '{s}'")))?,
        ),
        None => None,
    };
    Ok(ModelFile {
        mu: mu.1,
        sigma: sigma.1,
        x0,
        interval,
        tilt,
        horizon,
        label: label.map(|(_, s)| s),
    })
}

impl ModelFile {
    /// Builds and validates the model and its tilt.
    pub fn load(&self, file: &str) -> Result<LoadedModel, ModelFileError> {
        let err = |message: String| ModelFileError {
            file: file.to_string(),
            line: 0,
            message,
        };
        let mu = parse(&self.mu).map_err(|e| err(format!("mu: {e}")))?;
        let sigma = parse(&self.sigma).map_err(|e| err(format!("sigma: {e}")))?;
        let model =
            DiffusionModel::new(mu.clone(), sigma.clone(), self.x0, self.interval).map_err(|e| err(e.to_string()))?;
        let tilt = match &self.tilt {
            TiltChoice::Market => TiltSpec::market(&model),
            TiltChoice::RelativeArbitrage => TiltSpec::relative_arbitrage(&model),
            TiltChoice::Expression(src) => {
                let b: Expr = parse_with(src, &[("mu", &mu), ("sigma", &sigma)])
                    .map_err(|e| err(format!("tilt: cannot parse '{src}': {e}")))?;
                let market = TiltSpec::market(&model).map_err(|e| err(e.to_string()))?;
                if crate::expr::simplify(&b) == market.b {
                    Ok(market)
                } else {
                    TiltSpec::custom(&model, b)
                }
            }
        }
        .map_err(|e| err(e.to_string()))?;
        Ok(LoadedModel {
            file: self.clone(),
            model,
            tilt,
        })
    }
}

/// Reads, parses and validates a model file.
pub fn load_model_file(path: &Path) -> Result<LoadedModel, ModelFileError> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| ModelFileError {
        file: name.clone(),
        line: 0,
        message: format!("cannot read: {e}"),
    })?;
    parse_model_file(&text, &name)?.load(&name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scale::TiltKind;

    #[test]
    fn full_file() {
        let text = "# demo\nlabel = gbm\nmu = 0.05*x\nsigma: 0.2*x  # vol\nx0 = 1\ninterval = [0, inf)\nhorizon = 2\n";
        let f = parse_model_file(text, "demo.model").unwrap();
        assert_eq!(f.label.as_deref(), Some("gbm"));
        assert_eq!(f.interval, Interval::positive_half_line());
        assert_eq!(f.horizon, Some(2.0));
        assert_eq!(f.tilt, TiltChoice::Market);
        let l = f.load("demo.model").unwrap();
        assert_eq!(l.tilt.kind, TiltKind::Market);
        let again = parse_model_file(&f.to_string(), "x").unwrap();
        assert_eq!(again, f);
    }

    #[test]
    fn tilt_written_with_coefficients_is_the_market_tilt() {
        let f = parse_model_file("mu = 1/x\nsigma = 1\nx0 = 1\ntilt = -mu/sigma\n", "f").unwrap();
        assert_eq!(f.load("f").unwrap().tilt.kind, TiltKind::Market);
        let f = parse_model_file("mu = 1/x\nsigma = 1\nx0 = 1\ntilt = relative_arbitrage\n", "f").unwrap();
        assert!(f.load("f").unwrap().tilt.b.is_zero_literal());
    }

    #[test]
    fn diagnostics_name_the_line() {
        let e = parse_model_file("mu = x\nsigma = x\nsigma = 2*x\nx0 = 1\n", "m").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.message.contains("duplicate"), "{e}");
        let e = parse_model_file("mu = x\nsigma = x*(\nx0 = 1\n", "m").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse_model_file("mu = x\nsigma = x\n", "m").unwrap_err();
        assert!(e.to_string().starts_with("m: missing required key 'x0'"), "{e}");
        let e = parse_model_file("mu = x\nsigma = x\nx0 = 1\nvol = 2\n", "m").unwrap_err();
        assert_eq!(e.line, 4);
        let e = parse_model_file("mu = x\nsigma = x\nx0 = 1\ninterval = (1, 0)\n", "m").unwrap_err();
        assert_eq!(e.line, 4);
    }

    #[test]
    fn gate_failure_is_reported() {
        let f = parse_model_file("mu = 0\nsigma = x - 1\nx0 = 2\n", "m").unwrap();
        let e = f.load("m").unwrap_err();
        assert!(e.message.contains("rejected"), "{e}");
    }
}
