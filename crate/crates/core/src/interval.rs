//! State spaces and their endpoints.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Which end of the state space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntervalError {
    #[error("interval endpoints must satisfy left < right, got ({0}, {1})")]
    Empty(f64, f64),
    #[error("left endpoint cannot be +inf and right endpoint cannot be -inf")]
    Orientation,
    #[error("endpoint is NaN")]
    NaN,
}

/// Open interval `(left, right)` with `left` possibly `-inf` and `right`
/// possibly `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    left: f64,
    right: f64,
}

impl Interval {
    pub fn new(left: f64, right: f64) -> Result<Interval, IntervalError> {
        if left.is_nan() || right.is_nan() {
            return Err(IntervalError::NaN);
        }
        if left == f64::INFINITY || right == f64::NEG_INFINITY {
            return Err(IntervalError::Orientation);
        }
        if left >= right {
            return Err(IntervalError::Empty(left, right));
        }
        Ok(Interval { left, right })
    }

    pub fn positive_half_line() -> Interval {
        Interval {
            left: 0.0,
            right: f64::INFINITY,
        }
    }

    pub fn real_line() -> Interval {
        Interval {
            left: f64::NEG_INFINITY,
            right: f64::INFINITY,
        }
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    pub fn endpoint(&self, side: Side) -> f64 {
        match side {
            Side::Left => self.left,
            Side::Right => self.right,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.left && x < self.right
    }

    pub fn is_positive_half_line(&self) -> bool {
        self.left == 0.0 && self.right == f64::INFINITY
    }

    /// A default interior reference point.
    pub fn midpoint(&self) -> f64 {
        match (self.left.is_finite(), self.right.is_finite()) {
            (true, true) => 0.5 * (self.left + self.right),
            (true, false) => self.left + 1.0,
            (false, true) => self.right - 1.0,
            (false, false) => 0.0,
        }
    }

    pub fn chart(&self, side: Side) -> Chart {
        let e = self.endpoint(side);
        match (side, e.is_finite()) {
            (Side::Left, true) => Chart::Lower(e),
            (Side::Left, false) => Chart::NegInf,
            (Side::Right, true) => Chart::Upper(e),
            (Side::Right, false) => Chart::PosInf,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", fmt_endpoint(self.left), fmt_endpoint(self.right))
    }
}

pub fn fmt_endpoint(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        v.to_string()
    }
}

pub fn parse_endpoint(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "+inf" | "infinity" | "+infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        other => other.parse::<f64>().ok().filter(|v| v.is_finite()),
    }
}

/// Serde adapter for extended reals: finite values as numbers, infinities
/// as `"inf"` / `"-inf"`, NaN as `"nan"`.
pub mod ext_real {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::{fmt_endpoint, parse_endpoint, EndpointRepr};

    pub fn serialize<S: Serializer>(v: &f64, serializer: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            "nan".serialize(serializer)
        } else if v.is_finite() {
            v.serialize(serializer)
        } else {
            fmt_endpoint(*v).serialize(serializer)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<f64, D::Error> {
        use serde::de::Error;
        match EndpointRepr::deserialize(deserializer)? {
            EndpointRepr::Num(v) => Ok(v),
            EndpointRepr::Text(s) if s == "nan" => Ok(f64::NAN),
            EndpointRepr::Text(s) => parse_endpoint(&s)
                .filter(|v| v.is_infinite())
                .ok_or_else(|| D::Error::custom(format!("bad extended real {s:?}"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct IntervalRepr {
    left: EndpointRepr,
    right: EndpointRepr,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EndpointRepr {
    Num(f64),
    Text(String),
}

impl EndpointRepr {
    fn from(v: f64) -> EndpointRepr {
        if v.is_finite() {
            EndpointRepr::Num(v)
        } else {
            EndpointRepr::Text(fmt_endpoint(v))
        }
    }

    fn value(&self) -> Option<f64> {
        match self {
            EndpointRepr::Num(v) => Some(*v),
            EndpointRepr::Text(s) => parse_endpoint(s),
        }
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        IntervalRepr {
            left: EndpointRepr::from(self.left),
            right: EndpointRepr::from(self.right),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let repr = IntervalRepr::deserialize(deserializer)?;
        let left = repr.left.value().ok_or_else(|| D::Error::custom("bad left endpoint"))?;
        let right = repr
            .right
            .value()
            .ok_or_else(|| D::Error::custom("bad right endpoint"))?;
        Interval::new(left, right).map_err(D::Error::custom)
    }
}

/// Local coordinate `t -> 0+` near an endpoint.
///
/// `Lower(l)`: `x = l + t`; `Upper(r)`: `x = r - t`; `PosInf`: `x = 1/t`;
/// `NegInf`: `x = -1/t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Chart {
    Lower(f64),
    Upper(f64),
    PosInf,
    NegInf,
}

impl Chart {
    pub fn x(&self, t: f64) -> f64 {
        match self {
            Chart::Lower(l) => l + t,
            Chart::Upper(r) => r - t,
            Chart::PosInf => 1.0 / t,
            Chart::NegInf => -1.0 / t,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Chart::PosInf | Chart::NegInf)
    }

    /// Exponent of `t` in `|dx/dt|`.
    pub fn jacobian_power(&self) -> f64 {
        if self.is_infinite() {
            -2.0
        } else {
            0.0
        }
    }

    /// Converts a `t`-power into the power of the natural distance variable
    /// (`|x - e|` at a finite endpoint, `|x|` at an infinite one).
    pub fn to_x_power(&self, p: f64) -> f64 {
        if self.is_infinite() {
            -p
        } else {
            p
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_intervals() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(f64::INFINITY, 2.0).is_err());
        assert!(Interval::new(0.0, f64::NAN).is_err());
        assert!(Interval::new(f64::NEG_INFINITY, f64::INFINITY).is_ok());
    }

    #[test]
    fn json_uses_text_for_infinite_endpoints() {
        let j = Interval::positive_half_line();
        let s = serde_json::to_string(&j).unwrap();
        assert_eq!(s, r#"{"left":0.0,"right":"inf"}"#);
        let back: Interval = serde_json::from_str(&s).unwrap();
        assert_eq!(back, j);
    }

    #[test]
    fn charts_approach_the_endpoint() {
        let j = Interval::new(-1.0, f64::INFINITY).unwrap();
        assert_eq!(j.chart(Side::Left).x(1e-3), -0.999);
        assert_eq!(j.chart(Side::Right).x(1e-3), 1e3);
        assert_eq!(Interval::real_line().chart(Side::Left).x(0.5), -2.0);
    }
}
