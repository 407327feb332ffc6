//! Closed-form coefficient expressions.
//!
//! A deliberately small language: real literals, the variable `x`, the four
//! arithmetic operators, powers with constant real exponents and the
//! functions `exp`, `log`, `sqrt`, `abs`. See `docs/grammar.md`.

mod asymptotics;
pub(crate) mod germ;
mod normal;
mod parser;

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use asymptotics::{
    asymptotics_at, fit_grid, leading_order_at, numeric_power_fit, Asymptotics, Confidence, LeadingOrder, PowerFit,
    FIT_POINTS, FIT_RATIO, FIT_RESIDUAL,
};
pub use normal::simplify;
pub use parser::{parse, parse_with, ParseError, ParseErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        match name {
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            "sqrt" => Some(Func::Sqrt),
            "abs" => Some(Func::Abs),
            _ => None,
        }
    }
}

/// Expression tree in the single variable `x`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Power with a constant real exponent.
    Pow(Box<Expr>, f64),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{op} is undefined at x = {x} (argument {arg})")]
    Domain { op: &'static str, x: f64, arg: f64 },
    #[error("division by zero at x = {x}")]
    DivisionByZero { x: f64 },
    #[error("overflow in {op} at x = {x}")]
    Overflow { op: &'static str, x: f64 },
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn x() -> Expr {
        Expr::Var
    }

    pub fn zero() -> Expr {
        Expr::Num(0.0)
    }

    pub fn pow(self, p: f64) -> Expr {
        Expr::Pow(Box::new(self), p)
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::Call(f, Box::new(arg))
    }

    /// `k * x^p`, written the way a user would.
    pub fn monomial(k: f64, p: f64) -> Expr {
        let base = if p == 1.0 { Expr::Var } else { Expr::Var.pow(p) };
        if k == 1.0 {
            base
        } else if k < 0.0 {
            -(Expr::Num(-k) * base)
        } else {
            Expr::Num(k) * base
        }
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }

    pub fn contains_var(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var => true,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.contains_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.contains_var() || b.contains_var()
            }
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var => 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => 1 + a.node_count(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                1 + a.node_count() + b.node_count()
            }
        }
    }

    /// Evaluates at `x`. Never returns a non-finite value.
    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Var => x,
            Expr::Neg(a) => -a.eval(x)?,
            Expr::Add(a, b) => finite(a.eval(x)? + b.eval(x)?, "+", x)?,
            Expr::Sub(a, b) => finite(a.eval(x)? - b.eval(x)?, "-", x)?,
            Expr::Mul(a, b) => finite(a.eval(x)? * b.eval(x)?, "*", x)?,
            Expr::Div(a, b) => {
                let num = a.eval(x)?;
                let den = b.eval(x)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero { x });
                }
                finite(num / den, "/", x)?
            }
            Expr::Pow(a, p) => {
                let base = a.eval(x)?;
                if base == 0.0 && *p < 0.0 {
                    return Err(EvalError::DivisionByZero { x });
                }
                if base < 0.0 && p.fract() != 0.0 {
                    return Err(EvalError::Domain { op: "^", x, arg: base });
                }
                let v = if *p == 2.0 { base * base } else { base.powf(*p) };
                finite(v, "^", x)?
            }
            Expr::Call(f, a) => {
                let arg = a.eval(x)?;
                match f {
                    Func::Exp => finite(arg.exp(), "exp", x)?,
                    Func::Log => {
                        if arg <= 0.0 {
                            return Err(EvalError::Domain { op: "log", x, arg });
                        }
                        arg.ln()
                    }
                    Func::Sqrt => {
                        if arg < 0.0 {
                            return Err(EvalError::Domain { op: "sqrt", x, arg });
                        }
                        arg.sqrt()
                    }
                    Func::Abs => arg.abs(),
                }
            }
        };
        Ok(v)
    }

    /// Sign and `ln |value|` at `x`, without overflow or underflow. Only
    /// genuine domain failures are errors.
    pub fn eval_wide(&self, x: f64) -> Result<Wide, EvalError> {
        Ok(match self {
            Expr::Num(v) => Wide::from_f64(*v),
            Expr::Var => Wide::from_f64(x),
            Expr::Neg(a) => {
                let w = a.eval_wide(x)?;
                Wide { sign: -w.sign, ..w }
            }
            Expr::Add(a, b) => a.eval_wide(x)?.add(b.eval_wide(x)?),
            Expr::Sub(a, b) => {
                let w = b.eval_wide(x)?;
                a.eval_wide(x)?.add(Wide { sign: -w.sign, ..w })
            }
            Expr::Mul(a, b) => a.eval_wide(x)?.mul(b.eval_wide(x)?),
            Expr::Div(a, b) => {
                let den = b.eval_wide(x)?;
                if den.sign == 0.0 {
                    return Err(EvalError::DivisionByZero { x });
                }
                a.eval_wide(x)?.mul(Wide {
                    sign: den.sign,
                    ln: -den.ln,
                })
            }
            Expr::Pow(a, p) => {
                let base = a.eval_wide(x)?;
                if base.sign == 0.0 {
                    if *p < 0.0 {
                        return Err(EvalError::DivisionByZero { x });
                    }
                    return Ok(if *p == 0.0 { Wide::from_f64(1.0) } else { Wide::ZERO });
                }
                let sign = if base.sign > 0.0 {
                    1.0
                } else if p.fract() != 0.0 {
                    return Err(EvalError::Domain {
                        op: "^",
                        x,
                        arg: base.to_f64(),
                    });
                } else if p.rem_euclid(2.0) == 0.0 {
                    1.0
                } else {
                    -1.0
                };
                Wide { sign, ln: base.ln * p }
            }
            Expr::Call(f, a) => {
                let arg = a.eval_wide(x)?;
                match f {
                    Func::Exp => Wide {
                        sign: 1.0,
                        ln: arg.to_f64(),
                    },
                    Func::Log => {
                        if arg.sign <= 0.0 {
                            return Err(EvalError::Domain {
                                op: "log",
                                x,
                                arg: arg.to_f64(),
                            });
                        }
                        Wide::from_f64(arg.ln)
                    }
                    Func::Sqrt => {
                        if arg.sign < 0.0 {
                            return Err(EvalError::Domain {
                                op: "sqrt",
                                x,
                                arg: arg.to_f64(),
                            });
                        }
                        Wide {
                            ln: 0.5 * arg.ln,
                            ..arg
                        }
                    }
                    Func::Abs => Wide {
                        sign: arg.sign.abs(),
                        ..arg
                    },
                }
            }
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(v) if *v < 0.0 => 3,
            Expr::Num(_) | Expr::Var | Expr::Call(..) => 5,
        }
    }
}

/// A real number as sign and log-magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wide {
    /// -1, 0 or 1.
    pub sign: f64,
    /// `ln |v|`; meaningless when `sign` is 0.
    pub ln: f64,
}

impl Wide {
    pub const ZERO: Wide = Wide {
        sign: 0.0,
        ln: f64::NEG_INFINITY,
    };

    pub fn from_f64(v: f64) -> Wide {
        if v == 0.0 {
            Wide::ZERO
        } else {
            Wide {
                sign: v.signum(),
                ln: v.abs().ln(),
            }
        }
    }

    /// Saturates to `+-inf` or 0 outside the f64 range.
    pub fn to_f64(self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.ln.exp()
        }
    }

    fn mul(self, o: Wide) -> Wide {
        if self.sign == 0.0 || o.sign == 0.0 {
            return Wide::ZERO;
        }
        Wide {
            sign: self.sign * o.sign,
            ln: self.ln + o.ln,
        }
    }

    fn add(self, o: Wide) -> Wide {
        if o.sign == 0.0 {
            return self;
        }
        if self.sign == 0.0 {
            return o;
        }
        let (big, small) = if self.ln >= o.ln { (self, o) } else { (o, self) };
        let d = (small.ln - big.ln).exp();
        if big.sign == small.sign {
            Wide {
                sign: big.sign,
                ln: big.ln + d.ln_1p(),
            }
        } else if d == 1.0 {
            Wide::ZERO
        } else {
            Wide {
                sign: big.sign,
                ln: big.ln + (-d).ln_1p(),
            }
        }
    }
}

fn finite(v: f64, op: &'static str, x: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::Overflow { op, x })
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Div(Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

struct Wrapped<'a>(&'a Expr, bool);

impl fmt::Display for Wrapped<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

fn number(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    // `{}` on f64 prints the shortest representation that round-trips.
    write!(f, "{v}")
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if *v < 0.0 => {
                f.write_str("-")?;
                number(f, -v)
            }
            Expr::Num(v) => number(f, *v),
            Expr::Var => f.write_str("x"),
            Expr::Neg(a) => write!(f, "-{}", Wrapped(a, a.precedence() < 3)),
            Expr::Add(a, b) => write!(f, "{} + {}", a, Wrapped(b, b.precedence() < 2)),
            Expr::Sub(a, b) => write!(f, "{} - {}", a, Wrapped(b, b.precedence() < 2)),
            Expr::Mul(a, b) => write!(
                f,
                "{}*{}",
                Wrapped(a, a.precedence() < 2),
                Wrapped(b, b.precedence() < 3)
            ),
            Expr::Div(a, b) => write!(
                f,
                "{}/{}",
                Wrapped(a, a.precedence() < 2),
                Wrapped(b, b.precedence() < 3)
            ),
            Expr::Pow(a, p) => {
                write!(f, "{}^", Wrapped(a, a.precedence() < 5))?;
                if *p < 0.0 {
                    f.write_str("-")?;
                    number(f, -p)
                } else {
                    number(f, *p)
                }
            }
            Expr::Call(func, a) => write!(f, "{}({})", func.name(), a),
        }
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse(&s).map_err(serde::de::Error::custom)
    }
}
