//! Three-valued verdicts.
//!
//! Every criterion in the engine produces a [`Verdict`]: a Kleene truth value
//! together with how it was decided and a short audit note. Combinators follow
//! strong Kleene logic so an undecided leaf only contaminates the conclusions
//! that actually depend on it.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Kleene truth value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Truth {
    Holds,
    Fails,
    Unknown,
}

impl Truth {
    pub fn and(self, other: Truth) -> Truth {
        match (self, other) {
            (Truth::Fails, _) | (_, Truth::Fails) => Truth::Fails,
            (Truth::Holds, Truth::Holds) => Truth::Holds,
            _ => Truth::Unknown,
        }
    }

    pub fn or(self, other: Truth) -> Truth {
        match (self, other) {
            (Truth::Holds, _) | (_, Truth::Holds) => Truth::Holds,
            (Truth::Fails, Truth::Fails) => Truth::Fails,
            _ => Truth::Unknown,
        }
    }

    pub fn is_known(self) -> bool {
        self != Truth::Unknown
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            Truth::Holds => Some(true),
            Truth::Fails => Some(false),
            Truth::Unknown => None,
        }
    }
}

impl std::ops::Not for Truth {
    type Output = Truth;

    fn not(self) -> Truth {
        match self {
            Truth::Holds => Truth::Fails,
            Truth::Fails => Truth::Holds,
            Truth::Unknown => Truth::Unknown,
        }
    }
}

impl From<bool> for Truth {
    fn from(b: bool) -> Self {
        if b {
            Truth::Holds
        } else {
            Truth::Fails
        }
    }
}

impl fmt::Display for Truth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Truth::Holds => "Holds",
            Truth::Fails => "Fails",
            Truth::Unknown => "Unknown",
        };
        f.write_str(s)
    }
}

/// How a verdict was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Symbolic,
    Numeric,
}

impl Method {
    fn join(self, other: Method) -> Method {
        if self == Method::Numeric || other == Method::Numeric {
            Method::Numeric
        } else {
            Method::Symbolic
        }
    }
}

/// A truth value with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub value: Truth,
    pub method: Method,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
    /// Criterion tag, e.g. `feller-explosion` or `nflvr-finite-horizon`.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub citation: String,
}

impl Verdict {
    pub fn new(value: Truth, method: Method, note: impl Into<String>) -> Self {
        Verdict {
            value,
            method,
            note: note.into(),
            citation: String::new(),
        }
    }

    pub fn holds(method: Method, note: impl Into<String>) -> Self {
        Verdict::new(Truth::Holds, method, note)
    }

    pub fn fails(method: Method, note: impl Into<String>) -> Self {
        Verdict::new(Truth::Fails, method, note)
    }

    pub fn unknown(method: Method, note: impl Into<String>) -> Self {
        Verdict::new(Truth::Unknown, method, note)
    }

    pub fn symbolic(value: bool, note: impl Into<String>) -> Self {
        Verdict::new(value.into(), Method::Symbolic, note)
    }

    pub fn cite(mut self, tag: impl Into<String>) -> Self {
        self.citation = tag.into();
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn is_holds(&self) -> bool {
        self.value == Truth::Holds
    }

    pub fn is_fails(&self) -> bool {
        self.value == Truth::Fails
    }

    pub fn is_unknown(&self) -> bool {
        self.value == Truth::Unknown
    }

    /// Kleene conjunction. When one operand alone decides the result its
    /// provenance is kept; otherwise notes are joined.
    pub fn and(&self, other: &Verdict) -> Verdict {
        let value = self.value.and(other.value);
        match (self.value, other.value) {
            (Truth::Fails, _) => self.decisive(value),
            (_, Truth::Fails) => other.decisive(value),
            _ => self.merge(other, value),
        }
    }

    /// Kleene disjunction.
    pub fn or(&self, other: &Verdict) -> Verdict {
        let value = self.value.or(other.value);
        match (self.value, other.value) {
            (Truth::Holds, _) => self.decisive(value),
            (_, Truth::Holds) => other.decisive(value),
            _ => self.merge(other, value),
        }
    }

    pub fn negate(&self) -> Verdict {
        Verdict {
            value: !self.value,
            method: self.method,
            note: self.note.clone(),
            citation: String::new(),
        }
    }

    pub fn all<'a>(items: impl IntoIterator<Item = &'a Verdict>) -> Verdict {
        let mut it = items.into_iter();
        let first = it.next().cloned().unwrap_or_else(|| Verdict::symbolic(true, ""));
        it.fold(first, |acc, v| acc.and(v))
    }

    pub fn any<'a>(items: impl IntoIterator<Item = &'a Verdict>) -> Verdict {
        let mut it = items.into_iter();
        let first = it.next().cloned().unwrap_or_else(|| Verdict::symbolic(false, ""));
        it.fold(first, |acc, v| acc.or(v))
    }

    fn decisive(&self, value: Truth) -> Verdict {
        Verdict {
            value,
            method: self.method,
            note: self.note.clone(),
            citation: String::new(),
        }
    }

    fn merge(&self, other: &Verdict, value: Truth) -> Verdict {
        let note = match (self.note.is_empty(), other.note.is_empty()) {
            (true, _) => other.note.clone(),
            (_, true) => self.note.clone(),
            _ => format!("{}; {}", self.note, other.note),
        };
        Verdict {
            value,
            method: self.method.join(other.method),
            note,
            citation: String::new(),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)?;
        let method = match self.method {
            Method::Symbolic => "symbolic",
            Method::Numeric => "numeric",
        };
        if self.citation.is_empty() {
            write!(f, " [{method}]")?;
        } else {
            write!(f, " [{}; {method}]", self.citation)?;
        }
        if !self.note.is_empty() {
            write!(f, " ({})", self.note)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [Truth; 3] = [Truth::Holds, Truth::Fails, Truth::Unknown];

    #[test]
    fn kleene_identities() {
        for v in ALL {
            assert_eq!(Truth::Holds.and(v), v);
            assert_eq!(Truth::Fails.or(v), v);
            assert_eq!(Truth::Fails.and(v), Truth::Fails);
            assert_eq!(Truth::Holds.or(v), Truth::Holds);
        }
        assert_eq!(!Truth::Unknown, Truth::Unknown);
    }

    #[test]
    fn kleene_laws() {
        for a in ALL {
            assert_eq!(!!a, a);
            for b in ALL {
                assert_eq!(a.and(b), b.and(a));
                assert_eq!(a.or(b), b.or(a));
                assert_eq!(!(a.and(b)), (!a).or(!b));
                for c in ALL {
                    assert_eq!(a.and(b).and(c), a.and(b.and(c)));
                    assert_eq!(a.or(b).or(c), a.or(b.or(c)));
                }
            }
        }
    }

    #[test]
    fn decisive_operand_keeps_its_method() {
        let f = Verdict::fails(Method::Symbolic, "exponent -1");
        let u = Verdict::unknown(Method::Numeric, "no convergence");
        let v = u.and(&f);
        assert_eq!(v.value, Truth::Fails);
        assert_eq!(v.method, Method::Symbolic);
        assert_eq!(v.note, "exponent -1");

        let w = u.or(&f);
        assert_eq!(w.value, Truth::Unknown);
        assert_eq!(w.method, Method::Numeric);
    }
}
