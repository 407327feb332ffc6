//! Truncated asymptotic expansions at an endpoint.
//!
//! A germ describes a function of the local coordinate `t -> 0+` as a finite
//! sum of terms `c * t^p * L^m * exp(Phi(t))` with `L = ln(1/t)` and
//! `Phi(t) = sum a_j t^q_j`, `q_j < 0`, plus an optional order bound for
//! everything that was truncated. Terms are kept most-dominant first.
//!
//! Two kinds of partial knowledge are tracked. `kpow` records a factor
//! `K^kpow` with `K > 0` an unknown constant, which is what an integration
//! constant turns into after exponentiation; factors with opposite powers
//! cancel exactly. `theta` marks a germ known only up to bounded positive
//! factors, i.e. `f = Theta(lead)`.

use std::cmp::Ordering;
use std::fmt;

use crate::interval::Chart;

use super::{Expr, Func};

/// Maximum number of explicit terms kept.
const MAX_TERMS: usize = 8;
/// Exponents closer than this (relative) are the same exponent.
pub const EXPONENT_TOL: f64 = 1e-12;
const CANCEL_TOL: f64 = 1e-12;

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= EXPONENT_TOL * a.abs().max(b.abs()).max(1.0)
}

fn snap(p: f64) -> f64 {
    let r = p.round();
    if same(p, r) {
        return r;
    }
    for d in 2..=64 {
        let df = d as f64;
        let r = (p * df).round() / df;
        if same(p, r) {
            return r;
        }
    }
    p
}

/// `t^p * L^m * exp(sum a t^q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mono {
    pub p: f64,
    pub m: f64,
    /// `(q, a)` pairs, `q < 0`, sorted by `q` ascending (most divergent first).
    pub phi: Vec<(f64, f64)>,
}

impl Mono {
    pub fn one() -> Mono {
        Mono::power(0.0)
    }

    pub fn power(p: f64) -> Mono {
        Mono {
            p,
            m: 0.0,
            phi: Vec::new(),
        }
    }

    pub fn is_pure_power(&self) -> bool {
        self.m == 0.0 && self.phi.is_empty()
    }

    fn mul(&self, o: &Mono) -> Mono {
        Mono {
            p: snap(self.p + o.p),
            m: snap(self.m + o.m),
            phi: merge_phi(&self.phi, &o.phi, 1.0),
        }
    }

    fn pow(&self, c: f64) -> Mono {
        Mono {
            p: snap(self.p * c),
            m: snap(self.m * c),
            phi: self.phi.iter().map(|&(q, a)| (q, a * c)).collect(),
        }
    }

    /// `Greater` when `self` dominates `o` as `t -> 0+`.
    pub fn dominance(&self, o: &Mono) -> Ordering {
        let d = merge_phi(&self.phi, &o.phi, -1.0);
        if let Some(&(_, a)) = d.first() {
            return if a > 0.0 { Ordering::Greater } else { Ordering::Less };
        }
        if !same(self.p, o.p) {
            return if self.p < o.p {
                Ordering::Greater
            } else {
                Ordering::Less
            };
        }
        if !same(self.m, o.m) {
            return if self.m > o.m {
                Ordering::Greater
            } else {
                Ordering::Less
            };
        }
        Ordering::Equal
    }

    pub fn vanishes(&self) -> bool {
        self.dominance(&Mono::one()) == Ordering::Less
    }

    /// Whether `int_0 mono dt` converges.
    pub fn integrable(&self) -> bool {
        if let Some(&(_, a)) = self.phi.first() {
            return a < 0.0;
        }
        if same(self.p, -1.0) {
            self.m < -1.0 && !same(self.m, -1.0)
        } else {
            self.p > -1.0
        }
    }
}

impl fmt::Display for Mono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.p != 0.0 {
            parts.push(format!("t^{}", self.p));
        }
        if self.m != 0.0 {
            parts.push(format!("log(1/t)^{}", self.m));
        }
        if !self.phi.is_empty() {
            let s: Vec<String> = self.phi.iter().map(|(q, a)| format!("{a}*t^{q}")).collect();
            parts.push(format!("exp({})", s.join(" + ")));
        }
        if parts.is_empty() {
            f.write_str("1")
        } else {
            f.write_str(&parts.join("*"))
        }
    }
}

fn merge_phi(a: &[(f64, f64)], b: &[(f64, f64)], scale_b: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64, f64)> = a.iter().map(|&(q, c)| (q, c, c.abs())).collect();
    for &(q, c) in b {
        let c = c * scale_b;
        if let Some(slot) = out.iter_mut().find(|(p, _, _)| same(*p, q)) {
            slot.1 += c;
            slot.2 = slot.2.max(c.abs());
        } else {
            out.push((q, c, c.abs()));
        }
    }
    let mut out: Vec<(f64, f64)> = out
        .into_iter()
        .filter(|(_, c, m)| c.abs() > CANCEL_TOL * m)
        .map(|(q, c, _)| (q, c))
        .collect();
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub c: f64,
    pub mono: Mono,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Germ {
    pub terms: Vec<Term>,
    /// Order of everything dropped; dominated by every explicit term.
    pub err: Option<Mono>,
    pub kpow: f64,
    pub theta: bool,
}

fn factorial_like(c: f64, k: usize) -> f64 {
    // binom(c, k)
    let mut r = 1.0;
    for j in 0..k {
        r *= (c - j as f64) / (j as f64 + 1.0);
    }
    r
}

fn max_mono(a: Option<Mono>, b: Option<Mono>) -> Option<Mono> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if x.dominance(&y) == Ordering::Less { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

impl Germ {
    pub fn zero() -> Germ {
        Germ {
            terms: Vec::new(),
            err: None,
            kpow: 0.0,
            theta: false,
        }
    }

    pub fn constant(c: f64) -> Germ {
        Germ::term(c, Mono::one())
    }

    pub fn term(c: f64, mono: Mono) -> Germ {
        Germ::build(vec![Term { c, mono }], None, 0.0, false)
    }

    /// The local variable `x` in the given chart.
    pub fn chart_x(chart: Chart) -> Germ {
        match chart {
            Chart::Lower(l) => Germ::build(
                vec![
                    Term {
                        c: l,
                        mono: Mono::one(),
                    },
                    Term {
                        c: 1.0,
                        mono: Mono::power(1.0),
                    },
                ],
                None,
                0.0,
                false,
            ),
            Chart::Upper(r) => Germ::build(
                vec![
                    Term {
                        c: r,
                        mono: Mono::one(),
                    },
                    Term {
                        c: -1.0,
                        mono: Mono::power(1.0),
                    },
                ],
                None,
                0.0,
                false,
            ),
            Chart::PosInf => Germ::term(1.0, Mono::power(-1.0)),
            Chart::NegInf => Germ::term(-1.0, Mono::power(-1.0)),
        }
    }

    /// `|dx/dt|` in the given chart.
    pub fn chart_jacobian(chart: Chart) -> Germ {
        Germ::term(1.0, Mono::power(chart.jacobian_power()))
    }

    fn build(terms: Vec<Term>, err: Option<Mono>, kpow: f64, theta: bool) -> Germ {
        let mut merged: Vec<(Term, f64)> = Vec::new();
        for t in terms {
            if t.c == 0.0 {
                continue;
            }
            if let Some(slot) = merged
                .iter_mut()
                .find(|(s, _)| s.mono.dominance(&t.mono) == Ordering::Equal)
            {
                slot.1 = slot.1.max(t.c.abs());
                slot.0.c += t.c;
            } else {
                let m = t.c.abs();
                merged.push((t, m));
            }
        }
        let mut terms: Vec<Term> = merged
            .into_iter()
            .filter(|(t, m)| t.c.abs() > CANCEL_TOL * m)
            .map(|(t, _)| t)
            .collect();
        terms.sort_by(|a, b| b.mono.dominance(&a.mono));
        let mut err = err;
        if let Some(e) = &err {
            terms.retain(|t| t.mono.dominance(e) == Ordering::Greater);
        }
        if terms.len() > MAX_TERMS {
            let dropped = terms[MAX_TERMS].mono.clone();
            terms.truncate(MAX_TERMS);
            err = max_mono(err, Some(dropped));
        }
        let kpow = if same(kpow, 0.0) { 0.0 } else { kpow };
        Germ {
            terms,
            err,
            kpow,
            theta,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.err.is_none()
    }

    pub fn is_exact(&self) -> bool {
        self.kpow == 0.0 && !self.theta
    }

    pub fn lead(&self) -> Option<&Term> {
        self.terms.first()
    }

    /// Order of the germ: its leading monomial, or the error order when no
    /// term survived.
    fn order(&self) -> Option<&Mono> {
        self.terms.first().map(|t| &t.mono).or(self.err.as_ref())
    }

    fn theta_of(lead: &Term, kpow: f64) -> Germ {
        Germ {
            terms: vec![lead.clone()],
            err: None,
            kpow: if same(kpow, 0.0) { 0.0 } else { kpow },
            theta: true,
        }
    }

    pub fn neg(&self) -> Germ {
        self.scale(-1.0)
    }

    pub fn scale(&self, k: f64) -> Germ {
        if k == 0.0 {
            return Germ::zero();
        }
        let mut g = self.clone();
        for t in &mut g.terms {
            t.c *= k;
        }
        g
    }

    pub fn add(&self, o: &Germ) -> Option<Germ> {
        if self.is_zero() {
            return Some(o.clone());
        }
        if o.is_zero() {
            return Some(self.clone());
        }
        if same(self.kpow, o.kpow) && !self.theta && !o.theta {
            let mut terms = self.terms.clone();
            terms.extend(o.terms.iter().cloned());
            return Some(Germ::build(
                terms,
                max_mono(self.err.clone(), o.err.clone()),
                self.kpow,
                false,
            ));
        }
        let (a, b) = (self.lead()?, o.lead()?);
        match a.mono.dominance(o.order()?) {
            Ordering::Greater => Some(Germ::theta_of(a, self.kpow)),
            _ => match b.mono.dominance(self.order()?) {
                Ordering::Greater => Some(Germ::theta_of(b, o.kpow)),
                _ => None,
            },
        }
    }

    pub fn sub(&self, o: &Germ) -> Option<Germ> {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Germ) -> Option<Germ> {
        if self.is_zero() || o.is_zero() {
            return Some(Germ::zero());
        }
        let kpow = self.kpow + o.kpow;
        if self.theta || o.theta {
            let (a, b) = (self.lead()?, o.lead()?);
            let t = Term {
                c: a.c * b.c,
                mono: a.mono.mul(&b.mono),
            };
            return Some(Germ::theta_of(&t, kpow));
        }
        let mut terms = Vec::new();
        for a in &self.terms {
            for b in &o.terms {
                terms.push(Term {
                    c: a.c * b.c,
                    mono: a.mono.mul(&b.mono),
                });
            }
        }
        let mut err = None;
        if let Some(e) = &o.err {
            err = max_mono(err, Some(self.order()?.mul(e)));
        }
        if let Some(e) = &self.err {
            err = max_mono(err, Some(o.order()?.mul(e)));
        }
        Some(Germ::build(terms, err, kpow, false))
    }

    pub fn div(&self, o: &Germ) -> Option<Germ> {
        self.mul(&o.powf(-1.0)?)
    }

    pub fn powf(&self, c: f64) -> Option<Germ> {
        let c = snap(c);
        if c == 0.0 {
            return Some(Germ::constant(1.0));
        }
        if c == 1.0 {
            return Some(self.clone());
        }
        if self.is_zero() {
            return (c > 0.0).then(Germ::zero);
        }
        let lead = self.lead()?.clone();
        let integer = c.fract() == 0.0;
        if lead.c < 0.0 && !integer {
            return None;
        }
        let factor = if integer { lead.c.powi(c as i32) } else { lead.c.powf(c) };
        if !factor.is_finite() || factor == 0.0 {
            return None;
        }
        let head = Term {
            c: factor,
            mono: lead.mono.pow(c),
        };
        if self.theta {
            return Some(Germ::theta_of(&head, self.kpow * c));
        }
        if integer && (1.0..=16.0).contains(&c) {
            let mut acc = self.clone();
            for _ in 1..(c as usize) {
                acc = acc.mul(self)?;
            }
            return Some(acc);
        }
        // self = lead * (1 + u) with u -> 0.
        let inv_lead = Term {
            c: 1.0 / lead.c,
            mono: lead.mono.pow(-1.0),
        };
        let u_terms: Vec<Term> = self.terms[1..]
            .iter()
            .map(|t| Term {
                c: t.c * inv_lead.c,
                mono: t.mono.mul(&inv_lead.mono),
            })
            .collect();
        let u_err = self.err.as_ref().map(|e| e.mul(&inv_lead.mono));
        let u = Germ::build(u_terms, u_err, 0.0, false);
        let series = series(&u, |k| factorial_like(c, k), integer && c > 0.0)?;
        let head = Germ {
            terms: vec![head],
            err: None,
            kpow: self.kpow * c,
            theta: false,
        };
        head.mul(&series)
    }

    pub fn exp(&self) -> Option<Germ> {
        if self.kpow != 0.0 {
            return None;
        }
        if self.theta {
            let lead = self.lead()?;
            return lead.mono.vanishes().then(|| {
                Germ::theta_of(
                    &Term {
                        c: 1.0,
                        mono: Mono::one(),
                    },
                    0.0,
                )
            });
        }
        let mut c0 = 0.0;
        let mut t_power = 0.0;
        let mut phi: Vec<(f64, f64)> = Vec::new();
        let mut small = Vec::new();
        for t in &self.terms {
            let m = &t.mono;
            if !m.phi.is_empty() {
                if m.phi[0].1 > 0.0 {
                    return None;
                }
                small.push(t.clone());
            } else if m.vanishes() {
                small.push(t.clone());
            } else if same(m.p, 0.0) && m.m == 0.0 {
                c0 += t.c;
            } else if same(m.p, 0.0) && same(m.m, 1.0) {
                // exp(c log(1/t)) = t^-c
                t_power -= t.c;
            } else if m.p < 0.0 && m.m == 0.0 {
                phi = merge_phi(&phi, &[(m.p, t.c)], 1.0);
            } else {
                return None;
            }
        }
        let mut theta = false;
        let mut small_err = None;
        if let Some(e) = &self.err {
            if e.vanishes() {
                small_err = Some(e.clone());
            } else if e.dominance(&Mono::one()) == Ordering::Equal {
                theta = true;
            } else {
                return None;
            }
        }
        let k = c0.exp();
        if !k.is_finite() || k == 0.0 {
            return None;
        }
        let head = Term {
            c: k,
            mono: Mono {
                p: snap(t_power),
                m: 0.0,
                phi,
            },
        };
        if theta {
            return Some(Germ::theta_of(&head, 0.0));
        }
        let s = Germ::build(small, small_err, 0.0, false);
        let mut inv_fact = 1.0;
        let series = series(
            &s,
            |j| {
                if j > 0 {
                    inv_fact /= j as f64;
                }
                inv_fact
            },
            false,
        )?;
        Germ {
            terms: vec![head],
            err: None,
            kpow: 0.0,
            theta: false,
        }
        .mul(&series)
    }

    pub fn ln(&self) -> Option<Germ> {
        if self.kpow != 0.0 {
            return None;
        }
        let lead = self.lead()?.clone();
        if lead.c <= 0.0 || lead.mono.m != 0.0 {
            return None;
        }
        let mut terms = vec![Term {
            c: lead.c.ln(),
            mono: Mono::one(),
        }];
        if lead.mono.p != 0.0 {
            // ln t^p = -p log(1/t)
            terms.push(Term {
                c: -lead.mono.p,
                mono: Mono {
                    p: 0.0,
                    m: 1.0,
                    phi: Vec::new(),
                },
            });
        }
        for &(q, a) in &lead.mono.phi {
            terms.push(Term {
                c: a,
                mono: Mono::power(q),
            });
        }
        if self.theta {
            return Some(Germ::build(terms, Some(Mono::one()), 0.0, false));
        }
        let head = Germ::build(terms, None, 0.0, false);
        let inv = Term {
            c: 1.0 / lead.c,
            mono: lead.mono.pow(-1.0),
        };
        let u = Germ::build(
            self.terms[1..]
                .iter()
                .map(|t| Term {
                    c: t.c * inv.c,
                    mono: t.mono.mul(&inv.mono),
                })
                .collect(),
            self.err.as_ref().map(|e| e.mul(&inv.mono)),
            0.0,
            false,
        );
        if u.is_zero() {
            return Some(head);
        }
        // ln(1 + u) = sum (-1)^(k+1) u^k / k, starting at k = 1.
        let tail = series(
            &u,
            |k| {
                if k == 0 {
                    0.0
                } else {
                    let s = if k % 2 == 1 { 1.0 } else { -1.0 };
                    s / k as f64
                }
            },
            false,
        )?;
        head.add(&tail)
    }

    pub fn abs(&self) -> Option<Germ> {
        if self.is_zero() {
            return Some(Germ::zero());
        }
        let lead = self.lead()?;
        Some(if lead.c < 0.0 { self.neg() } else { self.clone() })
    }

    /// Antiderivative in `t`. The flag reports whether `int_0^t` converges, in
    /// which case the returned germ is that integral; otherwise it is some
    /// antiderivative, fixed only up to an additive constant.
    pub fn antiderivative(&self) -> Option<(Germ, bool)> {
        if self.is_zero() {
            return Some((Germ::zero(), true));
        }
        let convergent = self.order()?.integrable();
        if self.theta {
            let lead = self.lead()?;
            let h = term_antiderivative(lead)?;
            let hl = h.lead()?;
            return Some((Germ::theta_of(hl, self.kpow), convergent));
        }
        let mut acc = Germ {
            terms: Vec::new(),
            err: None,
            kpow: self.kpow,
            theta: false,
        };
        for t in &self.terms {
            let mut h = term_antiderivative(t)?;
            h.kpow = self.kpow;
            acc = acc.add(&h)?;
        }
        if let Some(e) = &self.err {
            let ie = mono_antiderivative_order(e)?;
            acc = Germ::build(acc.terms, max_mono(acc.err, Some(ie)), acc.kpow, false);
        }
        Some((acc, convergent))
    }

    /// Whether `int_0 |g| dt` converges.
    pub fn integrable(&self) -> Option<bool> {
        if self.is_zero() {
            return Some(true);
        }
        Some(self.order()?.integrable())
    }

    /// Evaluates the explicit terms at `t`.
    #[cfg(test)]
    pub fn eval_terms(&self, t: f64) -> f64 {
        let l = (1.0 / t).ln();
        self.terms
            .iter()
            .map(|term| {
                let m = &term.mono;
                let phi: f64 = m.phi.iter().map(|(q, a)| a * t.powf(*q)).sum();
                term.c * t.powf(m.p) * l.powf(m.m) * phi.exp()
            })
            .sum()
    }
}

/// `sum_k coef(k) u^k` for `k = 0..`, truncated with an error of order
/// `lead(u)^(K+1)` unless `terminating` says the coefficients vanish beyond
/// the available terms.
fn series(u: &Germ, mut coef: impl FnMut(usize) -> f64, terminating: bool) -> Option<Germ> {
    let c0 = coef(0);
    let mut acc = Germ::constant(c0);
    if u.is_zero() {
        return Some(acc);
    }
    let order = u.order()?.clone();
    if !order.vanishes() {
        return None;
    }
    let mut power = Germ::constant(1.0);
    let mut last = 0;
    for k in 1..=MAX_TERMS {
        let ck = coef(k);
        power = power.mul(u)?;
        last = k;
        if ck == 0.0 {
            if terminating {
                break;
            }
            continue;
        }
        acc = acc.add(&power.scale(ck))?;
    }
    if !(terminating && coef(last + 1) == 0.0) {
        let e = order.pow((MAX_TERMS + 1) as f64);
        acc = Germ::build(acc.terms, max_mono(acc.err, Some(e)), 0.0, false);
    }
    Some(acc)
}

fn term_antiderivative(t: &Term) -> Option<Germ> {
    let m = &t.mono;
    if !m.phi.is_empty() {
        // int g e^Phi ~ g e^Phi / Phi' with relative error t^(-q0).
        let dphi = Germ::build(
            m.phi
                .iter()
                .map(|&(q, a)| Term {
                    c: a * q,
                    mono: Mono::power(snap(q - 1.0)),
                })
                .collect(),
            None,
            0.0,
            false,
        );
        let inv = dphi.powf(-1.0)?;
        let main = Germ::term(t.c, m.clone()).mul(&inv)?;
        let q0 = m.phi[0].0;
        let e = main.lead()?.mono.mul(&Mono::power(-q0));
        return Some(Germ::build(main.terms, max_mono(main.err, Some(e)), 0.0, false));
    }
    if same(m.p, -1.0) {
        if same(m.m, -1.0) {
            return None;
        }
        let k = m.m + 1.0;
        return Some(Germ::term(
            -t.c / k,
            Mono {
                p: 0.0,
                m: snap(k),
                phi: Vec::new(),
            },
        ));
    }
    // int t^p L^m = t^(p+1)/(p+1) sum_j (m)_j L^(m-j) / (p+1)^j
    let q = m.p + 1.0;
    let mut terms = Vec::new();
    let mut falling = 1.0;
    let mut err = None;
    for j in 0..=MAX_TERMS {
        if falling == 0.0 {
            break;
        }
        terms.push(Term {
            c: t.c * falling / q.powi(j as i32 + 1),
            mono: Mono {
                p: snap(q),
                m: snap(m.m - j as f64),
                phi: Vec::new(),
            },
        });
        falling *= m.m - j as f64;
        if j == MAX_TERMS && falling != 0.0 {
            err = Some(Mono {
                p: snap(q),
                m: snap(m.m - j as f64 - 1.0),
                phi: Vec::new(),
            });
        }
    }
    Some(Germ::build(terms, err, 0.0, false))
}

fn mono_antiderivative_order(e: &Mono) -> Option<Mono> {
    let g = term_antiderivative(&Term {
        c: 1.0,
        mono: e.clone(),
    })?;
    g.order().cloned()
}

/// Germ of `e` at the endpoint described by `chart`, or `None` when the
/// expression leaves the supported class there.
pub fn germ_of(e: &Expr, chart: Chart) -> Option<Germ> {
    let x = Germ::chart_x(chart);
    build(e, &x)
}

fn build(e: &Expr, x: &Germ) -> Option<Germ> {
    match e {
        Expr::Num(v) => Some(Germ::constant(*v)),
        Expr::Var => Some(x.clone()),
        Expr::Neg(a) => Some(build(a, x)?.neg()),
        Expr::Add(a, b) => build(a, x)?.add(&build(b, x)?),
        Expr::Sub(a, b) => build(a, x)?.sub(&build(b, x)?),
        Expr::Mul(a, b) => build(a, x)?.mul(&build(b, x)?),
        Expr::Div(a, b) => build(a, x)?.div(&build(b, x)?),
        Expr::Pow(a, p) => build(a, x)?.powf(*p),
        Expr::Call(f, a) => {
            let g = build(a, x)?;
            match f {
                Func::Exp => g.exp(),
                Func::Log => g.ln(),
                Func::Sqrt => g.powf(0.5),
                Func::Abs => g.abs(),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn g(src: &str, chart: Chart) -> Germ {
        germ_of(&parse(src).unwrap(), chart).unwrap()
    }

    fn check_close(src: &str, chart: Chart, t: f64, rtol: f64) {
        let e = parse(src).unwrap();
        let germ = germ_of(&e, chart).unwrap();
        let want = e.eval(chart.x(t)).unwrap();
        let got = germ.eval_terms(t);
        assert!(
            (got - want).abs() <= rtol * want.abs().max(1e-300),
            "{src}: {got} vs {want}"
        );
    }

    #[test]
    fn power_laws_at_each_kind_of_endpoint() {
        let at0 = g("x^-1.5", Chart::Lower(0.0));
        assert_eq!(at0.lead().unwrap().mono, Mono::power(-1.5));
        let at_inf = g("3*x^2 + x", Chart::PosInf);
        assert_eq!(at_inf.lead().unwrap().mono, Mono::power(-2.0));
        assert_eq!(at_inf.lead().unwrap().c, 3.0);
        let at1 = g("1/(1 - x)", Chart::Upper(1.0));
        assert_eq!(at1.lead().unwrap().mono, Mono::power(-1.0));
    }

    #[test]
    fn expansions_match_values() {
        check_close("sqrt(x) + x^2", Chart::PosInf, 1e-3, 1e-12);
        check_close("sqrt(1 + x)", Chart::Lower(0.0), 1e-2, 1e-12);
        check_close("1/(x*(1 - x))", Chart::Upper(1.0), 1e-3, 1e-10);
        check_close("exp(-x^2)*x", Chart::PosInf, 0.2, 1e-12);
        check_close("log(x)", Chart::Lower(0.0), 1e-4, 1e-12);
        check_close("exp(1/x)", Chart::Lower(0.0), 0.1, 1e-12);
    }

    #[test]
    fn exact_cancellation_gives_next_order() {
        let d = g("sqrt(x^2 + 1) - x", Chart::PosInf);
        let lead = d.lead().unwrap();
        assert_eq!(lead.mono, Mono::power(1.0));
        assert!((lead.c - 0.5).abs() < 1e-14);
    }

    #[test]
    fn integrability_of_leading_terms() {
        let cases = [
            ("x^-0.5", Chart::Lower(0.0), true),
            ("x^-1", Chart::Lower(0.0), false),
            ("1/(x*log(x)^2)", Chart::Lower(0.0), true),
            ("1/(x*abs(log(x)))", Chart::Lower(0.0), false),
            ("x^-2", Chart::PosInf, true),
            ("x^-1", Chart::PosInf, false),
            ("exp(-x)", Chart::PosInf, true),
            ("exp(x)", Chart::PosInf, false),
        ];
        for (src, chart, want) in cases {
            let f = g(src, chart);
            let h = f.mul(&Germ::chart_jacobian(chart)).unwrap();
            assert_eq!(h.integrable(), Some(want), "{src}");
        }
    }

    #[test]
    fn antiderivatives() {
        // int_0^t tau^-0.5 = 2 sqrt(t)
        let (h, conv) = Germ::term(1.0, Mono::power(-0.5)).antiderivative().unwrap();
        assert!(conv);
        assert!((h.eval_terms(0.01) - 0.2).abs() < 1e-14);
        // 1/t integrates to -log(1/t) + C
        let (h, conv) = Germ::term(2.0, Mono::power(-1.0)).antiderivative().unwrap();
        assert!(!conv);
        assert_eq!(h.lead().unwrap().mono.m, 1.0);
        assert_eq!(h.lead().unwrap().c, -2.0);
        // t log(1/t): exact two-term antiderivative
        let (h, _) = Germ::term(
            1.0,
            Mono {
                p: 1.0,
                m: 1.0,
                phi: vec![],
            },
        )
        .antiderivative()
        .unwrap();
        let t: f64 = 0.05;
        let want = t * t / 2.0 * (1.0 / t).ln() + t * t / 4.0;
        assert!((h.eval_terms(t) - want).abs() < 1e-15);
    }

    #[test]
    fn unknown_constants_cancel() {
        let rho = Germ {
            kpow: 1.0,
            ..Germ::term(2.0, Mono::power(-3.0))
        };
        let s = Germ {
            kpow: 1.0,
            ..Germ::term(5.0, Mono::power(-2.0))
        };
        let r = s.div(&rho).unwrap();
        assert!(r.is_exact());
        assert_eq!(r.lead().unwrap().mono, Mono::power(1.0));
    }

    #[test]
    fn leaves_unsupported_forms() {
        assert!(germ_of(&parse("exp(x*log(x))").unwrap(), Chart::PosInf).is_none());
        assert!(germ_of(&parse("log(log(x))").unwrap(), Chart::PosInf).is_none());
    }
}
