//! Gauss–Legendre quadrature.

use std::sync::OnceLock;

/// Default rule size.
pub const DEFAULT_ORDER: usize = 20;

pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `cumulative[i][j] = int_{-1}^{nodes[i]} l_j`, with `l_j` the Lagrange
    /// basis polynomial of node `j`.
    pub cumulative: Vec<Vec<f64>>,
}

impl Rule {
    /// Nodes and weights on [-1, 1], found by Newton iteration on the
    /// Legendre polynomial.
    pub fn new(n: usize) -> Rule {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        let cumulative = cumulative_matrix(&nodes, &weights);
        Rule {
            nodes,
            weights,
            cumulative,
        }
    }

    /// Integrals of the degree `n - 1` interpolant of `values` (given at the
    /// nodes mapped to `[a, b]`) from `a` to each node.
    pub fn cumulate(&self, values: &[f64], a: f64, b: f64) -> Vec<f64> {
        let half = 0.5 * (b - a);
        self.cumulative
            .iter()
            .map(|row| half * row.iter().zip(values).map(|(s, v)| s * v).sum::<f64>())
            .collect()
    }

    pub fn integrate<E>(&self, f: &mut dyn FnMut(f64) -> Result<f64, E>, a: f64, b: f64) -> Result<f64, E> {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x)?;
        }
        Ok(acc * half)
    }
}

fn cumulative_matrix(nodes: &[f64], weights: &[f64]) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let basis = |j: usize, t: f64| {
        let mut v = 1.0;
        for m in 0..n {
            if m != j {
                v *= (t - nodes[m]) / (nodes[j] - nodes[m]);
            }
        }
        v
    };
    // Each basis polynomial has degree n - 1, so the rule itself is exact.
    nodes
        .iter()
        .map(|&xi| {
            let h = 0.5 * (xi + 1.0);
            (0..n)
                .map(|j| {
                    h * nodes
                        .iter()
                        .zip(weights)
                        .map(|(&t, &w)| w * basis(j, -1.0 + h * (t + 1.0)))
                        .sum::<f64>()
                })
                .collect()
        })
        .collect()
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

pub fn default_rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| Rule::new(DEFAULT_ORDER))
}

/// `int_a^b f` with the default rule.
pub fn integrate<E>(f: &mut dyn FnMut(f64) -> Result<f64, E>, a: f64, b: f64) -> Result<f64, E> {
    default_rule().integrate(f, a, b)
}
