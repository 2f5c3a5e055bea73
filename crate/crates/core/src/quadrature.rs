//! Gauss rules from the Golub-Welsch eigenproblem.

use alloc::vec::Vec;

use faer::{Mat, Side};

use crate::error::{invalid, Error, Result};

/// Nodes and weights of an n-point rule.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussRule {
    /// Abscissae, ascending.
    pub nodes: Vec<f64>,
    /// Weights matching `nodes`.
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Sum of w_i f(x_i).
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// True for the empty rule.
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn golub_welsch(n: usize, offdiag: impl Fn(usize) -> f64, mu0: f64) -> Result<GaussRule> {
    if n == 0 {
        return Err(invalid("order", "must be >= 1"));
    }
    let mut j = Mat::<f64>::zeros(n, n);
    for k in 1..n {
        let b = offdiag(k);
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let evd = j.self_adjoint_eigen(Side::Lower).map_err(|_| Error::EigenNonConvergence { dim: n })?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        nodes.push(s[i]);
        weights.push(mu0 * u[(0, i)] * u[(0, i)]);
    }
    // symmetric rules: enforce exact symmetry of the computed nodes and weights
    for i in 0..n / 2 {
        let k = n - 1 - i;
        let x = 0.5 * (nodes[k] - nodes[i]);
        let w = 0.5 * (weights[k] + weights[i]);
        nodes[i] = -x;
        nodes[k] = x;
        weights[i] = w;
        weights[k] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(GaussRule { nodes, weights })
}

/// Gauss-Hermite rule for the weight exp(-u^2) on the real line.
pub fn gauss_hermite(n: usize) -> Result<GaussRule> {
    golub_welsch(n, |k| (0.5 * k as f64).sqrt(), core::f64::consts::PI.sqrt())
}

/// Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> Result<GaussRule> {
    golub_welsch(
        n,
        |k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        },
        2.0,
    )
}

/// Gauss-Legendre rule mapped onto [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Result<GaussRule> {
    let r = gauss_legendre(n)?;
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    Ok(GaussRule {
        nodes: r.nodes.iter().map(|x| mid + half * x).collect(),
        weights: r.weights.iter().map(|w| half * w).collect(),
    })
}
