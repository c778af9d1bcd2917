//! Gauss–Laguerre rules in t = 2r² for radial integrals ∫₀^∞ f(r) r dr whose
//! integrand is (polynomial in r²)·exp(−2r²).

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Rule with `count` nodes in t = 2r², for quartic products of basis functions.
    pub fn with_nodes(count: usize) -> Self {
        Self::with_nodes_scaled(count, 2.0)
    }

    /// Rule in t = s·r²; s = 1 suits products of two basis functions (weight e^{−r²}).
    pub fn with_nodes_scaled(count: usize, s: f64) -> Self {
        assert!(count >= 2, "need at least two nodes");
        let t = laguerre_nodes(count);
        let mut nodes = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        for &tk in &t {
            nodes.push((tk / s).sqrt());
            // ∫ f r dr = (1/2s) ∫ f(√(t/s)) dt, with the Gauss weight on e^{-t} divided back out.
            weights.push(christoffel_scaled_weight(count, tk) / (2.0 * s));
        }
        Self { nodes, weights }
    }

    /// Smallest rule whose declared exactness covers total r-degree `degree`.
    pub fn for_degree(degree: usize) -> Self {
        Self::with_nodes(degree / 2 + 2)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Largest total polynomial degree in r (of the factor multiplying e^{−2r²})
    /// the rule is declared exact for: node count ≥ degree/2 + 2.
    pub fn exact_degree(&self) -> usize {
        2 * (self.nodes.len() - 2)
    }

    pub fn check_degree(&self, degree: usize) -> Result<()> {
        if degree > self.exact_degree() {
            return Err(Error::Resolution { degree, nodes: self.len(), max: self.exact_degree() });
        }
        Ok(())
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&r, &w)| w * f(r)).sum()
    }
}

/// Zeros of L_N via Golub–Welsch, then polished by Newton on the three-term recurrence.
fn laguerre_nodes(n: usize) -> Vec<f64> {
    let jac = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            (2 * i + 1) as f64
        } else if i + 1 == j || j + 1 == i {
            i.max(j) as f64
        } else {
            0.0
        }
    });
    let mut t: Vec<f64> = jac.symmetric_eigenvalues().iter().copied().collect();
    t.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for tk in t.iter_mut() {
        for _ in 0..4 {
            let (ln, lnm1) = laguerre_pair(n, *tk);
            let denom = n as f64 * (ln - lnm1);
            if denom == 0.0 {
                break;
            }
            let step = *tk * ln / denom;
            *tk -= step;
            if step.abs() <= 1e-15 * tk.abs() {
                break;
            }
        }
    }
    t
}

/// (L_n(t), L_{n−1}(t)) up to a common positive factor.
fn laguerre_pair(n: usize, t: f64) -> (f64, f64) {
    let mut prev = 1.0;
    let mut cur = 1.0 - t;
    if n == 1 {
        return (cur, prev);
    }
    for k in 1..n {
        let next = ((2 * k + 1) as f64 - t) * cur / (k + 1) as f64 - k as f64 * prev / (k + 1) as f64;
        prev = cur;
        cur = next;
        if cur.abs() > 1e200 {
            prev *= 1e-200;
            cur *= 1e-200;
        }
    }
    (cur, prev)
}

/// w_k e^{t_k} = 1 / Σ_{j<N} L_j(t_k)² e^{−t_k}, summed with a running log scale.
fn christoffel_scaled_weight(n: usize, t: f64) -> f64 {
    // true L_j = p_j · e^{s}
    let mut s = -t / 2.0;
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut acc = 1.0;
    for j in 0..n - 1 {
        let next = if j == 0 {
            1.0 - t
        } else {
            (((2 * j + 1) as f64 - t) * cur - j as f64 * prev) / (j + 1) as f64
        };
        prev = cur;
        cur = next;
        acc += cur * cur;
        if cur.abs() > 1e100 {
            prev *= 1e-100;
            cur *= 1e-100;
            acc *= 1e-200;
            s += 100.0 * std::f64::consts::LN_10;
        }
    }
    (-(acc.ln()) - 2.0 * s).exp()
}
