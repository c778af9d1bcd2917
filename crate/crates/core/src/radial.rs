//! Galerkin discretization of radial operators in the basis {e_{|m|,n}}_{n<N_r}.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::hermite::{eigenvalue, fill_basis_values, ModeIndex};
use crate::quadrature::QuadratureRule;

pub const DEFAULT_NR: usize = 48;

#[derive(Debug, Clone)]
pub struct RadialDiscretization {
    n_r: usize,
    max_m: u32,
    rule: QuadratureRule,
}

impl RadialDiscretization {
    /// The rule resolves quartic products of every retained basis function.
    pub fn new(n_r: usize, max_m: u32) -> Result<Self> {
        if n_r < 8 {
            return Err(Error::InvalidArgument(format!("N_r = {n_r} < 8")));
        }
        let degree = 4 * max_m as usize + 8 * (n_r - 1);
        Ok(Self { n_r, max_m, rule: QuadratureRule::for_degree(degree) })
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn max_m(&self) -> u32 {
        self.max_m
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn nodes(&self) -> &[f64] {
        self.rule.nodes()
    }

    pub fn weights(&self) -> &[f64] {
        self.rule.weights()
    }

    pub fn check_mode(&self, m: i32) -> Result<()> {
        if m.unsigned_abs() > self.max_m {
            return Err(Error::UnsupportedMode { m, max: self.max_m });
        }
        Ok(())
    }

    /// Q × N_r table of e_{|m|,n}(r_k).
    pub fn basis_table(&self, m: i32) -> Result<DMatrix<f64>> {
        self.check_mode(m)?;
        let q = self.rule.len();
        let mut t = DMatrix::zeros(q, self.n_r);
        let mut row = vec![0.0; self.n_r];
        for (k, &r) in self.rule.nodes().iter().enumerate() {
            fill_basis_values(m.unsigned_abs(), r, &mut row);
            for (n, v) in row.iter().enumerate() {
                t[(k, n)] = *v;
            }
        }
        Ok(t)
    }

    /// Values at the nodes of Σ c_n e_{|m|,n}.
    pub fn expand(&self, m: i32, coeffs: &[f64]) -> Result<Vec<f64>> {
        let t = self.basis_table(m)?;
        let c = DVector::from_column_slice(coeffs);
        Ok((t.columns(0, coeffs.len()) * c).iter().copied().collect())
    }

    /// Galerkin coefficients ⟨f, e_{|m|,n}⟩ of node samples f.
    pub fn project(&self, m: i32, values: &[f64]) -> Result<Vec<f64>> {
        let t = self.basis_table(m)?;
        let wf = DVector::from_iterator(values.len(), values.iter().zip(self.weights()).map(|(v, w)| v * w));
        Ok((t.transpose() * wf).iter().copied().collect())
    }
}

/// A radial function sampled at the quadrature nodes; `degree` bounds the
/// polynomial factor in front of e^{−r²}.
#[derive(Debug, Clone)]
pub struct RadialPotential {
    pub values: Vec<f64>,
    pub degree: usize,
}

impl RadialPotential {
    pub fn zero(disc: &RadialDiscretization) -> Self {
        Self { values: vec![0.0; disc.rule().len()], degree: 0 }
    }

    /// f·g for f, g expanded in e_{|m_f|,·}, e_{|m_g|,·} with given coefficient counts.
    pub fn product_of_expansions(
        disc: &RadialDiscretization,
        (m_f, f): (i32, &[f64]),
        (m_g, g): (i32, &[f64]),
    ) -> Result<Self> {
        let fv = disc.expand(m_f, f)?;
        let gv = disc.expand(m_g, g)?;
        let degree = ModeIndex::new(m_f, f.len().saturating_sub(1) as u32).degree()
            + ModeIndex::new(m_g, g.len().saturating_sub(1) as u32).degree();
        Ok(Self { values: fv.iter().zip(&gv).map(|(a, b)| a * b).collect(), degree })
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * s).collect(), degree: self.degree }
    }
}

#[derive(Debug, Clone)]
pub struct LinearRadialOperator {
    pub m: i32,
    pub matrix: DMatrix<f64>,
    pub terms: Vec<String>,
}

pub fn assemble_schrodinger(m: i32, shift: f64, disc: &RadialDiscretization) -> Result<LinearRadialOperator> {
    disc.check_mode(m)?;
    let n = disc.n_r();
    let diag = DVector::from_fn(n, |k, _| eigenvalue(ModeIndex::new(m, k as u32)) as f64 - shift);
    Ok(LinearRadialOperator {
        m,
        matrix: DMatrix::from_diagonal(&diag),
        terms: vec![format!("-Lap_{m} + r^2"), format!("shift {shift}")],
    })
}

/// Entries ⟨V e_{|m_col|,n'}, e_{|m_row|,n}⟩.
pub fn assemble_multiplication(
    v: &RadialPotential,
    m_row: i32,
    m_col: i32,
    disc: &RadialDiscretization,
) -> Result<DMatrix<f64>> {
    let tr = disc.basis_table(m_row)?;
    let tc = disc.basis_table(m_col)?;
    let n1 = (disc.n_r() - 1) as u32;
    let degree = v.degree + ModeIndex::new(m_row, n1).degree() + ModeIndex::new(m_col, n1).degree();
    disc.rule().check_degree(degree)?;
    let mut scaled = tc;
    for (k, (w, val)) in disc.weights().iter().zip(&v.values).enumerate() {
        let s = w * val;
        scaled.row_mut(k).scale_mut(s);
    }
    let out = tr.transpose() * scaled;
    Ok(symmetrize_if_square(out, m_row == m_col))
}

fn symmetrize_if_square(a: DMatrix<f64>, sym: bool) -> DMatrix<f64> {
    if sym {
        (&a + a.transpose()) * 0.5
    } else {
        a
    }
}

/// [[A, B], [Bᵀ, D]].
pub fn block_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let k = d.nrows();
    let mut out = DMatrix::zeros(n + k, n + k);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((0, n), (n, k)).copy_from(b);
    out.view_mut((n, 0), (k, n)).copy_from(&b.transpose());
    out.view_mut((n, n), (k, k)).copy_from(d);
    out
}

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Ascending.
    pub values: Vec<f64>,
    /// Columns are orthonormal eigenvectors matching `values`.
    pub vectors: DMatrix<f64>,
}

pub fn symmetric_eigensolve(a: &DMatrix<f64>) -> Result<EigenDecomposition> {
    if !a.is_square() {
        return Err(Error::InvalidArgument("eigensolve needs a square matrix".into()));
    }
    let sym = (a + a.transpose()) * 0.5;
    let norm = sym.norm().max(f64::MIN_POSITIVE);
    let eig = SymmetricEigen::try_new(sym.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::EigenNonConvergence("implicit QR".into()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(sym.nrows(), sym.ncols());
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    let resid = (&sym * &vectors - &vectors * DMatrix::from_diagonal(&DVector::from_column_slice(&values))).norm();
    if !(resid <= 1e-9 * norm) {
        return Err(Error::EigenNonConvergence(format!("residual {resid:e} vs norm {norm:e}")));
    }
    Ok(EigenDecomposition { values, vectors })
}
