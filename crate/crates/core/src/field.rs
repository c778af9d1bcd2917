//! Complex fields U(r, θ) = Σ_j R_j(r) e^{ijθ} with R_j expanded in e_{|j|,n}.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::{basis_values, eigenvalue, ModeIndex};
use crate::radial::RadialDiscretization;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModalTerm {
    pub j: i32,
    pub coeffs: Vec<Complex64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ModalField {
    pub terms: Vec<ModalTerm>,
}

impl ModalField {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds Σ_n c_n e_{|j|,n}(r) e^{ijθ}, merging with an existing term of the same j.
    pub fn add_real(&mut self, j: i32, coeffs: &[f64]) {
        let c: Vec<Complex64> = coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.add(j, &c);
    }

    pub fn add(&mut self, j: i32, coeffs: &[Complex64]) {
        if let Some(t) = self.terms.iter_mut().find(|t| t.j == j) {
            if t.coeffs.len() < coeffs.len() {
                t.coeffs.resize(coeffs.len(), Complex64::new(0.0, 0.0));
            }
            for (a, b) in t.coeffs.iter_mut().zip(coeffs) {
                *a += b;
            }
        } else {
            self.terms.push(ModalTerm { j, coeffs: coeffs.to_vec() });
            self.terms.sort_by_key(|t| t.j);
        }
    }

    pub fn max_abs_j(&self) -> u32 {
        self.terms.iter().map(|t| t.j.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn radial_parts(&self, r: f64) -> Vec<(i32, Complex64)> {
        self.terms
            .iter()
            .map(|t| {
                let e = basis_values(t.j.unsigned_abs(), t.coeffs.len(), r);
                (t.j, t.coeffs.iter().zip(&e).map(|(c, v)| c * v).sum())
            })
            .collect()
    }

    pub fn eval_polar(&self, r: f64, theta: f64) -> Complex64 {
        self.radial_parts(r).iter().map(|(j, c)| c * Complex64::from_polar(1.0, *j as f64 * theta)).sum()
    }

    pub fn eval(&self, x: f64, y: f64) -> Complex64 {
        self.eval_polar(x.hypot(y), y.atan2(x))
    }

    /// e^{−i m0 φ} U(r, θ + φ): the rotation acting on perturbations of the charge-m0 vortex.
    pub fn rotated(&self, phi: f64, m0: u32) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| {
                    let f = Complex64::from_polar(1.0, (t.j - m0 as i32) as f64 * phi);
                    ModalTerm { j: t.j, coeffs: t.coeffs.iter().map(|c| c * f).collect() }
                })
                .collect(),
        }
    }

    /// Pointwise (−Δ + r² + iΩ∂_θ + |U|² − μ)U at (r, θ), using the modal form of the linear part.
    pub fn stationary_residual_at(&self, mu: f64, omega_rot: f64, r: f64, theta: f64) -> Complex64 {
        let mut lin = Complex64::new(0.0, 0.0);
        let mut u = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let e = basis_values(t.j.unsigned_abs(), t.coeffs.len(), r);
            let phase = Complex64::from_polar(1.0, t.j as f64 * theta);
            for (n, (c, v)) in t.coeffs.iter().zip(&e).enumerate() {
                let lam = eigenvalue(ModeIndex::new(t.j, n as u32)) as f64;
                lin += c * v * phase * (lam - mu - omega_rot * t.j as f64);
                u += c * v * phase;
            }
        }
        lin + u * u.norm_sqr()
    }

    /// max |residual| / max |μ U| over the sample points (r, θ).
    pub fn relative_stationary_residual(&self, mu: f64, omega_rot: f64, points: &[(f64, f64)]) -> f64 {
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for &(r, th) in points {
            num = num.max(self.stationary_residual_at(mu, omega_rot, r, th).norm());
            den = den.max(mu.abs() * self.eval_polar(r, th).norm());
        }
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }

    /// Galerkin coefficients of the stationary residual on the modes `out` (n < N_r).
    pub fn projected_residual(
        &self,
        mu: f64,
        omega_rot: f64,
        out: &[i32],
        disc: &RadialDiscretization,
    ) -> Result<Vec<(i32, Vec<Complex64>)>> {
        let jmin = self.terms.iter().map(|t| t.j).chain(out.iter().copied()).min().unwrap_or(0);
        let jmax = self.terms.iter().map(|t| t.j).chain(out.iter().copied()).max().unwrap_or(0);
        for t in &self.terms {
            disc.check_mode(t.j)?;
            if t.coeffs.len() > disc.n_r() {
                return Err(Error::InvalidArgument("field has more radial modes than the discretization".into()));
            }
        }
        // |U|²U has frequencies in [2jmin − jmax, 2jmax − jmin]; exact projection needs L > 4 span
        let span = (jmax - jmin) as usize;
        let l = 4 * span + 4;
        let q = disc.rule().len();
        let tables: Vec<_> = self.terms.iter().map(|t| disc.basis_table(t.j)).collect::<Result<_>>()?;
        // radial profiles at nodes
        let profiles: Vec<Vec<Complex64>> = self
            .terms
            .iter()
            .zip(&tables)
            .map(|(t, tab)| {
                (0..q).map(|i| t.coeffs.iter().enumerate().map(|(n, c)| c * tab[(i, n)]).sum()).collect()
            })
            .collect();
        let mut cubic = vec![vec![Complex64::new(0.0, 0.0); l]; q];
        for (i, row) in cubic.iter_mut().enumerate() {
            for (s, slot) in row.iter_mut().enumerate() {
                let th = 2.0 * std::f64::consts::PI * s as f64 / l as f64;
                let u: Complex64 = self
                    .terms
                    .iter()
                    .zip(&profiles)
                    .map(|(t, p)| p[i] * Complex64::from_polar(1.0, t.j as f64 * th))
                    .sum();
                *slot = u * u.norm_sqr();
            }
        }
        let mut result = Vec::with_capacity(out.len());
        for &j in out {
            disc.check_mode(j)?;
            let tab = disc.basis_table(j)?;
            let nhat: Vec<Complex64> = cubic
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .map(|(s, v)| v * Complex64::from_polar(1.0, -(j as f64) * 2.0 * std::f64::consts::PI * s as f64 / l as f64))
                        .sum::<Complex64>()
                        / l as f64
                })
                .collect();
            let own = self.terms.iter().find(|t| t.j == j);
            let coeffs: Vec<Complex64> = (0..disc.n_r())
                .map(|n| {
                    let proj: Complex64 = (0..q).map(|i| nhat[i] * tab[(i, n)] * disc.weights()[i]).sum();
                    let c = own.and_then(|t| t.coeffs.get(n)).copied().unwrap_or_default();
                    let lam = eigenvalue(ModeIndex::new(j, n as u32)) as f64;
                    c * (lam - mu - omega_rot * j as f64) + proj
                })
                .collect();
            result.push((j, coeffs));
        }
        Ok(result)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primary::solve_primary;

    #[test]
    fn primary_vortex_is_stationary() {
        let d = RadialDiscretization::new(24, 6).unwrap();
        let b = solve_primary(2, 0.1, &d).unwrap();
        let mut f = ModalField::new();
        f.add_real(2, &b.coeffs);
        let om = 0.4;
        let mu = b.mu(om);
        let res = f.projected_residual(mu, om, &[0, 1, 2, 3, 4], &d).unwrap();
        let norm: f64 = res.iter().flat_map(|(_, c)| c.iter()).map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        assert!(norm < 1e-10);
        let rel = f.relative_stationary_residual(mu, om, &[(0.3, 0.1), (1.2, 2.0), (2.2, -1.0), (0.77, 0.5)]);
        assert!(rel < 1e-6, "{rel}");
    }

    #[test]
    fn rotation_preserves_carrier() {
        let mut f = ModalField::new();
        f.add_real(2, &[0.1]);
        f.add_real(-1, &[0.01]);
        let g = f.rotated(0.7, 2);
        assert_eq!(g.terms.iter().find(|t| t.j == 2).unwrap().coeffs[0], Complex64::new(0.1, 0.0));
        let (x, y) = (0.3, 0.2);
        let th = 0.7f64;
        let lhs = g.eval(x, y);
        let (r, a) = (x.hypot(y), y.atan2(x));
        let rhs = f.eval_polar(r, a + th) * Complex64::from_polar(1.0, -2.0 * th);
        assert!((lhs - rhs).norm() < 1e-15);
    }
}
