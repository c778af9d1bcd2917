//! The radially symmetric vortex branch ψ_{m0}(r; a), ω(a).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::{basis_values, eigenvalue, ln_factorial, ModeIndex};
use crate::radial::RadialDiscretization;

pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 25;
pub const POSITIVITY_RMAX: f64 = 5.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrimaryBranchPoint {
    pub m0: u32,
    pub a: f64,
    pub omega: f64,
    /// ψ = Σ coeffs[n] e_{m0,n}.
    pub coeffs: Vec<f64>,
    pub residual: f64,
    /// ψ > 0 on (0, POSITIVITY_RMAX]; informational.
    pub positive: bool,
}

impl PrimaryBranchPoint {
    pub fn psi(&self, r: f64) -> f64 {
        basis_values(self.m0, self.coeffs.len(), r).iter().zip(&self.coeffs).map(|(e, c)| e * c).sum()
    }

    pub fn psi_at_nodes(&self, disc: &RadialDiscretization) -> Result<Vec<f64>> {
        disc.expand(self.m0 as i32, &self.coeffs)
    }

    /// Chemical potential μ = ω − m0 Ω.
    pub fn mu(&self, omega_rot: f64) -> f64 {
        self.omega - self.m0 as f64 * omega_rot
    }
}

/// ω_{m0,0} = (2m0)!/(4^{m0} (m0!)²).
pub fn omega_slope(m0: u32) -> f64 {
    (ln_factorial(2 * m0) - m0 as f64 * 4f64.ln() - 2.0 * ln_factorial(m0)).exp()
}

pub fn solve_primary(m0: u32, a: f64, disc: &RadialDiscretization) -> Result<PrimaryBranchPoint> {
    solve_primary_from(m0, a, disc, None)
}

pub fn solve_primary_from(
    m0: u32,
    a: f64,
    disc: &RadialDiscretization,
    guess: Option<&PrimaryBranchPoint>,
) -> Result<PrimaryBranchPoint> {
    if m0 == 0 {
        return Err(Error::InvalidArgument("m0 must be positive".into()));
    }
    if !(a >= 0.0 && a.is_finite()) {
        return Err(Error::InvalidArgument(format!("amplitude a = {a}")));
    }
    disc.check_mode(m0 as i32)?;
    let n = disc.n_r();
    let lambda0 = eigenvalue(ModeIndex::new(m0 as i32, 0)) as f64;
    if a == 0.0 {
        return Ok(PrimaryBranchPoint { m0, a, omega: lambda0, coeffs: vec![0.0; n], residual: 0.0, positive: true });
    }
    let table = disc.basis_table(m0 as i32)?;
    let w = DVector::from_column_slice(disc.weights());
    let lam = DVector::from_fn(n, |k, _| eigenvalue(ModeIndex::new(m0 as i32, k as u32)) as f64);

    let (mut c, mut omega) = match guess {
        Some(g) if g.m0 == m0 && g.coeffs.len() == n && g.a > 0.0 => {
            let s = a / g.a;
            (DVector::from_iterator(n, g.coeffs.iter().map(|x| x * s)), g.omega + (g.omega - lambda0) * (s * s - 1.0))
        }
        _ => {
            let mut c = DVector::zeros(n);
            c[0] = a;
            (c, lambda0 + omega_slope(m0) * a * a)
        }
    };
    c[0] = a;

    let residual_of = |c: &DVector<f64>, omega: f64| -> (DVector<f64>, DVector<f64>) {
        let u = &table * c;
        let cubic = DVector::from_iterator(u.len(), u.iter().zip(w.iter()).map(|(x, wk)| wk * x * x * x));
        let f = lam.zip_map(c, |l, ck| (l - omega) * ck) + table.transpose() * cubic;
        (f, u)
    };

    let (mut f, mut u) = residual_of(&c, omega);
    let mut res = f.norm();
    let mut iter = 0;
    while res > NEWTON_TOL {
        if iter == NEWTON_MAX_ITER || !res.is_finite() {
            return Err(Error::NewtonDivergence { iterations: iter, residual: res });
        }
        iter += 1;
        let mut scaled = table.clone();
        for k in 0..scaled.nrows() {
            let s = 3.0 * w[k] * u[k] * u[k];
            scaled.row_mut(k).scale_mut(s);
        }
        let mut jc = table.transpose() * scaled;
        for k in 0..n {
            jc[(k, k)] += lam[k] - omega;
        }
        // unknowns: c_1..c_{n-1}, ω
        let mut jac = DMatrix::zeros(n, n);
        jac.view_mut((0, 0), (n, n - 1)).copy_from(&jc.columns(1, n - 1));
        jac.set_column(n - 1, &(-&c));
        let delta = jac.lu().solve(&(-&f)).ok_or_else(|| Error::Singular("primary Newton".into()))?;
        for k in 1..n {
            c[k] += delta[k - 1];
        }
        omega += delta[n - 1];
        let (f2, u2) = residual_of(&c, omega);
        f = f2;
        u = u2;
        res = f.norm();
    }
    let coeffs: Vec<f64> = c.iter().copied().collect();
    let mut point = PrimaryBranchPoint { m0, a, omega, coeffs, residual: res, positive: true };
    point.positive = (1..=400).all(|i| point.psi(POSITIVITY_RMAX * i as f64 / 400.0) > 0.0);
    Ok(point)
}

pub fn continue_branch(m0: u32, a_grid: &[f64], disc: &RadialDiscretization) -> Result<Vec<PrimaryBranchPoint>> {
    if a_grid.is_empty() || a_grid[0] < 0.0 || a_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("a_grid must be nonempty, nonnegative and strictly ascending".into()));
    }
    let mut out: Vec<PrimaryBranchPoint> = Vec::with_capacity(a_grid.len());
    for &a in a_grid {
        let p = solve_primary_from(m0, a, disc, out.last())
            .map_err(|e| Error::InvalidArgument(format!("continuation failed at a = {a}: {e}")))?;
        out.push(p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc() -> RadialDiscretization {
        RadialDiscretization::new(24, 6).unwrap()
    }

    #[test]
    fn slopes() {
        assert!((omega_slope(1) - 0.5).abs() < 1e-15);
        assert!((omega_slope(2) - 0.375).abs() < 1e-15);
        assert!((omega_slope(3) - 0.3125).abs() < 1e-15);
    }

    #[test]
    fn trivial_point() {
        let p = solve_primary(1, 0.0, &disc()).unwrap();
        assert_eq!(p.omega, 4.0);
        assert!(p.coeffs.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn small_amplitude_frequency() {
        let d = disc();
        let p = solve_primary(2, 0.1, &d).unwrap();
        assert!((p.omega - 6.00375).abs() < 1e-4);
        assert!(p.residual <= NEWTON_TOL);
        assert_eq!(p.coeffs[0], 0.1);
        assert!(p.positive);
        // amplitude constraint ⟨ψ, e_{m0,0}⟩ = a through quadrature
        let e0 = d.basis_table(2).unwrap();
        let psi = p.psi_at_nodes(&d).unwrap();
        let proj: f64 = (0..psi.len()).map(|k| d.weights()[k] * psi[k] * e0[(k, 0)]).sum();
        assert!((proj - 0.1).abs() < 1e-13);
    }

    #[test]
    fn omega_increasing_along_branch() {
        let grid: Vec<f64> = (0..=5).map(|i| 0.02 * i as f64).collect();
        let br = continue_branch(2, &grid, &disc()).unwrap();
        assert!(br.windows(2).all(|w| w[1].omega > w[0].omega));
    }

    #[test]
    fn remainder_is_cubic() {
        let d = disc();
        let rem = |a: f64| {
            let p = solve_primary(1, a, &d).unwrap();
            p.coeffs[1..].iter().map(|c| c * c).sum::<f64>().sqrt()
        };
        let (a1, a2) = (0.05, 0.1);
        let slope = (rem(a2) / rem(a1)).ln() / (a2 / a1).ln();
        assert!(slope >= 2.7, "exponent {slope}");
    }

    #[test]
    fn rejects_bad_grid() {
        assert!(continue_branch(1, &[0.1, 0.05], &disc()).is_err());
        assert!(continue_branch(1, &[], &disc()).is_err());
    }
}
