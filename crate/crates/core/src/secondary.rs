//! Multi-vortex branches in the dihedral sector Fix(D_q), q = m − m0.
//!
//! Perturbations are v = e^{i m0 θ} Σ_k V_k(r) e^{ikqθ}, |k| ≤ K, with real radial
//! coefficients. The residual subtracts the primary equation, so v = 0 solves it exactly.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ModalField;
use crate::hermite::{eigenvalue, ModeIndex};
use crate::hessian::Crossing;
use crate::primary::PrimaryBranchPoint;
use crate::radial::{symmetric_eigensolve, RadialDiscretization};

pub const DEFAULT_K: usize = 4;
/// Accepted points have residual at or below this.
pub const SECONDARY_TOL: f64 = 1e-9;
const NEWTON_TOL: f64 = 1e-12;
const MAX_ITER: usize = 30;
const MAX_HALVINGS: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DihedralSector {
    pub m0: u32,
    pub m: i32,
    pub q: u32,
    pub k_max: usize,
    pub n_r: usize,
}

impl DihedralSector {
    pub fn new(m0: u32, m: i32, k_max: usize, n_r: usize) -> Result<Self> {
        if m0 == 0 {
            return Err(Error::InvalidArgument("m0 must be positive".into()));
        }
        if m <= m0 as i32 {
            return Err(Error::InvalidArgument(format!("block m = {m} must exceed m0 = {m0}")));
        }
        if k_max < 2 {
            return Err(Error::InvalidArgument(format!("K = {k_max} < 2")));
        }
        Ok(Self { m0, m, q: (m - m0 as i32) as u32, k_max, n_r })
    }

    pub fn harmonic(&self, k: i32) -> i32 {
        self.m0 as i32 + k * self.q as i32
    }

    /// Retained j = m0 + kq for k = −K..=K.
    pub fn harmonics(&self) -> Vec<i32> {
        let kk = self.k_max as i32;
        (-kk..=kk).map(|k| self.harmonic(k)).collect()
    }

    pub fn required_max_m(&self) -> u32 {
        self.harmonics().iter().map(|j| j.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn blocks(&self) -> usize {
        2 * self.k_max + 1
    }

    pub fn dim(&self) -> usize {
        self.blocks() * self.n_r
    }

    pub fn min_angular_points(&self) -> usize {
        4 * self.k_max + 1
    }

    /// Embeds a null vector [V; W] of H_m into the sector: V on k = +1, W on k = −1.
    pub fn embed_block_vector(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.n_r;
        if x.len() != 2 * n {
            return Err(Error::InvalidArgument(format!("block vector length {} != {}", x.len(), 2 * n)));
        }
        let mut out = vec![0.0; self.dim()];
        let kk = self.k_max;
        out[(kk + 1) * n..(kk + 2) * n].copy_from_slice(&x[..n]);
        out[(kk - 1) * n..kk * n].copy_from_slice(&x[n..]);
        Ok(out)
    }
}

/// Pseudo-spectral sector residual and Jacobian at fixed (branch, Ω).
pub struct SectorProblem {
    sector: DihedralSector,
    omega: f64,
    psi: Vec<f64>,
    weights: Vec<f64>,
    tables: Vec<DMatrix<f64>>,
    lambdas: Vec<Vec<f64>>,
    l: usize,
    // e^{ipα_l}, p = −2K..=2K
    twiddle: Vec<Vec<Complex64>>,
}

impl SectorProblem {
    pub fn new(sector: DihedralSector, branch: &PrimaryBranchPoint, disc: &RadialDiscretization) -> Result<Self> {
        Self::with_angular_points(sector, branch, disc, 4 * sector.k_max + 4)
    }

    pub fn with_angular_points(
        sector: DihedralSector,
        branch: &PrimaryBranchPoint,
        disc: &RadialDiscretization,
        l: usize,
    ) -> Result<Self> {
        if l < sector.min_angular_points() {
            return Err(Error::Aliasing(format!(
                "{l} angular points cannot resolve cubic terms of {} harmonics (need {})",
                sector.blocks(),
                sector.min_angular_points()
            )));
        }
        if branch.m0 != sector.m0 {
            return Err(Error::InvalidArgument(format!("branch m0 = {} in sector m0 = {}", branch.m0, sector.m0)));
        }
        if disc.n_r() != sector.n_r || branch.coeffs.len() != sector.n_r {
            return Err(Error::InvalidArgument("radial sizes of sector, branch and discretization differ".into()));
        }
        let js = sector.harmonics();
        let tables = js.iter().map(|&j| disc.basis_table(j)).collect::<Result<Vec<_>>>()?;
        let lambdas = js
            .iter()
            .map(|&j| (0..sector.n_r).map(|n| eigenvalue(ModeIndex::new(j, n as u32)) as f64).collect())
            .collect();
        let kk = sector.k_max as i32;
        let twiddle = (0..l)
            .map(|s| {
                let alpha = 2.0 * std::f64::consts::PI * s as f64 / l as f64;
                (-2 * kk..=2 * kk).map(|p| Complex64::from_polar(1.0, p as f64 * alpha)).collect()
            })
            .collect();
        Ok(Self {
            sector,
            omega: branch.omega,
            psi: branch.psi_at_nodes(disc)?,
            weights: disc.weights().to_vec(),
            tables,
            lambdas,
            l,
            twiddle,
        })
    }

    pub fn sector(&self) -> &DihedralSector {
        &self.sector
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.sector.dim() {
            return Err(Error::InvalidArgument(format!("coefficient length {} != {}", x.len(), self.sector.dim())));
        }
        Ok(())
    }

    fn profiles(&self, x: &[f64]) -> Vec<DVector<f64>> {
        let n = self.sector.n_r;
        self.tables
            .iter()
            .enumerate()
            .map(|(b, t)| t * DVector::from_column_slice(&x[b * n..(b + 1) * n]))
            .collect()
    }

    fn tw(&self, s: usize, p: i32) -> Complex64 {
        self.twiddle[s][(p + 2 * self.sector.k_max as i32) as usize]
    }

    fn linear_diag(&self, b: usize, omega_rot: f64) -> impl Iterator<Item = f64> + '_ {
        let k = b as f64 - self.sector.k_max as f64;
        let shift = self.omega + omega_rot * k * self.sector.q as f64;
        self.lambdas[b].iter().map(move |l| l - shift)
    }

    fn field_at_node(&self, prof: &[DVector<f64>], i: usize) -> Vec<Complex64> {
        let kk = self.sector.k_max as i32;
        (0..self.l)
            .map(|s| {
                let mut w = Complex64::new(self.psi[i], 0.0);
                for (b, p) in prof.iter().enumerate() {
                    w += p[i] * self.tw(s, b as i32 - kk);
                }
                w
            })
            .collect()
    }

    /// Galerkin residual G(x; a, Ω) on the retained modes.
    pub fn residual(&self, x: &[f64], omega_rot: f64) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let n = self.sector.n_r;
        let nb = self.sector.blocks();
        let kk = self.sector.k_max as i32;
        let q = self.weights.len();
        let prof = self.profiles(x);
        let mut nhat = vec![DVector::zeros(q); nb];
        for i in 0..q {
            let w = self.field_at_node(&prof, i);
            let p3 = self.psi[i].powi(3);
            let cubic: Vec<Complex64> = w.iter().map(|w| w * w.norm_sqr() - p3).collect();
            for (b, nh) in nhat.iter_mut().enumerate() {
                let k = b as i32 - kk;
                let s: Complex64 = cubic.iter().enumerate().map(|(s, c)| c * self.tw(s, k).conj()).sum();
                nh[i] = self.weights[i] * s.re / self.l as f64;
            }
        }
        let mut g = vec![0.0; x.len()];
        for b in 0..nb {
            let proj = self.tables[b].tr_mul(&nhat[b]);
            for (idx, lin) in self.linear_diag(b, omega_rot).enumerate() {
                g[b * n + idx] = lin * x[b * n + idx] + proj[idx];
            }
        }
        Ok(g)
    }

    /// ∂G/∂x, symmetric.
    pub fn jacobian(&self, x: &[f64], omega_rot: f64) -> Result<DMatrix<f64>> {
        self.check_len(x)?;
        let n = self.sector.n_r;
        let nb = self.sector.blocks();
        let kk = self.sector.k_max as i32;
        let q = self.weights.len();
        let prof = self.profiles(x);
        // a[p][i] = Fourier coefficient of 2|w|², b[p][i] of w², p = −2K..=2K
        let np = 4 * self.sector.k_max + 1;
        let mut fa = vec![vec![0.0; q]; np];
        let mut fb = vec![vec![0.0; q]; np];
        for i in 0..q {
            let w = self.field_at_node(&prof, i);
            for pi in 0..np {
                let p = pi as i32 - 2 * kk;
                let mut sa = Complex64::new(0.0, 0.0);
                let mut sb = Complex64::new(0.0, 0.0);
                for (s, w) in w.iter().enumerate() {
                    let t = self.tw(s, p).conj();
                    sa += 2.0 * w.norm_sqr() * t;
                    sb += w * w * t;
                }
                fa[pi][i] = sa.re / self.l as f64;
                fb[pi][i] = sb.re / self.l as f64;
            }
        }
        let mut jac = DMatrix::zeros(nb * n, nb * n);
        for b1 in 0..nb {
            for b2 in b1..nb {
                let (k1, k2) = (b1 as i32 - kk, b2 as i32 - kk);
                let ia = (k1 - k2 + 2 * kk) as usize;
                let ib = (k1 + k2 + 2 * kk) as usize;
                let mut scaled = self.tables[b2].clone();
                for i in 0..q {
                    let d = self.weights[i] * (fa[ia][i] + fb[ib][i]);
                    scaled.row_mut(i).scale_mut(d);
                }
                let blk = self.tables[b1].tr_mul(&scaled);
                jac.view_mut((b1 * n, b2 * n), (n, n)).copy_from(&blk);
                if b1 != b2 {
                    jac.view_mut((b2 * n, b1 * n), (n, n)).copy_from(&blk.transpose());
                }
            }
            for (idx, lin) in self.linear_diag(b1, omega_rot).enumerate() {
                jac[(b1 * n + idx, b1 * n + idx)] += lin;
            }
        }
        Ok(jac)
    }

    /// ∂G/∂Ω = −kq x_k.
    pub fn omega_derivative(&self, x: &[f64]) -> Vec<f64> {
        let n = self.sector.n_r;
        let kk = self.sector.k_max as f64;
        x.iter()
            .enumerate()
            .map(|(idx, v)| -((idx / n) as f64 - kk) * self.sector.q as f64 * v)
            .collect()
    }

    pub fn morse_count(&self, x: &[f64], omega_rot: f64) -> Result<(usize, f64)> {
        let eig = symmetric_eigensolve(&self.jacobian(x, omega_rot)?)?;
        let neg = eig.values.iter().filter(|&&l| l < 0.0).count();
        let min_abs = eig.values.iter().fold(f64::INFINITY, |acc, l| acc.min(l.abs()));
        Ok((neg, min_abs))
    }
}

/// Convenience wrapper for `SectorProblem::residual`.
pub fn assemble_g(
    sector: &DihedralSector,
    branch: &PrimaryBranchPoint,
    omega_rot: f64,
    coeffs: &[f64],
    disc: &RadialDiscretization,
) -> Result<Vec<f64>> {
    SectorProblem::new(*sector, branch, disc)?.residual(coeffs, omega_rot)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SecondaryBranchPoint {
    pub sector: DihedralSector,
    pub a: f64,
    pub b: f64,
    pub omega_rot: f64,
    /// ω of the underlying primary point; μ = ω − m0 Ω.
    pub omega: f64,
    pub psi: Vec<f64>,
    /// Real coefficients V_k, k = −K..=K, flattened block by block.
    pub coeffs: Vec<f64>,
    pub residual: f64,
    pub morse: Option<usize>,
    pub primary_morse: Option<usize>,
    pub min_abs_eigenvalue: Option<f64>,
    pub iterations: usize,
    pub morse_jump: bool,
}

impl SecondaryBranchPoint {
    pub fn mu(&self) -> f64 {
        self.omega - self.sector.m0 as f64 * self.omega_rot
    }

    pub fn block(&self, k: i32) -> &[f64] {
        let n = self.sector.n_r;
        let b = (k + self.sector.k_max as i32) as usize;
        &self.coeffs[b * n..(b + 1) * n]
    }

    /// v alone.
    pub fn perturbation_field(&self) -> ModalField {
        let mut f = ModalField::new();
        let kk = self.sector.k_max as i32;
        for k in -kk..=kk {
            f.add_real(self.sector.harmonic(k), self.block(k));
        }
        f
    }

    /// U = e^{i m0 θ} ψ + v.
    pub fn field(&self) -> ModalField {
        let mut f = self.perturbation_field();
        f.add_real(self.sector.m0 as i32, &self.psi);
        f
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest violation of φ(r,−θ) = conj φ(r,θ) = φ(r, θ + 2π/q), φ = e^{−i m0 θ} v.
    pub fn symmetry_defect(&self, samples: &[(f64, f64)]) -> f64 {
        let v = self.perturbation_field();
        let m0 = self.sector.m0 as f64;
        let zeta = 2.0 * std::f64::consts::PI / self.sector.q as f64;
        let phi = |r: f64, th: f64| v.eval_polar(r, th) * Complex64::from_polar(1.0, -m0 * th);
        samples
            .iter()
            .map(|&(r, th)| {
                let p = phi(r, th);
                (phi(r, -th) - p.conj()).norm().max((phi(r, th + zeta) - p).norm())
            })
            .fold(0.0, f64::max)
    }
}

/// Data shared by the points of one branch.
struct Continuation<'a> {
    problem: SectorProblem,
    branch: &'a PrimaryBranchPoint,
    f: DVector<f64>,
    omega_star: f64,
    /// Constraint ⟨v, f⟩ = scale · b.
    scale: f64,
    with_morse: bool,
}

struct Solved {
    x: Vec<f64>,
    omega_rot: f64,
    residual: f64,
    iterations: usize,
}

impl Continuation<'_> {
    /// Bordered Newton with backtracking on the residual norm.
    fn newton(&self, beta: f64, x0: Vec<f64>, om0: f64) -> Result<Solved> {
        self.newton_with(x0, om0, |x, _| {
            let c = self.f.as_slice().iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - beta;
            (self.f.as_slice().to_vec(), 0.0, c)
        })
    }

    /// Newton on G = 0 plus one scalar constraint given as (row over x, entry for Ω, value).
    fn newton_with<F>(&self, mut x: Vec<f64>, mut om: f64, constraint: F) -> Result<Solved>
    where
        F: Fn(&[f64], f64) -> (Vec<f64>, f64, f64),
    {
        let dim = x.len();
        let eval = |x: &[f64], om: f64| -> Result<(Vec<f64>, f64, f64)> {
            let g = self.problem.residual(x, om)?;
            let (_, _, c) = constraint(x, om);
            let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            Ok((g, c, n.hypot(c)))
        };
        let (mut g, mut c, mut norm) = eval(&x, om)?;
        for it in 0..MAX_ITER {
            if norm <= NEWTON_TOL {
                return Ok(Solved { x, omega_rot: om, residual: norm, iterations: it });
            }
            let jac = self.problem.jacobian(&x, om)?;
            let col = self.problem.omega_derivative(&x);
            let (row, row_om, _) = constraint(&x, om);
            let mut big = DMatrix::zeros(dim + 1, dim + 1);
            big.view_mut((0, 0), (dim, dim)).copy_from(&jac);
            for i in 0..dim {
                big[(i, dim)] = col[i];
                big[(dim, i)] = row[i];
            }
            big[(dim, dim)] = row_om;
            let mut rhs = DVector::from_iterator(dim + 1, g.iter().copied().chain(std::iter::once(c)));
            if !big.lu().solve_mut(&mut rhs) || rhs.iter().any(|v| !v.is_finite()) {
                return Err(Error::Singular("bordered sector Jacobian".into()));
            }
            let mut t = 1.0;
            loop {
                let xt: Vec<f64> = x.iter().zip(rhs.iter()).map(|(a, d)| a - t * d).collect();
                let ot = om - t * rhs[dim];
                let (gt, ct, nt) = eval(&xt, ot)?;
                if nt < (1.0 - 0.25 * t) * norm || (t == 1.0 && nt <= 1e-10) {
                    x = xt;
                    om = ot;
                    g = gt;
                    c = ct;
                    norm = nt;
                    break;
                }
                t *= 0.5;
                if t < 1.0 / 64.0 {
                    if norm <= 1e-2 * SECONDARY_TOL {
                        return Ok(Solved { x, omega_rot: om, residual: norm, iterations: it });
                    }
                    return Err(Error::NewtonDivergence { iterations: it, residual: norm });
                }
            }
        }
        if norm <= 1e-2 * SECONDARY_TOL {
            return Ok(Solved { x, omega_rot: om, residual: norm, iterations: MAX_ITER });
        }
        Err(Error::NewtonDivergence { iterations: MAX_ITER, residual: norm })
    }

    fn predictor(&self, b: f64) -> (Vec<f64>, f64) {
        (self.f.iter().map(|v| v * self.scale * b).collect(), self.omega_star)
    }

    fn point(&self, b: f64, s: Solved) -> Result<SecondaryBranchPoint> {
        let (morse, primary_morse, min_abs) = if self.with_morse {
            let (m, e) = self.problem.morse_count(&s.x, s.omega_rot)?;
            let zero = vec![0.0; s.x.len()];
            let (p, _) = self.problem.morse_count(&zero, s.omega_rot)?;
            (Some(m), Some(p), Some(e))
        } else {
            (None, None, None)
        };
        Ok(SecondaryBranchPoint {
            sector: *self.problem.sector(),
            a: self.branch.a,
            b,
            omega_rot: s.omega_rot,
            omega: self.branch.omega,
            psi: self.branch.coeffs.clone(),
            coeffs: s.x,
            residual: s.residual,
            morse,
            primary_morse,
            min_abs_eigenvalue: min_abs,
            iterations: s.iterations,
            morse_jump: false,
        })
    }

    /// Pseudo-arclength step from two accepted states toward target b, then a constrained correction.
    fn arclength(&self, b: f64, p0: &SecondaryBranchPoint, p1: &SecondaryBranchPoint) -> Result<Solved> {
        let mut tx: Vec<f64> = p1.coeffs.iter().zip(&p0.coeffs).map(|(a, b)| a - b).collect();
        let mut tom = p1.omega_rot - p0.omega_rot;
        let len = (tx.iter().map(|v| v * v).sum::<f64>() + tom * tom).sqrt();
        if len == 0.0 {
            return Err(Error::Singular("degenerate secant".into()));
        }
        tx.iter_mut().for_each(|v| *v /= len);
        tom /= len;
        let ds = len * (b - p1.b) / (p1.b - p0.b);
        let x0: Vec<f64> = p1.coeffs.iter().zip(&tx).map(|(a, t)| a + ds * t).collect();
        let om0 = p1.omega_rot + ds * tom;
        let base = p1.coeffs.clone();
        let s = self.newton_with(x0, om0, |x, om| {
            let c = x.iter().zip(&base).zip(&tx).map(|((x, b), t)| (x - b) * t).sum::<f64>() + (om - p1.omega_rot) * tom - ds;
            (tx.clone(), tom, c)
        })?;
        self.newton(self.scale * b, s.x, s.omega_rot)
    }
}

fn make_continuation<'a>(
    sector: &DihedralSector,
    branch: &'a PrimaryBranchPoint,
    crossing: &Crossing,
    scale: f64,
    disc: &RadialDiscretization,
    with_morse: bool,
) -> Result<Continuation<'a>> {
    if crossing.resonant {
        return Err(Error::Resonant { omega: crossing.omega, zeros: 2 });
    }
    if crossing.m != sector.m {
        return Err(Error::InvalidArgument(format!("crossing in block {} for sector block {}", crossing.m, sector.m)));
    }
    let problem = SectorProblem::new(*sector, branch, disc)?;
    let f = DVector::from_vec(sector.embed_block_vector(&crossing.eigenvector)?);
    let f = f.normalize();
    Ok(Continuation { problem, branch, f, omega_star: crossing.omega, scale, with_morse })
}

/// v = b f, Ω = Ω*; residual evaluated but not reduced.
pub fn predictor(
    sector: &DihedralSector,
    branch: &PrimaryBranchPoint,
    crossing: &Crossing,
    b: f64,
    disc: &RadialDiscretization,
) -> Result<SecondaryBranchPoint> {
    let c = make_continuation(sector, branch, crossing, 1.0, disc, false)?;
    let (x, om) = c.predictor(b);
    let g = c.problem.residual(&x, om)?;
    let residual = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    c.point(b, Solved { x, omega_rot: om, residual, iterations: 0 })
}

pub fn continue_secondary(
    sector: &DihedralSector,
    branch: &PrimaryBranchPoint,
    crossing: &Crossing,
    b_grid: &[f64],
    disc: &RadialDiscretization,
) -> Result<Vec<SecondaryBranchPoint>> {
    let c = make_continuation(sector, branch, crossing, 1.0, disc, true)?;
    run(&c, b_grid)
}

/// Same as `continue_secondary` without sector Morse counts (cheaper).
pub fn continue_secondary_fast(
    sector: &DihedralSector,
    branch: &PrimaryBranchPoint,
    crossing: &Crossing,
    b_grid: &[f64],
    disc: &RadialDiscretization,
) -> Result<Vec<SecondaryBranchPoint>> {
    let c = make_continuation(sector, branch, crossing, 1.0, disc, false)?;
    run(&c, b_grid)
}

/// Branch from the last crossing (block m0+1) with ⟨v, f⟩ = a b.
pub fn last_curve_continue(
    branch: &PrimaryBranchPoint,
    crossing: &Crossing,
    b_grid: &[f64],
    k_max: usize,
    disc: &RadialDiscretization,
    with_morse: bool,
) -> Result<Vec<SecondaryBranchPoint>> {
    let m0 = branch.m0;
    if crossing.m != m0 as i32 + 1 || crossing.n != 0 {
        return Err(Error::InvalidArgument(format!("crossing ({}, {}) is not the last curve", crossing.m, crossing.n)));
    }
    let sector = DihedralSector::new(m0, m0 as i32 + 1, k_max, disc.n_r())?;
    let c = make_continuation(&sector, branch, crossing, branch.a, disc, with_morse)?;
    run(&c, b_grid)
}

fn run(c: &Continuation<'_>, b_grid: &[f64]) -> Result<Vec<SecondaryBranchPoint>> {
    let mut out: Vec<SecondaryBranchPoint> = Vec::with_capacity(b_grid.len());
    // accepted states, including intermediate ones from halving
    let mut trail: Vec<SecondaryBranchPoint> = Vec::new();
    for &target in b_grid {
        if !target.is_finite() {
            return Err(Error::InvalidArgument(format!("b = {target}")));
        }
        if target == 0.0 {
            let s = Solved { x: vec![0.0; c.problem.sector().dim()], omega_rot: c.omega_star, residual: 0.0, iterations: 0 };
            let p = c.point(0.0, s)?;
            out.push(p);
            continue;
        }
        let p = advance(c, &mut trail, target)?;
        out.push(p);
    }
    Ok(out)
}

fn guess_from(c: &Continuation<'_>, trail: &[SecondaryBranchPoint], b: f64) -> (Vec<f64>, f64) {
    match trail.last() {
        // v odd and Ω − Ω* even in b at leading order
        Some(p) if p.b != 0.0 && p.b.signum() == b.signum() => {
            let s = b / p.b;
            (p.coeffs.iter().map(|v| v * s).collect(), c.omega_star + (p.omega_rot - c.omega_star) * s * s)
        }
        _ => c.predictor(b),
    }
}

fn advance(c: &Continuation<'_>, trail: &mut Vec<SecondaryBranchPoint>, target: f64) -> Result<SecondaryBranchPoint> {
    let start = trail.last().filter(|p| p.b.signum() == target.signum()).map(|p| p.b).unwrap_or(0.0);
    let mut b_now = start;
    let mut step = target - start;
    let mut halvings = 0;
    loop {
        let b = if (b_now + step - target).abs() < 1e-15 * target.abs() { target } else { b_now + step };
        let (x0, om0) = guess_from(c, trail, b);
        let attempt = c.newton(c.scale * b, x0, om0).or_else(|e| {
            let n = trail.len();
            if n >= 2 && trail[n - 2].b.signum() == b.signum() {
                c.arclength(b, &trail[n - 2], &trail[n - 1])
            } else {
                Err(e)
            }
        });
        match attempt {
            Ok(s) if s.residual <= SECONDARY_TOL => {
                let mut p = c.point(b, s)?;
                let prev_morse = trail.last().filter(|q| q.b.signum() == b.signum()).and_then(|q| q.morse);
                if let (Some(prev), Some(now)) = (prev_morse, p.morse) {
                    if prev != now {
                        if halvings < MAX_HALVINGS {
                            step *= 0.5;
                            halvings += 1;
                            continue;
                        }
                        p.morse_jump = true;
                    }
                }
                trail.push(p.clone());
                if b == target {
                    return Ok(p);
                }
                b_now = b;
                step = (target - b_now).clamp(-step.abs() * 2.0, step.abs() * 2.0);
            }
            Ok(s) => {
                if halvings >= MAX_HALVINGS {
                    return Err(Error::NewtonDivergence { iterations: s.iterations, residual: s.residual });
                }
                step *= 0.5;
                halvings += 1;
            }
            Err(e) => {
                if halvings >= MAX_HALVINGS {
                    return Err(e);
                }
                step *= 0.5;
                halvings += 1;
            }
        }
    }
}

/// Ω − Ω* ≈ c b^p, fitted over points with b ≠ 0.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PitchforkFit {
    pub exponent: f64,
    pub coefficient: f64,
    /// +1 when the branch lies at Ω > Ω*.
    pub side: i8,
}

pub fn pitchfork_fit(points: &[SecondaryBranchPoint], omega_star: f64) -> Result<PitchforkFit> {
    let data: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.b != 0.0 && p.omega_rot != omega_star)
        .map(|p| (p.b.abs(), p.omega_rot - omega_star))
        .collect();
    if data.len() < 2 {
        return Err(Error::InvalidArgument("pitchfork fit needs two points with b != 0".into()));
    }
    let sgn = data[0].1.signum();
    if data.iter().any(|d| d.1.signum() != sgn) {
        return Err(Error::InvalidArgument("branch crosses Ω* inside the fit window".into()));
    }
    let lx: Vec<f64> = data.iter().map(|d| d.0.ln()).collect();
    let ly: Vec<f64> = data.iter().map(|d| d.1.abs().ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let exponent = sxy / sxx;
    // least-squares c in Ω − Ω* = c b²
    let num: f64 = data.iter().map(|(b, d)| d * b * b).sum();
    let den: f64 = data.iter().map(|(b, _)| b.powi(4)).sum();
    Ok(PitchforkFit { exponent, coefficient: num / den, side: sgn as i8 })
}

/// Points on a circle at radii and angles away from the quadrature grid.
pub fn off_grid_samples() -> Vec<(f64, f64)> {
    let mut v = Vec::new();
    for (i, r) in [0.137, 0.41, 0.83, 1.29, 1.77, 2.31, 2.9].iter().enumerate() {
        for s in 0..7 {
            v.push((*r, 0.311 + 0.97 * s as f64 + 0.05 * i as f64));
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::{crossing_bracket, omega_tilde};
    use crate::hessian::{assemble_h, find_crossing};
    use crate::primary::solve_primary;

    fn setup(m0: u32, m: i32, a: f64, k: usize, n_r: usize) -> (DihedralSector, RadialDiscretization, PrimaryBranchPoint) {
        let s = DihedralSector::new(m0, m, k, n_r).unwrap();
        let d = RadialDiscretization::new(n_r, s.required_max_m()).unwrap();
        let b = solve_primary(m0, a, &d).unwrap();
        (s, d, b)
    }

    #[test]
    fn zero_is_a_solution() {
        let (s, d, b) = setup(2, 5, 0.1, 3, 16);
        let g = assemble_g(&s, &b, 0.8, &vec![0.0; s.dim()], &d).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn linearization_at_zero_is_hessian_blocks() {
        let (s, d, b) = setup(2, 5, 0.1, 3, 12);
        let om = 0.77;
        let p = SectorProblem::new(s, &b, &d).unwrap();
        let j = p.jacobian(&vec![0.0; s.dim()], om).unwrap();
        let n = s.n_r;
        let kk = s.k_max;
        for k in 1..=kk as i32 {
            let h = assemble_h(s.harmonic(k), &b, om, &d).unwrap().matrix;
            let (bv, bw) = ((kk as i32 + k) as usize, (kk as i32 - k) as usize);
            for r in 0..n {
                for c in 0..n {
                    assert!((j[(bv * n + r, bv * n + c)] - h[(r, c)]).abs() < 1e-12);
                    assert!((j[(bw * n + r, bw * n + c)] - h[(n + r, n + c)]).abs() < 1e-12);
                    assert!((j[(bv * n + r, bw * n + c)] - h[(r, n + c)]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let (s, d, b) = setup(1, 3, 0.2, 2, 8);
        let p = SectorProblem::new(s, &b, &d).unwrap();
        let x: Vec<f64> = (0..s.dim()).map(|i| 0.01 * ((i as f64 * 0.7).sin())).collect();
        let om = 1.1;
        let j = p.jacobian(&x, om).unwrap();
        let h = 1e-6;
        for col in [0, 5, 9, 17, s.dim() - 1] {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[col] += h;
            xm[col] -= h;
            let gp = p.residual(&xp, om).unwrap();
            let gm = p.residual(&xm, om).unwrap();
            for row in 0..s.dim() {
                let fd = (gp[row] - gm[row]) / (2.0 * h);
                assert!((fd - j[(row, col)]).abs() < 1e-7, "({row},{col}) {fd} {}", j[(row, col)]);
            }
        }
        let dom = p.omega_derivative(&x);
        let gp = p.residual(&x, om + h).unwrap();
        let gm = p.residual(&x, om - h).unwrap();
        for row in 0..s.dim() {
            assert!(((gp[row] - gm[row]) / (2.0 * h) - dom[row]).abs() < 1e-8);
        }
    }

    #[test]
    fn cubic_residual_at_zero_amplitude() {
        // a = 0, Ω = 2: the linear part annihilates e_{m,0}, leaving the cubic term
        let (s, d, b) = setup(2, 5, 0.0, 2, 10);
        let p = SectorProblem::new(s, &b, &d).unwrap();
        let norm = |eps: f64| {
            let mut x = vec![0.0; s.dim()];
            x[(s.k_max + 1) * s.n_r] = eps;
            p.residual(&x, 2.0).unwrap().iter().map(|v| v * v).sum::<f64>().sqrt()
        };
        let ratio = norm(2e-2) / norm(1e-2);
        assert!((ratio - 8.0).abs() < 1e-9, "{ratio}");
    }

    #[test]
    fn aliasing_is_flagged() {
        let (s, d, b) = setup(1, 3, 0.1, 2, 8);
        assert!(matches!(SectorProblem::with_angular_points(s, &b, &d, 8), Err(Error::Aliasing(_))));
    }

    #[test]
    fn predictor_for_m0_2_m_5_is_the_w_mode() {
        let (s, d, b) = setup(2, 5, 0.05, 3, 24);
        let cr = find_crossing(5, 0, &b, crossing_bracket(2, 5, 0, 0.05), &d).unwrap();
        let p = predictor(&s, &b, &cr, 0.01, &d).unwrap();
        let w = p.block(-1);
        assert!(w[0] > 0.0098 && w[0] <= 0.01);
        assert_eq!(s.harmonic(-1), -1);
        assert!(p.block(1).iter().map(|v| v.abs()).fold(0.0, f64::max) < 1e-3);
        // b = 0 gives the primary point
        let z = predictor(&s, &b, &cr, 0.0, &d).unwrap();
        assert!(z.coeffs.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn last_curve_predictor_for_m0_1() {
        let (s, d, b) = setup(1, 2, 0.05, 2, 24);
        let cr = find_crossing(2, 0, &b, crossing_bracket(1, 2, 0, 0.05), &d).unwrap();
        let p = predictor(&s, &b, &cr, 1.0, &d).unwrap();
        let (v, w) = (p.block(1)[0], p.block(-1)[0]);
        assert!((v - 1.0 / 3f64.sqrt()).abs() < 1e-2, "{v}");
        assert!((w + 2f64.sqrt() / 3f64.sqrt()).abs() < 1e-2, "{w}");
        assert!((cr.omega - (2.0 + omega_tilde(1) * 0.0025)).abs() < 1e-4);
    }

    #[test]
    fn branch_is_a_pitchfork() {
        let (s, d, b) = setup(2, 5, 0.1, 4, 24);
        let cr = find_crossing(5, 0, &b, crossing_bracket(2, 5, 0, 0.1), &d).unwrap();
        let grid = [0.004, 0.008, 0.012, 0.016];
        let pts = continue_secondary(&s, &b, &cr, &grid, &d).unwrap();
        for p in &pts {
            assert!(p.residual <= SECONDARY_TOL);
            let proj: f64 = s.embed_block_vector(&cr.eigenvector).unwrap().iter().zip(&p.coeffs).map(|(a, b)| a * b).sum();
            assert!((proj - p.b).abs() < 1e-10);
            assert!(p.symmetry_defect(&off_grid_samples()) < 1e-9);
            let (m, pm) = (p.morse.unwrap() as i64, p.primary_morse.unwrap() as i64);
            assert_eq!((m - pm).abs(), 1);
            // the critical eigenvalue changes sign between primary and secondary
            let slope = -(s.q as f64) * cr.krein.s;
            let primary_side = (p.omega_rot - cr.omega).signum() * slope.signum();
            assert_eq!(m - pm, if primary_side > 0.0 { 1 } else { -1 });
            let rel = p.field().relative_stationary_residual(p.mu(), p.omega_rot, &off_grid_samples());
            assert!(rel < 1e-6, "{rel}");
        }
        let fit = pitchfork_fit(&pts, cr.omega).unwrap();
        assert!((fit.exponent - 2.0).abs() < 0.1, "{fit:?}");
    }

    #[test]
    fn negative_amplitude_is_a_half_turn() {
        let (s, d, b) = setup(2, 5, 0.1, 3, 16);
        let cr = find_crossing(5, 0, &b, crossing_bracket(2, 5, 0, 0.1), &d).unwrap();
        let plus = continue_secondary_fast(&s, &b, &cr, &[0.01], &d).unwrap();
        let minus = continue_secondary_fast(&s, &b, &cr, &[-0.01], &d).unwrap();
        assert!((plus[0].omega_rot - minus[0].omega_rot).abs() < 1e-12);
        let kk = s.k_max as i32;
        for k in -kk..=kk {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            for (x, y) in plus[0].block(k).iter().zip(minus[0].block(k)) {
                assert!((sign * x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn resonant_crossing_is_refused() {
        let (s, d, b) = setup(2, 5, 0.1, 2, 8);
        let mut cr = find_crossing(5, 0, &b, crossing_bracket(2, 5, 0, 0.1), &d).unwrap();
        cr.resonant = true;
        assert!(matches!(predictor(&s, &b, &cr, 0.01, &d), Err(Error::Resonant { .. })));
    }

    #[test]
    fn pitchfork_fit_recovers_exponent() {
        let s = DihedralSector::new(1, 3, 2, 4).unwrap();
        let pts: Vec<_> = [0.1, 0.2, 0.3]
            .iter()
            .map(|&b| SecondaryBranchPoint {
                sector: s,
                a: 0.1,
                b,
                omega_rot: 1.0 - 0.3 * b * b,
                omega: 4.0,
                psi: vec![],
                coeffs: vec![],
                residual: 0.0,
                morse: None,
                primary_morse: None,
                min_abs_eigenvalue: None,
                iterations: 0,
                morse_jump: false,
            })
            .collect();
        let f = pitchfork_fit(&pts, 1.0).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-12);
        assert!((f.coefficient + 0.3).abs() < 1e-12);
        assert_eq!(f.side, -1);
    }
}
