//! Blocks K_m(a) and H_m(a, Ω) = K_m − Ω(m − m0)R of the Hessian at a primary point.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::atlas::mu_tilde;
use crate::error::{Error, Result};
use crate::hermite::{eigenvalue, ModeIndex};
use crate::primary::PrimaryBranchPoint;
use crate::radial::{assemble_multiplication, block_matrix, symmetric_eigensolve, EigenDecomposition, RadialDiscretization, RadialPotential};

/// Absolute tolerance below which an eigenvalue counts as zero.
pub const ZERO_TOL: f64 = 1e-8;

/// The Ω-independent part K_m of one block, reusable across Ω.
#[derive(Debug, Clone)]
pub struct HessianFamily {
    pub m: i32,
    pub m0: u32,
    pub a: f64,
    pub n_r: usize,
    pub k: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct HessianBlock {
    pub m: i32,
    pub m0: u32,
    pub a: f64,
    pub omega_rot: f64,
    pub n_r: usize,
    pub matrix: DMatrix<f64>,
    pub eigen: EigenDecomposition,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KreinData {
    pub m: i32,
    pub m0: u32,
    pub eigenvalue: f64,
    pub v_norm2: f64,
    pub w_norm2: f64,
    pub s: f64,
}

impl HessianFamily {
    pub fn new(m: i32, branch: &PrimaryBranchPoint, disc: &RadialDiscretization) -> Result<Self> {
        let m0 = branch.m0;
        let mw = m - 2 * m0 as i32;
        disc.check_mode(m)?;
        disc.check_mode(mw)?;
        if branch.coeffs.len() != disc.n_r() {
            return Err(Error::InvalidArgument("branch and discretization sizes differ".into()));
        }
        let n = disc.n_r();
        let psi2 = RadialPotential::product_of_expansions(disc, (m0 as i32, &branch.coeffs), (m0 as i32, &branch.coeffs))?;
        let mut vv = assemble_multiplication(&psi2, m, m, disc)? * 2.0;
        let mut ww = assemble_multiplication(&psi2, mw, mw, disc)? * 2.0;
        let vw = assemble_multiplication(&psi2, m, mw, disc)?;
        for j in 0..n {
            vv[(j, j)] += eigenvalue(ModeIndex::new(m, j as u32)) as f64 - branch.omega;
            ww[(j, j)] += eigenvalue(ModeIndex::new(mw, j as u32)) as f64 - branch.omega;
        }
        Ok(Self { m, m0, a: branch.a, n_r: n, k: block_matrix(&vv, &vw, &ww) })
    }

    pub fn q(&self) -> i32 {
        self.m - self.m0 as i32
    }

    pub fn matrix_at(&self, omega_rot: f64) -> DMatrix<f64> {
        let mut h = self.k.clone();
        let s = omega_rot * self.q() as f64;
        for j in 0..self.n_r {
            h[(j, j)] -= s;
            h[(j + self.n_r, j + self.n_r)] += s;
        }
        h
    }

    pub fn at(&self, omega_rot: f64) -> Result<HessianBlock> {
        let matrix = self.matrix_at(omega_rot);
        let eigen = symmetric_eigensolve(&matrix)?;
        Ok(HessianBlock { m: self.m, m0: self.m0, a: self.a, omega_rot, n_r: self.n_r, matrix, eigen })
    }

    pub fn negative_count_at(&self, omega_rot: f64) -> Result<usize> {
        Ok(negative_count(&self.at(omega_rot)?))
    }

    /// Eigenvalues strictly below zero; the bisection invariant of the crossing search.
    fn strict_negatives_at(&self, omega_rot: f64) -> Result<usize> {
        Ok(self.at(omega_rot)?.eigen.values.iter().filter(|&&l| l < 0.0).count())
    }
}

pub fn assemble_k(m: i32, branch: &PrimaryBranchPoint, disc: &RadialDiscretization) -> Result<HessianBlock> {
    HessianFamily::new(m, branch, disc)?.at(0.0)
}

pub fn assemble_h(m: i32, branch: &PrimaryBranchPoint, omega_rot: f64, disc: &RadialDiscretization) -> Result<HessianBlock> {
    HessianFamily::new(m, branch, disc)?.at(omega_rot)
}

pub fn negative_count(block: &HessianBlock) -> usize {
    block.eigen.values.iter().filter(|&&l| l < -ZERO_TOL).count()
}

/// ‖V‖² − ‖W‖² of a coefficient vector over the (V, W) sectors.
pub fn krein_quantity(x: &[f64], n_r: usize) -> (f64, f64, f64) {
    let norm2: f64 = x.iter().map(|v| v * v).sum();
    let v: f64 = x[..n_r].iter().map(|v| v * v).sum::<f64>() / norm2;
    let w: f64 = x[n_r..].iter().map(|v| v * v).sum::<f64>() / norm2;
    (v, w, v - w)
}

impl HessianBlock {
    pub fn eigenvector(&self, i: usize) -> Vec<f64> {
        self.eigen.vectors.column(i).iter().copied().collect()
    }

    /// Index of the eigenvalue closest to zero.
    pub fn nearest_zero(&self) -> usize {
        let mut best = 0;
        for (i, l) in self.eigen.values.iter().enumerate() {
            if l.abs() < self.eigen.values[best].abs() {
                best = i;
            }
        }
        best
    }

    pub fn krein_of(&self, i: usize) -> KreinData {
        let (v, w, s) = krein_quantity(&self.eigenvector(i), self.n_r);
        KreinData { m: self.m, m0: self.m0, eigenvalue: self.eigen.values[i], v_norm2: v, w_norm2: w, s }
    }

    /// dλ/dΩ of a simple eigenvalue (Hellmann–Feynman).
    pub fn omega_derivative(&self, i: usize) -> f64 {
        -((self.m - self.m0 as i32) as f64) * self.krein_of(i).s
    }
}

pub fn krein_signature(block: &HessianBlock, tol: f64) -> Result<KreinData> {
    let i = block.nearest_zero();
    let closest = block.eigen.values[i];
    if closest.abs() > tol {
        return Err(Error::NoZeroEigenvalue { closest });
    }
    Ok(block.krein_of(i))
}

/// First block index beyond which every H_m (m ≥ 2m0) is positive definite.
///
/// H_m ≥ diag(λ_{m,0} − ω − Ω(m−m0), λ_{m−2m0,0} − ω + Ω(m−m0)) because the
/// potential [[2ψ², ψ²], [ψ², 2ψ²]] is positive semidefinite; both bounds grow in m.
pub fn certified_block_limit(m0: u32, omega: f64, omega_rot: f64) -> Option<i32> {
    if !(omega_rot < 2.0 && omega_rot > -2.0) {
        return None;
    }
    let m0i = m0 as i32;
    let mut m = 2 * m0i.max(1);
    loop {
        let q = (m - m0i) as f64;
        let v = 2.0 * (m + 1) as f64 - omega - omega_rot * q;
        let w = 2.0 * (m - 2 * m0i + 1) as f64 - omega + omega_rot * q;
        if v > ZERO_TOL && w > ZERO_TOL {
            return Some(m);
        }
        m += 1;
        if m > 1_000_000 {
            return None;
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MorseCount {
    pub omega_rot: f64,
    pub total: usize,
    /// (m, negative count) for m = m0..=m_max; blocks m > m0 enter twice.
    pub per_block: Vec<(i32, usize)>,
    pub m_max: i32,
}

pub fn required_m_max(branch: &PrimaryBranchPoint, omega_rot: f64) -> Result<i32> {
    certified_block_limit(branch.m0, branch.omega, omega_rot)
        .map(|m| m - 1)
        .ok_or_else(|| Error::InvalidArgument(format!("no positivity certificate at Omega = {omega_rot}")))
}

pub fn full_morse_count(
    branch: &PrimaryBranchPoint,
    omega_rot: f64,
    m_max: Option<i32>,
    disc: &RadialDiscretization,
) -> Result<MorseCount> {
    let required = required_m_max(branch, omega_rot)?;
    let m_max = match m_max {
        Some(g) if g < required => return Err(Error::InsufficientBlocks { given: g, required }),
        Some(g) => g,
        None => required,
    };
    let m0 = branch.m0 as i32;
    let mut per_block = Vec::new();
    let mut total = 0;
    for m in m0..=m_max {
        let block = assemble_h(m, branch, omega_rot, disc)?;
        let mut count = negative_count(&block);
        let ell = m - m0;
        if ell > 0 && ell % 2 == 0 && ell / 2 <= m0 {
            count += classify_near_zero(&block, branch, (ell / 2) as u32)?;
        }
        total += if m == m0 { count } else { 2 * count };
        per_block.push((m, count));
    }
    Ok(MorseCount { omega_rot, total, per_block, m_max })
}

/// Eigenvalues of H_{m0+2ℓ} inside the zero band are signed by a²μ̃_ℓ + 2ℓΩ.
fn classify_near_zero(block: &HessianBlock, branch: &PrimaryBranchPoint, ell: u32) -> Result<usize> {
    let near = block.eigen.values.iter().filter(|l| l.abs() <= ZERO_TOL).count();
    if near == 0 {
        return Ok(0);
    }
    let predicted = branch.a * branch.a * mu_tilde(branch.m0, ell)? + 2.0 * ell as f64 * block.omega_rot;
    Ok(if predicted < 0.0 { near } else { 0 })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Crossing {
    pub m: i32,
    pub n: u32,
    pub omega: f64,
    pub eigenvalue: f64,
    pub krein: KreinData,
    pub resonant: bool,
    /// Normalized null vector over (V_m, W_{m−2m0}) coefficients.
    pub eigenvector: Vec<f64>,
}

pub fn find_crossing(
    m: i32,
    n: u32,
    branch: &PrimaryBranchPoint,
    bracket: (f64, f64),
    disc: &RadialDiscretization,
) -> Result<Crossing> {
    let family = HessianFamily::new(m, branch, disc)?;
    find_crossing_in(&family, n, bracket)
}

pub fn find_crossing_in(family: &HessianFamily, n: u32, bracket: (f64, f64)) -> Result<Crossing> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!("bracket [{lo}, {hi}]")));
    }
    let c_lo = family.strict_negatives_at(lo)?;
    let c_hi = family.strict_negatives_at(hi)?;
    if c_lo == c_hi {
        return Err(Error::NoSignChange { m: family.m, lo, hi });
    }
    for _ in 0..200 {
        if hi - lo <= 4.0 * f64::EPSILON * (1.0 + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if family.strict_negatives_at(mid)? == c_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // polish on the eigenvalue nearest zero, tracked by eigenvector overlap
    let mut omega = 0.5 * (lo + hi);
    let mut block = family.at(omega)?;
    let mut idx = block.nearest_zero();
    let mut x = DVector::from_column_slice(&block.eigenvector(idx));
    for _ in 0..8 {
        let lam = block.eigen.values[idx];
        let slope = block.omega_derivative(idx);
        if lam.abs() <= 1e-14 || slope == 0.0 {
            break;
        }
        let next = (omega - lam / slope).clamp(lo, hi);
        if next == omega {
            break;
        }
        let trial = family.at(next)?;
        let j = best_overlap(&trial, &x);
        if trial.eigen.values[j].abs() >= lam.abs() {
            break;
        }
        omega = next;
        block = trial;
        idx = j;
        x = DVector::from_column_slice(&block.eigenvector(idx));
    }
    let lam = block.eigen.values[idx];
    if lam.abs() > 1e-9 {
        return Err(Error::NoZeroEigenvalue { closest: lam });
    }
    let zeros = block.eigen.values.iter().filter(|l| l.abs() <= ZERO_TOL).count();
    let mut vector = block.eigenvector(idx);
    orient_null_vector(&mut vector, family.n_r, n, family.m, family.m0);
    Ok(Crossing {
        m: family.m,
        n,
        omega,
        eigenvalue: lam,
        krein: block.krein_of(idx),
        resonant: zeros > 1,
        eigenvector: vector,
    })
}

/// Sign convention: W coefficient at radial index n positive for regular curves;
/// on the last block (m = m0+1) the V coefficient at n = 0 is positive.
pub fn orient_null_vector(x: &mut [f64], n_r: usize, n: u32, m: i32, m0: u32) {
    let pivot = if m == m0 as i32 + 1 { x[0] } else { x[n_r + n as usize] };
    let pivot = if pivot == 0.0 { x.iter().copied().fold(0.0, |acc: f64, v| if v.abs() > acc.abs() { v } else { acc }) } else { pivot };
    if pivot < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
}

fn best_overlap(block: &HessianBlock, x: &DVector<f64>) -> usize {
    let mut best = 0;
    let mut best_val = -1.0;
    for j in 0..block.eigen.values.len() {
        let o = block.eigen.vectors.column(j).dot(x).abs();
        if o > best_val {
            best_val = o;
            best = j;
        }
    }
    best
}

/// One eigenvalue track across an Ω sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenTrack {
    pub m: i32,
    pub index: usize,
    pub omegas: Vec<f64>,
    pub values: Vec<f64>,
    pub krein: Vec<f64>,
}

/// Follows the `count` lowest eigenvalues at omegas[0] by maximal eigenvector overlap.
pub fn track_eigenvalues(family: &HessianFamily, omegas: &[f64], count: usize) -> Result<Vec<EigenTrack>> {
    if omegas.is_empty() {
        return Ok(Vec::new());
    }
    let first = family.at(omegas[0])?;
    let count = count.min(first.eigen.values.len());
    let mut tracks: Vec<EigenTrack> = (0..count)
        .map(|i| EigenTrack {
            m: family.m,
            index: i,
            omegas: vec![omegas[0]],
            values: vec![first.eigen.values[i]],
            krein: vec![first.krein_of(i).s],
        })
        .collect();
    let mut vecs: Vec<DVector<f64>> = (0..count).map(|i| DVector::from_column_slice(&first.eigenvector(i))).collect();
    for &om in &omegas[1..] {
        let block = family.at(om)?;
        let dim = block.eigen.values.len();
        let mut used = vec![false; dim];
        // greedy assignment on overlap magnitude, strongest pairs first
        let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(count * dim);
        for (t, v) in vecs.iter().enumerate() {
            for j in 0..dim {
                pairs.push((block.eigen.vectors.column(j).dot(v).abs(), t, j));
            }
        }
        pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let mut assigned = vec![usize::MAX; count];
        for (_, t, j) in pairs {
            if assigned[t] == usize::MAX && !used[j] {
                assigned[t] = j;
                used[j] = true;
            }
        }
        for (t, &j) in assigned.iter().enumerate() {
            tracks[t].omegas.push(om);
            tracks[t].values.push(block.eigen.values[j]);
            tracks[t].krein.push(block.krein_of(j).s);
            vecs[t] = DVector::from_column_slice(&block.eigenvector(j));
        }
    }
    Ok(tracks)
}
