//! Leading-order predictions: counts, bifurcation curves, reduced 2×2 matrices near Ω = 2.

use std::cmp::Ordering;
use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hermite::{ln_factorial, pair_overlap_closed, quartic_overlap, ModeIndex};
use crate::hessian::{find_crossing, HessianFamily};
use crate::primary::{omega_slope, solve_primary};
use crate::radial::RadialDiscretization;

/// Closed-form vs quadrature agreement required for reduced matrices.
pub const REDUCED_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
pub struct Frac {
    pub num: i64,
    pub den: i64,
}

impl Frac {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()) as i64;
        let s = if den < 0 { -1 } else { 1 };
        Self { num: s * num / g.max(1), den: s * den / g.max(1) }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Ord for Frac {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as i128 * other.den as i128).cmp(&(other.num as i128 * self.den as i128))
    }
}

impl PartialOrd for Frac {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Frac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl Serialize for Frac {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Frac", 2)?;
        st.serialize_field("num", &self.num)?;
        st.serialize_field("den", &self.den)?;
        st.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub m0: u32,
    pub n: u64,
    pub z: u64,
    pub b: u64,
}

/// μ⁻_{m,n}(0) = 2(|m−2m0| + 2n − m0) at a = 0, for m > m0.
fn mu_minus_rest(m0: i64, m: i64, n: i64) -> i64 {
    2 * ((m - 2 * m0).abs() + 2 * n - m0)
}

/// Ω_{m,n}(0) = 2(m0 − |m−2m0| − 2n)/(m − m0).
pub fn leading_omega(m0: u32, m: i32, n: u32) -> Frac {
    let (m0, m, n) = (m0 as i64, m as i64, n as i64);
    Frac::new(2 * (m0 - (m - 2 * m0).abs() - 2 * n), m - m0)
}

pub fn counts(m0: u32) -> Result<Counts> {
    if m0 == 0 {
        return Err(Error::InvalidArgument("m0 must be positive".into()));
    }
    let k = m0 as u64;
    let formula = Counts { m0, n: k * (k + 1) / 2, z: k, b: k * (k - 1) / 2 };
    let (mut n_set, mut z_set) = (0u64, 0u64);
    let mi = m0 as i64;
    for m in mi + 1..=3 * mi {
        for n in 0..=mi {
            match mu_minus_rest(mi, m, n).cmp(&0) {
                Ordering::Less => n_set += 1,
                Ordering::Equal => z_set += 1,
                Ordering::Greater => {}
            }
        }
    }
    let b_set = enumerate_curves(m0).len() as u64;
    let enumerated = Counts { m0, n: n_set, z: z_set, b: b_set };
    if enumerated != formula {
        return Err(Error::CountMismatch { m0, what: format!("formula {formula:?} vs enumeration {enumerated:?}") });
    }
    Ok(formula)
}

fn enumerate_curves(m0: u32) -> Vec<(i32, u32, Frac)> {
    let mut out = Vec::new();
    let mi = m0 as i32;
    let (zero, two) = (Frac::new(0, 1), Frac::new(2, 1));
    for m in mi + 1..3 * mi {
        for n in 0..m0 {
            let om = leading_omega(m0, m, n);
            if om > zero && om < two {
                out.push((m, n, om));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct BifurcationPoint {
    pub m: i32,
    pub n: u32,
    pub omega0: Frac,
    pub detected: Option<f64>,
    /// Curves sharing Ω0 whose block lies in this curve's dihedral sector (itself included).
    pub multiplicity: u32,
    /// All curves sharing Ω0, regardless of sector.
    pub cluster: u32,
    pub resonant: bool,
    pub krein_sign: Option<i8>,
    pub morse_before: Option<usize>,
    pub morse_after: Option<usize>,
    pub index_parity: Option<i32>,
    pub dihedral_order: u32,
}

pub fn curve_list(m0: u32) -> Vec<BifurcationPoint> {
    let raw = enumerate_curves(m0);
    let mut out: Vec<BifurcationPoint> = raw
        .iter()
        .map(|&(m, n, om)| {
            let q = (m - m0 as i32) as u32;
            let same: Vec<_> = raw.iter().filter(|c| c.2 == om).collect();
            let in_sector = same.iter().filter(|c| ((c.0 - m0 as i32) as u32).is_multiple_of(q)).count() as u32;
            BifurcationPoint {
                m,
                n,
                omega0: om,
                detected: None,
                multiplicity: in_sector,
                cluster: same.len() as u32,
                resonant: in_sector > 1,
                krein_sign: None,
                morse_before: None,
                morse_after: None,
                index_parity: index_parity_leading(m0, m, om, in_sector > 1),
                dihedral_order: q,
            }
        })
        .collect();
    out.sort_by_key(|c| (c.n, c.m));
    out
}

/// Sector count n^D at a = 0 from the free eigenvalues μ±; valid off the crossings.
fn sector_count_free(m0: u32, q: i64, omega: f64) -> usize {
    let mi = m0 as i64;
    let mut count = 0;
    let mut k = 1;
    loop {
        let m = mi + k * q;
        if m >= 3 * mi + 2 {
            break;
        }
        for n in 0..=mi {
            let minus = mu_minus_rest(mi, m, n) as f64 + omega * (m - mi) as f64;
            let plus = 2.0 * (m - mi + 2 * n) as f64 - omega * (m - mi) as f64;
            count += (minus < 0.0) as usize + (plus < 0.0) as usize;
        }
        k += 1;
    }
    count
}

fn parity_from_counts(before: usize, after: usize) -> i32 {
    let s = |n: usize| if n.is_multiple_of(2) { 1 } else { -1 };
    s(before) - s(after)
}

fn index_parity_leading(m0: u32, m: i32, om: Frac, resonant: bool) -> Option<i32> {
    if resonant {
        return None;
    }
    let q = (m - m0 as i32) as i64;
    let x = om.to_f64();
    let delta = 1e-6;
    Some(parity_from_counts(sector_count_free(m0, q, x - delta), sector_count_free(m0, q, x + delta)))
}

/// Parity of the last curve: sector count before the crossing is 1 + negatives of the mid-range blocks.
pub fn last_index_parity(m0: u32) -> Result<i32> {
    let mid = classify_midrange(m0)?;
    let negatives: usize = mid.entries.iter().map(|e| e.negatives as usize).sum();
    let before = 1 + negatives;
    Ok(parity_from_counts(before, before - 1))
}

pub fn index_parity(m0: u32, curve: &BifurcationPoint) -> Result<i32> {
    if curve.m == m0 as i32 + 1 && curve.omega0 == Frac::new(2, 1) {
        return last_index_parity(m0);
    }
    if curve.resonant {
        return Err(Error::Resonant { omega: curve.omega0.to_f64(), zeros: curve.multiplicity as usize });
    }
    index_parity_leading(m0, curve.m, curve.omega0, false)
        .ok_or_else(|| Error::InvalidArgument("curve not in (0, 2)".into()))
}

/// The last curve as a BifurcationPoint with Ω0 = 2.
pub fn last_curve(m0: u32) -> BifurcationPoint {
    BifurcationPoint {
        m: m0 as i32 + 1,
        n: 0,
        omega0: Frac::new(2, 1),
        detected: None,
        multiplicity: 1,
        cluster: 1,
        resonant: false,
        krein_sign: None,
        morse_before: None,
        morse_after: None,
        index_parity: last_index_parity(m0).ok(),
        dihedral_order: 1,
    }
}

fn q4(a: (i32, u32), b: (i32, u32), c: (i32, u32), d: (i32, u32)) -> Result<f64> {
    quartic_overlap([ModeIndex::new(a.0, a.1), ModeIndex::new(b.0, b.1), ModeIndex::new(c.0, c.1), ModeIndex::new(d.0, d.1)])
}

pub fn mu_tilde(m0: u32, ell: u32) -> Result<f64> {
    if ell == 0 || ell > m0 {
        return Err(Error::InvalidArgument(format!("ell = {ell} outside 1..={m0}")));
    }
    let (mw, n) = mu_tilde_mode(m0, ell);
    let m0i = m0 as i32;
    Ok(-q4((m0i, 0), (m0i, 0), (m0i, 0), (m0i, 0))? + 2.0 * q4((m0i, 0), (m0i, 0), (mw, n), (mw, n))?)
}

/// (|m0 − 2ℓ|, n(ℓ)): the W-sector mode of the zero eigenvalue of H_{m0+2ℓ}(0, 0).
pub fn mu_tilde_mode(m0: u32, ell: u32) -> (i32, u32) {
    let (m0i, l) = (m0 as i32, ell as i32);
    ((m0i - 2 * l).abs(), ((m0i - (2 * l - m0i).abs()) / 2) as u32)
}

/// Closed forms available for ℓ = m0 (ω_{m0,0}) and ℓ = m0 − 1 (ω_{m0,0}/(2m0 − 1)).
pub fn mu_tilde_closed(m0: u32, ell: u32) -> Option<f64> {
    let w = omega_slope(m0);
    if ell == m0 {
        Some(w)
    } else if ell + 1 == m0 && ell >= 1 {
        Some(w / (2 * m0 - 1) as f64)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReducedContext {
    LastBifurcationOmega,
    LastBifurcationLambda,
    MidRange,
    ZeroEigenvalueMu,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReducedMatrix {
    pub context: ReducedContext,
    pub m: i32,
    /// Assembled from quartic overlaps.
    pub matrix: [[f64; 2]; 2],
    /// Factorial closed form.
    pub closed: [[f64; 2]; 2],
    pub overlaps: Vec<(String, f64)>,
}

impl ReducedMatrix {
    fn verify(&self, what: &str) -> Result<()> {
        for i in 0..2 {
            for j in 0..2 {
                let (c, q) = (self.closed[i][j], self.matrix[i][j]);
                if !((c - q).abs() <= REDUCED_TOL) {
                    return Err(Error::ClosedFormMismatch { what: format!("{what} ({i},{j})"), closed: c, quad: q });
                }
            }
        }
        Ok(())
    }

    pub fn eigen(&self) -> Eigen2 {
        eigen2(self.matrix)
    }
}

/// Eigenvalues (ascending when real) and unit eigenvectors of a real 2×2 matrix.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Eigen2 {
    pub real: bool,
    pub values: [f64; 2],
    /// Imaginary parts when complex (conjugate pair).
    pub imag: f64,
    pub vectors: [[f64; 2]; 2],
}

pub fn eigen2(a: [[f64; 2]; 2]) -> Eigen2 {
    let tr = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let disc = tr * tr / 4.0 - det;
    if disc < 0.0 {
        return Eigen2 { real: false, values: [tr / 2.0; 2], imag: (-disc).sqrt(), vectors: [[0.0; 2]; 2] };
    }
    let s = disc.sqrt();
    // stable pair: the larger-magnitude root first, the other from the determinant
    let big = tr / 2.0 + if tr >= 0.0 { s } else { -s };
    let small = if big != 0.0 { det / big } else { 0.0 };
    let mut values = [big.min(small), big.max(small)];
    if s == 0.0 {
        values = [tr / 2.0; 2];
    }
    let vec_for = |mu: f64| -> [f64; 2] {
        let r1 = [a[0][0] - mu, a[0][1]];
        let r2 = [a[1][0], a[1][1] - mu];
        let r = if r1[0].hypot(r1[1]) >= r2[0].hypot(r2[1]) { r1 } else { r2 };
        let mut v = if r[0] == 0.0 && r[1] == 0.0 { [1.0, 0.0] } else { [r[1], -r[0]] };
        let norm = v[0].hypot(v[1]);
        v = [v[0] / norm, v[1] / norm];
        if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) {
            v = [-v[0], -v[1]];
        }
        v
    };
    Eigen2 { real: true, values, imag: 0.0, vectors: [vec_for(values[0]), vec_for(values[1])] }
}

fn fact_ratio(num: &[u32], den: &[u32], pow2: i64) -> f64 {
    let l: f64 = num.iter().map(|&k| ln_factorial(k)).sum::<f64>() - den.iter().map(|&k| ln_factorial(k)).sum::<f64>();
    (l + pow2 as f64 * 2f64.ln()).exp()
}

/// Ω̃_{m0+1,0} = −(2m0)!/(4^{m0} m0! (m0+1)!).
pub fn omega_tilde(m0: u32) -> f64 {
    -fact_ratio(&[2 * m0], &[m0, m0 + 1], -2 * m0 as i64)
}

#[derive(Debug, Clone, Serialize)]
pub struct LastBifurcation {
    pub m0: u32,
    pub omega_tilde: f64,
    pub matrix: ReducedMatrix,
    /// Eigenvector of the Ω̃ = 0 eigenvalue.
    pub rest_vector: [f64; 2],
    /// Eigenvector of Ω̃_{m0+1,0}: (c_{m0+1}, c_{1−m0}), the bifurcating mode.
    pub crossing_vector: [f64; 2],
}

pub fn last_bifurcation(m0: u32) -> Result<LastBifurcation> {
    if m0 == 0 {
        return Err(Error::InvalidArgument("m0 must be positive".into()));
    }
    let m0i = m0 as i32;
    let w = q4((m0i, 0), (m0i, 0), (m0i, 0), (m0i, 0))?;
    let pv = q4((m0i, 0), (m0i, 0), (m0i + 1, 0), (m0i + 1, 0))?;
    let pw = q4((m0i, 0), (m0i, 0), (m0i - 1, 0), (m0i - 1, 0))?;
    let x = q4((m0i, 0), (m0i, 0), (m0i + 1, 0), (m0i - 1, 0))?;
    let av = -w + 2.0 * pv;
    let aw = -w + 2.0 * pw;
    let wc = omega_slope(m0);
    let xc = fact_ratio(&[2 * m0], &[m0], -2 * m0 as i64) / (0.5 * (ln_factorial(m0 - 1) + ln_factorial(m0 + 1))).exp();
    let rm = ReducedMatrix {
        context: ReducedContext::LastBifurcationOmega,
        m: m0i + 1,
        matrix: [[av, x], [-x, -aw]],
        closed: [[wc * m0 as f64 / (m0 + 1) as f64, xc], [-xc, -wc]],
        overlaps: vec![("omega".into(), w), ("P_plus".into(), pv), ("P_minus".into(), pw), ("X".into(), x)],
    };
    rm.verify("last-bifurcation Omega matrix")?;
    let e = rm.eigen();
    if !e.real {
        return Err(Error::InvalidArgument("complex eigenvalues in the last-bifurcation matrix".into()));
    }
    let ot = omega_tilde(m0);
    let (iz, io) = if e.values[0].abs() < e.values[1].abs() { (0, 1) } else { (1, 0) };
    check_close("Omega-tilde", ot, e.values[io])?;
    check_close("zero eigenvalue", 0.0, e.values[iz])?;
    let s = (2 * m0 + 1) as f64;
    let rest_closed = [((m0 + 1) as f64 / s).sqrt(), -(m0 as f64 / s).sqrt()];
    let cross_closed = [(m0 as f64 / s).sqrt(), -((m0 + 1) as f64 / s).sqrt()];
    let rest = orient(e.vectors[iz]);
    let cross = orient(e.vectors[io]);
    for k in 0..2 {
        check_close("rest vector", rest_closed[k], rest[k])?;
        check_close("crossing vector", cross_closed[k], cross[k])?;
    }
    Ok(LastBifurcation { m0, omega_tilde: ot, matrix: rm, rest_vector: rest, crossing_vector: cross })
}

fn orient(v: [f64; 2]) -> [f64; 2] {
    if v[0] < 0.0 { [-v[0], -v[1]] } else { v }
}

fn check_close(what: &str, closed: f64, quad: f64) -> Result<()> {
    if (closed - quad).abs() > REDUCED_TOL {
        return Err(Error::ClosedFormMismatch { what: what.into(), closed, quad });
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct LastLambda {
    pub matrix: ReducedMatrix,
    pub eigenvalues: [f64; 2],
    pub zero_vector: [f64; 2],
    pub positive_vector: [f64; 2],
}

pub fn last_lambda_matrix(m0: u32) -> Result<LastLambda> {
    let last = last_bifurcation(m0)?;
    let ot = last.omega_tilde;
    // A − Ω̃ R with A the symmetric form of the Ω-problem
    let q = last.matrix.matrix;
    let c = last.matrix.closed;
    let rm = ReducedMatrix {
        context: ReducedContext::LastBifurcationLambda,
        m: m0 as i32 + 1,
        matrix: [[q[0][0] - ot, q[0][1]], [q[0][1], -q[1][1] + ot]],
        closed: [[omega_slope(m0), c[0][1]], [c[0][1], omega_slope(m0) * m0 as f64 / (m0 + 1) as f64]],
        overlaps: last.matrix.overlaps.clone(),
    };
    rm.verify("last-bifurcation lambda matrix")?;
    let e = rm.eigen();
    let lt = fact_ratio(&[2 * m0 + 1], &[m0, m0 + 1], -2 * m0 as i64);
    check_close("lambda-tilde zero", 0.0, e.values[0])?;
    check_close("lambda-tilde", lt, e.values[1])?;
    Ok(LastLambda { matrix: rm, eigenvalues: e.values, zero_vector: orient(e.vectors[0]), positive_vector: orient(e.vectors[1]) })
}

/// Small eigenvalue coefficient of H_m(a, Ω_{m0+1,0}(a)) for m ≥ 2m0 + 1.
pub fn tail_lambda(m0: u32, m: i32) -> Result<f64> {
    if m < 2 * m0 as i32 + 1 {
        return Err(Error::InvalidArgument(format!("tail_lambda needs m >= 2m0+1, got {m}")));
    }
    let mu = m as u32;
    let closed = 2.0 * pair_overlap_closed(m0, mu) + omega_tilde(m0).abs() * (mu - 2 * m0 - 1) as f64;
    let m0i = m0 as i32;
    let quad = 2.0 * q4((m0i, 0), (m0i, 0), (m, 0), (m, 0))? - q4((m0i, 0), (m0i, 0), (m0i, 0), (m0i, 0))?
        - (m - m0i) as f64 * omega_tilde(m0);
    check_close(&format!("tail lambda m={m}"), closed, quad)?;
    Ok(closed)
}

pub fn midrange_matrix(m0: u32, m: i32) -> Result<ReducedMatrix> {
    let m0i = m0 as i32;
    if m < m0i + 2 || m > 2 * m0i {
        return Err(Error::InvalidArgument(format!("mid-range needs {} <= m <= {}, got {m}", m0i + 2, 2 * m0i)));
    }
    let mu = m as u32;
    let ot = omega_tilde(m0);
    let a11c = 2.0 * pair_overlap_closed(m0, mu) + ot.abs() * (m - 2 * m0i - 1) as f64;
    let a12c = fact_ratio(&[2 * m0], &[m0], -2 * m0 as i64) / (0.5 * (ln_factorial(mu) + ln_factorial(2 * m0 - mu))).exp();
    let a22c = 2.0 * fact_ratio(&[3 * m0 - mu], &[m0, 2 * m0 - mu], -((3 * m0 - mu) as i64)) - ot.abs() * (m + 1) as f64;
    let w = q4((m0i, 0), (m0i, 0), (m0i, 0), (m0i, 0))?;
    let pv = q4((m0i, 0), (m0i, 0), (m, 0), (m, 0))?;
    let mw = 2 * m0i - m;
    let pw = q4((m0i, 0), (m0i, 0), (mw, 0), (mw, 0))?;
    let x = q4((m0i, 0), (m0i, 0), (m, 0), (mw, 0))?;
    let q = (m - m0i) as f64;
    let rm = ReducedMatrix {
        context: ReducedContext::MidRange,
        m,
        matrix: [[2.0 * pv - w - q * ot, x], [x, 2.0 * pw - w + q * ot]],
        closed: [[a11c, a12c], [a12c, a22c]],
        overlaps: vec![("omega".into(), w), ("P_V".into(), pv), ("P_W".into(), pw), ("X".into(), x)],
    };
    rm.verify(&format!("mid-range m={m}"))?;
    Ok(rm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Signature {
    #[serde(rename = "(+,+)")]
    PlusPlus,
    #[serde(rename = "(+,-)")]
    PlusMinus,
    #[serde(rename = "(-,-)")]
    MinusMinus,
    #[serde(rename = "degenerate")]
    Degenerate,
}

#[derive(Debug, Clone, Serialize)]
pub struct MidrangeEntry {
    pub m: i32,
    pub eigenvalues: [f64; 2],
    pub signature: Signature,
    pub negatives: u32,
    /// The generalized problem Ã c = ν (m − m0) diag(1, −1) c has real eigenvalues.
    pub real_omega_problem: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MidrangeClassification {
    pub m0: u32,
    pub entries: Vec<MidrangeEntry>,
    pub r: usize,
    pub r_modes: Vec<i32>,
}

pub fn classify_midrange(m0: u32) -> Result<MidrangeClassification> {
    let mut entries = Vec::new();
    let m0i = m0 as i32;
    for m in m0i + 2..=2 * m0i {
        let rm = midrange_matrix(m0, m)?;
        let e = rm.eigen();
        let [l1, l2] = e.values;
        let tol = 1e-14;
        let (signature, negatives) = if l1 < -tol && l2 < -tol {
            (Signature::MinusMinus, 2)
        } else if l1 < -tol && l2 > tol {
            (Signature::PlusMinus, 1)
        } else if l1 > tol {
            (Signature::PlusPlus, 0)
        } else {
            (Signature::Degenerate, (l1 < -tol) as u32)
        };
        let a = rm.matrix;
        let real = (a[0][0] + a[1][1]).abs() >= 2.0 * a[0][1].abs();
        entries.push(MidrangeEntry { m, eigenvalues: e.values, signature, negatives, real_omega_problem: real });
    }
    let r_modes: Vec<i32> = entries.iter().filter(|e| e.real_omega_problem).map(|e| e.m).collect();
    Ok(MidrangeClassification { m0, r: r_modes.len(), r_modes, entries })
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroThreshold {
    pub ell: u32,
    pub mu_tilde: f64,
    /// max(0, −μ̃_ℓ/(2ℓ)): leading-order Ω/a² where the small eigenvalue of H_{m0+2ℓ} changes sign.
    pub leading: f64,
    /// (a, Ω*/a²) from crossing searches; empty when μ̃_ℓ > 0.
    pub samples: Vec<(f64, f64)>,
}

/// D_{ℓ,m0} estimates; `amplitudes` drives the numerical crossing search for μ̃_ℓ < 0.
pub fn zero_threshold_slopes(m0: u32, amplitudes: &[f64], disc: Option<&RadialDiscretization>) -> Result<Vec<ZeroThreshold>> {
    let mut out = Vec::new();
    for ell in 1..=m0 {
        let mt = mu_tilde(m0, ell)?;
        let leading = (-mt / (2 * ell) as f64).max(0.0);
        let mut samples = Vec::new();
        if mt < 0.0 {
            if let Some(disc) = disc {
                for &a in amplitudes {
                    let branch = solve_primary(m0, a, disc)?;
                    let fam = HessianFamily::new(m0 as i32 + 2 * ell as i32, &branch, disc)?;
                    let hi = 4.0 * leading * a * a;
                    let c = crate::hessian::find_crossing_in(&fam, mu_tilde_mode(m0, ell).1, (0.0, hi))?;
                    samples.push((a, c.omega / (a * a)));
                }
            }
        }
        out.push(ZeroThreshold { ell, mu_tilde: mt, leading, samples });
    }
    Ok(out)
}

/// Ω bracket containing the crossing of curve (m, n) at amplitude a.
pub fn crossing_bracket(m0: u32, m: i32, n: u32, a: f64) -> (f64, f64) {
    if m == m0 as i32 + 1 && n == 0 {
        let w = omega_tilde(m0).abs() * a * a;
        return (2.0 - 3.0 * w, 2.0 - 0.5 * w);
    }
    let om = leading_omega(m0, m, n).to_f64();
    let q = (m - m0 as i32) as f64;
    let half = (1.0 / q).min(0.1).min(0.5 * (2.0 - om)).min(0.5 * om);
    (om - half, om + half)
}

/// Crossing of a curve at amplitude a, with a fresh primary point.
pub fn detect(m0: u32, m: i32, n: u32, a: f64, disc: &RadialDiscretization) -> Result<crate::hessian::Crossing> {
    let branch = solve_primary(m0, a, disc)?;
    find_crossing(m, n, &branch, crossing_bracket(m0, m, n, a), disc)
}

#[derive(Debug, Clone, Serialize)]
pub struct MuTildeEntry {
    pub ell: u32,
    pub mode: (i32, u32),
    pub value: f64,
    pub d_leading: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AtlasReport {
    pub m0: u32,
    pub counts: Counts,
    pub curves: Vec<BifurcationPoint>,
    pub last_curve: BifurcationPoint,
    pub last_bifurcation: LastBifurcation,
    pub last_lambda: LastLambda,
    pub mu_tilde: Vec<MuTildeEntry>,
    pub midrange: MidrangeClassification,
    pub tail: Vec<(i32, f64)>,
}

pub fn build_atlas(m0: u32) -> Result<AtlasReport> {
    let mu = (1..=m0)
        .map(|ell| {
            let value = mu_tilde(m0, ell)?;
            Ok(MuTildeEntry { ell, mode: mu_tilde_mode(m0, ell), value, d_leading: (-value / (2 * ell) as f64).max(0.0) })
        })
        .collect::<Result<Vec<_>>>()?;
    let tail = (2 * m0 as i32 + 1..=3 * m0 as i32 + 2).map(|m| Ok((m, tail_lambda(m0, m)?))).collect::<Result<Vec<_>>>()?;
    Ok(AtlasReport {
        m0,
        counts: counts(m0)?,
        curves: curve_list(m0),
        last_curve: last_curve(m0),
        last_bifurcation: last_bifurcation(m0)?,
        last_lambda: last_lambda_matrix(m0)?,
        mu_tilde: mu,
        midrange: classify_midrange(m0)?,
        tail,
    })
}
