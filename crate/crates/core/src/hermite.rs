//! Eigenpairs of the radial oscillator −Δ_m + r² on L²(r dr).

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex {
    pub m: i32,
    pub n: u32,
}

impl ModeIndex {
    pub const fn new(m: i32, n: u32) -> Self {
        Self { m, n }
    }

    pub fn abs_m(&self) -> u32 {
        self.m.unsigned_abs()
    }

    /// Degree of p_{m,n}.
    pub fn degree(&self) -> usize {
        (self.abs_m() + 2 * self.n) as usize
    }

    pub fn eigenvalue(&self) -> u32 {
        eigenvalue(*self)
    }
}

pub fn eigenvalue(mode: ModeIndex) -> u32 {
    2 * (mode.abs_m() + 2 * mode.n + 1)
}

const LN_FACT_TABLE: usize = 4096;

/// ln(n!) from a cached table of partial sums of ln k.
pub fn ln_factorial(n: u32) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LN_FACT_TABLE);
        let mut acc = 0.0f64;
        t.push(0.0);
        for k in 1..LN_FACT_TABLE {
            acc += (k as f64).ln();
            t.push(acc);
        }
        t
    });
    let n = n as usize;
    if n < LN_FACT_TABLE {
        table[n]
    } else {
        table[LN_FACT_TABLE - 1] + (LN_FACT_TABLE..=n).map(|k| (k as f64).ln()).sum::<f64>()
    }
}

/// e_{α,0}(r), …, e_{α,count−1}(r) by the normalized Laguerre recurrence.
pub fn basis_values(alpha: u32, count: usize, r: f64) -> Vec<f64> {
    let mut out = vec![0.0; count];
    fill_basis_values(alpha, r, &mut out);
    out
}

pub fn fill_basis_values(alpha: u32, r: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let a = alpha as f64;
    let t = r * r;
    let log_pref = if alpha == 0 {
        0.0
    } else if r == 0.0 {
        f64::NEG_INFINITY
    } else {
        a * r.ln()
    };
    let scale = std::f64::consts::SQRT_2 * (log_pref - t / 2.0 - 0.5 * ln_factorial(alpha)).exp();
    let mut prev = 0.0;
    let mut cur = 1.0;
    out[0] = scale;
    for k in 0..out.len() - 1 {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - t) * cur - (kf * (kf + a)).sqrt() * prev)
            / ((kf + 1.0) * (kf + 1.0 + a)).sqrt();
        prev = cur;
        cur = next;
        out[k + 1] = scale * cur;
    }
}

/// Normalized radial eigenfunction e_{m,n} = p_{m,n}(r)·e^{−r²/2}.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HermiteGaussFn {
    pub mode: ModeIndex,
    /// Coefficients of p_{m,n} in powers of r, normalization included; index = power.
    pub coeffs: Vec<f64>,
    pub norm: f64,
}

pub fn build_eigenfunction(mode: ModeIndex) -> HermiteGaussFn {
    let alpha = mode.abs_m();
    let n = mode.n;
    let ln_norm = 0.5 * (2f64.ln() + ln_factorial(n) - ln_factorial(n + alpha));
    let mut coeffs = vec![0.0; mode.degree() + 1];
    for k in 0..=n {
        // (−1)^k C(n+α, n−k)/k!
        let ln_c = ln_factorial(n + alpha) - ln_factorial(n - k) - ln_factorial(alpha + k) - ln_factorial(k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        coeffs[(alpha + 2 * k) as usize] = sign * (ln_norm + ln_c).exp();
    }
    HermiteGaussFn { mode, coeffs, norm: ln_norm.exp() }
}

impl HermiteGaussFn {
    /// Value via the stable recurrence (the polynomial form cancels for large n).
    pub fn eval(&self, r: f64) -> f64 {
        let v = basis_values(self.mode.abs_m(), self.mode.n as usize + 1, r);
        v[self.mode.n as usize]
    }

    pub fn poly(&self, r: f64) -> f64 {
        horner(&self.coeffs, r)
    }

    pub fn poly_derivative(&self, r: f64) -> f64 {
        let d: Vec<f64> = self.coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect();
        horner(&d, r)
    }

    pub fn poly_second_derivative(&self, r: f64) -> f64 {
        let d: Vec<f64> =
            self.coeffs.iter().enumerate().skip(2).map(|(k, c)| (k * (k - 1)) as f64 * c).collect();
        horner(&d, r)
    }

    /// ((−Δ_m + r² − λ) e)(r), from the polynomial form.
    pub fn ode_residual(&self, r: f64) -> f64 {
        let p = self.poly(r);
        let dp = self.poly_derivative(r);
        let ddp = self.poly_second_derivative(r);
        let m2 = (self.mode.m as f64).powi(2);
        let lam = eigenvalue(self.mode) as f64;
        (-ddp + 2.0 * r * dp + 2.0 * p - dp / r + m2 * p / (r * r) - lam * p) * (-r * r / 2.0).exp()
    }

    /// Sign changes of e on a uniform grid of `samples` points in (0, r_max].
    pub fn count_zeros(&self, r_max: f64, samples: usize) -> usize {
        let mut count = 0;
        let mut last = 0.0f64;
        for i in 1..=samples {
            let v = self.eval(r_max * i as f64 / samples as f64);
            if v != 0.0 {
                if last != 0.0 && (v > 0.0) != (last > 0.0) {
                    count += 1;
                }
                last = v;
            }
        }
        count
    }
}

fn horner(c: &[f64], r: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &x| acc * r + x)
}

/// ∫₀^∞ e_{m1,n1} e_{m2,n2} e_{m3,n3} e_{m4,n4} r dr.
pub fn quartic_overlap(modes: [ModeIndex; 4]) -> Result<f64> {
    let degree: usize = modes.iter().map(|m| m.degree()).sum();
    quartic_overlap_with(&QuadratureRule::for_degree(degree), modes)
}

pub fn quartic_overlap_with(rule: &QuadratureRule, modes: [ModeIndex; 4]) -> Result<f64> {
    let parity: u32 = modes.iter().map(|m| m.abs_m()).sum();
    if parity % 2 == 1 {
        return Err(Error::OddParity(parity));
    }
    rule.check_degree(modes.iter().map(|m| m.degree()).sum())?;
    let fns: Vec<_> = modes.iter().map(|&m| build_eigenfunction(m)).collect();
    Ok(rule.integrate(|r| fns.iter().map(|f| f.eval(r)).product()))
}

/// ⟨e²_{m0,0}, e²_{m,0}⟩ = (m0+m)!/(m0! m! 2^{m0+m}).
pub fn pair_overlap_closed(m0: u32, m: u32) -> f64 {
    (ln_factorial(m0 + m) - ln_factorial(m0) - ln_factorial(m) - (m0 + m) as f64 * 2f64.ln()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn eigenvalues() {
        assert_eq!(eigenvalue(ModeIndex::new(0, 0)), 2);
        assert_eq!(eigenvalue(ModeIndex::new(2, 1)), 10);
        assert_eq!(eigenvalue(ModeIndex::new(-3, 0)), 8);
    }

    #[test]
    fn closed_forms_low_n() {
        let e10 = build_eigenfunction(ModeIndex::new(1, 0));
        assert!(close(e10.eval(1.0), 2f64.sqrt() * (-0.5f64).exp(), 1e-15));
        assert!(close(e10.eval(1.0), 0.857763, 1e-6));
        // p_{2,1} = sqrt(2/3!) r² (3 − r²)
        let e21 = build_eigenfunction(ModeIndex::new(2, 1));
        let c = (2.0f64 / 6.0).sqrt();
        assert!(close(e21.coeffs[2], 3.0 * c, 1e-14));
        assert!(close(e21.coeffs[4], -c, 1e-14));
        for m in 0..6u32 {
            // e_{m,1} ∝ r^m (m+1−r²)
            let f = build_eigenfunction(ModeIndex::new(m as i32, 1));
            for &r in &[0.3f64, 1.1, 2.4] {
                let closed = (2.0 / ((m + 1) as f64 * (1..=m).map(|k| k as f64).product::<f64>())).sqrt()
                    * r.powi(m as i32)
                    * ((m + 1) as f64 - r * r)
                    * (-r * r / 2.0).exp();
                assert!(close(f.eval(r), closed, 1e-13), "m={m} r={r}");
            }
        }
    }

    #[test]
    fn recurrence_matches_polynomial() {
        for m in 0..8 {
            for n in 0..8 {
                let f = build_eigenfunction(ModeIndex::new(m, n));
                for &r in &[0.1, 0.7, 1.5, 2.5] {
                    let a = f.eval(r);
                    let b = f.poly(r) * (-r * r / 2.0).exp();
                    assert!(close(a, b, 1e-11), "m={m} n={n} r={r}: {a} {b}");
                }
            }
        }
    }

    #[test]
    fn positive_near_origin() {
        for m in -5..=5 {
            for n in 0..12 {
                assert!(build_eigenfunction(ModeIndex::new(m, n)).eval(1e-3) > 0.0);
            }
        }
    }

    #[test]
    fn orthonormality() {
        let nr = 30;
        for alpha in [0u32, 1, 3, 12] {
            // e·e carries e^{−r²}: Gauss–Laguerre in t = r², exact for degree ≤ 4·count − 2
            let rule = QuadratureRule::with_nodes_scaled(alpha as usize / 2 + nr + 1, 1.0);
            let table: Vec<Vec<f64>> = rule.nodes().iter().map(|&r| basis_values(alpha, nr, r)).collect();
            for i in 0..nr {
                for j in 0..nr {
                    let s: f64 = rule.weights().iter().zip(&table).map(|(w, v)| w * v[i] * v[j]).sum();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!(close(s, expect, 1e-10), "alpha={alpha} ({i},{j}) = {s}");
                }
            }
        }
    }

    #[test]
    fn ode_residual_small() {
        let rule = QuadratureRule::with_nodes(60);
        for m in -4..=6 {
            for n in 0..8 {
                let f = build_eigenfunction(ModeIndex::new(m, n));
                let res: f64 =
                    rule.nodes().iter().zip(rule.weights()).map(|(&r, w)| w * f.ode_residual(r).powi(2)).sum();
                assert!(res.sqrt() < 1e-8, "m={m} n={n}: {}", res.sqrt());
            }
        }
    }

    #[test]
    fn zero_counts() {
        for m in 0..5 {
            for n in 0..9 {
                let f = build_eigenfunction(ModeIndex::new(m, n));
                assert_eq!(f.count_zeros(12.0, 20000), n as usize, "m={m} n={n}");
            }
        }
    }

    #[test]
    fn overlap_values() {
        let w = |a: i32, b: i32| {
            quartic_overlap([ModeIndex::new(a, 0), ModeIndex::new(a, 0), ModeIndex::new(b, 0), ModeIndex::new(b, 0)])
                .unwrap()
        };
        assert!(close(w(1, 1), 0.5, 1e-13));
        assert!(close(w(2, 2), 0.375, 1e-13));
        assert!(close(w(2, 4), 15.0 / 64.0, 1e-13));
        for m0 in 0..25u32 {
            for m in 0..25u32 {
                let q = w(m0 as i32, m as i32);
                assert!(close(q, pair_overlap_closed(m0, m), 1e-12), "{m0} {m}");
            }
        }
        // 5!/(2⁵ 2! 3!)
        assert!(close(w(2, 3), 120.0 / (32.0 * 2.0 * 6.0), 1e-13));
    }

    #[test]
    fn odd_parity_rejected() {
        let r = quartic_overlap([ModeIndex::new(1, 0), ModeIndex::new(0, 0), ModeIndex::new(0, 0), ModeIndex::new(0, 0)]);
        assert!(matches!(r, Err(Error::OddParity(1))));
    }

    #[test]
    fn resolution_error() {
        let rule = QuadratureRule::with_nodes(4);
        let r = quartic_overlap_with(&rule, [ModeIndex::new(2, 2); 4]);
        assert!(matches!(r, Err(Error::Resolution { .. })));
    }

    proptest! {
        #[test]
        fn overlap_permutation_invariant(ms in proptest::collection::vec((-6i32..7, 0u32..4), 4), perm in 0usize..24) {
            let mut modes: Vec<ModeIndex> = ms.iter().map(|&(m, n)| ModeIndex::new(m, n)).collect();
            let parity: i32 = modes.iter().map(|m| m.m.abs()).sum();
            if parity % 2 == 1 {
                modes[0].m += 1;
            }
            let base = quartic_overlap([modes[0], modes[1], modes[2], modes[3]]).unwrap();
            let mut idx = vec![0, 1, 2, 3];
            let mut p = perm;
            let mut out = Vec::new();
            for k in (1..=4).rev() {
                out.push(idx.remove(p % k));
                p /= k;
            }
            let permuted = quartic_overlap([modes[out[0]], modes[out[1]], modes[out[2]], modes[out[3]]]).unwrap();
            prop_assert!((base - permuted).abs() < 1e-13);
        }

        #[test]
        fn eigenvalue_even_positive(m in -1000i32..1000, n in 0u32..1000) {
            let l = eigenvalue(ModeIndex::new(m, n));
            prop_assert!(l >= 2 && l.is_multiple_of(2));
            prop_assert_eq!(l, eigenvalue(ModeIndex::new(-m, n)));
        }
    }
}
