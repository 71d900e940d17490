//! Explicit solution of the open Toda lattice through its spectral data.
//!
//! A Jacobi matrix `L` is determined by its eigenvalues `λ_1 < … < λ_N` and
//! the last components `r_i > 0` of its unit eigenvectors. Under the flow in
//! symmetric coordinates the eigenvalues stay fixed and the homogeneous
//! coordinates `ρ_i = r_i e^{-λ_i t}` evolve linearly; normalizing gives
//! `r(t)`. The matrix is recovered from the moments `c_j = Σ r_i^2 λ_i^j` by
//! Hankel determinant formulas, or by Lanczos orthogonalization when those
//! formulas are ill-conditioned.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{LatticeError, Result};
use crate::lax::{min_gap, JacobiMatrix};
use crate::state::LatticeState;

/// Gap below which a spectrum counts as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-10;
/// Largest size handled by the determinant formulas.
pub const HANKEL_MAX_N: usize = 8;
/// Relative size below which a `B_i` determinant triggers the fallback.
pub const HANKEL_REL_THRESHOLD: f64 = 1e-9;
/// Round-trip tolerance for accepting a determinant-formula inversion.
pub const HANKEL_ACCEPT_TOL: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    lambdas: Vec<f64>,
    r: Vec<f64>,
}

impl SpectralData {
    /// Eigenvalues strictly increasing, weights positive; `r` is normalized
    /// to unit length.
    pub fn new(lambdas: Vec<f64>, r: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() || lambdas.len() != r.len() {
            return Err(LatticeError::Dimension { expected: lambdas.len(), got: r.len() });
        }
        let gap = min_gap(&lambdas);
        if gap < DEGENERACY_GAP {
            return Err(LatticeError::Degenerate { gap });
        }
        if let Some(x) = r.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
            return Err(LatticeError::Domain(format!("spectral weight {x} must be positive")));
        }
        let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        Ok(Self { lambdas, r: r.iter().map(|x| x / norm).collect() })
    }

    /// From squared weights `r_i^2`.
    pub fn from_weights(lambdas: Vec<f64>, r2: &[f64]) -> Result<Self> {
        Self::new(lambdas, r2.iter().map(|w| w.sqrt()).collect())
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn size(&self) -> usize {
        self.lambdas.len()
    }

    pub fn moments(&self) -> MomentSequence {
        let n = self.size();
        let c = (0..2 * n)
            .map(|j| self.lambdas.iter().zip(&self.r).map(|(l, r)| r * r * l.powi(j as i32)).sum())
            .collect();
        MomentSequence { c }
    }

    /// `Σ r_i^2 / (λ - λ_i)`.
    pub fn partial_fractions(&self, lambda: f64) -> f64 {
        self.lambdas.iter().zip(&self.r).map(|(l, r)| r * r / (lambda - l)).sum()
    }

    /// Largest entry-wise difference to another set of spectral data.
    pub fn distance(&self, other: &SpectralData) -> f64 {
        self.lambdas
            .iter()
            .zip(&other.lambdas)
            .chain(self.r.iter().zip(&other.r))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `c_0 … c_{2N-1}`; the last entry is needed by `B_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSequence {
    pub c: Vec<f64>,
}

impl MomentSequence {
    fn hankel(&self, i: usize, shift: usize) -> f64 {
        if i == 0 {
            return 1.0;
        }
        DMatrix::from_fn(i, i, |j, k| self.c[j + k + shift]).lu().determinant()
    }

    /// `det [c_{j+k}]_{j,k<i}`, with `A_0 = 1`.
    pub fn a_det(&self, i: usize) -> f64 {
        self.hankel(i, 0)
    }

    /// `det [c_{j+k+1}]_{j,k<i}`, with `B_0 = 1`.
    pub fn b_det(&self, i: usize) -> f64 {
        self.hankel(i, 1)
    }
}

pub fn spectral_decompose(l: &JacobiMatrix) -> Result<SpectralData> {
    let pairs = l.eigen();
    let gap = min_gap(&pairs.values);
    if gap < DEGENERACY_GAP {
        return Err(LatticeError::Degenerate { gap });
    }
    let n = l.size();
    let r: Vec<f64> = (0..n).map(|i| pairs.vectors[(n - 1, i)].abs()).collect();
    if let Some(x) = r.iter().find(|x| **x <= 1e-13) {
        return Err(LatticeError::Domain(format!("eigenvector weight {x:.3e} is not positive")));
    }
    SpectralData::new(pairs.values, r)
}

/// `R_NN(λ) = ((λ - L)^{-1})_{NN}`, computed by a linear solve and by the
/// three-term recursion for leading minors; the two must agree.
pub fn weyl_eval(l: &JacobiMatrix, lambda: f64) -> Result<f64> {
    let values = l.eigen().values;
    let distance = values.iter().map(|v| (lambda - v).abs()).fold(f64::INFINITY, f64::min);
    if distance <= 1e-10 {
        return Err(LatticeError::NearSpectrum { lambda, distance });
    }
    let n = l.size();
    let m = DMatrix::identity(n, n) * lambda - l.to_dense();
    let mut e = DVector::zeros(n);
    e[n - 1] = 1.0;
    let solved = m.lu().solve(&e).ok_or(LatticeError::Singular)?[n - 1];

    let (b, a) = (l.diag(), l.offdiag());
    let (mut prev, mut cur) = (1.0, lambda - b[0]);
    for k in 1..n {
        let next = (lambda - b[k]) * cur - a[k - 1] * a[k - 1] * prev;
        prev = cur;
        cur = next;
    }
    let recursed = prev / cur;
    if (solved - recursed).abs() > 1e-9 * solved.abs().max(f64::MIN_POSITIVE) {
        return Err(LatticeError::Invalid(format!("resolvent paths disagree: {solved} vs {recursed}")));
    }
    Ok(solved)
}

/// `r_i(t) ∝ r_i e^{-λ_i t}`.
pub fn evolve_spectral(sd: &SpectralData, t: f64) -> Result<SpectralData> {
    let shift = if t >= 0.0 { sd.lambdas[0] } else { *sd.lambdas.last().expect("non-empty") };
    let rho = sd.lambdas.iter().zip(&sd.r).map(|(l, r)| r * (-(l - shift) * t).exp()).collect();
    SpectralData::new(sd.lambdas.clone(), rho)
}

/// Inverse spectral result; `fallback` marks Lanczos reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inversion {
    pub matrix: JacobiMatrix,
    pub fallback: bool,
}

impl Inversion {
    pub fn state(&self) -> LatticeState {
        self.matrix.to_state()
    }
}

/// Determinant formulas
/// `a_{N-i}^2 = A_{i-1} A_{i+1} / A_i^2` and
/// `b_{N+1-i} = A_i B_{i-2} / (A_{i-1} B_{i-1}) + A_{i-1} B_i / (A_i B_{i-1})`
/// with `A_0 = B_0 = 1`, `B_{-1} = 0`.
pub fn hankel_invert(sd: &SpectralData) -> Result<JacobiMatrix> {
    let n = sd.size();
    if n > HANKEL_MAX_N {
        return Err(LatticeError::Invalid(format!("determinant formulas are limited to N <= {HANKEL_MAX_N}")));
    }
    let mom = sd.moments();
    let a_det: Vec<f64> = (0..=n).map(|i| mom.a_det(i)).collect();
    let b_det: Vec<f64> = (0..=n).map(|i| mom.b_det(i)).collect();
    let scale = sd.lambdas.iter().fold(1.0f64, |m, l| m.max(l.abs()));
    for i in 1..n {
        if b_det[i].abs() <= HANKEL_REL_THRESHOLD * a_det[i] * scale.powi(i as i32) {
            return Err(LatticeError::NearSingularHankel { index: i, value: b_det[i] });
        }
    }
    let bm = |i: isize| if i < 0 { 0.0 } else { b_det[i as usize] };
    let mut offdiag = vec![0.0; n - 1];
    for i in 1..n {
        let a2 = a_det[i - 1] * a_det[i + 1] / (a_det[i] * a_det[i]);
        if !(a2 > 0.0) {
            return Err(LatticeError::NearSingularHankel { index: i, value: b_det[i] });
        }
        offdiag[n - i - 1] = a2.sqrt();
    }
    let mut diag = vec![0.0; n];
    for i in 1..=n {
        let ii = i as isize;
        diag[n - i] = a_det[i] * bm(ii - 2) / (a_det[i - 1] * bm(ii - 1)) + a_det[i - 1] * bm(ii) / (a_det[i] * bm(ii - 1));
    }
    JacobiMatrix::new(diag, offdiag)
}

/// Lanczos with full reorthogonalization on `diag(λ)` started from `r`. The
/// measure belongs to the last basis vector, so the tridiagonal output is
/// reversed.
pub fn lanczos_invert(sd: &SpectralData) -> Result<JacobiMatrix> {
    let n = sd.size();
    let lam = DVector::from_column_slice(&sd.lambdas);
    let mut basis: Vec<DVector<f64>> = vec![DVector::from_column_slice(&sd.r)];
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n - 1);
    for k in 0..n {
        let v = &basis[k];
        let mut w = lam.component_mul(v);
        let ak = v.dot(&w);
        alpha.push(ak);
        if k + 1 == n {
            break;
        }
        for _ in 0..2 {
            for u in &basis {
                let c = u.dot(&w);
                w -= u * c;
            }
        }
        let bk = w.norm();
        if !(bk > 0.0) {
            return Err(LatticeError::Degenerate { gap: bk });
        }
        beta.push(bk);
        basis.push(w / bk);
    }
    alpha.reverse();
    beta.reverse();
    JacobiMatrix::new(alpha, beta)
}

/// Determinant formulas when well-conditioned, otherwise Lanczos. The
/// determinant result is accepted only if it reproduces `sd` to
/// [`HANKEL_ACCEPT_TOL`] times `max(1, max |λ|)`.
pub fn stieltjes_invert(sd: &SpectralData) -> Result<Inversion> {
    let scale = sd.lambdas.iter().fold(1.0f64, |m, l| m.max(l.abs()));
    if let Ok(matrix) = hankel_invert(sd) {
        if spectral_decompose(&matrix).is_ok_and(|back| back.distance(sd) <= HANKEL_ACCEPT_TOL * scale) {
            return Ok(Inversion { matrix, fallback: false });
        }
    }
    Ok(Inversion { matrix: lanczos_invert(sd)?, fallback: true })
}

/// `a_1^2 = r_1^2 r_2^2 (λ_2 - λ_1)^2`, `b_1 = r_1^2 λ_2 + r_2^2 λ_1`,
/// `b_2 = r_1^2 λ_1 + r_2^2 λ_2` for a two-site lattice.
pub fn two_site_closed_form(sd: &SpectralData) -> Result<JacobiMatrix> {
    if sd.size() != 2 {
        return Err(LatticeError::Dimension { expected: 2, got: sd.size() });
    }
    let (l1, l2) = (sd.lambdas[0], sd.lambdas[1]);
    let (w1, w2) = (sd.r[0] * sd.r[0], sd.r[1] * sd.r[1]);
    JacobiMatrix::new(vec![w1 * l2 + w2 * l1, w1 * l1 + w2 * l2], vec![(w1 * w2).sqrt() * (l2 - l1)])
}

/// State at time `t` of the flow `ȧ_i = a_i (b_{i+1} - b_i)`,
/// `ḃ_i = 2 (a_i^2 - a_{i-1}^2)` started at `s0`.
pub fn solve_toda_explicit(s0: &LatticeState, t: f64) -> Result<Inversion> {
    let l = crate::lax::build_lax_symmetric(s0)?;
    stieltjes_invert(&evolve_spectral(&spectral_decompose(&l)?, t)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn swap() -> JacobiMatrix {
        JacobiMatrix::new(vec![0.0, 0.0], vec![1.0]).unwrap()
    }

    #[test]
    fn decompose_two_by_two() {
        let sd = spectral_decompose(&swap()).unwrap();
        assert_abs_diff_eq!(sd.lambdas()[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sd.lambdas()[1], 1.0, epsilon = 1e-14);
        for r in sd.r() {
            assert_abs_diff_eq!(*r, 0.5f64.sqrt(), epsilon = 1e-14);
        }
    }

    #[test]
    fn weyl_examples() {
        assert_abs_diff_eq!(weyl_eval(&swap(), 2.0).unwrap(), 2.0 / 3.0, epsilon = 1e-14);
        let big = 1e6;
        assert!((big * weyl_eval(&swap(), big).unwrap() - 1.0).abs() < 1e-5);
        let one = JacobiMatrix::new(vec![0.3], vec![]).unwrap();
        assert_abs_diff_eq!(weyl_eval(&one, 1.3).unwrap(), 1.0, epsilon = 1e-14);
        assert!(matches!(weyl_eval(&swap(), 1.0), Err(LatticeError::NearSpectrum { .. })));
        let l = JacobiMatrix::new(vec![0.2, -0.5, 0.9], vec![0.7, 1.1]).unwrap();
        let sd = spectral_decompose(&l).unwrap();
        for lam in [-3.0, 0.1, 2.5] {
            assert_abs_diff_eq!(weyl_eval(&l, lam).unwrap(), sd.partial_fractions(lam), epsilon = 1e-12);
        }
    }

    #[test]
    fn golden_two_site() {
        let sd = SpectralData::from_weights(vec![1.0, 2.0], &[0.4, 0.6]).unwrap();
        let m = sd.moments();
        for (x, y) in m.c.iter().zip([1.0, 1.6, 2.8, 5.2]) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(m.a_det(2), 0.24, epsilon = 1e-14);
        assert_abs_diff_eq!(m.b_det(2), 0.48, epsilon = 1e-14);
        let j = hankel_invert(&sd).unwrap();
        assert_abs_diff_eq!(j.offdiag()[0].powi(2), 0.24, epsilon = 1e-12);
        assert_abs_diff_eq!(j.diag()[0], 1.4, epsilon = 1e-12);
        assert_abs_diff_eq!(j.diag()[1], 1.6, epsilon = 1e-12);
        let closed = two_site_closed_form(&sd).unwrap();
        assert!(closed.diag().iter().zip(j.diag()).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn symmetric_spectrum_falls_back() {
        let sd = SpectralData::from_weights(vec![-1.0, 1.0], &[0.5, 0.5]).unwrap();
        assert!(matches!(hankel_invert(&sd), Err(LatticeError::NearSingularHankel { index: 1, .. })));
        let inv = stieltjes_invert(&sd).unwrap();
        assert!(inv.fallback);
        assert_abs_diff_eq!(inv.matrix.offdiag()[0], 1.0, epsilon = 1e-14);
        assert!(inv.matrix.diag().iter().all(|b| b.abs() < 1e-14));
    }

    #[test]
    fn evolution() {
        let sd = spectral_decompose(&swap()).unwrap();
        assert_eq!(evolve_spectral(&sd, 0.0).unwrap(), sd);
        let late = evolve_spectral(&sd, 20.0).unwrap();
        assert!(late.r()[0] > 1.0 - 1e-8);
        let far = evolve_spectral(&sd, 200.0).unwrap();
        assert!(far.r().iter().all(|r| r.is_finite() && *r > 0.0));
        // Weights below the floating-point range cannot be represented.
        assert!(evolve_spectral(&sd, 1e4).is_err());
    }

    #[test]
    fn lanczos_agrees_with_hankel() {
        let l = JacobiMatrix::new(vec![0.3, -0.4, 0.8, 0.1], vec![0.9, 1.3, 0.6]).unwrap();
        let sd = spectral_decompose(&l).unwrap();
        let h = hankel_invert(&sd).unwrap();
        let z = lanczos_invert(&sd).unwrap();
        for (x, y) in h.diag().iter().chain(h.offdiag()).zip(z.diag().iter().chain(z.offdiag())) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-10);
        }
        for (x, y) in z.diag().iter().chain(z.offdiag()).zip(l.diag().iter().chain(l.offdiag())) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_degenerate_data() {
        assert!(matches!(SpectralData::new(vec![1.0, 1.0], vec![1.0, 1.0]), Err(LatticeError::Degenerate { .. })));
        assert!(SpectralData::new(vec![0.0, 1.0], vec![1.0, 0.0]).is_err());
    }
}
