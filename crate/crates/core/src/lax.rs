//! Lax matrices for both lattices and their trace invariants.
//!
//! Two coordinate conventions coexist on `TodaAb` states. The symmetric
//! (Flaschka) convention reads `a_i` as the off-diagonal of the Jacobi matrix.
//! The Kostant convention reads `a_i` as the sub-diagonal of the Hessenberg
//! matrix with unit super-diagonal; this is the image of the Flaschka map
//! `a_i = exp(q_i - q_{i+1})` and the convention in which the Poisson
//! hierarchy is written. The two are related by `a_kostant = a_symmetric^2`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{LatticeError, Result};
use crate::state::{Kind, LatticeState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobiMatrix {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

/// Ascending eigenvalues with the matching unit eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl JacobiMatrix {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || offdiag.len() + 1 != diag.len() {
            return Err(LatticeError::Dimension {
                expected: diag.len().saturating_sub(1),
                got: offdiag.len(),
            });
        }
        if let Some(a) = offdiag.iter().find(|a| !(**a > 0.0)) {
            return Err(LatticeError::Domain(format!("off-diagonal entry {a} must be positive")));
        }
        Ok(Self { diag, offdiag })
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        tridiagonal(&self.offdiag, &self.diag, &self.offdiag)
    }

    pub fn to_state(&self) -> LatticeState {
        LatticeState::toda_ab(&self.offdiag, &self.diag).expect("Jacobi matrix entries are valid")
    }

    pub fn eigen(&self) -> Eigenpairs {
        symmetric_eigen(&self.to_dense())
    }

    /// Largest `‖L u − λ u‖` over the computed eigenpairs.
    pub fn eigen_residual(&self, pairs: &Eigenpairs) -> f64 {
        let l = self.to_dense();
        pairs
            .values
            .iter()
            .enumerate()
            .map(|(i, &lam)| {
                let u = pairs.vectors.column(i);
                (&l * u - u * lam).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Symmetric eigendecomposition sorted by ascending eigenvalue.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Eigenpairs {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    Eigenpairs { values, vectors }
}

/// Smallest distance between consecutive sorted eigenvalues.
pub fn min_gap(sorted: &[f64]) -> f64 {
    sorted.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

/// Tridiagonal matrix with the given sub-, main and super-diagonals.
pub fn tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64]) -> DMatrix<f64> {
    let n = diag.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = diag[i];
    }
    for i in 0..n.saturating_sub(1) {
        m[(i + 1, i)] = sub[i];
        m[(i, i + 1)] = sup[i];
    }
    m
}

/// Hessenberg Lax matrix with unit super-diagonal, diagonal `b` and
/// sub-diagonal `sub`. With `sub` in Kostant coordinates this is the matrix
/// whose traces give the Toda invariants `H_k`.
pub fn hessenberg(sub: &[f64], b: &[f64]) -> DMatrix<f64> {
    let ones = vec![1.0; sub.len()];
    tridiagonal(sub, b, &ones)
}

pub fn build_lax_symmetric(s: &LatticeState) -> Result<JacobiMatrix> {
    let (a, b) = s.ab()?;
    JacobiMatrix::new(b.to_vec(), a.to_vec())
}

/// Kostant form of the Jacobi matrix of `s`: unit super-diagonal, diagonal
/// `b`, sub-diagonal `a_i^2`.
pub fn build_lax_kostant(s: &LatticeState) -> Result<DMatrix<f64>> {
    let (a, b) = s.ab()?;
    let sub: Vec<f64> = a.iter().map(|x| x * x).collect();
    Ok(hessenberg(&sub, b))
}

/// The same matrix obtained as `D L D^{-1}` with `d_1 = 1` and
/// `d_i = a_1 ... a_{i-1}`.
pub fn kostant_by_conjugation(s: &LatticeState) -> Result<DMatrix<f64>> {
    let (a, _) = s.ab()?;
    if let Some(x) = a.iter().find(|x| **x <= 0.0) {
        return Err(LatticeError::Domain(format!("conjugation needs a_i > 0, got {x}")));
    }
    let l = build_lax_symmetric(s)?.to_dense();
    let n = l.nrows();
    let mut d = vec![1.0; n];
    for i in 1..n {
        d[i] = d[i - 1] * a[i - 1];
    }
    Ok(DMatrix::from_fn(n, n, |i, j| d[i] * l[(i, j)] / d[j]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolterraLaxMode {
    /// `(m+1) x (m+1)`, unit super-diagonal, sub-diagonal `a`, zero diagonal.
    Kostant,
    /// `(m+1) x (m+1)`, entries `a_i` on both off-diagonals.
    Symmetric,
}

pub fn build_lax_volterra(s: &LatticeState, mode: VolterraLaxMode) -> Result<DMatrix<f64>> {
    s.expect(Kind::VolterraA)?;
    Ok(match mode {
        VolterraLaxMode::Kostant => volterra_kostant_lax(s.coords()),
        VolterraLaxMode::Symmetric => volterra_symmetric_lax(s.coords()),
    })
}

pub fn volterra_kostant_lax(a: &[f64]) -> DMatrix<f64> {
    hessenberg(a, &vec![0.0; a.len() + 1])
}

/// Symmetric Volterra Lax matrix for any number of entries.
pub fn volterra_symmetric_lax(c: &[f64]) -> DMatrix<f64> {
    tridiagonal(c, &vec![0.0; c.len() + 1], c)
}

/// Converts Kostant-convention Volterra variables to the entries of the
/// similar symmetric matrix.
pub fn kostant_to_symmetric(a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| x.sqrt()).collect()
}

pub fn symmetric_to_kostant(c: &[f64]) -> Vec<f64> {
    c.iter().map(|x| x * x).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceConvention {
    /// `H_k = tr L^k / k`
    Toda,
    /// `I_k = tr L^{2k} / 2k`
    Volterra,
}

pub fn trace_invariants(l: &DMatrix<f64>, k_max: usize, convention: TraceConvention) -> Result<Vec<f64>> {
    if !l.is_square() {
        return Err(LatticeError::Dimension { expected: l.nrows(), got: l.ncols() });
    }
    if k_max == 0 {
        return Err(LatticeError::Invalid("k_max must be at least 1".into()));
    }
    let step = match convention {
        TraceConvention::Toda => l.clone(),
        TraceConvention::Volterra => l * l,
    };
    let mut power = DMatrix::identity(l.nrows(), l.nrows());
    let mut out = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        power = &power * &step;
        let order = match convention {
            TraceConvention::Toda => k,
            TraceConvention::Volterra => 2 * k,
        };
        out.push(power.trace() / order as f64);
    }
    Ok(out)
}

/// Sorted spectrum of the Lax matrix naturally attached to a state, computed
/// through a symmetric matrix similar to it.
pub fn state_spectrum(s: &LatticeState) -> Result<Vec<f64>> {
    let m = match s.kind() {
        Kind::TodaAb => build_lax_symmetric(s)?.to_dense(),
        Kind::TodaQp => {
            let ab = crate::maps::flaschka(s)?;
            let (a, b) = ab.ab()?;
            tridiagonal(&kostant_to_symmetric(a), b, &kostant_to_symmetric(a))
        }
        Kind::VolterraA => volterra_symmetric_lax(&kostant_to_symmetric(s.coords())),
        Kind::VolterraQ => {
            let a = crate::maps::gmap(s)?;
            volterra_symmetric_lax(&kostant_to_symmetric(a.coords()))
        }
    };
    Ok(symmetric_eigen(&m).values)
}

#[cfg(test)]
fn dvec(v: &[f64]) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_column_slice(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ab(a: &[f64], b: &[f64]) -> LatticeState {
        LatticeState::toda_ab(a, b).unwrap()
    }

    #[test]
    fn symmetric_layouts() {
        let l = build_lax_symmetric(&ab(&[1.0], &[0.0, 0.0])).unwrap().to_dense();
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let l = build_lax_symmetric(&ab(&[1.0, 1.0], &[0.0, 0.0, 0.0])).unwrap().to_dense();
        assert_eq!(l, DMatrix::from_row_slice(3, 3, &[0., 1., 0., 1., 0., 1., 0., 1., 0.]));
    }

    #[test]
    fn symmetric_from_flaschka() {
        let s = crate::maps::flaschka(&LatticeState::toda_qp(&[0.0, 1.0], &[0.0, 0.0]).unwrap()).unwrap();
        let l = build_lax_symmetric(&s).unwrap();
        assert_eq!(l.offdiag(), &[(-1.0f64).exp()]);
    }

    #[test]
    fn wrong_kind() {
        let s = LatticeState::volterra_a(&[1.0]).unwrap();
        assert!(matches!(build_lax_symmetric(&s), Err(LatticeError::Kind { .. })));
        assert!(matches!(build_lax_kostant(&s), Err(LatticeError::Kind { .. })));
    }

    #[test]
    fn kostant_unit_offdiag_is_symmetric_form() {
        let s = ab(&[1.0, 1.0, 1.0], &[0.3, -0.2, 0.5, 1.0]);
        assert_eq!(build_lax_kostant(&s).unwrap(), build_lax_symmetric(&s).unwrap().to_dense());
    }

    #[test]
    fn kostant_two_by_two() {
        let s = ab(&[2.0], &[0.0, 0.0]);
        let k = build_lax_kostant(&s).unwrap();
        assert_eq!(k, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 4.0, 0.0]));
        let mut ev: Vec<f64> = k.complex_eigenvalues().iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(ev[0], -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn kostant_paths_agree() {
        let s = ab(&[0.7, 1.3, 1.9], &[0.1, -0.4, 0.8, 0.2]);
        let direct = build_lax_kostant(&s).unwrap();
        let conj = kostant_by_conjugation(&s).unwrap();
        assert!((direct - conj).amax() < 1e-12);
    }

    #[test]
    fn kostant_and_symmetric_spectra_agree() {
        let s = ab(&[0.6, 1.4, 0.9], &[0.3, -0.7, 0.2, 0.5]);
        let sym = build_lax_symmetric(&s).unwrap().eigen().values;
        let mut kos: Vec<f64> = build_lax_kostant(&s).unwrap().complex_eigenvalues().iter().map(|z| z.re).collect();
        kos.sort_by(f64::total_cmp);
        for (x, y) in sym.iter().zip(&kos) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-10);
        }
    }

    #[test]
    fn volterra_layouts() {
        let s = LatticeState::volterra_a(&[1.0, 1.0, 1.0]).unwrap();
        let k = build_lax_volterra(&s, VolterraLaxMode::Kostant).unwrap();
        assert_eq!(k.nrows(), 4);
        for i in 0..3 {
            assert_eq!(k[(i, i + 1)], 1.0);
            assert_eq!(k[(i + 1, i)], 1.0);
        }
        let sym = volterra_symmetric_lax(&[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(sym.nrows(), 5);
        assert_eq!(sym, sym.transpose());
    }

    #[test]
    fn volterra_modes_share_spectrum_in_matching_variables() {
        let a = [0.8, 1.7, 0.6, 1.2, 1.1];
        let s = LatticeState::volterra_a(&a).unwrap();
        let mut kos: Vec<f64> = build_lax_volterra(&s, VolterraLaxMode::Kostant)
            .unwrap()
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .collect();
        kos.sort_by(f64::total_cmp);
        let sym = symmetric_eigen(&volterra_symmetric_lax(&kostant_to_symmetric(&a))).values;
        for (x, y) in kos.iter().zip(&sym) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-10);
        }
        // Same numbers used directly as symmetric entries give a different spectrum.
        let raw = symmetric_eigen(&volterra_symmetric_lax(&a)).values;
        assert!(raw.iter().zip(&sym).any(|(x, y)| (x - y).abs() > 1e-3));
    }

    #[test]
    fn volterra_rejects_even_length() {
        assert!(LatticeState::volterra_a(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn trace_invariants_examples() {
        let l = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let h = trace_invariants(&l, 2, TraceConvention::Toda).unwrap();
        assert_eq!(h, vec![0.0, 1.0]);

        let b = [0.5, -1.5, 2.0];
        let h = trace_invariants(&DMatrix::from_diagonal(&dvec(&b)), 4, TraceConvention::Toda).unwrap();
        for (k, hk) in h.iter().enumerate() {
            let expected: f64 = b.iter().map(|x| x.powi(k as i32 + 1)).sum::<f64>() / (k + 1) as f64;
            assert_abs_diff_eq!(*hk, expected, epsilon = 1e-12);
        }

        let s = LatticeState::volterra_a(&[1.0, 1.0, 1.0]).unwrap();
        let l = build_lax_volterra(&s, VolterraLaxMode::Kostant).unwrap();
        assert_eq!(trace_invariants(&l, 1, TraceConvention::Volterra).unwrap(), vec![3.0]);

        let s = LatticeState::volterra_a(&[1.0, 2.0, 3.0]).unwrap();
        let l = build_lax_volterra(&s, VolterraLaxMode::Kostant).unwrap();
        assert_eq!((&l * &l).trace(), 12.0);
        assert_eq!(trace_invariants(&l, 1, TraceConvention::Volterra).unwrap(), vec![6.0]);
    }

    #[test]
    fn odd_traces_vanish_for_volterra() {
        let s = LatticeState::volterra_a(&[0.9, 1.3, 0.4]).unwrap();
        let k = build_lax_volterra(&s, VolterraLaxMode::Kostant).unwrap();
        assert_eq!(k.trace(), 0.0);
        let l = build_lax_volterra(&s, VolterraLaxMode::Symmetric).unwrap();
        let mut p = l.clone();
        for _ in 0..3 {
            assert!(p.trace().abs() < 1e-12);
            p = &p * &l * &l;
        }
    }

    #[test]
    fn trace_invariants_shape_errors() {
        let l = DMatrix::<f64>::zeros(2, 3);
        assert!(trace_invariants(&l, 1, TraceConvention::Toda).is_err());
        assert!(trace_invariants(&DMatrix::zeros(2, 2), 0, TraceConvention::Toda).is_err());
    }

    #[test]
    fn eigen_contract() {
        let j = JacobiMatrix::new(vec![0.3, -1.0, 0.8, 0.1], vec![0.9, 1.5, 0.6]).unwrap();
        let pairs = j.eigen();
        assert!(j.eigen_residual(&pairs) <= 1e-10 * j.to_dense().norm());
        assert!(min_gap(&pairs.values) > 1e-10);
    }
}
