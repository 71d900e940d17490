//! Catalog of smooth functions with analytic gradients.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{LatticeError, Result};
use crate::lax::{hessenberg, tridiagonal, volterra_kostant_lax};
use crate::maps;
use crate::state::{split_ab, Kind};

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct CustomFunction {
    pub name: String,
    pub eval: ScalarFn,
}

impl fmt::Debug for CustomFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Custom({})", self.name)
    }
}

#[derive(Debug, Clone)]
pub enum FunctionId {
    /// `tr K^k / k` on `TodaAb` in Kostant coordinates.
    TodaH(usize),
    /// `tr L^k / k` on `TodaAb` in symmetric coordinates.
    TodaHSym(usize),
    /// `h_k = H_k ∘ F` on `TodaQp`.
    TodaHqp(usize),
    /// `tr L^{2k} / 2k` on `VolterraA`; `k = 0` gives `log |det L|`.
    VolterraI(usize),
    /// `i_k = I_k ∘ G` on `VolterraQ`.
    VolterraIq(usize),
    /// Determinant of the Kostant Lax matrix (`TodaAb` or `VolterraA`).
    DetL(Kind),
    LogAbsDetL(Kind),
    /// `tr K^{-1}` on `TodaAb`.
    TrLInv,
    Custom(CustomFunction),
}

impl FunctionId {
    pub fn name(&self) -> String {
        match self {
            FunctionId::TodaH(k) => format!("H{k}"),
            FunctionId::TodaHSym(k) => format!("Hsym{k}"),
            FunctionId::TodaHqp(k) => format!("h{k}"),
            FunctionId::VolterraI(k) => format!("I{k}"),
            FunctionId::VolterraIq(k) => format!("i{k}"),
            FunctionId::DetL(_) => "det_L".into(),
            FunctionId::LogAbsDetL(_) => "log_abs_det_L".into(),
            FunctionId::TrLInv => "tr_L_inv".into(),
            FunctionId::Custom(c) => c.name.clone(),
        }
    }

    pub fn space(&self) -> Option<Kind> {
        match self {
            FunctionId::TodaH(_) | FunctionId::TodaHSym(_) | FunctionId::TrLInv => Some(Kind::TodaAb),
            FunctionId::TodaHqp(_) => Some(Kind::TodaQp),
            FunctionId::VolterraI(_) => Some(Kind::VolterraA),
            FunctionId::VolterraIq(_) => Some(Kind::VolterraQ),
            FunctionId::DetL(k) | FunctionId::LogAbsDetL(k) => Some(*k),
            FunctionId::Custom(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SmoothFunction {
    pub id: FunctionId,
    dim: usize,
}

impl SmoothFunction {
    pub fn new(id: FunctionId, dim: usize) -> Result<Self> {
        match &id {
            FunctionId::TodaH(0) | FunctionId::TodaHSym(0) | FunctionId::TodaHqp(0) => {
                return Err(LatticeError::UnknownId(format!("{} (Toda invariants start at 1)", id.name())));
            }
            FunctionId::DetL(k) | FunctionId::LogAbsDetL(k) if !matches!(k, Kind::TodaAb | Kind::VolterraA) => {
                return Err(LatticeError::Invalid(format!("{} is not defined on {k:?}", id.name())));
            }
            _ => {}
        }
        if let Some(kind) = id.space() {
            kind.check_dim(dim)?;
        }
        Ok(Self { id, dim })
    }

    /// `h_k` on a Toda lattice of `n` particles.
    pub fn h(k: usize, n: usize) -> Self {
        Self::new(FunctionId::TodaHqp(k), 2 * n).expect("valid")
    }

    /// `i_k` on `VolterraQ` with `n` coordinates.
    pub fn i(k: usize, n: usize) -> Self {
        Self::new(FunctionId::VolterraIq(k), n).expect("valid")
    }

    pub fn custom(name: &str, dim: usize, eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { id: FunctionId::Custom(CustomFunction { name: name.into(), eval: Arc::new(eval) }), dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> String {
        self.id.name()
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(LatticeError::Dimension { expected: self.dim, got: x.len() });
        }
        if let Some(kind) = self.id.space() {
            for i in kind.positive_range(self.dim) {
                if !(x[i] > 0.0) {
                    return Err(LatticeError::Domain(format!("{}: a_{} = {} must be positive", self.name(), i + 1, x[i])));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(match &self.id {
            FunctionId::TodaH(k) => power_trace(&kostant(x), *k) / *k as f64,
            FunctionId::TodaHSym(k) => power_trace(&symmetric(x), *k) / *k as f64,
            FunctionId::TodaHqp(k) => power_trace(&kostant(&maps::flaschka_raw(x)), *k) / *k as f64,
            FunctionId::VolterraI(0) => volterra_kostant_lax(x).determinant().abs().ln(),
            FunctionId::VolterraI(k) => power_trace(&volterra_kostant_lax(x), 2 * k) / (2 * k) as f64,
            FunctionId::VolterraIq(0) => x.iter().enumerate().map(|(i, q)| if i % 2 == 0 { *q } else { -q }).sum(),
            FunctionId::VolterraIq(k) => {
                power_trace(&volterra_kostant_lax(&maps::gmap_raw(x)), 2 * k) / (2 * k) as f64
            }
            FunctionId::DetL(kind) => lax_of(*kind, x).determinant(),
            FunctionId::LogAbsDetL(kind) => lax_of(*kind, x).determinant().abs().ln(),
            FunctionId::TrLInv => kostant(x).try_inverse().ok_or(LatticeError::Singular)?.trace(),
            FunctionId::Custom(c) => (c.eval)(x),
        })
    }

    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(match &self.id {
            FunctionId::TodaH(k) => kostant_grad(&power(&kostant(x), k - 1)),
            FunctionId::TodaHSym(k) => {
                let p = power(&symmetric(x), k - 1);
                let na = x.len() / 2;
                (0..na).map(|i| 2.0 * p[(i, i + 1)]).chain((0..=na).map(|i| p[(i, i)])).collect()
            }
            FunctionId::TodaHqp(k) => {
                let ab = maps::flaschka_raw(x);
                let g = kostant_grad(&power(&kostant(&ab), k - 1));
                chain(&maps::flaschka_jacobian(x), &g)
            }
            FunctionId::VolterraI(0) => volterra_grad(&inverse(&volterra_kostant_lax(x))?),
            FunctionId::VolterraI(k) => volterra_grad(&power(&volterra_kostant_lax(x), 2 * k - 1)),
            FunctionId::VolterraIq(0) => (0..x.len()).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect(),
            FunctionId::VolterraIq(k) => {
                let g = volterra_grad(&power(&volterra_kostant_lax(&maps::gmap_raw(x)), 2 * k - 1));
                chain(&maps::gmap_jacobian(x), &g)
            }
            FunctionId::DetL(kind) => {
                let l = lax_of(*kind, x);
                let det = l.determinant();
                lax_grad(*kind, &(inverse(&l)? * det))
            }
            FunctionId::LogAbsDetL(kind) => lax_grad(*kind, &inverse(&lax_of(*kind, x))?),
            FunctionId::TrLInv => {
                let inv = inverse(&kostant(x))?;
                kostant_grad(&(-(&inv * &inv)))
            }
            FunctionId::Custom(_) => self.grad_fd(x)?,
        })
    }

    /// Central-difference gradient with step `1e-6 max(1, |x_l|)`.
    pub fn grad_fd(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(x.len());
        let mut xp = x.to_vec();
        for l in 0..x.len() {
            let h = 1e-6 * x[l].abs().max(1.0);
            xp[l] = x[l] + h;
            let fp = self.eval(&xp)?;
            xp[l] = x[l] - h;
            let fm = self.eval(&xp)?;
            xp[l] = x[l];
            out.push((fp - fm) / (2.0 * h));
        }
        Ok(out)
    }
}

fn kostant(x: &[f64]) -> DMatrix<f64> {
    let (a, b) = split_ab(x);
    hessenberg(a, b)
}

fn symmetric(x: &[f64]) -> DMatrix<f64> {
    let (a, b) = split_ab(x);
    tridiagonal(a, b, a)
}

fn lax_of(kind: Kind, x: &[f64]) -> DMatrix<f64> {
    match kind {
        Kind::VolterraA => volterra_kostant_lax(x),
        _ => kostant(x),
    }
}

fn lax_grad(kind: Kind, m: &DMatrix<f64>) -> Vec<f64> {
    match kind {
        Kind::VolterraA => volterra_grad(m),
        _ => kostant_grad(m),
    }
}

fn inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone().try_inverse().ok_or(LatticeError::Singular)
}

fn power(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let mut p = DMatrix::identity(m.nrows(), m.ncols());
    for _ in 0..k {
        p = &p * m;
    }
    p
}

fn power_trace(m: &DMatrix<f64>, k: usize) -> f64 {
    power(m, k).trace()
}

/// Reads a gradient off `M` where `∂F/∂K[r, s] = M[s, r]`. The sub-diagonal
/// entry `a_i` sits at `K[i+1, i]`, so its partial is `M[i, i+1]`.
fn kostant_grad(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    (0..n - 1).map(|i| m[(i, i + 1)]).chain((0..n).map(|i| m[(i, i)])).collect()
}

fn volterra_grad(m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.nrows() - 1).map(|i| m[(i, i + 1)]).collect()
}

/// `D^T g`.
fn chain(d: &DMatrix<f64>, g: &[f64]) -> Vec<f64> {
    (0..d.ncols()).map(|j| (0..d.nrows()).map(|i| d[(i, j)] * g[i]).sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_grad(f: &SmoothFunction, x: &[f64]) {
        let g = f.grad(x).unwrap();
        let fd = f.grad_fd(x).unwrap();
        for (l, (a, b)) in g.iter().zip(&fd).enumerate() {
            assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{} coord {l}: {a} vs {b}", f.name());
        }
    }

    #[test]
    fn analytic_gradients_match_differences() {
        let ab = [0.8, 1.3, 0.6, 0.2, -0.5, 0.9, 0.1];
        let qp = [0.2, -0.3, 0.1, 0.4, 0.5, -0.2, 0.3, 0.0];
        let va = [0.7, 1.2, 0.9, 1.4, 0.6];
        let vq = [0.3, 0.1, -0.2, 0.2, 0.0, -0.1];
        let cases: Vec<(FunctionId, &[f64])> = vec![
            (FunctionId::TodaH(1), &ab),
            (FunctionId::TodaH(3), &ab),
            (FunctionId::TodaHSym(2), &ab),
            (FunctionId::TodaHSym(4), &ab),
            (FunctionId::TodaHqp(2), &qp),
            (FunctionId::TodaHqp(3), &qp),
            (FunctionId::VolterraI(0), &va),
            (FunctionId::VolterraI(2), &va),
            (FunctionId::VolterraIq(0), &vq),
            (FunctionId::VolterraIq(2), &vq),
            (FunctionId::DetL(Kind::TodaAb), &ab),
            (FunctionId::DetL(Kind::VolterraA), &va),
            (FunctionId::LogAbsDetL(Kind::TodaAb), &ab),
            (FunctionId::TrLInv, &ab),
        ];
        for (id, x) in cases {
            check_grad(&SmoothFunction::new(id, x.len()).unwrap(), x);
        }
    }

    #[test]
    fn values() {
        // h1 = -sum p
        let h1 = SmoothFunction::h(1, 3);
        assert_eq!(h1.eval(&[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap(), -3.0);
        // I1 = sum a
        let i1 = SmoothFunction::new(FunctionId::VolterraI(1), 3).unwrap();
        assert!((i1.eval(&[1.0, 2.0, 3.0]).unwrap() - 6.0).abs() < 1e-12);
        // i0 agrees with I0 ∘ G
        let q = [0.4, -0.1, 0.3, 0.9];
        let i0 = SmoothFunction::i(0, 4).eval(&q).unwrap();
        let big = SmoothFunction::new(FunctionId::VolterraI(0), 3).unwrap().eval(&maps::gmap_raw(&q)).unwrap();
        assert!((i0 - big).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_ids() {
        assert!(SmoothFunction::new(FunctionId::TodaH(0), 3).is_err());
        assert!(SmoothFunction::new(FunctionId::DetL(Kind::TodaQp), 4).is_err());
        assert!(SmoothFunction::new(FunctionId::VolterraI(1), 4).is_err());
    }
}
