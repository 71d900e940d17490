//! Catalog of vector fields: flows, conformal and master symmetries, and
//! Hamiltonian fields.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{LatticeError, Result};
use crate::flows::{rhs_raw, System};
use crate::maps;
use crate::poisson::function::SmoothFunction;
use crate::poisson::recursion;
use crate::poisson::tensor::BivectorField;
use crate::state::Kind;

pub type FieldFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub struct CustomField {
    pub name: String,
    pub eval: FieldFn,
}

impl fmt::Debug for CustomField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Custom({})", self.name)
    }
}

#[derive(Debug, Clone)]
pub enum FieldId {
    Flow(System),
    /// `R^i Z_0` on `TodaQp`, with `Z_0 = Σ (N - 2i + 1) ∂q_i + Σ p_i ∂p_i`.
    Z(i32),
    /// `R^i X_0` on `VolterraQ`, with `X_0 = Σ (N - i + 1) ∂q_i`.
    X(i32),
    /// Image of `X_{-1}` on `VolterraA`; its Lie derivative takes `v2` to `v1`.
    YMinus1,
    Hamiltonian(Box<BivectorField>, Box<SmoothFunction>),
    Custom(CustomField),
}

impl FieldId {
    pub fn name(&self) -> String {
        match self {
            FieldId::Flow(s) => format!("flow:{}", s.name()),
            FieldId::Z(i) => format!("Z{i}"),
            FieldId::X(i) => format!("X{i}"),
            FieldId::YMinus1 => "Y-1".into(),
            FieldId::Hamiltonian(p, f) => format!("{}∇{}", p.name(), f.name()),
            FieldId::Custom(c) => c.name.clone(),
        }
    }

    pub fn space(&self) -> Option<Kind> {
        match self {
            FieldId::Flow(s) => Some(s.kind()),
            FieldId::Z(_) => Some(Kind::TodaQp),
            FieldId::X(_) => Some(Kind::VolterraQ),
            FieldId::YMinus1 => Some(Kind::VolterraA),
            FieldId::Hamiltonian(p, _) => p.space(),
            FieldId::Custom(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VectorField {
    pub id: FieldId,
    dim: usize,
}

impl VectorField {
    pub fn new(id: FieldId, dim: usize) -> Result<Self> {
        if let FieldId::Hamiltonian(p, f) = &id {
            if p.dim() != dim || f.dim() != dim {
                return Err(LatticeError::Dimension { expected: dim, got: if p.dim() != dim { p.dim() } else { f.dim() } });
            }
        }
        if let Some(kind) = id.space() {
            if !matches!(id, FieldId::Hamiltonian(..)) {
                kind.check_dim(dim)?;
            }
        }
        Ok(Self { id, dim })
    }

    pub fn z(i: i32, n: usize) -> Self {
        Self::new(FieldId::Z(i), 2 * n).expect("valid")
    }

    pub fn x(i: i32, n: usize) -> Self {
        Self::new(FieldId::X(i), n).expect("valid")
    }

    pub fn hamiltonian(p: &BivectorField, f: &SmoothFunction) -> Result<Self> {
        Self::new(FieldId::Hamiltonian(Box::new(p.clone()), Box::new(f.clone())), p.dim())
    }

    pub fn custom(name: &str, dim: usize, eval: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self { id: FieldId::Custom(CustomField { name: name.into(), eval: Arc::new(eval) }), dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> String {
        self.id.name()
    }

    pub fn positive_coords(&self) -> std::ops::Range<usize> {
        match self.id.space() {
            Some(kind) => kind.positive_range(self.dim),
            None => 0..0,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(LatticeError::Dimension { expected: self.dim, got: x.len() });
        }
        for i in self.positive_coords() {
            if !(x[i] > 0.0) {
                return Err(LatticeError::Domain(format!("{}: coordinate {} = {} must be positive", self.name(), i, x[i])));
            }
        }
        match &self.id {
            FieldId::Flow(s) => Ok(rhs_raw(*s, x)),
            FieldId::Z(i) => apply_power(&recursion::toda_recursion(x)?, *i, z0(x)),
            FieldId::X(i) => apply_power(&recursion::volterra_recursion(x)?, *i, x0(x)),
            FieldId::YMinus1 => {
                let q = maps::gmap_preimage_raw(x);
                let r = recursion::volterra_recursion(&q)?;
                let xm1 = apply_power(&r, -1, x0(&q))?;
                Ok((maps::gmap_jacobian(&q) * DVector::from_vec(xm1)).as_slice().to_vec())
            }
            FieldId::Hamiltonian(p, f) => hamiltonian_vector_field(p, f, x),
            FieldId::Custom(c) => Ok((c.eval)(x)),
        }
    }
}

/// `P(x) ∇f(x)`.
pub fn hamiltonian_vector_field(p: &BivectorField, f: &SmoothFunction, x: &[f64]) -> Result<Vec<f64>> {
    if p.dim() != f.dim() {
        return Err(LatticeError::Dimension { expected: p.dim(), got: f.dim() });
    }
    let g = DVector::from_vec(f.grad(x)?);
    Ok((p.eval(x)? * g).as_slice().to_vec())
}

/// `{f, g}_P(x) = ∇f^T P ∇g`.
pub fn bracket(p: &BivectorField, f: &SmoothFunction, g: &SmoothFunction, x: &[f64]) -> Result<f64> {
    let df = DVector::from_vec(f.grad(x)?);
    let dg = DVector::from_vec(g.grad(x)?);
    Ok(df.dot(&(p.eval(x)? * dg)))
}

fn z0(x: &[f64]) -> Vec<f64> {
    let n = x.len() / 2;
    (1..=n).map(|i| (n as f64) - 2.0 * i as f64 + 1.0).chain(x[n..].iter().copied()).collect()
}

fn x0(q: &[f64]) -> Vec<f64> {
    let n = q.len();
    (1..=n).map(|i| (n - i + 1) as f64).collect()
}

fn apply_power(r: &DMatrix<f64>, i: i32, v: Vec<f64>) -> Result<Vec<f64>> {
    let step = if i < 0 { r.clone().try_inverse().ok_or(LatticeError::Singular)? } else { r.clone() };
    let mut out = DVector::from_vec(v);
    for _ in 0..i.unsigned_abs() {
        out = &step * out;
    }
    Ok(out.as_slice().to_vec())
}

/// Unrolls `f_1 = -1`, `f_{2i} = (a_{2i} / a_{2i-1}) f_{2i-1}`,
/// `f_{2i-1} = -f_{2i-2} - 1`.
///
/// This coefficient recursion does not reproduce `v1` as a Lie derivative of
/// `v2`; the field that does is [`FieldId::YMinus1`].
pub fn build_y_minus1(a: &crate::state::LatticeState) -> Result<Vec<f64>> {
    let a = a.expect(Kind::VolterraA)?.coords();
    let mut f: Vec<f64> = Vec::with_capacity(a.len());
    for k in 1..=a.len() {
        let v = if k == 1 {
            -1.0
        } else if k % 2 == 0 {
            a[k - 1] / a[k - 2] * f[k - 2]
        } else {
            -f[k - 2] - 1.0
        };
        f.push(v);
    }
    Ok(f)
}
