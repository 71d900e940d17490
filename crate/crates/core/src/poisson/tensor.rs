//! Point-evaluable Poisson tensors for all four phase spaces.
//!
//! Brackets follow `{f, g}(x) = ∇f(x)ᵀ P(x) ∇g(x)` and Hamiltonian vector
//! fields are `X_f = P ∇f`. On `TodaAb` and `VolterraA` the `a` coordinates are
//! in Kostant convention (see [`crate::lax`]).

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{LatticeError, Result};
use crate::maps::{self, Involution, Realization};
use crate::state::{split_ab, split_qp, Kind};

/// Deepest hierarchy member served by the catalog.
pub const MAX_DEPTH: usize = 6;

pub type TensorFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

#[derive(Clone)]
pub struct CustomTensor {
    pub name: String,
    pub eval: TensorFn,
}

impl fmt::Debug for CustomTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Custom({})", self.name)
    }
}

#[derive(Debug, Clone)]
pub enum TensorId {
    /// Canonical symplectic tensor on `TodaQp`.
    J1,
    /// Das–Okubo quadratic tensor on `TodaQp`.
    J2,
    /// `R^{k-1} J1` on `TodaQp`.
    Jk(usize),
    /// Linear Lie–Poisson Toda bracket.
    Pi1,
    /// Quadratic Toda bracket.
    Pi2,
    /// Cubic Toda bracket.
    Pi3,
    /// Image of `J_k` under the Flaschka map.
    PiK(usize),
    /// Degree-one KM bracket.
    V1,
    /// Quadratic KM bracket.
    V2,
    /// Cubic KM bracket.
    V3,
    /// Image of `w_k` under `G`.
    Vk(usize),
    /// `w2 w3^{-1} w2`.
    W1,
    /// Constant symplectic tensor `{q_i, q_j} = 1`, `i < j`.
    W2,
    /// Exponential tensor on `VolterraQ` mapped to `v3` by `G`.
    W3,
    /// `R^{k-2} w2` with `R = w3 w2^{-1}`.
    Wk(usize),
    /// Sub-block of `parent` over the fixed coordinates of `involution`.
    Reduced(Box<BivectorField>, Involution),
    Custom(CustomTensor),
}

impl TensorId {
    pub fn name(&self) -> String {
        match self {
            TensorId::J1 => "J1".into(),
            TensorId::J2 => "J2".into(),
            TensorId::Jk(k) => format!("J{k}"),
            TensorId::Pi1 => "pi1".into(),
            TensorId::Pi2 => "pi2".into(),
            TensorId::Pi3 => "pi3".into(),
            TensorId::PiK(k) => format!("pi{k}*"),
            TensorId::V1 => "v1".into(),
            TensorId::V2 => "v2".into(),
            TensorId::V3 => "v3".into(),
            TensorId::Vk(k) => format!("v{k}*"),
            TensorId::W1 => "w1".into(),
            TensorId::W2 => "w2".into(),
            TensorId::W3 => "w3".into(),
            TensorId::Wk(k) => format!("w{k}*"),
            TensorId::Reduced(p, inv) => format!("reduce({},{})", p.id.name(), inv.name()),
            TensorId::Custom(c) => c.name.clone(),
        }
    }

    /// Phase space the tensor lives on; `None` for custom tensors.
    pub fn space(&self) -> Option<Kind> {
        match self {
            TensorId::J1 | TensorId::J2 | TensorId::Jk(_) => Some(Kind::TodaQp),
            TensorId::Pi1 | TensorId::Pi2 | TensorId::Pi3 | TensorId::PiK(_) => Some(Kind::TodaAb),
            TensorId::V1 | TensorId::V2 | TensorId::V3 | TensorId::Vk(_) => Some(Kind::VolterraA),
            TensorId::W1 | TensorId::W2 | TensorId::W3 | TensorId::Wk(_) => Some(Kind::VolterraQ),
            TensorId::Reduced(p, _) => match p.space() {
                Some(Kind::TodaAb) => Some(Kind::VolterraA),
                Some(Kind::TodaQp) => Some(Kind::VolterraQ),
                _ => None,
            },
            TensorId::Custom(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BivectorField {
    pub id: TensorId,
    dim: usize,
}

impl BivectorField {
    pub fn new(id: TensorId, dim: usize) -> Result<Self> {
        match &id {
            TensorId::Jk(k) | TensorId::PiK(k) | TensorId::Vk(k) | TensorId::Wk(k)
                if *k == 0 || *k > MAX_DEPTH =>
            {
                return Err(LatticeError::UnknownId(format!("{} (depth 1..={MAX_DEPTH})", id.name())));
            }
            TensorId::Reduced(parent, inv) => {
                if parent.space() != Some(inv.space()) {
                    return Err(LatticeError::Invalid(format!(
                        "{} does not act on the space of {}",
                        inv.name(),
                        parent.id.name()
                    )));
                }
                let expected = inv.fixed_coords(parent.dim).len();
                if dim != expected {
                    return Err(LatticeError::Dimension { expected, got: dim });
                }
            }
            _ => {}
        }
        match id.space() {
            // Reduced spaces of odd-N Toda lattices are valid even though the
            // corresponding Volterra kinds are not.
            Some(_) if matches!(id, TensorId::Reduced(..)) => {}
            Some(kind) => kind.check_dim(dim)?,
            None => {}
        }
        Ok(Self { id, dim })
    }

    pub fn j1(n: usize) -> Self {
        Self::new(TensorId::J1, 2 * n).expect("valid")
    }
    pub fn j2(n: usize) -> Self {
        Self::new(TensorId::J2, 2 * n).expect("valid")
    }
    pub fn pi1(n: usize) -> Self {
        Self::new(TensorId::Pi1, 2 * n - 1).expect("valid")
    }
    pub fn pi2(n: usize) -> Self {
        Self::new(TensorId::Pi2, 2 * n - 1).expect("valid")
    }
    pub fn pi3(n: usize) -> Self {
        Self::new(TensorId::Pi3, 2 * n - 1).expect("valid")
    }
    pub fn w2(n: usize) -> Self {
        Self::new(TensorId::W2, n).expect("valid")
    }
    pub fn w3(n: usize) -> Self {
        Self::new(TensorId::W3, n).expect("valid")
    }

    pub fn custom(name: &str, dim: usize, eval: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        Self { id: TensorId::Custom(CustomTensor { name: name.into(), eval: Arc::new(eval) }), dim }
    }

    /// The three-dimensional bivector `{x,y} = x, {y,z} = y, {z,x} = z`, which
    /// is antisymmetric but violates the Jacobi identity.
    pub fn non_poisson_control() -> Self {
        Self::custom("non_poisson_control", 3, |v| {
            let (x, y, z) = (v[0], v[1], v[2]);
            DMatrix::from_row_slice(3, 3, &[0.0, x, -z, -x, 0.0, y, z, -y, 0.0])
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn space(&self) -> Option<Kind> {
        self.id.space()
    }

    pub fn name(&self) -> String {
        self.id.name()
    }

    /// Coordinates that must stay positive for the tensor to be defined.
    pub fn positive_coords(&self) -> std::ops::Range<usize> {
        match self.space() {
            Some(kind) => kind.positive_range(self.dim),
            None => 0..0,
        }
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(LatticeError::Dimension { expected: self.dim, got: x.len() });
        }
        for i in self.positive_coords() {
            if !(x[i] > 0.0) {
                return Err(LatticeError::Domain(format!("{}: coordinate {} = {} must be positive", self.name(), i, x[i])));
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_point(x)?;
        Ok(match &self.id {
            TensorId::J1 => j1(self.dim / 2),
            TensorId::J2 => j2(x),
            TensorId::Jk(k) => jk(x, *k),
            TensorId::Pi1 => pi1(x),
            TensorId::Pi2 => pi2(x),
            TensorId::Pi3 => pi3(x),
            TensorId::PiK(k) => {
                let pre = maps::flaschka_preimage_raw(x);
                maps::pushforward_matrix(Realization::Flaschka, &pre, &jk(&pre, *k))
            }
            TensorId::V1 => v1(x),
            TensorId::V2 => v2(x),
            TensorId::V3 => v3(x),
            TensorId::Vk(k) => {
                let pre = maps::gmap_preimage_raw(x);
                maps::pushforward_matrix(Realization::G, &pre, &wk(&pre, *k)?)
            }
            TensorId::W1 => wk(x, 1)?,
            TensorId::W2 => w2(x.len()),
            TensorId::W3 => w3(x),
            TensorId::Wk(k) => wk(x, *k)?,
            TensorId::Reduced(parent, inv) => {
                let full = parent.eval(&inv.embed(x, parent.dim))?;
                sub_block(&full, &inv.fixed_coords(parent.dim))
            }
            TensorId::Custom(c) => (c.eval)(x),
        })
    }
}

pub(crate) fn sub_block(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

fn set(m: &mut DMatrix<f64>, i: usize, j: usize, v: f64) {
    m[(i, j)] += v;
    m[(j, i)] -= v;
}

/// Strictly-upper all-ones antisymmetric matrix.
pub(crate) fn upper_ones(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Less => 1.0,
        std::cmp::Ordering::Greater => -1.0,
        std::cmp::Ordering::Equal => 0.0,
    })
}

pub(crate) fn j1(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(i, n + i)] = 1.0;
        m[(n + i, i)] = -1.0;
    }
    m
}

/// Blocks `(A, B, C)` of the Das–Okubo tensor at `(q, p)`.
pub(crate) fn j2_blocks(x: &[f64]) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let (q, p) = split_qp(x);
    let n = q.len();
    let a = upper_ones(n);
    let b = DMatrix::from_fn(n, n, |i, j| if i == j { -p[i] } else { 0.0 });
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        set(&mut c, i, i + 1, (q[i] - q[i + 1]).exp());
    }
    (a, b, c)
}

pub(crate) fn j2(x: &[f64]) -> DMatrix<f64> {
    let (a, b, c) = j2_blocks(x);
    let n = a.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&a);
    m.view_mut((0, n), (n, n)).copy_from(&b);
    m.view_mut((n, 0), (n, n)).copy_from(&(-&b));
    m.view_mut((n, n), (n, n)).copy_from(&c);
    m
}

/// Closed form of `R = J2 J1^{-1} = [[B, -A], [C, B]]`.
pub(crate) fn toda_recursion_closed(x: &[f64]) -> DMatrix<f64> {
    let (a, b, c) = j2_blocks(x);
    let n = a.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&b);
    m.view_mut((0, n), (n, n)).copy_from(&(-&a));
    m.view_mut((n, 0), (n, n)).copy_from(&c);
    m.view_mut((n, n), (n, n)).copy_from(&b);
    m
}

pub(crate) fn jk(x: &[f64], k: usize) -> DMatrix<f64> {
    let r = toda_recursion_closed(x);
    let mut m = j1(x.len() / 2);
    for _ in 1..k {
        m = &r * m;
    }
    m
}

pub(crate) fn pi1(x: &[f64]) -> DMatrix<f64> {
    let (a, _) = split_ab(x);
    let na = a.len();
    let mut m = DMatrix::zeros(x.len(), x.len());
    for i in 0..na {
        set(&mut m, i, na + i, -a[i]);
        set(&mut m, i, na + i + 1, a[i]);
    }
    m
}

pub(crate) fn pi2(x: &[f64]) -> DMatrix<f64> {
    let (a, b) = split_ab(x);
    let na = a.len();
    let mut m = DMatrix::zeros(x.len(), x.len());
    for i in 0..na {
        if i + 1 < na {
            set(&mut m, i, i + 1, a[i] * a[i + 1]);
        }
        set(&mut m, i, na + i, -a[i] * b[i]);
        set(&mut m, i, na + i + 1, a[i] * b[i + 1]);
        set(&mut m, na + i, na + i + 1, a[i]);
    }
    m
}

pub(crate) fn pi3(x: &[f64]) -> DMatrix<f64> {
    let (a, b) = split_ab(x);
    let na = a.len();
    let mut m = DMatrix::zeros(x.len(), x.len());
    for i in 0..na {
        if i + 1 < na {
            set(&mut m, i, i + 1, 2.0 * a[i] * a[i + 1] * b[i + 1]);
            set(&mut m, i + 1, na + i, -a[i] * a[i + 1]);
        }
        set(&mut m, i, na + i, -a[i] * b[i] * b[i] - a[i] * a[i]);
        set(&mut m, i, na + i + 1, a[i] * b[i + 1] * b[i + 1] + a[i] * a[i]);
        if i + 2 <= na {
            set(&mut m, i, na + i + 2, a[i] * a[i + 1]);
        }
        set(&mut m, na + i, na + i + 1, a[i] * (b[i] + b[i + 1]));
    }
    m
}

/// `{a_i, a_j} = (-1)^{j-i+1} (prod of a_k, k even in [i, j]) / (prod of a_k,
/// k odd strictly between i and j)` for `i < j`, indices 1-based.
pub(crate) fn v1(a: &[f64]) -> DMatrix<f64> {
    let m = a.len();
    let mut out = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i + 1..m {
            // 0-based index k is the 1-based site k + 1.
            let num: f64 = (i..=j).filter(|k| k % 2 == 1).map(|k| a[k]).product();
            let den: f64 = (i + 1..j).filter(|k| k % 2 == 0).map(|k| a[k]).product();
            let sign = if (j - i) % 2 == 1 { 1.0 } else { -1.0 };
            set(&mut out, i, j, sign * num / den);
        }
    }
    out
}

pub(crate) fn v2(a: &[f64]) -> DMatrix<f64> {
    let m = a.len();
    let mut out = DMatrix::zeros(m, m);
    for i in 0..m.saturating_sub(1) {
        set(&mut out, i, i + 1, a[i] * a[i + 1]);
    }
    out
}

pub(crate) fn v3(a: &[f64]) -> DMatrix<f64> {
    let m = a.len();
    let mut out = DMatrix::zeros(m, m);
    for i in 0..m.saturating_sub(1) {
        set(&mut out, i, i + 1, a[i] * a[i + 1] * (a[i] + a[i + 1]));
    }
    for i in 0..m.saturating_sub(2) {
        set(&mut out, i, i + 2, a[i] * a[i + 1] * a[i + 2]);
    }
    out
}

pub(crate) fn w2(n: usize) -> DMatrix<f64> {
    upper_ones(n)
}

/// For `i < j`: `a_{i-1} + (1 - δ_{i+1,j}) a_i + a_{j-1} + a_j` with
/// `a_k = exp(q_k - q_{k+1})`; undefined terms are dropped.
pub(crate) fn w3(q: &[f64]) -> DMatrix<f64> {
    let n = q.len();
    // 0-based: a(k) = exp(q_k - q_{k+1}) for k in 0..n-1.
    let a = |k: isize| -> f64 {
        if k >= 0 && (k as usize) + 1 < n {
            (q[k as usize] - q[k as usize + 1]).exp()
        } else {
            0.0
        }
    };
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let (ii, jj) = (i as isize, j as isize);
            let middle = if j == i + 1 { 0.0 } else { a(ii) };
            set(&mut out, i, j, a(ii - 1) + middle + a(jj - 1) + a(jj));
        }
    }
    out
}

/// `R = w3 w2^{-1}` on `VolterraQ`.
pub(crate) fn volterra_recursion(q: &[f64]) -> Result<DMatrix<f64>> {
    let inv = w2(q.len()).try_inverse().ok_or(LatticeError::Singular)?;
    Ok(w3(q) * inv)
}

/// `w_k = R^{k-2} w2`, `k >= 1`.
pub(crate) fn wk(q: &[f64], k: usize) -> Result<DMatrix<f64>> {
    let base = w2(q.len());
    match k {
        1 => {
            let w3inv = w3(q).try_inverse().ok_or(LatticeError::Singular)?;
            Ok(&base * w3inv * &base)
        }
        2 => Ok(base),
        _ => {
            let r = volterra_recursion(q)?;
            let mut m = base;
            for _ in 2..k {
                m = &r * m;
            }
            Ok(m)
        }
    }
}
