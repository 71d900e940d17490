//! Maps between the four phase spaces, their Jacobians and the involutions
//! used for Dirac reduction.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{LatticeError, Result};
use crate::lax::{kostant_to_symmetric, volterra_symmetric_lax, JacobiMatrix};
use crate::poisson::tensor::sub_block;
use crate::poisson::BivectorField;
use crate::state::{split_qp, Kind, LatticeState};

/// `(q, p) -> (a, b)` with `a_i = exp(q_i - q_{i+1})`, `b_i = -p_i`.
pub fn flaschka(s: &LatticeState) -> Result<LatticeState> {
    s.expect(Kind::TodaQp)?;
    LatticeState::new(Kind::TodaAb, flaschka_raw(s.coords()))
}

pub fn flaschka_raw(x: &[f64]) -> Vec<f64> {
    let (q, p) = split_qp(x);
    q.windows(2).map(|w| (w[0] - w[1]).exp()).chain(p.iter().map(|v| -v)).collect()
}

/// `(2N-1) x 2N` Jacobian of the Flaschka map.
pub fn flaschka_jacobian(x: &[f64]) -> DMatrix<f64> {
    let n = x.len() / 2;
    let (q, _) = split_qp(x);
    let mut d = DMatrix::zeros(2 * n - 1, 2 * n);
    for i in 0..n - 1 {
        let a = (q[i] - q[i + 1]).exp();
        d[(i, i)] = a;
        d[(i, i + 1)] = -a;
    }
    for i in 0..n {
        d[(n - 1 + i, n + i)] = -1.0;
    }
    d
}

/// The preimage with `q_1 = 0`.
pub fn flaschka_preimage(s: &LatticeState) -> Result<LatticeState> {
    s.expect(Kind::TodaAb)?;
    LatticeState::new(Kind::TodaQp, flaschka_preimage_raw(s.coords()))
}

pub fn flaschka_preimage_raw(x: &[f64]) -> Vec<f64> {
    let (a, b) = x.split_at(x.len() / 2);
    let mut q = vec![0.0; b.len()];
    for i in 0..a.len() {
        q[i + 1] = q[i] - a[i].ln();
    }
    q.extend(b.iter().map(|v| -v));
    q
}

/// `q -> a` with `a_i = exp(q_i - q_{i+1})`, from `N` even to `N - 1` odd.
pub fn gmap(s: &LatticeState) -> Result<LatticeState> {
    s.expect(Kind::VolterraQ)?;
    LatticeState::new(Kind::VolterraA, gmap_raw(s.coords()))
}

pub fn gmap_raw(q: &[f64]) -> Vec<f64> {
    q.windows(2).map(|w| (w[0] - w[1]).exp()).collect()
}

pub fn gmap_jacobian(q: &[f64]) -> DMatrix<f64> {
    let n = q.len();
    let mut d = DMatrix::zeros(n - 1, n);
    for i in 0..n - 1 {
        let a = (q[i] - q[i + 1]).exp();
        d[(i, i)] = a;
        d[(i, i + 1)] = -a;
    }
    d
}

/// The preimage with `q_1 = 0`.
pub fn gmap_preimage(s: &LatticeState) -> Result<LatticeState> {
    s.expect(Kind::VolterraA)?;
    LatticeState::new(Kind::VolterraQ, gmap_preimage_raw(s.coords()))
}

pub fn gmap_preimage_raw(a: &[f64]) -> Vec<f64> {
    let mut q = vec![0.0; a.len() + 1];
    for i in 0..a.len() {
        q[i + 1] = q[i] - a[i].ln();
    }
    q
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Realization {
    /// `TodaQp -> TodaAb`
    Flaschka,
    /// `VolterraQ -> VolterraA`
    G,
}

impl Realization {
    pub fn source(self) -> Kind {
        match self {
            Realization::Flaschka => Kind::TodaQp,
            Realization::G => Kind::VolterraQ,
        }
    }

    pub fn target(self) -> Kind {
        match self {
            Realization::Flaschka => Kind::TodaAb,
            Realization::G => Kind::VolterraA,
        }
    }

    pub fn apply_raw(self, x: &[f64]) -> Vec<f64> {
        match self {
            Realization::Flaschka => flaschka_raw(x),
            Realization::G => gmap_raw(x),
        }
    }

    pub fn jacobian(self, x: &[f64]) -> DMatrix<f64> {
        match self {
            Realization::Flaschka => flaschka_jacobian(x),
            Realization::G => gmap_jacobian(x),
        }
    }
}

pub(crate) fn pushforward_matrix(map: Realization, x: &[f64], p: &DMatrix<f64>) -> DMatrix<f64> {
    let d = map.jacobian(x);
    &d * p * d.transpose()
}

/// `DF(x) P(x) DF(x)^T`, the image of `P` at `F(x)`.
pub fn pushforward(p: &BivectorField, map: Realization, x: &[f64]) -> Result<DMatrix<f64>> {
    if p.space() != Some(map.source()) {
        return Err(LatticeError::Invalid(format!("{} is not defined on {:?}", p.name(), map.source())));
    }
    Ok(pushforward_matrix(map, x, &p.eval(x)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Involution {
    /// `(a, b) -> (a, -b)` on `TodaAb`.
    Phi,
    /// `(q, p) -> (q, -p)` on `TodaQp`.
    Psi,
}

impl Involution {
    pub fn name(self) -> &'static str {
        match self {
            Involution::Phi => "phi",
            Involution::Psi => "psi",
        }
    }

    pub fn space(self) -> Kind {
        match self {
            Involution::Phi => Kind::TodaAb,
            Involution::Psi => Kind::TodaQp,
        }
    }

    /// Coordinates left unchanged; both involutions keep the first half.
    pub fn fixed_coords(self, dim: usize) -> Vec<usize> {
        (0..dim / 2).collect()
    }

    pub fn anti_coords(self, dim: usize) -> Vec<usize> {
        (dim / 2..dim).collect()
    }

    pub fn apply_raw(self, x: &[f64]) -> Vec<f64> {
        let half = x.len() / 2;
        x.iter().enumerate().map(|(i, v)| if i < half { *v } else { -v }).collect()
    }

    /// Point of the fixed set with fixed coordinates `y`.
    pub fn embed(self, y: &[f64], dim: usize) -> Vec<f64> {
        let mut x = y.to_vec();
        x.resize(dim, 0.0);
        x
    }

    /// `diag(±1)` Jacobian of the involution.
    pub fn jacobian(self, dim: usize) -> DMatrix<f64> {
        DMatrix::from_fn(dim, dim, |i, j| match (i == j, i < dim / 2) {
            (false, _) => 0.0,
            (true, true) => 1.0,
            (true, false) => -1.0,
        })
    }
}

pub fn apply_involution(inv: Involution, s: &LatticeState) -> Result<LatticeState> {
    s.expect(inv.space())?;
    LatticeState::new(s.kind(), inv.apply_raw(s.coords()))
}

/// `max |T P(x) T - P(inv x)|`; zero exactly when the involution is a
/// Poisson automorphism of `P` at `x`.
pub fn automorphism_residual(p: &BivectorField, inv: Involution, x: &[f64]) -> Result<f64> {
    if p.space() != Some(inv.space()) {
        return Err(LatticeError::Invalid(format!("{} does not act on {}", inv.name(), p.name())));
    }
    let t = inv.jacobian(x.len());
    let lhs = &t * p.eval(x)? * &t;
    let rhs = p.eval(&inv.apply_raw(x))?;
    Ok((lhs - rhs).amax())
}

/// Tolerance on the mixed block at a fixed point.
pub const INVARIANCE_TOL: f64 = 1e-10;

/// Restriction of `P` to the fixed set of `inv` at the fixed point with
/// coordinates `y`. Fails when the mixed fixed/anti block does not vanish,
/// in which case the fixed set is not a Poisson submanifold.
pub fn fixed_set_reduce(p: &BivectorField, inv: Involution, y: &[f64]) -> Result<DMatrix<f64>> {
    if p.space() != Some(inv.space()) {
        return Err(LatticeError::Invalid(format!("{} does not act on {}", inv.name(), p.name())));
    }
    let fixed = inv.fixed_coords(p.dim());
    if y.len() != fixed.len() {
        return Err(LatticeError::Dimension { expected: fixed.len(), got: y.len() });
    }
    let full = p.eval(&inv.embed(y, p.dim()))?;
    let anti = inv.anti_coords(p.dim());
    let mut residual: f64 = 0.0;
    for &i in &fixed {
        for &j in &anti {
            residual = residual.max(full[(i, j)].abs());
        }
    }
    if residual > INVARIANCE_TOL * full.amax().max(1.0) {
        return Err(LatticeError::InvarianceViolation { residual });
    }
    Ok(sub_block(&full, &fixed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToTodaMode {
    /// Hénon's substitution; the image follows the Toda flow in unit time.
    Henon,
    /// Odd-index block of the squared symmetric Volterra Lax matrix.
    Chop,
}

/// A Toda image of a Volterra state. The image `X(t)` of a Volterra solution
/// satisfies `dX/dt = time_scale * toda_rhs(X)`. The state stores positive
/// off-diagonals; `offdiag_sign` records the sign of the map's raw output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TodaImage {
    pub state: LatticeState,
    pub offdiag_sign: f64,
    pub time_scale: f64,
}

/// Hénon's map for odd `m`: `A_i = -sqrt(a_{2i} a_{2i-1}) / 2`,
/// `B_i = (a_{2i-1} + a_{2i-2}) / 2` with `a_0 = 0`.
pub fn henon(a: &[f64]) -> Result<TodaImage> {
    if a.len().is_multiple_of(2) || a.is_empty() {
        return Err(LatticeError::Domain(format!("Hénon map needs odd m, got {}", a.len())));
    }
    let n = a.len().div_ceil(2);
    let at = |k: usize| if k == 0 { 0.0 } else { a[k - 1] };
    let off: Vec<f64> = (1..n).map(|i| 0.5 * (at(2 * i) * at(2 * i - 1)).sqrt()).collect();
    let diag: Vec<f64> = (1..=n).map(|i| 0.5 * (at(2 * i - 1) + at(2 * i - 2))).collect();
    Ok(TodaImage { state: LatticeState::toda_ab(&off, &diag)?, offdiag_sign: -1.0, time_scale: 1.0 })
}

/// Rows and columns 1, 3, 5, … (1-based) of `L^2`, where `L` is the symmetric
/// Volterra Lax matrix with off-diagonal entries `c`. Any length `>= 1`.
pub fn chop_square(c: &[f64]) -> Result<JacobiMatrix> {
    if c.is_empty() {
        return Err(LatticeError::Invalid("chop needs at least one entry".into()));
    }
    let l = volterra_symmetric_lax(c);
    let sq = &l * &l;
    let idx: Vec<usize> = (0..l.nrows()).step_by(2).collect();
    let block = sub_block(&sq, &idx);
    let n = idx.len();
    JacobiMatrix::new((0..n).map(|i| block[(i, i)]).collect(), (0..n - 1).map(|i| block[(i + 1, i)]).collect())
}

pub fn volterra_to_toda(s: &LatticeState, mode: ToTodaMode) -> Result<TodaImage> {
    s.expect(Kind::VolterraA)?;
    match mode {
        ToTodaMode::Henon => henon(s.coords()),
        ToTodaMode::Chop => Ok(TodaImage {
            state: chop_square(&kostant_to_symmetric(s.coords()))?.to_state(),
            offdiag_sign: 1.0,
            time_scale: 0.5,
        }),
    }
}
