//! Deformation relations between master symmetries, Hamiltonians and Poisson
//! tensors of a hierarchy generated by a conformal symmetry.
//!
//! With constants `(λ, μ, ν)`:
//!
//! * (a) `X_i(H_j) = (ν + (j - 1 + i)(μ - λ)) H_{i+j}`
//! * (b) `L_{X_i} π_j = (μ + (j - i - 2)(μ - λ)) π_{i+j}`
//! * (c) `[X_i, X_j] = (μ - λ)(j - i) X_{i+j}`
//!
//! On `TodaQp` the data are `(Z_i, h_j, J_j)` with `(λ, μ, ν) = (-1, 0, 1)`.
//! On `VolterraQ` they are `(X_i, i_j, w_{j+1})` with `(0, 1, 1)`.

use serde::Serialize;

use crate::error::{LatticeError, Result};
use crate::poisson::calculus::{lie_derivative_scalar, lie_derivative_tensor, vector_field_commutator};
use crate::poisson::field::VectorField;
use crate::poisson::function::{FunctionId, SmoothFunction};
use crate::poisson::tensor::{BivectorField, TensorId};
use crate::state::Kind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OevelConstants {
    pub lambda: f64,
    pub mu: f64,
    pub nu: f64,
}

impl OevelConstants {
    pub fn for_space(space: Kind) -> Result<Self> {
        match space {
            Kind::TodaQp => Ok(Self { lambda: -1.0, mu: 0.0, nu: 1.0 }),
            Kind::VolterraQ => Ok(Self { lambda: 0.0, mu: 1.0, nu: 1.0 }),
            other => Err(LatticeError::Invalid(format!("no master symmetries on {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OevelReport {
    pub i: usize,
    pub j: usize,
    /// Residual of relation (a).
    pub scalar: f64,
    /// Residual of relation (b), max entry.
    pub tensor: f64,
    /// Residual of relation (c), max entry.
    pub commutator: f64,
}

impl OevelReport {
    pub fn max(&self) -> f64 {
        self.scalar.max(self.tensor).max(self.commutator)
    }
}

struct Hierarchy {
    space: Kind,
    dim: usize,
}

impl Hierarchy {
    fn master(&self, i: usize) -> VectorField {
        let id = match self.space {
            Kind::TodaQp => crate::poisson::FieldId::Z(i as i32),
            _ => crate::poisson::FieldId::X(i as i32),
        };
        VectorField::new(id, self.dim).expect("dimension checked")
    }

    fn hamiltonian(&self, j: usize) -> SmoothFunction {
        let id = match self.space {
            Kind::TodaQp => FunctionId::TodaHqp(j),
            _ => FunctionId::VolterraIq(j),
        };
        SmoothFunction::new(id, self.dim).expect("dimension checked")
    }

    fn tensor(&self, j: usize) -> BivectorField {
        let id = match self.space {
            Kind::TodaQp => TensorId::Jk(j),
            _ => TensorId::Wk(j + 1),
        };
        BivectorField::new(id, self.dim).expect("depth checked")
    }
}

/// Residuals of (a), (b), (c) at `x` for `i, j <= 3`, `1 <= j`, `i + j <= 4`.
pub fn oevel_relation_check(space: Kind, i: usize, j: usize, x: &[f64]) -> Result<OevelReport> {
    let c = OevelConstants::for_space(space)?;
    space.check_dim(x.len())?;
    if i > 3 || j > 3 || j == 0 || i + j > 4 {
        return Err(LatticeError::Invalid(format!("(i, j) = ({i}, {j}) outside the supported depth")));
    }
    let h = Hierarchy { space, dim: x.len() };
    let (fi, fj, fij) = (h.master(i), h.master(j), h.master(i + j));
    let (di, dj) = (i as f64, j as f64);

    let ka = c.nu + (dj - 1.0 + di) * (c.mu - c.lambda);
    let scalar = (lie_derivative_scalar(&fi, &h.hamiltonian(j), x)? - ka * h.hamiltonian(i + j).eval(x)?).abs();

    let kb = c.mu + (dj - di - 2.0) * (c.mu - c.lambda);
    let lie = lie_derivative_tensor(&fi, &h.tensor(j), x)?;
    let tensor = (lie - h.tensor(i + j).eval(x)? * kb).amax();

    let kc = (c.mu - c.lambda) * (dj - di);
    let comm = vector_field_commutator(&fi, &fj, x)?;
    let target = fij.eval(x)?;
    let commutator = comm.iter().zip(&target).map(|(a, b)| (a - kc * b).abs()).fold(0.0, f64::max);

    Ok(OevelReport { i, j, scalar, tensor, commutator })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toda_conformal_relations() {
        let x = [0.3, -0.1, 0.5, 0.2, 0.4, -0.6, 0.1, 0.8];
        let r = oevel_relation_check(Kind::TodaQp, 0, 2, &x).unwrap();
        assert!(r.tensor < 1e-6, "{r:?}");
        let r = oevel_relation_check(Kind::TodaQp, 1, 1, &x).unwrap();
        assert!(r.max() < 1e-5, "{r:?}");
        assert!(r.commutator < 1e-12);
    }

    #[test]
    fn volterra_relations() {
        let q = [0.2, -0.1, 0.4, 0.0];
        let r = oevel_relation_check(Kind::VolterraQ, 1, 1, &q).unwrap();
        assert!(r.scalar < 1e-5, "{r:?}");
        let r = oevel_relation_check(Kind::VolterraQ, 0, 2, &q).unwrap();
        assert!(r.max() < 1e-5, "{r:?}");
    }

    #[test]
    fn depth_limits() {
        assert!(oevel_relation_check(Kind::TodaQp, 3, 2, &[0.0; 4]).is_err());
        assert!(oevel_relation_check(Kind::TodaAb, 0, 1, &[1.0, 0.0, 0.0]).is_err());
    }
}
