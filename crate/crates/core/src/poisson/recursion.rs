//! Recursion operators and the hierarchies they generate.

use nalgebra::DMatrix;

use crate::error::{LatticeError, Result};
use crate::poisson::tensor::{self, MAX_DEPTH};
use crate::state::Kind;

/// `J2 J1^{-1}` on `TodaQp`, computed from the two tensors.
pub(crate) fn toda_recursion(x: &[f64]) -> Result<DMatrix<f64>> {
    let inv = tensor::j1(x.len() / 2).try_inverse().ok_or(LatticeError::Singular)?;
    Ok(tensor::j2(x) * inv)
}

pub(crate) fn volterra_recursion(q: &[f64]) -> Result<DMatrix<f64>> {
    tensor::volterra_recursion(q)
}

/// Block form `[[B, -A], [C, B]]` of the Toda recursion operator, where
/// `A`, `B`, `C` are the blocks of `J2`.
pub fn toda_recursion_closed_form(x: &[f64]) -> Result<DMatrix<f64>> {
    Kind::TodaQp.check_dim(x.len())?;
    Ok(tensor::toda_recursion_closed(x))
}

fn check_space(space: Kind, x: &[f64]) -> Result<()> {
    match space {
        Kind::TodaQp | Kind::VolterraQ => space.check_dim(x.len()),
        other => Err(LatticeError::Invalid(format!("no recursion operator on {other:?}"))),
    }
}

pub fn recursion_operator(space: Kind, x: &[f64]) -> Result<DMatrix<f64>> {
    check_space(space, x)?;
    match space {
        Kind::TodaQp => {
            let r = toda_recursion(x)?;
            let closed = tensor::toda_recursion_closed(x);
            let diff = (&r - &closed).amax();
            if diff > 1e-10 * closed.amax().max(1.0) {
                return Err(LatticeError::Invalid(format!("recursion operator disagrees with its block form by {diff:.3e}")));
            }
            Ok(r)
        }
        _ => volterra_recursion(x),
    }
}

/// `R^{k-1} J1` on `TodaQp` or `R^{k-2} w2` on `VolterraQ`, for `1 <= k <= 6`.
pub fn higher_tensor(space: Kind, k: usize, x: &[f64]) -> Result<DMatrix<f64>> {
    check_space(space, x)?;
    if k == 0 || k > MAX_DEPTH {
        return Err(LatticeError::Invalid(format!("hierarchy depth {k} outside 1..={MAX_DEPTH}")));
    }
    let p = match space {
        Kind::TodaQp => tensor::jk(x, k),
        _ => tensor::wk(x, k)?,
    };
    let asym = (&p + p.transpose()).amax();
    if asym > 1e-10 * p.amax().max(1.0) {
        return Err(LatticeError::Invalid(format!("hierarchy member {k} is not antisymmetric ({asym:.3e})")));
    }
    Ok(p)
}
