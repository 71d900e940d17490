//! Finite-difference tensor calculus: Jacobiators, Schouten compatibility,
//! Lie derivatives and commutators of vector fields.

use std::ops::Range;

use nalgebra::DMatrix;

use crate::error::{LatticeError, Result};
use crate::poisson::field::VectorField;
use crate::poisson::function::SmoothFunction;
use crate::poisson::tensor::BivectorField;

/// Central difference rule with step `rel_step * max(1, |x_l|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stencil {
    TwoPoint { rel_step: f64 },
    FourPoint { rel_step: f64 },
}

impl Stencil {
    /// Default for Jacobiators and compatibility defects.
    pub const JACOBI: Stencil = Stencil::TwoPoint { rel_step: 1e-6 };
    /// Default for Lie derivatives and commutators.
    pub const LIE: Stencil = Stencil::FourPoint { rel_step: 1e-3 };

    fn rel_step(self) -> f64 {
        match self {
            Stencil::TwoPoint { rel_step } | Stencil::FourPoint { rel_step } => rel_step,
        }
    }

    /// Farthest stencil node, in units of `h`.
    fn reach(self) -> f64 {
        match self {
            Stencil::TwoPoint { .. } => 1.0,
            Stencil::FourPoint { .. } => 2.0,
        }
    }
}

/// Value and coordinate partials of a matrix-valued map at one point.
#[derive(Debug, Clone)]
pub struct Jet {
    pub value: DMatrix<f64>,
    pub partials: Vec<DMatrix<f64>>,
}

/// Differentiates `f` at `x`. For coordinates in `positive`, a stencil that
/// would leave the domain is shrunk tenfold once before giving up.
pub fn jet<F>(f: F, x: &[f64], positive: Range<usize>, stencil: Stencil) -> Result<Jet>
where
    F: Fn(&[f64]) -> Result<DMatrix<f64>>,
{
    let value = f(x)?;
    let mut partials = Vec::with_capacity(x.len());
    let mut xs = x.to_vec();
    for l in 0..x.len() {
        let mut h = stencil.rel_step() * x[l].abs().max(1.0);
        if positive.contains(&l) && x[l] - stencil.reach() * h <= 0.0 {
            h *= 0.1;
            if x[l] - stencil.reach() * h <= 0.0 {
                return Err(LatticeError::Stencil { coord: l });
            }
        }
        let mut at = |offset: f64| -> Result<DMatrix<f64>> {
            xs[l] = x[l] + offset;
            let v = f(&xs);
            xs[l] = x[l];
            v
        };
        let d = match stencil {
            Stencil::TwoPoint { .. } => (at(h)? - at(-h)?) / (2.0 * h),
            Stencil::FourPoint { .. } => {
                let (p1, m1, p2, m2) = (at(h)?, at(-h)?, at(2.0 * h)?, at(-2.0 * h)?);
                ((p1 - m1) * 8.0 - (p2 - m2)) / (12.0 * h)
            }
        };
        partials.push(d);
    }
    Ok(Jet { value, partials })
}

pub fn tensor_jet(p: &BivectorField, x: &[f64], stencil: Stencil) -> Result<Jet> {
    p.check_point(x)?;
    jet(|y| p.eval(y), x, p.positive_coords(), stencil)
}

/// Jet of a vector field, stored as a column matrix.
pub fn field_jet(v: &VectorField, x: &[f64], stencil: Stencil) -> Result<Jet> {
    jet(|y| Ok(DMatrix::from_vec(y.len(), 1, v.eval(y)?)), x, v.positive_coords(), stencil)
}

fn check_triple(dim: usize, (i, j, k): (usize, usize, usize)) -> Result<()> {
    if i >= dim || j >= dim || k >= dim {
        return Err(LatticeError::Invalid(format!("index triple ({i},{j},{k}) out of range for dimension {dim}")));
    }
    if i == j || j == k || i == k {
        return Err(LatticeError::Invalid(format!("index triple ({i},{j},{k}) is not distinct")));
    }
    Ok(())
}

/// `Σ_l P^{il} ∂_l P^{jk} + P^{jl} ∂_l P^{ki} + P^{kl} ∂_l P^{ij}` from a jet.
pub fn jacobiator_from_jet(jet: &Jet, (i, j, k): (usize, usize, usize)) -> f64 {
    let p = &jet.value;
    let d = &jet.partials;
    (0..p.nrows())
        .map(|l| p[(i, l)] * d[l][(j, k)] + p[(j, l)] * d[l][(k, i)] + p[(k, l)] * d[l][(i, j)])
        .sum()
}

/// Jacobiator of `P` at `x` for a triple of distinct 0-based indices.
pub fn jacobiator(p: &BivectorField, x: &[f64], triple: (usize, usize, usize)) -> Result<f64> {
    check_triple(p.dim(), triple)?;
    Ok(jacobiator_from_jet(&tensor_jet(p, x, Stencil::JACOBI)?, triple))
}

/// Largest `|Jacobiator|` over all ordered triples `i < j < k`; the cyclic
/// sum is totally antisymmetric, so these cover every triple.
pub fn jacobiator_max(p: &BivectorField, x: &[f64]) -> Result<f64> {
    let jet = tensor_jet(p, x, Stencil::JACOBI)?;
    Ok(triples(p.dim()).map(|t| jacobiator_from_jet(&jet, t).abs()).fold(0.0, f64::max))
}

pub fn triples(n: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).flat_map(move |j| (j + 1..n).map(move |k| (i, j, k))))
}

fn sum_jet(a: &Jet, b: &Jet) -> Jet {
    Jet {
        value: &a.value + &b.value,
        partials: a.partials.iter().zip(&b.partials).map(|(x, y)| x + y).collect(),
    }
}

fn compat_jets(p: &BivectorField, q: &BivectorField, x: &[f64]) -> Result<(Jet, Jet, Jet)> {
    if p.dim() != q.dim() {
        return Err(LatticeError::Dimension { expected: p.dim(), got: q.dim() });
    }
    let jp = tensor_jet(p, x, Stencil::JACOBI)?;
    let jq = tensor_jet(q, x, Stencil::JACOBI)?;
    let js = sum_jet(&jp, &jq);
    Ok((jp, jq, js))
}

/// `Jac(P + Q) - Jac(P) - Jac(Q)` at `x` for one triple.
pub fn compatibility_defect(p: &BivectorField, q: &BivectorField, x: &[f64], triple: (usize, usize, usize)) -> Result<f64> {
    check_triple(p.dim(), triple)?;
    let (jp, jq, js) = compat_jets(p, q, x)?;
    Ok(jacobiator_from_jet(&js, triple) - jacobiator_from_jet(&jp, triple) - jacobiator_from_jet(&jq, triple))
}

pub fn compatibility_defect_max(p: &BivectorField, q: &BivectorField, x: &[f64]) -> Result<f64> {
    let (jp, jq, js) = compat_jets(p, q, x)?;
    Ok(triples(p.dim())
        .map(|t| (jacobiator_from_jet(&js, t) - jacobiator_from_jet(&jp, t) - jacobiator_from_jet(&jq, t)).abs())
        .fold(0.0, f64::max))
}

/// Matrix `D[i][l] = ∂_l X^i` from a column jet.
fn jacobian_of(jet: &Jet) -> DMatrix<f64> {
    let n = jet.value.nrows();
    DMatrix::from_fn(n, jet.partials.len(), |i, l| jet.partials[l][(i, 0)])
}

/// `(L_X P)^{ij} = X^l ∂_l P^{ij} - P^{lj} ∂_l X^i - P^{il} ∂_l X^j`.
pub fn lie_derivative_tensor(v: &VectorField, p: &BivectorField, x: &[f64]) -> Result<DMatrix<f64>> {
    lie_derivative_tensor_with(v, p, x, Stencil::LIE)
}

pub fn lie_derivative_tensor_with(v: &VectorField, p: &BivectorField, x: &[f64], stencil: Stencil) -> Result<DMatrix<f64>> {
    if v.dim() != p.dim() {
        return Err(LatticeError::Dimension { expected: p.dim(), got: v.dim() });
    }
    let pj = tensor_jet(p, x, stencil)?;
    let vj = field_jet(v, x, stencil)?;
    let dx = jacobian_of(&vj);
    let mut out = -(&dx * &pj.value) - &pj.value * dx.transpose();
    for (l, d) in pj.partials.iter().enumerate() {
        out += d * vj.value[(l, 0)];
    }
    Ok(out)
}

/// `∇f(x) · X(x)`.
pub fn lie_derivative_scalar(v: &VectorField, f: &SmoothFunction, x: &[f64]) -> Result<f64> {
    if v.dim() != f.dim() {
        return Err(LatticeError::Dimension { expected: f.dim(), got: v.dim() });
    }
    let g = f.grad(x)?;
    Ok(g.iter().zip(v.eval(x)?).map(|(a, b)| a * b).sum())
}

/// `[X, Y]^i = X^l ∂_l Y^i - Y^l ∂_l X^i`.
pub fn vector_field_commutator(a: &VectorField, b: &VectorField, x: &[f64]) -> Result<Vec<f64>> {
    vector_field_commutator_with(a, b, x, Stencil::LIE)
}

pub fn vector_field_commutator_with(a: &VectorField, b: &VectorField, x: &[f64], stencil: Stencil) -> Result<Vec<f64>> {
    if a.dim() != b.dim() {
        return Err(LatticeError::Dimension { expected: a.dim(), got: b.dim() });
    }
    let ja = field_jet(a, x, stencil)?;
    let jb = field_jet(b, x, stencil)?;
    let out = jacobian_of(&jb) * &ja.value - jacobian_of(&ja) * &jb.value;
    Ok(out.as_slice().to_vec())
}
