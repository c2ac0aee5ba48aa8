//! Random and closed-form cocycles used by experiments, tests and benches.

use rand::Rng;

use crate::cocycle::LocallyConstantCocycle;
use crate::error::Result;
use crate::sft::{Symbol, TransitionMatrix};
use crate::zimmer::{random_element, ZimmerDescriptor};
use crate::Matrix;

/// A cocycle whose every value is a random element of `U_λ`.
pub fn random_block_cocycle<R: Rng + ?Sized>(
    q: &TransitionMatrix,
    desc: &ZimmerDescriptor,
    radius: usize,
    spread: f64,
    rng: &mut R,
) -> Result<LocallyConstantCocycle> {
    LocallyConstantCocycle::from_fn(q, radius, desc.dim(), |_| random_element(desc, rng, spread))
}

/// Identity diagonal blocks and uniform `[−spread, spread]` entries above them.
pub fn unipotent_transfer<R: Rng + ?Sized>(
    q: &TransitionMatrix,
    desc: &ZimmerDescriptor,
    radius: usize,
    spread: f64,
    rng: &mut R,
) -> Result<LocallyConstantCocycle> {
    let flat = ZimmerDescriptor::new(desc.block_dims.clone(), 0.0)?;
    LocallyConstantCocycle::from_fn(q, radius, desc.dim(), |_| {
        let mut m = random_element(&flat, rng, spread)?;
        for i in 0..flat.num_blocks() {
            let r = flat.block_range(i);
            m.view_mut((r.start, r.start), (r.len(), r.len())).fill_with_identity();
        }
        Ok(m)
    })
}

/// Unit upper triangular values with uniform `[−spread, spread]` entries
/// above the diagonal, ignoring any block structure.
pub fn unitriangular_transfer<R: Rng + ?Sized>(
    q: &TransitionMatrix,
    dim: usize,
    radius: usize,
    spread: f64,
    rng: &mut R,
) -> Result<LocallyConstantCocycle> {
    LocallyConstantCocycle::from_fn(q, radius, dim, |_| {
        let mut m = Matrix::identity(dim, dim);
        for i in 0..dim {
            for j in i + 1..dim {
                m[(i, j)] = if spread > 0.0 { rng.random_range(-spread..=spread) } else { 0.0 };
            }
        }
        Ok(m)
    })
}

/// `u(σx)·A(x)·u(x)⁻¹` for a random `U₀`-valued `A` of radius 0 and a
/// random unitriangular `u` of radius 1.
pub fn block_coboundary<R: Rng + ?Sized>(
    q: &TransitionMatrix,
    desc: &ZimmerDescriptor,
    spread: f64,
    rng: &mut R,
) -> Result<LocallyConstantCocycle> {
    let a = random_block_cocycle(q, desc, 0, spread, rng)?;
    let u = unitriangular_transfer(q, desc.dim(), 1, 1.0, rng)?;
    a.coboundary_conjugate(&u)
}

/// `[[1, 1], [0, 1]]`.
pub fn unipotent_generator() -> Matrix {
    Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0])
}

/// The pair `(u, B)` for `A = [[1, 1], [0, 1]]` and a scalar function `φ`
/// of radius `k`: `u = [[1, −φ], [0, 1]]` and
/// `B = u(σx)·A·u(x)⁻¹ = [[1, 1 − φ(σx) + φ(x)], [0, 1]]`.
pub fn unipotent_example<F>(
    q: &TransitionMatrix,
    radius: usize,
    phi: F,
) -> Result<(LocallyConstantCocycle, LocallyConstantCocycle, LocallyConstantCocycle)>
where
    F: Fn(&[Symbol]) -> f64,
{
    let a = LocallyConstantCocycle::constant(q, &unipotent_generator())?;
    let u = LocallyConstantCocycle::from_fn(q, radius, 2, |w| Ok(Matrix::from_row_slice(2, 2, &[1.0, -phi(w), 0.0, 1.0])))?;
    let b = a.coboundary_conjugate(&u)?;
    Ok((a, u, b))
}

/// Rotation by `t` in the plane.
pub fn rotation(t: f64) -> Matrix {
    Matrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()])
}
