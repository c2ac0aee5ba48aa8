#![allow(dead_code)]

use cocycle_core::zimmer::{random_element, ZimmerDescriptor};
use cocycle_core::{LocallyConstantCocycle, MarkovMeasure, Matrix, SymbolicPoint, TransitionMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn shifts() -> Vec<TransitionMatrix> {
    vec![
        TransitionMatrix::full_shift(2),
        TransitionMatrix::golden_mean(),
        TransitionMatrix::full_shift(3),
        TransitionMatrix::new(&[[1u8, 1, 0], [0, 1, 1], [1, 0, 1]]).unwrap(),
    ]
}

pub fn measure_on(q: &TransitionMatrix) -> MarkovMeasure {
    MarkovMeasure::uniform_successors(q)
}

pub fn sample_points(q: &TransitionMatrix, rng: &mut ChaCha8Rng, n: usize, reach: i64) -> Vec<SymbolicPoint> {
    let mu = measure_on(q);
    (0..n).map(|_| mu.sample_point_on(rng, -reach, (2 * reach + 1) as usize).unwrap()).collect()
}

pub fn random_invertible(rng: &mut ChaCha8Rng, d: usize) -> Matrix {
    loop {
        let m = Matrix::from_fn(d, d, |_, _| rng.random_range(-1.5..1.5));
        let s = m.singular_values();
        if s.min() > 0.2 * s.max() {
            return m;
        }
    }
}

pub fn random_cocycle(q: &TransitionMatrix, rng: &mut ChaCha8Rng, radius: usize, d: usize) -> LocallyConstantCocycle {
    LocallyConstantCocycle::from_fn(q, radius, d, |_| Ok(random_invertible(rng, d))).unwrap()
}

pub const BLOCK_SHAPES: [&[usize]; 6] = [&[1, 1], &[2, 1], &[1, 2], &[1, 1, 1], &[2, 2], &[2, 1, 1]];

pub fn descriptor(rng: &mut ChaCha8Rng) -> ZimmerDescriptor {
    let dims = BLOCK_SHAPES[rng.random_range(0..BLOCK_SHAPES.len())];
    ZimmerDescriptor::new(dims.to_vec(), 0.0).unwrap()
}

/// A `U₀`-valued cocycle of the given radius.
pub fn u0_cocycle(q: &TransitionMatrix, rng: &mut ChaCha8Rng, desc: &ZimmerDescriptor, radius: usize, spread: f64) -> LocallyConstantCocycle {
    LocallyConstantCocycle::from_fn(q, radius, desc.dim(), |_| Ok(random_element(desc, rng, spread).unwrap())).unwrap()
}

/// A transfer function with identity diagonal blocks and uniform entries
/// above them.
pub fn unipotent_transfer(q: &TransitionMatrix, rng: &mut ChaCha8Rng, desc: &ZimmerDescriptor, radius: usize) -> LocallyConstantCocycle {
    let d = desc.dim();
    LocallyConstantCocycle::from_fn(q, radius, d, |_| {
        let mut m = Matrix::identity(d, d);
        for i in 0..desc.num_blocks() {
            let r = desc.block_range(i);
            for row in r.clone() {
                for col in r.end..d {
                    m[(row, col)] = rng.random_range(-1.0..1.0);
                }
            }
        }
        Ok(m)
    })
    .unwrap()
}

/// Unit upper triangular transfer function with uniform `(−1, 1)` entries.
pub fn unitriangular(q: &TransitionMatrix, rng: &mut ChaCha8Rng, d: usize, radius: usize) -> LocallyConstantCocycle {
    LocallyConstantCocycle::from_fn(q, radius, d, |_| {
        let mut m = Matrix::identity(d, d);
        for i in 0..d {
            for j in i + 1..d {
                m[(i, j)] = rng.random_range(-1.0..1.0);
            }
        }
        Ok(m)
    })
    .unwrap()
}

/// `u(σx)·A(x)·u(x)⁻¹` for a random `U₀`-valued `A` and a random
/// unitriangular `u`.
pub fn u0_coboundary(q: &TransitionMatrix, rng: &mut ChaCha8Rng, desc: &ZimmerDescriptor) -> LocallyConstantCocycle {
    let a = u0_cocycle(q, rng, desc, 0, 1.0);
    let u = unitriangular(q, rng, desc.dim(), 1);
    a.coboundary_conjugate(&u).unwrap()
}
