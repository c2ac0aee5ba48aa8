//! Shared workloads for the benchmarks.

use cocycle_core::fixtures::{random_block_cocycle, unipotent_transfer};
use cocycle_core::linalg::invert;
use cocycle_core::sft::SymbolicPoint;
use cocycle_core::transfer::default_basepoints;
use cocycle_core::zimmer::ZimmerDescriptor;
use cocycle_core::{LocallyConstantCocycle, MarkovMeasure, Matrix, TransitionMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random `U₀` cocycle with sampled stable and unstable partners.
pub struct HolonomyWorkload {
    pub a: LocallyConstantCocycle,
    pub stable: Vec<(SymbolicPoint, SymbolicPoint)>,
    pub unstable: Vec<(SymbolicPoint, SymbolicPoint)>,
}

pub fn holonomy_workload(radius: usize, pairs: usize) -> HolonomyWorkload {
    let q = TransitionMatrix::full_shift(2);
    let mu = MarkovMeasure::uniform_successors(&q);
    let desc = ZimmerDescriptor::new(vec![1, 2], 0.0).expect("valid descriptor");
    let mut r = rng(1);
    let a = random_block_cocycle(&q, &desc, radius, 1.0, &mut r).expect("fixture");
    let mut stable = Vec::with_capacity(pairs);
    let mut unstable = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        let x = mu.sample_point_on(&mut r, -40, 81).expect("sample");
        stable.push((x.clone(), mu.resample_past(&mut r, &x, 0, 12).expect("sample")));
        unstable.push((x.clone(), mu.resample_future(&mut r, &x, 0, 12).expect("sample")));
    }
    HolonomyWorkload { a, stable, unstable }
}

/// `B = u(σx)·A(x)·u(x)⁻¹` for a random `U₀` cocycle `A` and a random
/// transfer `u` with identity diagonal blocks, with `u⁻¹` at the default
/// basepoints.
pub struct ReconstructionWorkload {
    pub a: LocallyConstantCocycle,
    pub b: LocallyConstantCocycle,
    pub desc: ZimmerDescriptor,
    pub basepoints: Vec<SymbolicPoint>,
    pub base_values: Vec<Matrix>,
}

pub fn reconstruction_workload(block_dims: Vec<usize>) -> ReconstructionWorkload {
    let q = TransitionMatrix::full_shift(2);
    let desc = ZimmerDescriptor::new(block_dims, 0.0).expect("valid descriptor");
    let mut r = rng(7);
    let a = random_block_cocycle(&q, &desc, 1, 1.0, &mut r).expect("fixture");
    let u = unipotent_transfer(&q, &desc, 1, 1.0, &mut r).expect("fixture");
    let b = a.coboundary_conjugate(&u).expect("invertible transfer");
    let basepoints = default_basepoints(&q).expect("mixing shift");
    let base_values = basepoints.iter().map(|w| invert(u.evaluate(w)).expect("unipotent")).collect();
    ReconstructionWorkload { a, b, desc, basepoints, base_values }
}
