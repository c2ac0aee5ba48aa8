mod common;

use cocycle_core::linalg::{condition_number, invert};
use cocycle_core::zimmer::{inverse_tolerance, membership, random_element, ZimmerDescriptor};
use cocycle_core::{LocallyConstantCocycle, Matrix, TransitionMatrix};
use common::{descriptor, rng};
use proptest::prelude::*;
use rand::Rng;

const TOL: f64 = 1e-10;

#[test]
fn products_and_inverses_of_members_are_members() {
    let mut r = rng(2024);
    for _ in 0..1000 {
        let mut desc = descriptor(&mut r);
        desc.exponent = r.random_range(-0.5..0.5);
        let m1 = random_element(&desc, &mut r, 2.0).unwrap();
        let m2 = random_element(&desc, &mut r, 2.0).unwrap();
        let product = &m1 * &m2;
        let mut both = desc.clone();
        both.exponent *= 2.0;
        let tol = TOL * condition_number(&m1) * condition_number(&m2);
        assert!(membership(&product, &both, tol).unwrap().member);
        let inv = invert(&m1).unwrap();
        let mut negated = desc.clone();
        negated.exponent = -desc.exponent;
        assert!(membership(&inv, &negated, inverse_tolerance(&m1, TOL)).unwrap().member);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lower_blocks_break_membership(seed in any::<u64>(), size in 1e-6f64..1.0) {
        let mut r = rng(seed);
        let desc = descriptor(&mut r);
        let mut m = random_element(&desc, &mut r, 1.0).unwrap();
        let last = desc.block_range(desc.num_blocks() - 1);
        m[(last.start, 0)] += size;
        prop_assert!(!membership(&m, &desc, 1e-8).unwrap().member);
    }

    #[test]
    fn unipotent_coboundary_stays_in_the_block_group(seed in any::<u64>(), radius in 0usize..3) {
        let q = TransitionMatrix::full_shift(2);
        let mut r = rng(seed);
        let a = LocallyConstantCocycle::constant(&q, &Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0])).unwrap();
        let u = LocallyConstantCocycle::from_fn(&q, radius, 2, |_| {
            Ok(Matrix::from_row_slice(2, 2, &[1.0, r.random_range(-3.0..3.0), 0.0, 1.0]))
        }).unwrap();
        let b = a.coboundary_conjugate(&u).unwrap();
        let desc = ZimmerDescriptor::new(vec![1, 1], 0.0).unwrap();
        for (_, m) in b.entries() {
            prop_assert!(membership(m, &desc, 1e-12).unwrap().member);
            prop_assert_eq!(m[(0, 0)], 1.0);
            prop_assert_eq!(m[(1, 1)], 1.0);
        }
    }
}
