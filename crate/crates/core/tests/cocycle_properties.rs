mod common;

use cocycle_core::holonomy::{stable_holonomy, unstable_holonomy};
use cocycle_core::linalg::{op_norm, random_orthogonal};
use cocycle_core::zimmer::membership;
use cocycle_core::{LocallyConstantCocycle, Matrix};
use common::{descriptor, measure_on, random_cocycle, rng, sample_points, shifts, u0_cocycle};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cocycle_identity(seed in any::<u64>(), which in 0usize..4, radius in 0usize..2, n in -10i64..=10, m in -10i64..=10) {
        let q = &shifts()[which];
        let mut r = rng(seed);
        let a = random_cocycle(q, &mut r, radius, 3);
        for x in sample_points(q, &mut r, 4, 25) {
            let whole = a.iterate(&x, n + m).unwrap();
            let later = a.iterate(&x.shift(n), m).unwrap();
            let first = a.iterate(&x, n).unwrap();
            let scale = op_norm(&later) * op_norm(&first);
            prop_assert!(op_norm(&(whole - later * first)) <= 1e-12 * scale);
        }
    }

    #[test]
    fn distortion_and_norm_bounds(seed in any::<u64>(), which in 0usize..4, n in -50i64..=50) {
        let q = &shifts()[which];
        let mut r = rng(seed);
        let a = random_cocycle(q, &mut r, 1, 2);
        let eta = a.log_bound();
        for x in sample_points(q, &mut r, 3, 55) {
            prop_assert!(a.qc_distortion(&x, n).unwrap() >= 1.0 - 1e-12);
            let norm = op_norm(&a.iterate(&x, n).unwrap());
            prop_assert!(norm.ln() <= eta * n.abs() as f64 + 1e-9);
        }
    }

    #[test]
    fn conformal_cocycles_have_unit_distortion(seed in any::<u64>(), which in 0usize..4, n in -20i64..=20) {
        let q = &shifts()[which];
        let mut r = rng(seed);
        let a = LocallyConstantCocycle::from_fn(q, 1, 3, |_| {
            let c: f64 = r.random_range(0.5..2.0);
            Ok(random_orthogonal(3, &mut r) * c)
        }).unwrap();
        let mut r2 = rng(seed ^ 1);
        for x in sample_points(q, &mut r2, 3, 25) {
            prop_assert!((a.qc_distortion(&x, n).unwrap() - 1.0).abs() < 1e-10);
        }
        let stretched = a.map_values(|m| m * Matrix::from_diagonal(&cocycle_core::Vector::from_vec(vec![2.0, 1.0, 1.0]))).unwrap();
        let x = &sample_points(q, &mut r2, 1, 5)[0];
        prop_assert!(stretched.qc_distortion(x, 1).unwrap() > 1.5);
    }

    #[test]
    fn stable_holonomy_chain_rule_and_intertwining(seed in any::<u64>(), which in 0usize..4, radius in 0usize..3, n in 1i64..=20) {
        let q = &shifts()[which];
        let mu = measure_on(q);
        let mut r = rng(seed);
        let a = random_cocycle(q, &mut r, radius, 2);
        let x = mu.sample_point_on(&mut r, -15, 31).unwrap();
        let y = mu.resample_past(&mut r, &x, 0, 12).unwrap();
        let z = mu.resample_past(&mut r, &x, 0, 12).unwrap();
        let h = |p, q| stable_holonomy(&a, p, q).unwrap().matrix;
        let (hyz, hxz, hyx) = (h(&y, &z), h(&x, &z), h(&y, &x));
        prop_assert!(op_norm(&(&hyz - &hxz * &hyx)) <= 1e-12 * op_norm(&hxz) * op_norm(&hyx));

        let hxy = h(&x, &y);
        let shifted = h(&x.shift(n), &y.shift(n));
        let an_x = a.iterate(&x, n).unwrap();
        let an_y_inv = a.iterate(&y.shift(n), -n).unwrap();
        let rhs = &an_y_inv * shifted * &an_x;
        prop_assert!(op_norm(&(hxy - &rhs)) <= 1e-12 * op_norm(&an_y_inv) * op_norm(&an_x) * op_norm(&rhs).max(1.0));
    }

    #[test]
    fn holonomies_of_block_cocycles_stay_in_the_block_group(seed in any::<u64>(), which in 0usize..4, radius in 0usize..3) {
        let q = &shifts()[which];
        let mu = measure_on(q);
        let mut r = rng(seed);
        let desc = descriptor(&mut r);
        let a = u0_cocycle(q, &mut r, &desc, radius, 1.0);
        let x = mu.sample_point_on(&mut r, -15, 31).unwrap();
        let y = mu.resample_past(&mut r, &x, 0, 12).unwrap();
        let z = mu.resample_future(&mut r, &x, 0, 12).unwrap();
        let hs = stable_holonomy(&a, &x, &y).unwrap().matrix;
        let hu = unstable_holonomy(&a, &x, &z).unwrap().matrix;
        prop_assert!(membership(&hs, &desc, 1e-10).unwrap().member);
        prop_assert!(membership(&hu, &desc, 1e-10).unwrap().member);
    }
}
