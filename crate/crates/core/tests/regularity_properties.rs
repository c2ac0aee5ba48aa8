mod common;

use cocycle_core::regularity::{
    distortion_growth, finite_scale_exponent, monte_carlo_exponent, periodic_exponents, unipotent_distortion_degree,
};
use cocycle_core::TransitionMatrix;
use common::{descriptor, measure_on, random_cocycle, rng, shifts, u0_coboundary};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn exact_scale_sums_are_subadditive(seed in any::<u64>(), which in 0usize..2, radius in 0usize..2) {
        let q = &shifts()[which];
        let mu = measure_on(q);
        let mut r = rng(seed);
        let a = random_cocycle(q, &mut r, radius, 2);
        let s: Vec<f64> = (1..=10).map(|n| n as f64 * finite_scale_exponent(&a, &mu, n, 1 << 16).unwrap()).collect();
        for n in 1..10 {
            for m in 1..=10 - n {
                let (sn, sm, snm) = (s[n - 1], s[m - 1], s[n + m - 1]);
                prop_assert!(snm <= sn + sm + 1e-10 * (1.0 + sn.abs() + sm.abs()), "n={} m={}: {} > {} + {}", n, m, snm, sn, sm);
            }
        }
    }

    #[test]
    fn monte_carlo_matches_exact_sums(seed in any::<u64>(), which in 0usize..4, n in 2usize..8) {
        let q = &shifts()[which];
        let mu = measure_on(q);
        let mut r = rng(seed);
        let a = random_cocycle(q, &mut r, 0, 2);
        let exact = finite_scale_exponent(&a, &mu, n, 1 << 16).unwrap();
        let mc = monte_carlo_exponent(&a, &mu, n, 4000, &mut r).unwrap();
        prop_assert!((mc.lambda_plus - exact).abs() <= 3.0 * mc.error_estimate + 1e-12,
            "exact {} mc {} ± {}", exact, mc.lambda_plus, mc.error_estimate);
    }

    #[test]
    fn block_coboundaries_have_zero_periodic_exponents(seed in any::<u64>(), which in 0usize..2) {
        let q = &shifts()[which];
        let mut r = rng(seed);
        let desc = descriptor(&mut r);
        let a = u0_coboundary(q, &mut r, &desc);
        for period in 1..=8 {
            for p in q.enumerate_periodic(period, 1 << 12).unwrap() {
                let e = periodic_exponents(&a, &p).unwrap();
                prop_assert!(e.lambda_plus.abs() <= 1e-9 && e.lambda_minus.abs() <= 1e-9, "{:?} at {:?}", e, p.word());
                prop_assert!(e.gap() <= 1e-9);
            }
        }
    }

    #[test]
    fn block_coboundaries_have_subexponential_distortion(seed in any::<u64>()) {
        let q = TransitionMatrix::full_shift(2);
        let mu = measure_on(&q);
        let mut r = rng(seed);
        let desc = descriptor(&mut r);
        let a = u0_coboundary(&q, &mut r, &desc);
        let g = distortion_growth(&a, &mu, 40, 40, unipotent_distortion_degree(desc.num_blocks()), &mut r).unwrap();
        prop_assert!(g.exponent <= 1e-3, "{:?} for {:?}", g.exponent, desc.block_dims);
    }
}
