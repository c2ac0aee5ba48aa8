mod common;

use cocycle_core::linalg::{
    eigensplit, oblique_projection, op_norm, principal_angle, projective_lipschitz_bound, random_orthogonal, Subspace,
};
use cocycle_core::{Matrix, Vector};
use common::{random_invertible, rng};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn random_subspace(r: &mut ChaCha8Rng, d: usize, k: usize) -> Subspace {
    Subspace::span(&Matrix::from_fn(d, k, |_, _| r.random_range(-1.0..1.0)))
}

fn unit(r: &mut ChaCha8Rng, d: usize) -> Vector {
    Vector::from_fn(d, |_, _| r.random_range(-1.0..1.0)).normalize()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn swapped_oblique_projections_sum_to_identity(seed in any::<u64>(), d in 2usize..6, k_frac in 0.0f64..1.0) {
        let mut r = rng(seed);
        let k = 1 + (k_frac * (d - 1) as f64) as usize;
        let v = random_subspace(&mut r, d, k);
        let w = random_subspace(&mut r, d, d - k);
        if let (Ok(p), Ok(p2)) = (oblique_projection(&v, &w), oblique_projection(&w, &v)) {
            let scale = op_norm(&p).max(1.0);
            prop_assert!(op_norm(&(p + p2 - Matrix::identity(d, d))) <= 1e-10 * scale);
        }
    }

    #[test]
    fn projection_length_is_bounded_below_by_the_angle(seed in any::<u64>(), d in 2usize..6, theta0 in 0.05f64..1.5) {
        let mut r = rng(seed);
        let k = r.random_range(1..d);
        let w = random_subspace(&mut r, d, k);
        // Measured on the orthogonal complement: a unit vector at angle θ₀.
        let perp = w.orthogonal_complement();
        let along = w.basis().column(0).into_owned();
        let across = perp.basis().column(0).into_owned();
        let q0 = along * theta0.cos() + across * theta0.sin();
        let c = (oblique_projection(&perp, &w).unwrap() * &q0).norm();
        for _ in 0..1000 {
            let v = random_subspace(&mut r, d, d - k);
            let Ok(p) = oblique_projection(&v, &w) else { continue };
            let q = unit(&mut r, d);
            if principal_angle(&Subspace::line(&q), &w).unwrap() < theta0 {
                continue;
            }
            prop_assert!((&p * &q).norm() >= c - 1e-10, "{} < {}", (&p * &q).norm(), c);
        }
    }

    #[test]
    fn eigensplit_subspaces_are_invariant(seed in any::<u64>(), d in 2usize..6) {
        let mut r = rng(seed);
        let moduli: Vec<f64> = (0..d).map(|_| [0.4, 1.0, 2.5][r.random_range(0..3)] * r.random_range(0.9..1.1)).collect();
        let mut diag = Matrix::zeros(d, d);
        for (i, m) in moduli.iter().enumerate() {
            diag[(i, i)] = if r.random_bool(0.5) { *m } else { -*m };
        }
        let p = random_invertible(&mut r, d);
        let m = &p * diag * cocycle_core::linalg::invert(&p).unwrap();
        let split = eigensplit(&m, 0.3).unwrap();
        for e in [&split.stable, &split.center, &split.unstable] {
            if e.dim() > 0 {
                prop_assert!(e.image(&m).gap(e) <= 1e-8);
            }
        }
        prop_assert_eq!(split.stable.dim() + split.center.dim() + split.unstable.dim(), d);
    }

    #[test]
    fn angle_decay_along_block_triangular_products(seed in any::<u64>(), d in 2usize..5, n in 1usize..=30) {
        let mut r = rng(seed);
        let k = r.random_range(1..d);
        let maps: Vec<Matrix> = (0..n).map(|_| {
            let mut m = random_invertible(&mut r, d);
            for i in k..d {
                for j in 0..k {
                    m[(i, j)] = 0.0;
                }
            }
            m
        }).filter(|m| m.determinant().abs() > 1e-3).collect();
        let lambda = maps.iter().map(|m| op_norm(m).ln().max(op_norm(&cocycle_core::linalg::invert(m).unwrap()).ln())).fold(0.0, f64::max);
        let projective = maps.iter().map(|m| projective_lipschitz_bound(m).unwrap()).fold(1.0, f64::max);
        let rate = 2.0 * lambda + projective.ln();
        let e = Subspace::coordinate(d, 0..k);
        let quotient = oblique_projection(&e.orthogonal_complement(), &e).unwrap();
        let v = unit(&mut r, d);
        let product = maps.iter().fold(Matrix::identity(d, d), |acc, m| m * acc);
        let lhs = (&quotient * (&product * &v)).norm();
        let rhs = (-(maps.len() as f64) * rate).exp() * (&quotient * &v).norm();
        prop_assert!(lhs >= rhs * (1.0 - 1e-9));
    }
}

#[test]
fn random_orthogonal_is_orthogonal() {
    let mut r = rng(5);
    for d in 1..6 {
        let o = random_orthogonal(d, &mut r);
        assert!((o.transpose() * &o - Matrix::identity(d, d)).abs().max() < 1e-12);
    }
}
