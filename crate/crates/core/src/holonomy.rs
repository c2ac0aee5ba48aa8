//! Stable and unstable holonomies of locally constant cocycles.
//!
//! For a cocycle of window radius `k`, the defining limits
//! `Aⁿ(z)⁻¹Aⁿ(y)` become constant once `n ≥ k`, so every holonomy here is a
//! finite product.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cocycle::LocallyConstantCocycle;
use crate::error::{Error, Result};
use crate::sft::SymbolicPoint;
use crate::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HolonomyKind {
    Stable,
    Unstable,
    /// `H^{su}_{xy} = H^s_{[x,y]y} H^u_{x[x,y]}`.
    ComposedSu,
    /// `H^{us}_{xy} = H^u_{[y,x]y} H^s_{x[y,x]}`.
    ComposedUs,
}

/// A holonomy `H_{from,to}` carrying the fiber over `from` to the fiber over `to`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HolonomyMap {
    pub from: SymbolicPoint,
    pub to: SymbolicPoint,
    pub kind: HolonomyKind,
    pub matrix: Matrix,
    /// The `n` at which the defining limit became exact.
    pub stabilization_step: usize,
}

/// `Aⁿ(z)⁻¹Aⁿ(y)` evaluated as `A(z)⁻¹⋯A(σⁿ⁻¹z)⁻¹A(σⁿ⁻¹y)⋯A(y)` from the
/// inside out.  Matching factors around an identity core cancel exactly.
pub fn stable_truncation(a: &LocallyConstantCocycle, y: &SymbolicPoint, z: &SymbolicPoint, n: usize) -> Matrix {
    telescope(a, (0..n as i64).rev().map(|j| (a.code_at(z, j), a.code_at(y, j))), true)
}

/// `A⁻ⁿ(z)⁻¹A⁻ⁿ(y)`, evaluated from the inside out.
pub fn unstable_truncation(a: &LocallyConstantCocycle, y: &SymbolicPoint, z: &SymbolicPoint, n: usize) -> Matrix {
    telescope(a, (1..=n as i64).rev().map(|j| (a.code_at(z, -j), a.code_at(y, -j))), false)
}

/// Folds `X ↦ L X R` over window-code pairs, where `(L, R)` is
/// `(A_z⁻¹, A_y)` for stable and `(A_z, A_y⁻¹)` for unstable legs.
fn telescope(a: &LocallyConstantCocycle, codes: impl Iterator<Item = (usize, usize)>, stable: bool) -> Matrix {
    let d = a.dim();
    let mut acc: Option<Matrix> = None;
    for (cz, cy) in codes {
        if acc.is_none() && cz == cy {
            continue;
        }
        let core = acc.unwrap_or_else(|| DMatrix::identity(d, d));
        acc = Some(if stable {
            a.inverse_entry(cz) * core * a.entry(cy)
        } else {
            a.entry(cz) * core * a.inverse_entry(cy)
        });
    }
    acc.unwrap_or_else(|| DMatrix::identity(d, d))
}

/// `H^s_{yz}` for `z ∈ W^s_loc(y)`.
pub fn stable_holonomy(a: &LocallyConstantCocycle, y: &SymbolicPoint, z: &SymbolicPoint) -> Result<HolonomyMap> {
    if !y.same_future(z) {
        return Err(Error::NotOnLocalLeaf("stable"));
    }
    let k = a.radius();
    Ok(HolonomyMap {
        from: y.clone(),
        to: z.clone(),
        kind: HolonomyKind::Stable,
        matrix: stable_truncation(a, y, z, k),
        stabilization_step: k,
    })
}

/// `H^u_{yz}` for `z ∈ W^u_loc(y)`.
pub fn unstable_holonomy(a: &LocallyConstantCocycle, y: &SymbolicPoint, z: &SymbolicPoint) -> Result<HolonomyMap> {
    if !y.same_past(z) {
        return Err(Error::NotOnLocalLeaf("unstable"));
    }
    let k = a.radius();
    Ok(HolonomyMap {
        from: y.clone(),
        to: z.clone(),
        kind: HolonomyKind::Unstable,
        matrix: unstable_truncation(a, y, z, k),
        stabilization_step: k,
    })
}

/// Stable holonomy by truncating the limit once successive terms differ by
/// less than `tol`, for generators whose limit is not known to stabilize.
pub fn stable_holonomy_numeric(
    a: &LocallyConstantCocycle,
    y: &SymbolicPoint,
    z: &SymbolicPoint,
    tol: f64,
    max_steps: usize,
) -> Result<HolonomyMap> {
    if !y.same_future(z) {
        return Err(Error::NotOnLocalLeaf("stable"));
    }
    let mut prev = DMatrix::identity(a.dim(), a.dim());
    for n in 1..=max_steps {
        let next = stable_truncation(a, y, z, n);
        if (&next - &prev).abs().max() < tol {
            return Ok(HolonomyMap {
                from: y.clone(),
                to: z.clone(),
                kind: HolonomyKind::Stable,
                matrix: prev,
                stabilization_step: n - 1,
            });
        }
        prev = next;
    }
    Err(Error::BudgetExceeded { what: "holonomy truncation steps", needed: max_steps as u128 + 1, budget: max_steps as u128 })
}

/// Holonomy from `x` to `y` through a bracket point, in the requested order.
pub fn composed_holonomy(
    a: &LocallyConstantCocycle,
    x: &SymbolicPoint,
    y: &SymbolicPoint,
    kind: HolonomyKind,
) -> Result<HolonomyMap> {
    let matrix = match kind {
        HolonomyKind::ComposedSu => {
            let w = x.bracket(y)?;
            stable_holonomy(a, &w, y)?.matrix * unstable_holonomy(a, x, &w)?.matrix
        }
        HolonomyKind::ComposedUs => {
            let w = y.bracket(x)?;
            unstable_holonomy(a, &w, y)?.matrix * stable_holonomy(a, x, &w)?.matrix
        }
        HolonomyKind::Stable => return stable_holonomy(a, x, y),
        HolonomyKind::Unstable => return unstable_holonomy(a, x, y),
    };
    Ok(HolonomyMap { from: x.clone(), to: y.clone(), kind, matrix, stabilization_step: a.radius() })
}

/// `τ' = 2τ + 2η + ln 2`, the metric exponent below which transverse
/// continuity estimates apply.
pub fn transverse_tau(tau: f64, eta: f64) -> f64 {
    2.0 * tau + 2.0 * eta + std::f64::consts::LN_2
}

/// A constant `L` with `‖H^s_{yz} − I‖ ≤ L ρ_τ(y, z)` for every local stable
/// (or unstable) pair: the holonomy is the identity once `N(y, z) > k`.
pub fn lipschitz_bound(a: &LocallyConstantCocycle, tau: f64) -> f64 {
    let k = a.radius() as f64;
    ((2.0 * k * a.log_bound()).exp() + 1.0) * (tau * k).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::MarkovMeasure;
    use crate::sft::{parse_word, MetricParams, TransitionMatrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m(rows: &[&[f64]]) -> Matrix {
        DMatrix::from_row_slice(rows.len(), rows[0].len(), &rows.concat())
    }

    fn point(q: &TransitionMatrix, left: &str, core: &str, right: &str, origin: i64) -> SymbolicPoint {
        SymbolicPoint::new(q, parse_word(left).unwrap(), parse_word(core).unwrap(), parse_word(right).unwrap(), origin)
            .unwrap()
    }

    fn generic(q: &TransitionMatrix, radius: usize) -> LocallyConstantCocycle {
        LocallyConstantCocycle::from_fn(q, radius, 2, |w| {
            let s: f64 = w.iter().enumerate().map(|(i, &c)| (i + 1) as f64 * c as f64).sum();
            Ok(m(&[&[1.0 + 0.3 * s, 0.2 + 0.1 * w[0] as f64], &[0.1 * s, 1.0 + 0.05 * w[radius] as f64]]))
        })
        .unwrap()
    }

    #[test]
    fn identity_on_the_diagonal() {
        let q = TransitionMatrix::full_shift(2);
        let a = generic(&q, 1);
        let x = point(&q, "01", "1101", "0", 2);
        assert_eq!(stable_holonomy(&a, &x, &x).unwrap().matrix, DMatrix::identity(2, 2));
        assert_eq!(unstable_holonomy(&a, &x, &x).unwrap().matrix, DMatrix::identity(2, 2));
        for kind in [HolonomyKind::ComposedSu, HolonomyKind::ComposedUs] {
            assert_eq!(composed_holonomy(&a, &x, &x, kind).unwrap().matrix, DMatrix::identity(2, 2));
        }
    }

    #[test]
    fn radius_zero_holonomies_are_trivial() {
        let q = TransitionMatrix::full_shift(2);
        let mu = MarkovMeasure::uniform(2);
        let a = generic(&q, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let y = mu.sample_point_on(&mut rng, -8, 17).unwrap();
            let z = mu.resample_past(&mut rng, &y, 0, 8).unwrap();
            let u = mu.resample_future(&mut rng, &y, 0, 8).unwrap();
            // termwise: A(σʲz) = A(σʲy) for j ≥ 0 since the window is x_0 alone
            for j in 0..10 {
                assert_eq!(a.evaluate(&y.shift(j)), a.evaluate(&z.shift(j)));
                assert_eq!(a.evaluate(&y.shift(-j)), a.evaluate(&u.shift(-j)));
            }
            assert_eq!(stable_holonomy(&a, &y, &z).unwrap().matrix, DMatrix::identity(2, 2));
            assert_eq!(unstable_holonomy(&a, &y, &u).unwrap().matrix, DMatrix::identity(2, 2));
        }
    }

    #[test]
    fn exact_matches_long_truncation() {
        let q = TransitionMatrix::full_shift(2);
        let mu = MarkovMeasure::uniform(2);
        let a = generic(&q, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let y = mu.sample_point_on(&mut rng, -8, 17).unwrap();
            let z = mu.resample_past(&mut rng, &y, 0, 8).unwrap();
            let h = stable_holonomy(&a, &y, &z).unwrap();
            assert_eq!(h.stabilization_step, 1);
            assert!((&h.matrix - stable_truncation(&a, &y, &z, 10)).abs().max() <= 1e-14);
            let numeric = stable_holonomy_numeric(&a, &y, &z, 1e-15, 50).unwrap();
            assert!(numeric.stabilization_step <= 1);
            assert!((numeric.matrix - &h.matrix).abs().max() <= 1e-14);
        }
    }

    #[test]
    fn leaf_preconditions() {
        let q = TransitionMatrix::full_shift(2);
        let a = generic(&q, 1);
        let zero = point(&q, "0", "", "0", 0);
        let one = point(&q, "1", "", "1", 0);
        assert_eq!(stable_holonomy(&a, &zero, &one).unwrap_err(), Error::NotOnLocalLeaf("stable"));
        assert_eq!(unstable_holonomy(&a, &zero, &one).unwrap_err(), Error::NotOnLocalLeaf("unstable"));
        assert!(matches!(
            composed_holonomy(&a, &zero, &one, HolonomyKind::ComposedSu),
            Err(Error::BracketUndefined(0, 1))
        ));
    }

    #[test]
    fn composed_su_degenerates_on_stable_pairs() {
        let mu = MarkovMeasure::uniform(2);
        let a = generic(mu.support(), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let x = mu.sample_point_on(&mut rng, -8, 17).unwrap();
            let y = mu.resample_past(&mut rng, &x, 0, 8).unwrap();
            let su = composed_holonomy(&a, &x, &y, HolonomyKind::ComposedSu).unwrap();
            let s = stable_holonomy(&a, &x, &y).unwrap();
            assert!((su.matrix - s.matrix).abs().max() < 1e-15);
        }
    }

    #[test]
    fn lipschitz_bound_dominates() {
        let mu = MarkovMeasure::uniform(2);
        let a = generic(mu.support(), 2);
        let metric = MetricParams::new(1.0).unwrap();
        let l = lipschitz_bound(&a, metric.tau);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for keep in 0..6 {
            for _ in 0..50 {
                let y = mu.sample_point_on(&mut rng, -10, 21).unwrap();
                let z = mu.resample_past(&mut rng, &y, keep, 8).unwrap();
                let h = stable_holonomy(&a, &y, &z).unwrap();
                let err = crate::linalg::op_norm(&(h.matrix - DMatrix::identity(2, 2)));
                assert!(err <= l * metric.distance(&y, &z) + 1e-12);
            }
        }
    }
}
