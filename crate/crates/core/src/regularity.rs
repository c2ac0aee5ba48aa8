//! Lyapunov exponents, `D(N, θ)` regularity decisions and transport of
//! invariant flags along holonomies.

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cocycle::LocallyConstantCocycle;
use crate::error::{Error, Result};
use crate::holonomy::{composed_holonomy, HolonomyKind};
use crate::linalg::{condition_number, invert, op_norm, Flag, Subspace};
use crate::measure::MarkovMeasure;
use crate::sft::{lcm, PeriodicPoint, Symbol, SymbolicPoint};
use crate::Matrix;

/// Parameters `(N, θ)` of the regularity set `D(N, θ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockParams {
    pub n: usize,
    pub theta: f64,
}

impl BlockParams {
    pub fn new(n: usize, theta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("block length N must be positive".into()));
        }
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidParameter(format!("θ must be positive and finite, got {theta}")));
        }
        Ok(BlockParams { n, theta })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExponentMethod {
    ExactPeriodic,
    ExactFiniteScale,
    MonteCarlo,
}

/// Extremal exponents and the method that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub method: ExponentMethod,
    /// Period, scale `n` or iterate length, depending on the method.
    pub n_used: usize,
    /// Eigenvalue clustering tolerance (periodic), zero (finite scale) or
    /// the larger of the two standard errors (Monte Carlo).
    pub error_estimate: f64,
}

impl ExponentReport {
    pub fn gap(&self) -> f64 {
        self.lambda_plus - self.lambda_minus
    }
}

/// Groups eigenvalues by single linkage at distance `tol` and returns the
/// geometric mean of each group's moduli.
///
/// Defective eigenvalues split into rings of radius `~ε^{1/m}` under
/// rounding, but the product over the ring is accurate to `O(ε)`.  Unlike
/// the modulus of the arithmetic mean, this is also exact for merged
/// eigenvalues of equal modulus such as `e^{±iθ}` with small `θ`.
fn clustered_moduli(eigs: &[Complex<f64>], tol: f64) -> Vec<f64> {
    let n = eigs.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn root(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (eigs[i] - eigs[j]).norm() <= tol {
                let (a, b) = (root(&mut label, i), root(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    let mut sums: Vec<(f64, usize)> = vec![(0.0, 0); n];
    for i in 0..n {
        let r = root(&mut label, i);
        sums[r].0 += eigs[i].norm().ln();
        sums[r].1 += 1;
    }
    sums.into_iter().filter(|s| s.1 > 0).map(|(s, c)| (s / c as f64).exp()).collect()
}

/// Clustering tolerance for the eigenvalues of `m`, relative to their
/// scale: `10·(ε·κ(m))^{1/d}` bounds the splitting of a perturbed Jordan
/// block of size `d`.
fn cluster_tolerance(m: &Matrix) -> f64 {
    let d = m.nrows().max(1) as f64;
    let kappa = condition_number(m).max(1.0);
    (10.0 * (f64::EPSILON * kappa).powf(1.0 / d)).max(1e-6)
}

/// `λ_±(p)` from the eigenvalues of the return map `A^q(p)`.
pub fn periodic_exponents(a: &LocallyConstantCocycle, p: &PeriodicPoint) -> Result<ExponentReport> {
    let q = p.period();
    let m = a.iterate(&p.point(), q as i64)?;
    let scale = op_norm(&m);
    let normalized = &m / scale;
    let tol = cluster_tolerance(&normalized);
    let eigs: Vec<Complex<f64>> = normalized.complex_eigenvalues().iter().copied().collect();
    let moduli = clustered_moduli(&eigs, tol);
    let logs: Vec<f64> = moduli.iter().map(|r| (r * scale).ln() / q as f64).collect();
    let lambda_plus = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lambda_minus = logs.iter().copied().fold(f64::INFINITY, f64::min);
    if !lambda_plus.is_finite() || !lambda_minus.is_finite() {
        return Err(Error::Singular(condition_number(&m)));
    }
    Ok(ExponentReport { lambda_plus, lambda_minus, method: ExponentMethod::ExactPeriodic, n_used: q, error_estimate: tol })
}

fn log_extremes(m: &Matrix) -> (f64, f64) {
    let s = m.singular_values();
    (s.max().ln(), s.min().ln())
}

/// Exact `a_n = (1/n)·Σ_w µ[w]·log‖Aⁿ(w)‖` over admissible words of
/// length `n + 2k`.  Exceeding `budget` words is an error; use
/// [`monte_carlo_exponent`] instead.
pub fn finite_scale_exponent(
    a: &LocallyConstantCocycle,
    mu: &MarkovMeasure,
    n: usize,
    budget: u128,
) -> Result<f64> {
    Ok(finite_scale_exponents(a, mu, n, budget)?.lambda_plus)
}

/// [`finite_scale_exponent`] together with its lower counterpart
/// `(1/n)·Σ_w µ[w]·log σ_min(Aⁿ(w))`.
pub fn finite_scale_exponents(
    a: &LocallyConstantCocycle,
    mu: &MarkovMeasure,
    n: usize,
    budget: u128,
) -> Result<ExponentReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("scale n must be at least 1".into()));
    }
    if mu.support() != a.shift() {
        return Err(Error::InvalidParameter("measure and cocycle live over different shifts".into()));
    }
    let words = a.shift().admissible_words(n + 2 * a.radius(), budget)?;
    let (mut plus, mut minus) = (0.0, 0.0);
    for w in &words {
        let weight = mu.cylinder_measure(w);
        if weight == 0.0 {
            continue;
        }
        let (hi, lo) = log_extremes(&a.iterate_word(w)?);
        plus += weight * hi;
        minus += weight * lo;
    }
    Ok(ExponentReport {
        lambda_plus: plus / n as f64,
        lambda_minus: minus / n as f64,
        method: ExponentMethod::ExactFiniteScale,
        n_used: n,
        error_estimate: 0.0,
    })
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Sample means of `(1/n)·log‖Aⁿ(x)‖` and `(1/n)·log σ_min(Aⁿ(x))` over
/// `trials` stationary samples.
pub fn monte_carlo_exponent<R: Rng + ?Sized>(
    a: &LocallyConstantCocycle,
    mu: &MarkovMeasure,
    n: usize,
    trials: usize,
    rng: &mut R,
) -> Result<ExponentReport> {
    if n == 0 || trials == 0 {
        return Err(Error::InvalidParameter("n and trials must be at least 1".into()));
    }
    if mu.support() != a.shift() {
        return Err(Error::InvalidParameter("measure and cocycle live over different shifts".into()));
    }
    let len = n + 2 * a.radius();
    let mut plus = Vec::with_capacity(trials);
    let mut minus = Vec::with_capacity(trials);
    for _ in 0..trials {
        let w = mu.sample_word(rng, len);
        let (hi, lo) = log_extremes(&a.iterate_word(&w)?);
        plus.push(hi / n as f64);
        minus.push(lo / n as f64);
    }
    let (lp, ep) = mean_and_stderr(&plus);
    let (lm, em) = mean_and_stderr(&minus);
    Ok(ExponentReport {
        lambda_plus: lp,
        lambda_minus: lm,
        method: ExponentMethod::MonteCarlo,
        n_used: n,
        error_estimate: ep.max(em),
    })
}

/// `log(‖M‖·‖M⁻¹‖)`.
fn log_distortion(m: &Matrix) -> f64 {
    let (hi, lo) = log_extremes(m);
    hi - lo
}

/// Per-block log costs of a point: `c_j = log κ(A^N(σ^{jN}x))` forward and
/// `c'_j = log κ(A^N(σ^{−(j+1)N}x))` backward, for `j = 0, 1, …`.
///
/// The backward product is indexed from `j = 0`, mirroring the forward one.
pub fn block_costs(a: &LocallyConstantCocycle, x: &SymbolicPoint, n: usize, count: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut fwd = Vec::with_capacity(count);
    let mut bwd = Vec::with_capacity(count);
    let step = n as i64;
    for j in 0..count as i64 {
        fwd.push(log_distortion(&a.iterate(&x.shift(j * step), step)?));
        bwd.push(log_distortion(&a.iterate(&x.shift(-(j + 1) * step), step)?));
    }
    Ok((fwd, bwd))
}

/// True iff every prefix sum of `c_j − Nθ` is nonpositive up to rounding.
fn prefix_sums_hold(costs: &[f64], params: &BlockParams) -> bool {
    let budget = params.n as f64 * params.theta;
    let mut sum = 0.0;
    let mut scale = 1.0;
    for c in costs {
        sum += c - budget;
        scale += c.abs() + budget;
        if sum > 1e-12 * scale {
            return false;
        }
    }
    true
}

/// Number of `N`-blocks after which the block costs of `p` repeat.
pub fn block_period(p: &PeriodicPoint, n: usize) -> usize {
    lcm(p.period(), n) / n
}

/// Exact decision of `p ∈ D(N, θ)` over all `s ≥ 1`.
///
/// With `T_r` the prefix sums of `c_j − Nθ` and `q'` the block period,
/// `T_{aq'+r} = a·T_{q'} + T_r`, so every `T_s ≤ 0` iff `T_r ≤ 0` for
/// `1 ≤ r ≤ q'`.
pub fn block_membership_periodic(a: &LocallyConstantCocycle, p: &PeriodicPoint, params: &BlockParams) -> Result<bool> {
    let (fwd, bwd) = block_costs(a, &p.point(), params.n, block_period(p, params.n))?;
    Ok(prefix_sums_hold(&fwd, params) && prefix_sums_hold(&bwd, params))
}

/// Smallest `θ` with `p ∈ D(N, θ)`: `max_r S_r / (rN)` over one block period.
pub fn critical_theta_periodic(a: &LocallyConstantCocycle, p: &PeriodicPoint, n: usize) -> Result<f64> {
    let (fwd, bwd) = block_costs(a, &p.point(), n, block_period(p, n))?;
    Ok(critical_theta(&fwd, n).max(critical_theta(&bwd, n)))
}

fn critical_theta(costs: &[f64], n: usize) -> f64 {
    let mut sum = 0.0;
    let mut worst = 0.0f64;
    for (r, c) in costs.iter().enumerate() {
        sum += c;
        worst = worst.max(sum / ((r + 1) * n) as f64);
    }
    worst
}

/// Checks the two `D(N, θ)` product conditions for `1 ≤ s ≤ s_max` only.
/// This is a necessary condition for membership, not a decision.
pub fn block_membership_finite(
    a: &LocallyConstantCocycle,
    x: &SymbolicPoint,
    params: &BlockParams,
    s_max: usize,
) -> Result<bool> {
    if s_max == 0 {
        return Err(Error::InvalidParameter("s_max must be at least 1".into()));
    }
    let (fwd, bwd) = block_costs(a, x, params.n, s_max)?;
    Ok(prefix_sums_hold(&fwd, params) && prefix_sums_hold(&bwd, params))
}

/// Smallest `θ` passing [`block_membership_finite`] at horizon `s_max`.
pub fn critical_theta_finite(a: &LocallyConstantCocycle, x: &SymbolicPoint, n: usize, s_max: usize) -> Result<f64> {
    let (fwd, bwd) = block_costs(a, x, n, s_max)?;
    Ok(critical_theta(&fwd, n).max(critical_theta(&bwd, n)))
}

/// Sampled growth of `log(‖Aⁿ(x)‖‖Aⁿ(x)⁻¹‖)` for `|n| ≤ max_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionGrowth {
    /// Mean log distortion at `n = −max_n, …, max_n`.
    pub mean_log_distortion: Vec<f64>,
    /// Polynomial allowance `k` removed before fitting.
    pub polynomial_degree: f64,
    /// Least-squares slope of `L(n) − k·log|n|` against `|n|` over `n ≠ 0`.
    pub exponent: f64,
    pub samples: usize,
}

/// Polynomial distortion allowance of a block-triangular cocycle with
/// orthogonal diagonal blocks: iterates have norm `O(n^{r−1})` for `r`
/// blocks, so the distortion is `O(n^{2(r−1)})`.
pub fn unipotent_distortion_degree(blocks: usize) -> f64 {
    2.0 * blocks.saturating_sub(1) as f64
}

/// Estimates the exponential growth rate of the distortion along sampled
/// orbits after removing a polynomial allowance of degree `degree`.
pub fn distortion_growth<R: Rng + ?Sized>(
    a: &LocallyConstantCocycle,
    mu: &MarkovMeasure,
    max_n: usize,
    samples: usize,
    degree: f64,
    rng: &mut R,
) -> Result<DistortionGrowth> {
    if max_n == 0 || samples == 0 {
        return Err(Error::InvalidParameter("max_n and samples must be at least 1".into()));
    }
    let d = a.dim();
    let reach = (max_n + a.radius()) as i64;
    let mut sums = vec![0.0; 2 * max_n + 1];
    for _ in 0..samples {
        let x = mu.sample_point_on(rng, -reach, 2 * reach as usize + 1)?;
        let mut fwd = DMatrix::identity(d, d);
        let mut bwd = DMatrix::identity(d, d);
        for n in 1..=max_n as i64 {
            fwd = a.evaluate(&x.shift(n - 1)) * fwd;
            bwd = a.evaluate_inverse(&x.shift(-n)) * bwd;
            sums[max_n + n as usize] += log_distortion(&fwd);
            sums[max_n - n as usize] += log_distortion(&bwd);
        }
    }
    let mean: Vec<f64> = sums.iter().map(|s| s / samples as f64).collect();
    let pts: Vec<(f64, f64)> = (0..=2 * max_n)
        .filter(|&i| i != max_n)
        .map(|i| {
            let t = (i as f64 - max_n as f64).abs();
            (t, mean[i] - degree * t.ln())
        })
        .collect();
    let m = pts.len() as f64;
    let (tx, ty) = pts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let (mx, my) = (tx / m, ty / m);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(DistortionGrowth { mean_log_distortion: mean, polynomial_degree: degree, exponent: sxy / sxx, samples })
}

/// A flag and quotient metrics carried to a point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransportedFlag {
    pub point: SymbolicPoint,
    pub flag: Flag,
    /// Gram matrices of the quotient metrics on `E_{i+1}/E_i`, in the
    /// orthonormal bases of `E_{i+1} ⊖ E_i`.
    pub metrics: Vec<Matrix>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportReport {
    pub params: BlockParams,
    /// Horizon of the finite membership check gating each point.
    pub horizon: usize,
    /// `max ‖P_{A(x)E_i(x)} − P_{E_i(σx)}‖`.
    pub equivariance_residual: f64,
    /// `max ‖P_{H^{su}E_i} − P_{H^{us}E_i}‖`.
    pub path_residual: f64,
    /// Largest relative defect of `A(x)` as an isometry between quotient metrics.
    pub metric_residual: f64,
    /// Defect of the basepoint flag under its return map.
    pub basepoint_residual: f64,
    pub backward_indexing: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlagTransport {
    pub flags: Vec<TransportedFlag>,
    pub report: TransportReport,
}

/// Orthonormal bases of `E_{i+1} ⊖ E_i`.
fn quotient_bases(flag: &Flag) -> Vec<Matrix> {
    let mut out = Vec::with_capacity(flag.terms().len());
    let d = flag.terms()[0].ambient();
    let mut prev = Subspace::zero(d);
    for term in flag.terms() {
        let comp = prev.orthogonal_complement();
        let piece = Subspace::span(&(comp.projector() * term.basis()));
        out.push(piece.basis().clone());
        prev = term.clone();
    }
    out
}

/// Matrices of the maps induced by `h` from the quotients of `from` to
/// those of `to`.
fn quotient_maps(h: &Matrix, from: &Flag, to: &Flag) -> Vec<Matrix> {
    quotient_bases(from).iter().zip(quotient_bases(to)).map(|(v, w)| w.transpose() * h * v).collect()
}

fn push_metrics(metrics: &[Matrix], maps: &[Matrix]) -> Result<Vec<Matrix>> {
    metrics
        .iter()
        .zip(maps)
        .map(|(g, t)| {
            let ti = invert(t)?;
            Ok(ti.transpose() * g * &ti)
        })
        .collect()
}

struct Base {
    point: SymbolicPoint,
    flag: Flag,
    metrics: Vec<Matrix>,
}

/// Carries `flag` (and quotient metrics) from the orbit of a periodic
/// basepoint `b` to every point: the orbit points receive `A^j(b)·flag`,
/// every other point the image under `H^{su}` from the orbit point
/// sharing its zero coordinate.
///
/// Each point must pass [`block_membership_finite`] at `horizon`.
pub fn flag_transport(
    a: &LocallyConstantCocycle,
    base: &PeriodicPoint,
    flag: &Flag,
    metrics: &[Matrix],
    points: &[SymbolicPoint],
    params: &BlockParams,
    horizon: usize,
) -> Result<FlagTransport> {
    let d = a.dim();
    if flag.terms()[0].ambient() != d {
        return Err(Error::DimensionMismatch(format!("flag in R^{} for a cocycle in R^{d}", flag.terms()[0].ambient())));
    }
    let pieces = quotient_bases(flag);
    if metrics.len() != pieces.len() || metrics.iter().zip(&pieces).any(|(g, v)| g.nrows() != v.ncols() || g.ncols() != v.ncols()) {
        return Err(Error::DimensionMismatch("one square Gram matrix per quotient is required".into()));
    }
    for x in points {
        if !block_membership_finite(a, x, params, horizon)? {
            return Err(Error::InvalidParameter(format!("point {x} fails the D(N, θ) check at horizon {horizon}")));
        }
    }
    let b = base.point();
    let q = base.period() as i64;
    let ret = a.iterate(&b, q)?;
    let basepoint_residual = flag.image(&ret).max_gap(flag);
    if basepoint_residual > 1e-8 {
        return Err(Error::FlagNotInvariant(basepoint_residual));
    }

    let mut bases: Vec<Base> = Vec::new();
    for j in 0..q {
        let m = a.iterate(&b, j)?;
        let f = flag.image(&m);
        let g = push_metrics(metrics, &quotient_maps(&m, flag, &f))?;
        bases.push(Base { point: b.shift(j), flag: f, metrics: g });
    }
    let base_for = |s: Symbol| -> Result<&Base> {
        bases.iter().find(|bb| bb.point.coord(0) == s).ok_or(Error::MissingBasepoint(s))
    };

    let mut path_residual = 0.0f64;
    let mut carry = |x: &SymbolicPoint| -> Result<TransportedFlag> {
        let bb = base_for(x.coord(0))?;
        let su = composed_holonomy(a, &bb.point, x, HolonomyKind::ComposedSu)?.matrix;
        let us = composed_holonomy(a, &bb.point, x, HolonomyKind::ComposedUs)?.matrix;
        let f = bb.flag.image(&su);
        path_residual = path_residual.max(bb.flag.image(&us).max_gap(&f));
        let g = push_metrics(&bb.metrics, &quotient_maps(&su, &bb.flag, &f))?;
        Ok(TransportedFlag { point: x.clone(), flag: f, metrics: g })
    };

    let mut flags = Vec::with_capacity(points.len());
    let mut equivariance_residual = 0.0f64;
    let mut metric_residual = 0.0f64;
    for x in points {
        let here = carry(x)?;
        let next = carry(&x.shift(1))?;
        let ax = a.evaluate(x);
        equivariance_residual = equivariance_residual.max(here.flag.image(ax).max_gap(&next.flag));
        for ((s, g), gn) in quotient_maps(ax, &here.flag, &next.flag).iter().zip(&here.metrics).zip(&next.metrics) {
            let pulled = s.transpose() * gn * s;
            metric_residual = metric_residual.max(op_norm(&(pulled - g)) / op_norm(g));
        }
        flags.push(here);
    }
    Ok(FlagTransport {
        flags,
        report: TransportReport {
            params: *params,
            horizon,
            equivariance_residual,
            path_residual,
            metric_residual,
            basepoint_residual,
            backward_indexing: "j from 0: blocks A^N(σ^{-(j+1)N} x)".into(),
        },
    })
}
