//! Subspaces, flags, projections, eigensplittings and invariant-cone estimates.

use nalgebra::linalg::SVD;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Matrix, Vector};

/// Rank cutoff relative to the largest singular value.
const RANK_TOL: f64 = 1e-10;

/// Default condition-number ceiling for oblique projections.
pub const DEFAULT_MAX_CONDITION: f64 = 1e12;

/// Default width of the center band in [`eigensplit`].
pub const DEFAULT_SPLIT_TOL: f64 = 1e-6;

/// Multiplier of `‖A‖‖A⁻¹‖` in the projective Lipschitz bound for the
/// angle metric on lines.
pub const PROJECTIVE_CONSTANT: f64 = 1.0;

/// Largest singular value.
pub fn op_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Smallest singular value.
pub fn min_singular(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().min()
}

/// `‖M‖·‖M⁻¹‖`, infinite for singular matrices.
pub fn condition_number(m: &Matrix) -> f64 {
    let s = m.singular_values();
    let lo = s.min();
    if lo == 0.0 {
        f64::INFINITY
    } else {
        s.max() / lo
    }
}

/// Inverse of a square matrix, rejecting singular or non-finite input.
pub fn invert(m: &Matrix) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("cannot invert a {}x{} matrix", m.nrows(), m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow);
    }
    m.clone().try_inverse().ok_or_else(|| Error::Singular(condition_number(m)))
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with sign fix).
pub fn random_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Matrix {
    let g = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// A linear subspace of `R^d` carried by an orthonormal basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Subspace {
    ambient: usize,
    basis: Matrix,
}

impl Subspace {
    /// The column span of `vectors` (a `d×m` matrix, any rank).
    pub fn span(vectors: &Matrix) -> Self {
        let d = vectors.nrows();
        if vectors.ncols() == 0 {
            return Self::zero(d);
        }
        let svd = SVD::new(vectors.clone(), true, false);
        let u = svd.u.expect("left singular vectors requested");
        let top = svd.singular_values.max();
        if top == 0.0 {
            return Self::zero(d);
        }
        let rank = svd.singular_values.iter().filter(|&&s| s > RANK_TOL * top).count();
        Subspace { ambient: d, basis: u.columns(0, rank).into_owned() }
    }

    /// The span of a single vector.
    pub fn line(v: &Vector) -> Self {
        Self::span(&Matrix::from_column_slice(v.len(), 1, v.as_slice()))
    }

    pub fn zero(d: usize) -> Self {
        Subspace { ambient: d, basis: DMatrix::zeros(d, 0) }
    }

    pub fn full(d: usize) -> Self {
        Subspace { ambient: d, basis: DMatrix::identity(d, d) }
    }

    /// Span of the standard basis vectors `e_i` for `i` in `range`.
    pub fn coordinate(d: usize, range: std::ops::Range<usize>) -> Self {
        let r = range.len();
        let mut basis = DMatrix::zeros(d, r);
        for (c, i) in range.enumerate() {
            basis[(i, c)] = 1.0;
        }
        Subspace { ambient: d, basis }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Orthonormal basis as the columns of a `d×r` matrix.
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    /// Orthogonal projector `V Vᵀ`.
    pub fn projector(&self) -> Matrix {
        &self.basis * self.basis.transpose()
    }

    pub fn orthogonal_complement(&self) -> Self {
        let d = self.ambient;
        let r = self.dim();
        if r == 0 {
            return Self::full(d);
        }
        if r == d {
            return Self::zero(d);
        }
        let residual = DMatrix::identity(d, d) - self.projector();
        let svd = SVD::new(residual, true, false);
        let u = svd.u.expect("left singular vectors requested");
        Subspace { ambient: d, basis: u.columns(0, d - r).into_owned() }
    }

    /// `M·V` for invertible `M`.  The dimension is kept even when `M` is
    /// badly conditioned, so no rank truncation is applied.
    pub fn image(&self, m: &Matrix) -> Self {
        if self.dim() == 0 {
            return self.clone();
        }
        let q = (m * &self.basis).qr().q();
        Subspace { ambient: self.ambient, basis: q }
    }

    /// `V + W`.
    pub fn sum(&self, other: &Self) -> Self {
        let mut stacked = DMatrix::zeros(self.ambient, self.dim() + other.dim());
        stacked.columns_mut(0, self.dim()).copy_from(&self.basis);
        stacked.columns_mut(self.dim(), other.dim()).copy_from(&other.basis);
        Self::span(&stacked)
    }

    /// Distance from `v` to the subspace relative to `‖v‖`.
    pub fn relative_distance(&self, v: &Vector) -> f64 {
        let n = v.norm();
        if n == 0.0 {
            return 0.0;
        }
        (v - &self.basis * (self.basis.transpose() * v)).norm() / n
    }

    /// Gap `‖P_V − P_W‖`, the sine of the largest principal angle for
    /// subspaces of equal dimension and 1 when the dimensions differ.
    pub fn gap(&self, other: &Self) -> f64 {
        if self.dim() != other.dim() {
            return 1.0;
        }
        op_norm(&(self.projector() - other.projector()))
    }

    /// Largest `‖(I − P_W) v‖` over unit `v ∈ V`; zero iff `V ⊆ W`.
    pub fn containment_residual(&self, other: &Self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        op_norm(&(&self.basis - other.projector() * &self.basis))
    }
}

/// Smallest angle between unit vectors of `V` and `W`, in `[0, π/2]`.
pub fn principal_angle(v: &Subspace, w: &Subspace) -> Result<f64> {
    if v.dim() == 0 || w.dim() == 0 {
        return Err(Error::ZeroSubspace);
    }
    if v.ambient != w.ambient {
        return Err(Error::DimensionMismatch(format!("ambient dimensions {} and {}", v.ambient, w.ambient)));
    }
    let (a, b) = if v.dim() <= w.dim() { (v, w) } else { (w, v) };
    // sines from the residual of the smaller space, cosines from the basis product
    let sin = min_singular(&(&a.basis - b.projector() * &a.basis));
    let cos = op_norm(&(a.basis.transpose() * &b.basis));
    Ok(sin.atan2(cos))
}

/// Angle metric on lines: the angle in `[0, π/2]` between `span u` and `span v`.
pub fn projective_distance(u: &Vector, v: &Vector) -> f64 {
    let (un, vn) = (u.normalize(), v.normalize());
    let c = un.dot(&vn);
    (&un - &vn * c).norm().atan2(c.abs())
}

/// Projection onto `V` parallel to `W`.
pub fn oblique_projection(v: &Subspace, w: &Subspace) -> Result<Matrix> {
    oblique_projection_bounded(v, w, DEFAULT_MAX_CONDITION)
}

/// [`oblique_projection`] with an explicit ceiling on `cond([V W])`.
pub fn oblique_projection_bounded(v: &Subspace, w: &Subspace, max_condition: f64) -> Result<Matrix> {
    let d = v.ambient;
    if w.ambient != d {
        return Err(Error::DimensionMismatch(format!("ambient dimensions {} and {}", d, w.ambient)));
    }
    if v.dim() + w.dim() != d {
        return Err(Error::NonComplementary(format!("dimensions {} + {} != {}", v.dim(), w.dim(), d)));
    }
    if v.dim() == 0 {
        return Ok(DMatrix::zeros(d, d));
    }
    if w.dim() == 0 {
        return Ok(DMatrix::identity(d, d));
    }
    let mut stacked = DMatrix::zeros(d, d);
    stacked.columns_mut(0, v.dim()).copy_from(&v.basis);
    stacked.columns_mut(v.dim(), w.dim()).copy_from(&w.basis);
    let cond = condition_number(&stacked);
    if !(cond <= max_condition) {
        return Err(Error::NonComplementary(format!("stacked bases have condition number {cond:e}")));
    }
    let inv = invert(&stacked)?;
    let mut keep = DMatrix::zeros(d, d);
    keep.columns_mut(0, v.dim()).copy_from(&v.basis);
    Ok(keep * inv)
}

/// A strictly increasing chain of subspaces ending in the whole space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    terms: Vec<Subspace>,
}

impl Flag {
    pub fn new(terms: Vec<Subspace>) -> Result<Self> {
        let Some(last) = terms.last() else {
            return Err(Error::MalformedBlocks("flag needs at least one term".into()));
        };
        let d = last.ambient;
        if last.dim() != d {
            return Err(Error::MalformedBlocks("last flag term must be the whole space".into()));
        }
        for pair in terms.windows(2) {
            if pair[0].ambient != d || pair[0].dim() >= pair[1].dim() {
                return Err(Error::MalformedBlocks("flag dimensions must increase strictly".into()));
            }
            let r = pair[0].containment_residual(&pair[1]);
            if r > 1e-10 {
                return Err(Error::MalformedBlocks(format!("flag terms are not nested (residual {r:e})")));
            }
        }
        if terms[0].dim() == 0 {
            return Err(Error::MalformedBlocks("the zero subspace is implicit and must be omitted".into()));
        }
        Ok(Flag { terms })
    }

    /// The coordinate flag `E_i = span(e_1, …, e_{d_1+⋯+d_i})`.
    pub fn standard(block_dims: &[usize]) -> Result<Self> {
        let d: usize = block_dims.iter().sum();
        let mut acc = 0;
        let mut terms = Vec::with_capacity(block_dims.len());
        for &di in block_dims {
            if di == 0 {
                return Err(Error::MalformedBlocks("block dimensions must be positive".into()));
            }
            acc += di;
            terms.push(Subspace::coordinate(d, 0..acc));
        }
        Self::new(terms)
    }

    pub fn terms(&self) -> &[Subspace] {
        &self.terms
    }

    pub fn dims(&self) -> Vec<usize> {
        self.terms.iter().map(Subspace::dim).collect()
    }

    /// `M·E_i` for every term.
    pub fn image(&self, m: &Matrix) -> Self {
        Flag { terms: self.terms.iter().map(|t| t.image(m)).collect() }
    }

    /// Largest gap between corresponding terms.
    pub fn max_gap(&self, other: &Self) -> f64 {
        if self.terms.len() != other.terms.len() {
            return 1.0;
        }
        self.terms.iter().zip(&other.terms).map(|(a, b)| a.gap(b)).fold(0.0, f64::max)
    }
}

/// Real invariant subspaces grouped by eigenvalue modulus.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenSplit {
    pub stable: Subspace,
    pub center: Subspace,
    pub unstable: Subspace,
    /// Eigenvalue moduli in decreasing order.
    pub moduli: Vec<f64>,
}

fn polynomial_kernel(m: &Matrix, eigs: &[nalgebra::Complex<f64>]) -> Subspace {
    let d = m.nrows();
    if eigs.is_empty() {
        return Subspace::zero(d);
    }
    let id = DMatrix::<f64>::identity(d, d);
    let mut p = id.clone();
    let mut used = vec![false; eigs.len()];
    for i in 0..eigs.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let z = eigs[i];
        if z.im.abs() <= 1e-12 * z.norm().max(1.0) {
            p = (m - &id * z.re) * p;
        } else {
            // pair with the closest remaining conjugate
            let partner = (0..eigs.len())
                .filter(|&j| !used[j])
                .min_by(|&a, &b| {
                    (eigs[a] - z.conj()).norm().partial_cmp(&(eigs[b] - z.conj()).norm()).unwrap()
                });
            if let Some(j) = partner {
                used[j] = true;
            }
            let quad = m * m - m * (2.0 * z.re) + &id * z.norm_sqr();
            p = quad * p;
        }
    }
    let count = eigs.len();
    let svd = SVD::new(p, false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    // rows of Vᵀ are ordered by decreasing singular value; the kernel is the tail
    let kernel = vt.rows(d - count, count).transpose();
    Subspace::span(&kernel)
}

/// Stable, center and unstable subspaces of `M`, with the center band
/// `1 − tol ≤ |z| ≤ 1 + tol`.  Eigenvalues within `tol/2` of a band edge
/// make the split ill-conditioned and are rejected.
pub fn eigensplit(m: &Matrix, tol: f64) -> Result<EigenSplit> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("eigensplit needs a square matrix".into()));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow);
    }
    if min_singular(m) == 0.0 {
        return Err(Error::Singular(f64::INFINITY));
    }
    let eigs: Vec<nalgebra::Complex<f64>> = m.complex_eigenvalues().iter().copied().collect();
    let (mut s, mut c, mut u) = (Vec::new(), Vec::new(), Vec::new());
    for z in &eigs {
        let r = z.norm();
        if (r - (1.0 - tol)).abs() < tol / 2.0 || (r - (1.0 + tol)).abs() < tol / 2.0 {
            return Err(Error::IllConditionedSplit { modulus: r });
        }
        if r < 1.0 - tol {
            s.push(*z);
        } else if r > 1.0 + tol {
            u.push(*z);
        } else {
            c.push(*z);
        }
    }
    let mut moduli: Vec<f64> = eigs.iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(EigenSplit {
        stable: polynomial_kernel(m, &s),
        center: polynomial_kernel(m, &c),
        unstable: polynomial_kernel(m, &u),
        moduli,
    })
}

/// `C·‖A‖·‖A⁻¹‖`: a Lipschitz constant for the action of `A` on lines.
pub fn projective_lipschitz_bound(a: &Matrix) -> Result<f64> {
    let inv = invert(a)?;
    Ok(PROJECTIVE_CONSTANT * op_norm(a) * op_norm(&inv))
}

/// Constants of the invariant-cone estimate for a split `R^k ⊕ R^{d−k}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeParams {
    /// Dimension `k` of the expanded factor.
    pub split: usize,
    /// Expansion rate `µ`: the model satisfies `‖A⁻¹‖ ≤ µ⁻¹`.
    pub expansion: f64,
    /// Contraction rate `λ < µ`: the model satisfies `‖B‖ ≤ λ`.
    pub contraction: f64,
    /// Bound `ε` on each perturbation block.
    pub epsilon: f64,
    /// Aperture `δ`; the cone is `‖v‖ ≤ δ⁻¹‖u‖`.
    pub delta: f64,
    /// Exponent `σ ∈ (0, 1)` in the growth rate `µ − ε^{1−σ}`.
    pub sigma: f64,
    /// Margin constant `D` with `δ ≥ Dε` (may be infinite).
    pub margin: f64,
}

impl ConeParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.expansion > 0.0) {
            return bad("expansion rate must be positive");
        }
        if !(self.contraction >= 0.0 && self.contraction < self.expansion) {
            return bad("contraction rate must lie in [0, expansion)");
        }
        if !(self.epsilon >= 0.0) || !(self.delta > 0.0) {
            return bad("epsilon must be nonnegative and delta positive");
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return bad("sigma must lie in (0, 1)");
        }
        if !(self.margin > 0.0) {
            return bad("margin constant D must be positive");
        }
        Ok(())
    }

    /// Left side `δε + λ + 2ε + ε/δ` of the invariance inequality.
    pub fn invariance_lhs(&self) -> f64 {
        let (e, d) = (self.epsilon, self.delta);
        d * e + self.contraction + 2.0 * e + e / d
    }

    /// Whether `δε + λ + 2ε + ε/δ ≤ µ`.
    pub fn invariance_inequality(&self) -> bool {
        self.invariance_lhs() <= self.expansion
    }

    /// Per-step growth rate `µ − ε^{1−σ}`.
    pub fn growth_rate(&self) -> f64 {
        self.expansion - self.epsilon.powf(1.0 - self.sigma)
    }
}

/// Outcome of [`cone_invariance_check`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeCheck {
    pub holds: bool,
    pub inequality_lhs: f64,
    pub inequality_rhs: f64,
    pub inequality_holds: bool,
    /// Largest `‖v'‖ / (δ⁻¹‖u'‖)` over the sampled boundary images.
    pub worst_image_ratio: f64,
    /// A boundary vector whose image leaves the cone, if one was found.
    pub witness: Option<Vec<f64>>,
}

fn split_parts(v: &Vector, k: usize) -> (f64, f64) {
    let d = v.len();
    (v.rows(0, k).norm(), v.rows(k, d - k).norm())
}

fn random_unit<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vector {
    loop {
        let v = Vector::from_fn(n, |_, _| StandardNormal.sample(rng));
        let norm = v.norm();
        if norm > 1e-8 {
            return v / norm;
        }
    }
}

/// A unit vector at angle exactly `angle` from `{0} × R^{d−k}`.
pub fn vector_at_aperture<R: Rng + ?Sized>(d: usize, k: usize, angle: f64, rng: &mut R) -> Vector {
    let u = random_unit(k, rng);
    let mut v = Vector::zeros(d);
    v.rows_mut(0, k).copy_from(&(u * angle.sin()));
    if d > k {
        let w = random_unit(d - k, rng);
        v.rows_mut(k, d - k).copy_from(&(w * angle.cos()));
    }
    v
}

/// Checks the perturbation structure of `blocks` against `model = A ⊕ B`.
pub fn check_cone_blocks(model: &Matrix, blocks: &[Matrix], params: &ConeParams) -> Result<()> {
    params.validate()?;
    let d = model.nrows();
    let k = params.split;
    if !model.is_square() || k == 0 || k > d {
        return Err(Error::MalformedBlocks(format!("split {k} invalid for a {}x{} model", d, model.ncols())));
    }
    let (a, b) = (model.view((0, 0), (k, k)), model.view((k, k), (d - k, d - k)));
    if op_norm(&model.view((0, k), (k, d - k)).into_owned()) > 0.0
        || op_norm(&model.view((k, 0), (d - k, k)).into_owned()) > 0.0
    {
        return Err(Error::MalformedBlocks("model must be block diagonal".into()));
    }
    let slack = 1e-12;
    let a_inv = invert(&a.into_owned())?;
    if op_norm(&a_inv) > (1.0 + slack) / params.expansion {
        return Err(Error::MalformedBlocks(format!("‖A⁻¹‖ = {} exceeds 1/µ", op_norm(&a_inv))));
    }
    if d > k && op_norm(&b.into_owned()) > params.contraction * (1.0 + slack) + slack {
        return Err(Error::MalformedBlocks("‖B‖ exceeds λ".into()));
    }
    for (i, l) in blocks.iter().enumerate() {
        if l.shape() != model.shape() {
            return Err(Error::MalformedBlocks(format!("block {i} has the wrong shape")));
        }
        let diff = l - model;
        let parts = [
            diff.view((0, 0), (k, k)).into_owned(),
            diff.view((0, k), (k, d - k)).into_owned(),
            diff.view((k, 0), (d - k, k)).into_owned(),
            diff.view((k, k), (d - k, d - k)).into_owned(),
        ];
        let worst = parts.iter().map(op_norm).fold(0.0, f64::max);
        if worst > params.epsilon * (1.0 + slack) + slack {
            return Err(Error::MalformedBlocks(format!(
                "block {i} has perturbation norm {worst} > ε = {}",
                params.epsilon
            )));
        }
    }
    Ok(())
}

/// Decides invariance of the cone `C(δ⁻¹)` under every block: the
/// closed-form inequality must hold and `samples` random cone-boundary
/// vectors must map back into the cone under each block.
pub fn cone_invariance_check<R: Rng + ?Sized>(
    model: &Matrix,
    blocks: &[Matrix],
    params: &ConeParams,
    samples: usize,
    rng: &mut R,
) -> Result<ConeCheck> {
    check_cone_blocks(model, blocks, params)?;
    let d = model.nrows();
    let k = params.split;
    let gamma = 1.0 / params.delta;
    // ‖v‖ = γ‖u‖ exactly when v makes angle atan(δ) with {0}×R^{d−k}
    let boundary = params.delta.atan();
    let mut worst = 0.0f64;
    let mut witness = None;
    if d > k {
        for l in blocks {
            for _ in 0..samples {
                let v = vector_at_aperture(d, k, boundary, rng);
                let image = l * &v;
                let (nu, nv) = split_parts(&image, k);
                let ratio = if nu == 0.0 { f64::INFINITY } else { nv / (gamma * nu) };
                if ratio > worst {
                    worst = ratio;
                }
                if ratio > 1.0 + 1e-12 && witness.is_none() {
                    witness = Some(v.as_slice().to_vec());
                }
            }
        }
    }
    let inequality_holds = params.invariance_inequality();
    Ok(ConeCheck {
        holds: inequality_holds && witness.is_none(),
        inequality_lhs: params.invariance_lhs(),
        inequality_rhs: params.expansion,
        inequality_holds,
        worst_image_ratio: worst,
        witness,
    })
}

/// Calibrates the constant `C` of the growth estimate on the unperturbed
/// model: the smallest observed `‖Π Lʲ v‖ / (µʲ δ)` over sampled unit
/// vectors at the minimal aperture `δ` and `1 ≤ j ≤ max_steps`.
pub fn calibrate_growth_constant<R: Rng + ?Sized>(
    model: &Matrix,
    params: &ConeParams,
    max_steps: usize,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    check_cone_blocks(model, &[], params)?;
    let d = model.nrows();
    let k = params.split;
    let mut best = f64::INFINITY;
    for _ in 0..samples {
        let mut v = vector_at_aperture(d, k, params.delta, rng);
        for j in 1..=max_steps {
            v = model * v;
            let proj = v.rows(0, k).norm();
            let c = proj / (params.expansion.powi(j as i32) * params.delta);
            best = best.min(c);
        }
    }
    Ok(best)
}

/// Measured and predicted growth along a perturbed product.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeGrowth {
    pub norm: f64,
    pub projected_norm: f64,
    pub bound: f64,
}

impl ConeGrowth {
    pub fn holds(&self) -> bool {
        self.norm >= self.bound && self.projected_norm >= self.bound
    }
}

/// `‖L_j⋯L_1 v‖`, `‖Π L_j⋯L_1 v‖` and the bound `C(µ − ε^{1−σ})ʲ δ`.
pub fn cone_growth_bound(sequence: &[Matrix], v: &Vector, params: &ConeParams, constant: f64) -> Result<ConeGrowth> {
    params.validate()?;
    let d = v.len();
    let k = params.split;
    if k == 0 || k > d {
        return Err(Error::MalformedBlocks(format!("split {k} invalid in dimension {d}")));
    }
    let unit = v.normalize();
    let angle = unit.rows(0, k).norm().clamp(0.0, 1.0).asin();
    if angle < params.delta * (1.0 - 1e-12) {
        return Err(Error::ApertureViolated { angle, aperture: params.delta });
    }
    let mut w = unit;
    for l in sequence {
        if l.nrows() != d || l.ncols() != d {
            return Err(Error::DimensionMismatch("sequence matrix has the wrong shape".into()));
        }
        w = l * w;
    }
    let bound = constant * params.growth_rate().powi(sequence.len() as i32) * params.delta;
    Ok(ConeGrowth { norm: w.norm(), projected_norm: w.rows(0, k).norm(), bound })
}

/// Number of steps after which the aperture ratio map
/// `r ↦ (ε + (λ + ε) r) / (µ − ε − D⁻¹)`, started at `δ⁻¹`, lies within
/// `max(2 r*, floor)` where `r*` is its fixed point.  The floor keeps the
/// target positive when `ε = 0`.
pub fn transversality_time(params: &ConeParams, floor: f64) -> Result<usize> {
    params.validate()?;
    let (e, l, m) = (params.epsilon, params.contraction, params.expansion);
    let inv_d = 1.0 / params.margin;
    let denom = m - l - 2.0 * e - inv_d;
    if !(denom > 0.0) {
        return Err(Error::InvalidParameter(format!("µ − λ − 2ε − D⁻¹ = {denom} is not positive")));
    }
    let fixed = e / denom;
    let target = (2.0 * fixed).max(floor);
    if !(target > 0.0) {
        return Err(Error::InvalidParameter("target ratio must be positive; supply a floor when ε = 0".into()));
    }
    let scale = m - e - inv_d;
    let mut r = 1.0 / params.delta;
    let mut j = 0usize;
    while r > target {
        r = (e + (l + e) * r) / scale;
        j += 1;
        if j > 1_000_000 {
            return Err(Error::InvalidParameter("ratio map does not reach the target".into()));
        }
    }
    Ok(j)
}

/// Largest `‖v'‖/‖u'‖` over sampled images of cone-boundary vectors under
/// `L_j⋯L_1`.
pub fn measured_aperture_ratio<R: Rng + ?Sized>(
    sequence: &[Matrix],
    params: &ConeParams,
    samples: usize,
    rng: &mut R,
) -> f64 {
    let Some(first) = sequence.first() else {
        return 1.0 / params.delta;
    };
    let d = first.nrows();
    let k = params.split;
    let boundary = params.delta.atan();
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let mut v = vector_at_aperture(d, k, boundary, rng);
        for l in sequence {
            v = l * v;
        }
        let (nu, nv) = split_parts(&v, k);
        worst = worst.max(nv / nu);
    }
    worst
}
