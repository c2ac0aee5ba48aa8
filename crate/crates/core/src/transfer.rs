//! Reconstruction of transfer functions from their values at basepoints.
//!
//! Everything here uses the convention `A(x) = C(σx)·B(x)·C(x)⁻¹`.  A
//! transfer function satisfying it is carried along holonomies by
//! `C ↦ H^A·C·(H^B)⁻¹`, so its values at one basepoint per symbol determine
//! it everywhere.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cocycle::LocallyConstantCocycle;
use crate::error::{Error, Result};
use crate::holonomy::{composed_holonomy, HolonomyKind};
use crate::linalg::{condition_number, invert, op_norm};
use crate::sft::{PeriodicPoint, Symbol, SymbolicPoint, TransitionMatrix};
use crate::zimmer::{membership, ZimmerDescriptor, DEFAULT_MEMBERSHIP_TOL};
use crate::{MetricParams, Matrix};

/// Base tolerance of each peeling stage, before condition scaling.
pub const STAGE_TOL: f64 = 1e-8;

pub const CONVENTION: &str = "A(x) = C(σx)·B(x)·C(x)⁻¹";

/// Outcome of one peeling stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageLog {
    pub stage: String,
    pub residual: f64,
    pub tolerance: f64,
    /// Radius of the transfer factor produced by the stage.
    pub radius: usize,
}

/// A transfer function determined by its values at basepoints `ω^i ∈ [0; i]`.
///
/// Without a table the value at `x` is propagated along holonomies on every
/// call; the peeling pipeline attaches a table instead.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransferEvaluator {
    pub basepoints: Vec<SymbolicPoint>,
    pub base_values: Vec<Matrix>,
    pub rule: HolonomyKind,
    pub a: LocallyConstantCocycle,
    pub b: LocallyConstantCocycle,
    #[serde(default)]
    pub table: Option<LocallyConstantCocycle>,
    #[serde(default)]
    pub stages: Vec<StageLog>,
}

/// The periodic point `(i·w)^∞` through each symbol `i`, with `w` its
/// shortest return word.
pub fn default_basepoints(q: &TransitionMatrix) -> Result<Vec<SymbolicPoint>> {
    (0..q.size())
        .map(|i| {
            let mut word = vec![i as Symbol];
            word.extend(q.shortest_return(i as Symbol)?);
            Ok(PeriodicPoint::new(q, word)?.point())
        })
        .collect()
}

impl TransferEvaluator {
    pub fn new(
        a: LocallyConstantCocycle,
        b: LocallyConstantCocycle,
        basepoints: Vec<SymbolicPoint>,
        base_values: Vec<Matrix>,
        rule: HolonomyKind,
    ) -> Result<Self> {
        if a.shift() != b.shift() {
            return Err(Error::InvalidParameter("A and B live over different shifts".into()));
        }
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch(format!("A has dimension {}, B has {}", a.dim(), b.dim())));
        }
        if !matches!(rule, HolonomyKind::ComposedSu | HolonomyKind::ComposedUs) {
            return Err(Error::InvalidParameter("propagation needs a composed holonomy rule".into()));
        }
        let l = a.shift().size();
        if basepoints.len() != l || base_values.len() != l {
            return Err(Error::InvalidParameter(format!(
                "need {l} basepoints and base values, got {} and {}",
                basepoints.len(),
                base_values.len()
            )));
        }
        for (i, (w, c)) in basepoints.iter().zip(&base_values).enumerate() {
            a.shift().check_point(w)?;
            if w.coord(0) as usize != i {
                return Err(Error::InvalidParameter(format!("basepoint {i} has zero coordinate {}", w.coord(0))));
            }
            if c.nrows() != a.dim() || c.ncols() != a.dim() {
                return Err(Error::DimensionMismatch(format!("base value {i} is {}x{}", c.nrows(), c.ncols())));
            }
            invert(c)?;
        }
        Ok(TransferEvaluator { basepoints, base_values, rule, a, b, table: None, stages: Vec::new() })
    }

    /// Evaluator with basepoints from [`default_basepoints`] and the `us` rule.
    pub fn with_default_basepoints(
        a: LocallyConstantCocycle,
        b: LocallyConstantCocycle,
        base_values: Vec<Matrix>,
    ) -> Result<Self> {
        let basepoints = default_basepoints(a.shift())?;
        Self::new(a, b, basepoints, base_values, HolonomyKind::ComposedUs)
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// `C(x)`, from the table when one is attached.
    pub fn evaluate(&self, x: &SymbolicPoint) -> Result<Matrix> {
        match &self.table {
            Some(t) => Ok(t.evaluate(x).clone()),
            None => propagate(self, x),
        }
    }

    /// Holonomy propagation from the basepoint with the same zero symbol.
    pub fn propagate_with(&self, x: &SymbolicPoint, rule: HolonomyKind) -> Result<Matrix> {
        let i = x.coord(0) as usize;
        let base = self.basepoints.get(i).ok_or(Error::MissingBasepoint(i as Symbol))?;
        let ha = composed_holonomy(&self.a, base, x, rule)?.matrix;
        let hb = composed_holonomy(&self.b, base, x, rule)?.matrix;
        Ok(ha * &self.base_values[i] * invert(&hb)?)
    }

    /// `‖C̃_su(x) − C̃_us(x)‖`: how far the two propagation paths disagree.
    pub fn path_disagreement(&self, x: &SymbolicPoint) -> Result<f64> {
        let su = self.propagate_with(x, HolonomyKind::ComposedSu)?;
        let us = self.propagate_with(x, HolonomyKind::ComposedUs)?;
        Ok(op_norm(&(su - us)))
    }

    /// Radius that bounds the coordinates a propagated value depends on.
    pub fn propagation_radius(&self) -> usize {
        2 * self.a.radius().max(self.b.radius())
    }

    /// Tabulates the propagated values as a locally constant function,
    /// shrunk to the smallest radius that represents it.
    pub fn tabulate(&self) -> Result<LocallyConstantCocycle> {
        if let Some(t) = &self.table {
            return Ok(t.clone());
        }
        let r = self.propagation_radius();
        let q = self.a.shift().clone();
        let table = LocallyConstantCocycle::from_fn(&q, r, self.dim(), |w| {
            let x = q.close_window(w.to_vec(), -(r as i64))?;
            propagate(self, &x)
        })?;
        reduce(&table)
    }
}

/// `C̃(x) = H^A·C(ω^i)·(H^B)⁻¹` along the evaluator's rule, `ω^i` being the
/// basepoint with `ω^i_0 = x_0`.  Ignores any attached table.
pub fn propagate(ev: &TransferEvaluator, x: &SymbolicPoint) -> Result<Matrix> {
    ev.propagate_with(x, ev.rule)
}

fn reduce(t: &LocallyConstantCocycle) -> Result<LocallyConstantCocycle> {
    let scale = t.entries().map(|(_, m)| m.abs().max()).fold(1.0, f64::max);
    t.reduce_radius(1e-12 * scale)
}

fn check_membership(a: &LocallyConstantCocycle, desc: &ZimmerDescriptor, name: &str) -> Result<()> {
    if desc.dim() != a.dim() {
        return Err(Error::DimensionMismatch(format!("{name} has dimension {}, blocks {:?}", a.dim(), desc.block_dims)));
    }
    for (w, m) in a.entries() {
        let report = membership(m, desc, DEFAULT_MEMBERSHIP_TOL)?;
        if !report.member {
            return Err(Error::NotInBlock(format!(
                "{name} at window {}: residual {:e}",
                crate::sft::format_word(&w),
                report.max_residual()
            )));
        }
    }
    Ok(())
}

/// Rows and columns `idx` of every value.
fn restrict(a: &LocallyConstantCocycle, idx: &[usize]) -> Result<LocallyConstantCocycle> {
    a.map_values(|m| m.select_rows(idx).select_columns(idx))
}

/// Largest difference over blocks `(i, j)` with `0 ≤ j − i ≤ offset`.
fn band_residual(x: &LocallyConstantCocycle, y: &LocallyConstantCocycle, desc: &ZimmerDescriptor, offset: usize) -> Result<f64> {
    let r = x.radius().max(y.radius());
    let (x, y) = (x.with_radius(r)?, y.with_radius(r)?);
    let nb = desc.num_blocks();
    let mut worst = 0.0f64;
    for ((_, mx), (_, my)) in x.entries().zip(y.entries()) {
        let d = mx - my;
        for i in 0..nb {
            for j in i..nb.min(i + offset + 1) {
                let (ri, rj) = (desc.block_range(i), desc.block_range(j));
                worst = worst.max(op_norm(&d.view((ri.start, rj.start), (ri.len(), rj.len())).into_owned()));
            }
        }
    }
    Ok(worst)
}

/// Tabulates `f` applied to the values of `parts` at a common radius.
fn combine<F>(parts: &[&LocallyConstantCocycle], dim: usize, f: F) -> Result<LocallyConstantCocycle>
where
    F: Fn(&[&Matrix]) -> Matrix,
{
    let q = parts[0].shift();
    let r = parts.iter().map(|p| p.radius()).max().unwrap_or(0);
    let table = LocallyConstantCocycle::from_fn(q, r, dim, |w| {
        let values = parts
            .iter()
            .map(|p| {
                let k = p.radius();
                p.evaluate_window(&w[r - k..=r + k])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(f(&values))
    })?;
    reduce(&table)
}

fn max_condition(t: &LocallyConstantCocycle) -> f64 {
    t.entries().map(|(_, m)| condition_number(m)).fold(1.0, f64::max)
}

/// Recovers the upper corner of a conjugacy with identity diagonal blocks
/// between two 2-block cocycles, given the corners at the basepoints.
///
/// Propagation uses the holonomies of the full 2-block cocycles: the corner
/// equation is affine, and the off-diagonal blocks of `A` and `B` enter it.
pub fn two_block_recover(
    a: &LocallyConstantCocycle,
    b: &LocallyConstantCocycle,
    desc: &ZimmerDescriptor,
    basepoints: Vec<SymbolicPoint>,
    base_corners: &[Matrix],
    rule: HolonomyKind,
) -> Result<TransferEvaluator> {
    if desc.num_blocks() != 2 {
        return Err(Error::InvalidParameter(format!("expected 2 blocks, got {}", desc.num_blocks())));
    }
    check_membership(a, desc, "A")?;
    check_membership(b, desc, "B")?;
    let diag = band_residual(a, b, desc, 0)?;
    if diag > STAGE_TOL {
        return Err(Error::StageResidual { stage: "two-block diagonal agreement".into(), residual: diag, tolerance: STAGE_TOL });
    }
    let (r1, r2) = (desc.block_range(0), desc.block_range(1));
    let base_values = base_corners
        .iter()
        .map(|c| {
            if c.nrows() != r1.len() || c.ncols() != r2.len() {
                return Err(Error::DimensionMismatch(format!("corner is {}x{}, expected {}x{}", c.nrows(), c.ncols(), r1.len(), r2.len())));
            }
            let mut m = DMatrix::identity(desc.dim(), desc.dim());
            m.view_mut((r1.start, r2.start), (r1.len(), r2.len())).copy_from(c);
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    TransferEvaluator::new(a.clone(), b.clone(), basepoints, base_values, rule)
}

/// Block-by-block reconstruction of a block upper triangular conjugacy.
///
/// Diagonal blocks are propagated first and conjugated off; then each
/// superdiagonal is recovered from 2-block subsystems and conjugated off in
/// turn.  After every stage the conjugated `B` must agree with `A` on the
/// bands handled so far.  The result carries the product of the stage
/// factors as its table.
pub fn superdiagonal_peel(
    a: &LocallyConstantCocycle,
    b: &LocallyConstantCocycle,
    desc: &ZimmerDescriptor,
    basepoints: Vec<SymbolicPoint>,
    base_values: Vec<Matrix>,
    rule: HolonomyKind,
) -> Result<TransferEvaluator> {
    check_membership(a, desc, "A")?;
    check_membership(b, desc, "B")?;
    let mut out = TransferEvaluator::new(a.clone(), b.clone(), basepoints.clone(), base_values.clone(), rule)?;
    let d = desc.dim();
    let nb = desc.num_blocks();
    let mut current_b = b.clone();
    let mut current_base = base_values;
    let mut factors: Vec<LocallyConstantCocycle> = Vec::with_capacity(nb);
    let mut stages = Vec::with_capacity(nb);
    let mut conditioning = 1.0f64;

    let mut finish_stage = |stage: String,
                            factor: LocallyConstantCocycle,
                            offset: usize,
                            current_b: &mut LocallyConstantCocycle,
                            current_base: &mut Vec<Matrix>|
     -> Result<LocallyConstantCocycle> {
        conditioning *= max_condition(&factor);
        *current_b = reduce(&current_b.coboundary_conjugate(&factor)?)?;
        for (c, w) in current_base.iter_mut().zip(&basepoints) {
            *c = &*c * invert(factor.evaluate(w))?;
        }
        let residual = band_residual(current_b, a, desc, offset)?;
        let tolerance = STAGE_TOL * conditioning;
        stages.push(StageLog { stage: stage.clone(), residual, tolerance, radius: factor.radius() });
        if !(residual <= tolerance) {
            return Err(Error::StageResidual { stage, residual, tolerance });
        }
        Ok(factor)
    };

    let mut diagonal = Vec::with_capacity(nb);
    for i in 0..nb {
        let idx: Vec<usize> = desc.block_range(i).collect();
        let ev = TransferEvaluator::new(
            restrict(a, &idx)?,
            restrict(&current_b, &idx)?,
            basepoints.clone(),
            current_base.iter().map(|c| c.select_rows(&idx).select_columns(&idx)).collect(),
            rule,
        )?;
        diagonal.push(ev.tabulate()?);
    }
    let parts: Vec<&LocallyConstantCocycle> = diagonal.iter().collect();
    let factor = combine(&parts, d, |vals| {
        let mut m = DMatrix::zeros(d, d);
        for (i, v) in vals.iter().enumerate() {
            let r = desc.block_range(i);
            m.view_mut((r.start, r.start), (r.len(), r.len())).copy_from(*v);
        }
        m
    })?;
    factors.push(finish_stage("diagonal".into(), factor, 0, &mut current_b, &mut current_base)?);

    for offset in 1..nb {
        let mut corners = Vec::with_capacity(nb - offset);
        for i in 0..nb - offset {
            let (ri, rj) = (desc.block_range(i), desc.block_range(i + offset));
            let idx: Vec<usize> = ri.clone().chain(rj.clone()).collect();
            let sub = ZimmerDescriptor::new(vec![ri.len(), rj.len()], 0.0)?;
            let base: Vec<Matrix> =
                current_base.iter().map(|c| c.view((ri.start, rj.start), (ri.len(), rj.len())).into_owned()).collect();
            let ev = two_block_recover(
                &restrict(a, &idx)?,
                &restrict(&current_b, &idx)?,
                &sub,
                basepoints.clone(),
                &base,
                rule,
            )
            .map_err(|e| match e {
                Error::StageResidual { residual, tolerance, .. } => Error::StageResidual {
                    stage: format!("offset {offset}, blocks ({i}, {}): diagonal agreement", i + offset),
                    residual,
                    tolerance,
                },
                e => e,
            })?;
            corners.push(ev.tabulate()?);
        }
        let parts: Vec<&LocallyConstantCocycle> = corners.iter().collect();
        let factor = combine(&parts, d, |vals| {
            let mut m = DMatrix::identity(d, d);
            for (i, v) in vals.iter().enumerate() {
                let (ri, rj) = (desc.block_range(i), desc.block_range(i + offset));
                m.view_mut((ri.start, rj.start), (ri.len(), rj.len()))
                    .copy_from(&v.view((0, ri.len()), (ri.len(), rj.len())));
            }
            m
        })?;
        factors.push(finish_stage(format!("offset {offset}"), factor, offset, &mut current_b, &mut current_base)?);
    }

    let residual = a.max_table_difference(&current_b);
    let tolerance = STAGE_TOL * conditioning;
    stages.push(StageLog { stage: "final".into(), residual, tolerance, radius: current_b.radius() });
    if !(residual <= tolerance) {
        return Err(Error::StageResidual { stage: "final".into(), residual, tolerance });
    }
    // C = Ĉ_{k−1}⋯Ĉ_1·Ĉ_diag.
    let parts: Vec<&LocallyConstantCocycle> = factors.iter().rev().collect();
    let table = combine(&parts, d, |vals| vals.iter().fold(DMatrix::identity(d, d), |acc, v| acc * *v))?;
    out.table = Some(table);
    out.stages = stages;
    Ok(out)
}

/// Holder regression of an evaluator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderEstimate {
    /// `+∞` when fewer than two distance levels carry a nonzero difference.
    pub exponent: f64,
    pub constant: f64,
    pub pairs_used: usize,
    pub levels: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyReport {
    pub convention: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub samples: usize,
    #[serde(default)]
    pub holder: Option<HolderEstimate>,
}

/// `max ‖A(x) − C(σx)·B(x)·C(x)⁻¹‖` over `samples`.
pub fn verify_conjugacy(
    a: &LocallyConstantCocycle,
    b: &LocallyConstantCocycle,
    ev: &TransferEvaluator,
    samples: &[SymbolicPoint],
    tol: f64,
) -> Result<ConjugacyReport> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no sample points".into()));
    }
    let mut worst = 0.0f64;
    for x in samples {
        let c = ev.evaluate(x)?;
        let c_next = ev.evaluate(&x.shift(1))?;
        let r = op_norm(&(a.evaluate(x) - c_next * b.evaluate(x) * invert(&c)?));
        worst = if r.is_nan() { f64::INFINITY } else { worst.max(r) };
    }
    Ok(ConjugacyReport {
        convention: CONVENTION.into(),
        max_residual: worst,
        tolerance: tol,
        passed: worst <= tol,
        samples: samples.len(),
        holder: None,
    })
}

/// Regression of the empirical modulus of continuity.
///
/// For every distance level `ρ` among pairs closer than `cutoff`, `ω(ρ)` is
/// the largest `‖C(x) − C(y)‖` over pairs at distance at most `ρ`; the
/// exponent and constant are the slope and `exp` of the intercept of
/// `log ω` against `log ρ` over levels with `ω > 0`.
pub fn holder_estimate(
    ev: &TransferEvaluator,
    pairs: &[(SymbolicPoint, SymbolicPoint)],
    metric: &MetricParams,
    cutoff: f64,
) -> Result<HolderEstimate> {
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (x, y) in pairs {
        let rho = metric.distance(x, y);
        if rho == 0.0 || rho >= cutoff {
            continue;
        }
        points.push((rho, op_norm(&(ev.evaluate(x)? - ev.evaluate(y)?))));
    }
    let pairs_used = points.len();
    points.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut levels: Vec<(f64, f64)> = Vec::new();
    let mut modulus = 0.0f64;
    for (rho, diff) in points {
        modulus = modulus.max(diff);
        match levels.last_mut() {
            Some(last) if last.0 == rho => last.1 = modulus,
            _ => levels.push((rho, modulus)),
        }
    }
    let xy: Vec<(f64, f64)> = levels.iter().filter(|l| l.1 > 0.0).map(|l| (l.0.ln(), l.1.ln())).collect();
    let sentinel = HolderEstimate { exponent: f64::INFINITY, constant: 0.0, pairs_used, levels: xy.len() };
    if xy.len() < 2 {
        return Ok(sentinel);
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Ok(sentinel);
    }
    let slope = sxy / sxx;
    Ok(HolderEstimate { exponent: slope, constant: (my - slope * mx).exp(), pairs_used, levels: xy.len() })
}

/// Solutions of `A^q(p)·C = C·B^q(p)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntertwinerSpace {
    pub basis: Vec<Matrix>,
    /// Whether each basis element is invertible.
    pub invertible: Vec<bool>,
    /// A well-conditioned invertible solution, if the space contains one.
    pub representative: Option<Matrix>,
    /// No invertible solution exists.
    pub obstructed: bool,
}

const INVERTIBLE_CONDITION: f64 = 1e12;

/// Null space of `I⊗A^q − (B^q)ᵀ⊗I`, which encodes `A^q·C − C·B^q = 0`
/// on column-major `vec(C)`.
pub fn periodic_consistency_solve(
    a: &LocallyConstantCocycle,
    b: &LocallyConstantCocycle,
    p: &PeriodicPoint,
) -> Result<IntertwinerSpace> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!("A has dimension {}, B has {}", a.dim(), b.dim())));
    }
    let d = a.dim();
    let x = p.point();
    let q = p.period() as i64;
    let aq = a.iterate(&x, q)?;
    let bq = b.iterate(&x, q)?;
    let id = DMatrix::<f64>::identity(d, d);
    let mut sylvester = id.kronecker(&aq) - bq.transpose().kronecker(&id);
    let scale = op_norm(&aq).max(op_norm(&bq));
    sylvester /= scale;
    let svd = sylvester.svd(false, true);
    let v_t = svd.v_t.ok_or(Error::Singular(0.0))?;
    let basis: Vec<Matrix> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= 1e-9)
        .map(|(k, _)| {
            let row = v_t.row(k).transpose();
            Matrix::from_column_slice(d, d, row.as_slice())
        })
        .collect();
    let invertible: Vec<bool> = basis.iter().map(|m| condition_number(m) < INVERTIBLE_CONDITION).collect();
    // Fixed generic combinations: the invertible solutions are dense in the
    // solution space whenever they exist.
    let representative = (1..=3)
        .map(|t| {
            basis.iter().enumerate().fold(DMatrix::zeros(d, d), |acc, (k, m)| {
                let c = 0.5 + ((k + 1) as f64 * (t as f64 + 1.0).sqrt()).fract();
                acc + m * c
            })
        })
        .chain(basis.iter().zip(&invertible).filter(|(_, &ok)| ok).map(|(m, _)| m.clone()))
        .filter(|m| !basis.is_empty() && condition_number(m) < INVERTIBLE_CONDITION)
        .min_by(|m, n| condition_number(m).total_cmp(&condition_number(n)));
    let obstructed = representative.is_none();
    Ok(IntertwinerSpace { basis, invertible, representative, obstructed })
}
