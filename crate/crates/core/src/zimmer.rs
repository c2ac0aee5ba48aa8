//! Zimmer block groups `U_λ`: block upper triangular matrices whose
//! diagonal blocks are `e^λ` times an orthogonal matrix.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cocycle::LocallyConstantCocycle;
use crate::error::{Error, Result};
use crate::linalg::{condition_number, invert, op_norm, random_orthogonal};
use crate::Matrix;

pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZimmerDescriptor {
    pub block_dims: Vec<usize>,
    /// Common log-scale `λ` of the diagonal blocks.
    #[serde(default)]
    pub exponent: f64,
}

impl ZimmerDescriptor {
    pub fn new(block_dims: Vec<usize>, exponent: f64) -> Result<Self> {
        if block_dims.is_empty() || block_dims.contains(&0) {
            return Err(Error::MalformedBlocks("block dimensions must be a nonempty list of positive integers".into()));
        }
        if !exponent.is_finite() {
            return Err(Error::InvalidParameter("block exponent must be finite".into()));
        }
        Ok(ZimmerDescriptor { block_dims, exponent })
    }

    pub fn dim(&self) -> usize {
        self.block_dims.iter().sum()
    }

    pub fn num_blocks(&self) -> usize {
        self.block_dims.len()
    }

    /// Index range of block `i`.
    pub fn block_range(&self, i: usize) -> std::ops::Range<usize> {
        let lo: usize = self.block_dims[..i].iter().sum();
        lo..lo + self.block_dims[i]
    }

    fn check(&self, m: &Matrix) -> Result<()> {
        let d = self.dim();
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for blocks {:?} of total dimension {d}",
                m.nrows(),
                m.ncols(),
                self.block_dims
            )));
        }
        Ok(())
    }
}

/// Per-block residuals of a membership test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub member: bool,
    pub tolerance: f64,
    /// `‖(e^{−λ}B_i)ᵀ(e^{−λ}B_i) − I‖` for each diagonal block.
    pub diagonal: Vec<f64>,
    /// Norm of the part of block row `i` left of the diagonal.
    pub below_diagonal: Vec<f64>,
}

impl Membership {
    pub fn max_residual(&self) -> f64 {
        self.diagonal.iter().chain(&self.below_diagonal).copied().fold(0.0, f64::max)
    }
}

pub fn membership(m: &Matrix, desc: &ZimmerDescriptor, tol: f64) -> Result<Membership> {
    desc.check(m)?;
    let scale = (-desc.exponent).exp();
    let mut diagonal = Vec::with_capacity(desc.num_blocks());
    let mut below_diagonal = Vec::with_capacity(desc.num_blocks());
    for i in 0..desc.num_blocks() {
        let r = desc.block_range(i);
        let b = m.view((r.start, r.start), (r.len(), r.len())) * scale;
        diagonal.push(op_norm(&(b.transpose() * &b - DMatrix::identity(r.len(), r.len()))));
        below_diagonal.push(if r.start == 0 { 0.0 } else { op_norm(&m.view((r.start, 0), (r.len(), r.start)).into_owned()) });
    }
    let member = diagonal.iter().chain(&below_diagonal).all(|&v| v <= tol);
    Ok(Membership { member, tolerance: tol, diagonal, below_diagonal })
}

/// `e^λ·(random orthogonal)` diagonal blocks and uniform `[−spread, spread]`
/// entries above them.
pub fn random_element<R: Rng + ?Sized>(desc: &ZimmerDescriptor, rng: &mut R, spread: f64) -> Result<Matrix> {
    if !(spread >= 0.0 && spread.is_finite()) {
        return Err(Error::InvalidParameter(format!("spread must be nonnegative, got {spread}")));
    }
    let d = desc.dim();
    let scale = desc.exponent.exp();
    let mut m = DMatrix::zeros(d, d);
    for i in 0..desc.num_blocks() {
        let r = desc.block_range(i);
        m.view_mut((r.start, r.start), (r.len(), r.len())).copy_from(&(random_orthogonal(r.len(), rng) * scale));
        for row in r.clone() {
            for col in r.end..d {
                m[(row, col)] = if spread > 0.0 { rng.random_range(-spread..=spread) } else { 0.0 };
            }
        }
    }
    Ok(m)
}

/// The diagonal block `i`, i.e. the action induced on `E_{i+1}/E_i` for the
/// standard flag.
pub fn quotient_action(m: &Matrix, desc: &ZimmerDescriptor, i: usize, tol: f64) -> Result<Matrix> {
    if i >= desc.num_blocks() {
        return Err(Error::InvalidParameter(format!("block {i} out of range for {} blocks", desc.num_blocks())));
    }
    let report = membership(m, desc, tol)?;
    if !report.member {
        return Err(Error::NotInBlock(format!("largest residual {:e} exceeds {tol:e}", report.max_residual())));
    }
    let r = desc.block_range(i);
    Ok(m.view((r.start, r.start), (r.len(), r.len())).into_owned())
}

/// `x ↦ e^{−λ}A(x)`.
pub fn normalize_exponent(a: &LocallyConstantCocycle, lambda: f64) -> Result<LocallyConstantCocycle> {
    if lambda == 0.0 {
        return Ok(a.clone());
    }
    a.scale((-lambda).exp())
}

/// Tolerance for `M⁻¹` given a membership tolerance for `M`, scaled by the
/// condition number.
pub fn inverse_tolerance(m: &Matrix, tol: f64) -> f64 {
    tol * condition_number(m).max(1.0)
}

/// `[v_1 … v_k | V'·F]`: a framing of `V₁` followed by the lift of a
/// quotient framing given in the coordinates of a complement `V'`.
///
/// `complement` is `d×(n−k)`, `quotient_framing` is `(n−k)×(n−k)`.
pub fn assemble_framing(sub_framing: &Matrix, quotient_framing: &Matrix, complement: &Matrix) -> Result<Matrix> {
    let d = complement.nrows();
    let k = sub_framing.ncols();
    let r = complement.ncols();
    if sub_framing.nrows() != d && k > 0 {
        return Err(Error::DimensionMismatch(format!("sub-framing in R^{} vs complement in R^{d}", sub_framing.nrows())));
    }
    if quotient_framing.nrows() != r || quotient_framing.ncols() != r {
        return Err(Error::DimensionMismatch(format!(
            "quotient framing is {}x{}, complement has {r} columns",
            quotient_framing.nrows(),
            quotient_framing.ncols()
        )));
    }
    let mut p = DMatrix::zeros(d, k + r);
    if k > 0 {
        p.columns_mut(0, k).copy_from(sub_framing);
    }
    p.columns_mut(k, r).copy_from(&(complement * quotient_framing));
    let rank = p.clone().svd(false, false).rank(1e-10 * op_norm(&p).max(f64::MIN_POSITIVE));
    if rank < k + r {
        return Err(Error::NonComplementary(format!("framing spans {rank} of {} dimensions", k + r)));
    }
    Ok(p)
}

/// `P⁻¹·A(x)·P` for a constant change of frame `P`.
pub fn conjugate_by_framing(a: &LocallyConstantCocycle, p: &Matrix) -> Result<LocallyConstantCocycle> {
    let pi = invert(p)?;
    a.map_values(|m| &pi * m * p)
}
