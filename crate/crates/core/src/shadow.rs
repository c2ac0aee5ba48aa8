//! Periodic points that shadow a zero-exponent orbit `x`, then a
//! hyperbolic orbit `y`, then `x` again, and the growth and angle
//! measurements taken along them.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cocycle::LocallyConstantCocycle;
use crate::error::{Error, Result};
use crate::linalg::{eigensplit, op_norm, principal_angle, ConeParams, Flag, Subspace, DEFAULT_SPLIT_TOL};
use crate::regularity::{block_membership_periodic, BlockParams};
use crate::sft::{MetricParams, PeriodicPoint, TransitionMatrix, Word};
use crate::Matrix;

pub const DEFAULT_B: usize = 2;
pub const DEFAULT_C: usize = 2;
pub const DEFAULT_ALPHA: f64 = 0.1;

/// Layout of a shadowing point `p^m`.
///
/// One period, indexed from `−bm`, reads: `x` on `[−bm, bm]`, the first
/// connector on `(bm, (b+1)m)`, `y` on `[(b+1)m, (b+c+1)m]`, the second
/// connector on `((b+c+1)m, (b+c+2)m − bm)`.  Connectors have `m − 1`
/// symbols and the period is `(2b+c+2)m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShadowSpec {
    pub x: PeriodicPoint,
    pub y: PeriodicPoint,
    pub m: usize,
    pub b: usize,
    pub c: usize,
    pub alpha: f64,
    pub connectors: (Word, Word),
}

impl ShadowSpec {
    /// A spec with the lexicographically smallest connectors.
    pub fn new(
        q: &TransitionMatrix,
        x: PeriodicPoint,
        y: PeriodicPoint,
        m: usize,
        b: usize,
        c: usize,
        alpha: f64,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("m must be positive".into()));
        }
        let at = |w: &PeriodicPoint, j: i64| w.word()[j.rem_euclid(w.period() as i64) as usize];
        let (bm, cm) = ((b * m) as i64, (c * m) as i64);
        let into_y = q.connecting_word(at(&x, bm), at(&y, 0), m - 1)?;
        let into_x = q.connecting_word(at(&y, cm), at(&x, -bm), m - 1)?;
        let spec = ShadowSpec { x, y, m, b, c, alpha, connectors: (into_y, into_x) };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::InvalidParameter(s));
        if self.m == 0 || self.b == 0 || self.c == 0 {
            return bad("m, b and c must be positive".into());
        }
        if !self.m.is_multiple_of(self.x.period()) || !self.m.is_multiple_of(self.y.period()) {
            return bad(format!("m = {} must be a multiple of both periods {} and {}", self.m, self.x.period(), self.y.period()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.connectors.0.len() + 1 != self.m || self.connectors.1.len() + 1 != self.m {
            return bad(format!("connectors must have m − 1 = {} symbols", self.m - 1));
        }
        Ok(())
    }

    /// `(2b+c+2)m`.
    pub fn period(&self) -> usize {
        (2 * self.b + self.c + 2) * self.m
    }

    /// `⌈(1+α)(b+1)m⌉`.
    pub fn j0(&self) -> usize {
        ((1.0 + self.alpha) * ((self.b + 1) * self.m) as f64).ceil() as usize
    }

    /// `⌊(1−α)(b+c+1)m⌋`.
    pub fn j1(&self) -> usize {
        ((1.0 - self.alpha) * ((self.b + self.c + 1) * self.m) as f64).floor() as usize
    }
}

/// The periodic point `p^m`, with coordinate 0 at the center of the first
/// `x`-block.
pub fn build_shadow(q: &TransitionMatrix, spec: &ShadowSpec) -> Result<PeriodicPoint> {
    spec.validate()?;
    let (m, b, c) = (spec.m as i64, spec.b as i64, spec.c as i64);
    let period = spec.period() as i64;
    let x = |j: i64| spec.x.word()[j.rem_euclid(spec.x.period() as i64) as usize];
    let y = |j: i64| spec.y.word()[j.rem_euclid(spec.y.period() as i64) as usize];
    let word: Word = (0..period)
        .map(|j| {
            // position inside the period that starts at −bm
            let j = if j > period - b * m - 1 { j - period } else { j };
            if j <= b * m {
                x(j)
            } else if j < (b + 1) * m {
                spec.connectors.0[(j - b * m - 1) as usize]
            } else if j <= (b + c + 1) * m {
                y(j - (b + 1) * m)
            } else {
                spec.connectors.1[(j - (b + c + 1) * m - 1) as usize]
            }
        })
        .collect();
    PeriodicPoint::new(q, word)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub m: usize,
    pub period: usize,
    /// `log‖A^{u_m}(p^m)‖`.
    pub log_norm: f64,
    pub in_block_set: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthTable {
    pub params: BlockParams,
    pub rows: Vec<GrowthRow>,
    /// Least-squares slope `χ̂` of `log_norm` against `m`.
    pub slope: f64,
}

pub(crate) fn ls_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return 0.0;
    }
    let (sx, sy) = points.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / n, sy / n);
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Return-map growth and exact `D(N, θ)` membership of `p^m` for each spec.
pub fn growth_measure(a: &LocallyConstantCocycle, specs: &[ShadowSpec], params: &BlockParams) -> Result<GrowthTable> {
    let q = a.shift();
    let mut rows = Vec::with_capacity(specs.len());
    for spec in specs {
        let p = build_shadow(q, spec)?;
        let ret = a.iterate(&p.point(), p.period() as i64)?;
        rows.push(GrowthRow {
            m: spec.m,
            period: p.period(),
            log_norm: op_norm(&ret).ln(),
            in_block_set: block_membership_periodic(a, &p, params)?,
        });
    }
    let slope = ls_slope(&rows.iter().map(|r| (r.m as f64, r.log_norm)).collect::<Vec<_>>());
    Ok(GrowthTable { params: *params, rows, slope })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub j: usize,
    pub distance: f64,
    /// `max(e^{−jτ}, e^{−(n−j)τ})`.
    pub bound: f64,
    pub holds: bool,
}

/// `d(σ^{s+j}p, σ^{s+j}t)` for `0 ≤ j ≤ n`, where `s = start`.
pub fn shadow_profile(
    p: &PeriodicPoint,
    target: &PeriodicPoint,
    start: i64,
    n: usize,
    metric: &MetricParams,
) -> Vec<ProfileRow> {
    let (pp, tt) = (p.point(), target.point());
    (0..=n)
        .map(|j| {
            let s = start + j as i64;
            let distance = metric.distance(&pp.shift(s), &tt.shift(s));
            let bound = (-(j as f64) * metric.tau).exp().max((-((n - j) as f64) * metric.tau).exp());
            ProfileRow { j, distance, bound, holds: distance <= bound }
        })
        .collect()
}

/// Angles of one transported flag term against the center and
/// center-stable spaces of `y`.  `None` when a space is trivial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleRow {
    pub term: usize,
    pub j: usize,
    pub to_center: Option<f64>,
    pub to_center_stable: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionRow {
    /// Quotient `E_{i+1}/E_i` with `E_0 = 0`.
    pub quotient: usize,
    /// `log max_{v ∈ E_{i+1}, |v|=1} ‖Π_{E_i^⊥}^{E_i} A^{u_m}(p^m) v‖`.
    pub log_growth: f64,
}

/// Constants entering the closed-form projection exponent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionConstants {
    /// Angle decay rate `λ̂`: `‖Π A v‖ ≥ e^{−λ̂}‖Π v‖` along any invariant bundle.
    pub lambda: f64,
    /// `η` with `‖A^{±1}‖ ≤ e^η`.
    pub eta: f64,
    pub epsilon: f64,
    pub sigma: f64,
    pub mu: f64,
}

impl ProjectionConstants {
    pub fn from_cocycle(a: &LocallyConstantCocycle, cone: &ConeParams) -> Self {
        ProjectionConstants {
            lambda: angle_decay_rate(a),
            eta: a.log_bound(),
            epsilon: cone.epsilon,
            sigma: cone.sigma,
            mu: cone.expansion,
        }
    }

    /// `−λ − η − 5εb − αbλ − αbη + (c − 2α)·ln(µ − ε^{1−σ})`, per unit of `m`.
    pub fn rate(&self, b: usize, c: usize, alpha: f64) -> f64 {
        let (b, c) = (b as f64, c as f64);
        -self.lambda - self.eta - 5.0 * self.epsilon * b - alpha * b * self.lambda - alpha * b * self.eta
            + (c - 2.0 * alpha) * (self.mu - self.epsilon.powf(1.0 - self.sigma)).ln()
    }
}

/// `max_w log‖A(w)⁻¹‖`, a valid angle decay rate: the induced map on any
/// quotient by an invariant subspace has inverse norm at most `‖A⁻¹‖`.
pub fn angle_decay_rate(a: &LocallyConstantCocycle) -> f64 {
    a.inverse_cocycle().entries().map(|(_, m)| op_norm(m).ln()).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShadowReport {
    pub m: usize,
    pub b: usize,
    pub c: usize,
    pub alpha: f64,
    pub period: usize,
    /// `log‖A^{u_m}(p^m)‖`.
    pub growth: f64,
    pub params: BlockParams,
    pub in_block_set: bool,
    pub j0: usize,
    pub j1: usize,
    pub angles: Vec<AngleRow>,
    pub projections: Vec<ProjectionRow>,
    pub constants: ProjectionConstants,
    /// Closed-form exponent per unit of `m`.
    pub closed_form_rate: f64,
    /// `m` times the closed-form rate.
    pub closed_form_log_bound: f64,
}

fn angle_or_none(v: &Subspace, w: &Subspace) -> Result<Option<f64>> {
    if v.dim() == 0 || w.dim() == 0 {
        return Ok(None);
    }
    principal_angle(v, w).map(Some)
}

/// Orthogonal projection onto `E_i^⊥` applied after `A^{u_m}` on `E_{i+1}`.
fn projection_growth(ret: &Matrix, flag: &Flag) -> Vec<ProjectionRow> {
    let d = ret.nrows();
    let mut prev_perp = DMatrix::identity(d, d);
    let mut rows = Vec::with_capacity(flag.terms().len());
    for (i, term) in flag.terms().iter().enumerate() {
        let g = op_norm(&(&prev_perp * ret * term.basis()));
        rows.push(ProjectionRow { quotient: i, log_growth: g.ln() });
        prev_perp = term.orthogonal_complement().projector();
    }
    rows
}

/// Angle and projection measurements along `p^m` for a flag invariant
/// along its orbit.
pub fn angle_experiment(
    a: &LocallyConstantCocycle,
    flag: &Flag,
    spec: &ShadowSpec,
    cone: &ConeParams,
    params: &BlockParams,
    tol: f64,
) -> Result<ShadowReport> {
    let q = a.shift();
    let p = build_shadow(q, spec)?;
    let point = p.point();
    let u = p.period();
    let ret = a.iterate(&point, u as i64)?;
    let drift = flag.image(&ret).max_gap(flag);
    if drift > tol {
        return Err(Error::FlagNotInvariant(drift));
    }
    let y_ret = a.iterate(&spec.y.point(), spec.y.period() as i64)?;
    let split = eigensplit(&y_ret, DEFAULT_SPLIT_TOL)?;
    let center_stable = split.center.sum(&split.stable);

    // the y-block starts at (b+1)m, where p^m agrees with y
    let (j0, j1) = (spec.j0(), spec.j1());
    let y_start = ((spec.b + 1) * spec.m) as i64;
    let mut angles = Vec::new();
    for j in [j0, j1] {
        // y's splitting transported to σ^j(p^m) along y's own orbit
        let phase = a.iterate(&spec.y.point(), j as i64 - y_start)?;
        let (center, cs) = (split.center.image(&phase), center_stable.image(&phase));
        let moved = flag.image(&a.iterate(&point, j as i64)?);
        for (i, term) in moved.terms().iter().enumerate() {
            angles.push(AngleRow {
                term: i,
                j,
                to_center: angle_or_none(term, &center)?,
                to_center_stable: angle_or_none(term, &cs)?,
            });
        }
    }
    let constants = ProjectionConstants::from_cocycle(a, cone);
    let rate = constants.rate(spec.b, spec.c, spec.alpha);
    Ok(ShadowReport {
        m: spec.m,
        b: spec.b,
        c: spec.c,
        alpha: spec.alpha,
        period: u,
        growth: op_norm(&ret).ln(),
        params: *params,
        in_block_set: block_membership_periodic(a, &p, params)?,
        j0,
        j1,
        angles,
        projections: projection_growth(&ret, flag),
        constants,
        closed_form_rate: rate,
        closed_form_log_bound: rate * spec.m as f64,
    })
}

/// Least-squares slope in `m` of the projection growth of quotient `i`.
pub fn projection_slope(reports: &[ShadowReport], quotient: usize) -> f64 {
    ls_slope(
        &reports
            .iter()
            .filter_map(|r| r.projections.get(quotient).map(|p| (r.m as f64, p.log_growth)))
            .collect::<Vec<_>>(),
    )
}
