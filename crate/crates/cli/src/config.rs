//! Experiment configuration documents and their validation.

use std::collections::BTreeMap;

use cocycle_core::fixtures::{block_coboundary, random_block_cocycle, unipotent_transfer, unitriangular_transfer};
use cocycle_core::holonomy::HolonomyKind;
use cocycle_core::zimmer::ZimmerDescriptor;
use cocycle_core::sft::parse_word;
use cocycle_core::{LocallyConstantCocycle, MarkovMeasure, Matrix, MetricParams, TransitionMatrix};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Rows of a matrix, as written in configs and reports.
pub type Rows = Vec<Vec<f64>>;

pub fn matrix_from_rows(rows: &Rows, what: &str) -> Result<Matrix, CliError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Config(format!("{what}: expected a nonempty square matrix")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CliError::Config(format!("{what}: entries must be finite")));
    }
    Ok(Matrix::from_fn(n, n, |i, j| rows[i][j]))
}

pub fn rows_of(m: &Matrix) -> Rows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cocycle: Option<CocycleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub descriptor: Option<ZimmerDescriptor>,
    pub experiment: ExperimentSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// 0/1 transition matrix `Q`.
    pub transitions: Vec<Vec<u8>>,
    /// Metric exponent `τ`.
    #[serde(default = "default_tau")]
    pub tau: f64,
}

fn default_tau() -> f64 {
    1.0
}

/// A Markov measure; omitted means uniform over allowed successors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    pub transitions: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stationary: Option<Vec<f64>>,
}

/// How the cocycle table is obtained.  Random variants draw from the
/// experiment seed before anything else.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum CocycleSpec {
    Constant(Rows),
    /// Values keyed by windows of length `2·radius + 1`.
    Table { radius: usize, values: BTreeMap<String, Rows> },
    /// Random `U_λ` values for the configured descriptor.
    RandomBlock { radius: usize, spread: f64 },
    /// A random `U₀` cocycle conjugated by a random unitriangular transfer.
    BlockCoboundary { spread: f64 },
    /// Random unit upper triangular values of dimension `dim`.
    Unitriangular { dim: usize, radius: usize, spread: f64 },
    /// Identity diagonal blocks and random entries above them, for the
    /// configured descriptor.
    RandomUnipotent { radius: usize, spread: f64 },
}

impl CocycleSpec {
    pub fn build<R: Rng + ?Sized>(
        &self,
        q: &TransitionMatrix,
        desc: Option<&ZimmerDescriptor>,
        rng: &mut R,
        what: &str,
    ) -> Result<LocallyConstantCocycle, CliError> {
        let need_desc = || desc.ok_or_else(|| CliError::Config(format!("{what}: this cocycle kind needs a descriptor")));
        let check_spread = |s: f64| {
            if s >= 0.0 && s.is_finite() {
                Ok(())
            } else {
                Err(CliError::Config(format!("{what}: spread must be nonnegative and finite")))
            }
        };
        let a = match self {
            CocycleSpec::Constant(rows) => LocallyConstantCocycle::constant(q, &matrix_from_rows(rows, what)?)?,
            CocycleSpec::Table { radius, values } => {
                let mut entries = BTreeMap::new();
                let mut dim = None;
                for (w, rows) in values {
                    let m = matrix_from_rows(rows, &format!("{what}.values.{w}"))?;
                    if *dim.get_or_insert(m.nrows()) != m.nrows() {
                        return Err(CliError::Config(format!("{what}.values.{w}: dimension differs from the other entries")));
                    }
                    entries.insert(parse_word(w)?, m);
                }
                let dim = dim.ok_or_else(|| CliError::Config(format!("{what}: empty table")))?;
                LocallyConstantCocycle::from_table(q, *radius, dim, &entries)?
            }
            CocycleSpec::RandomBlock { radius, spread } => {
                check_spread(*spread)?;
                random_block_cocycle(q, need_desc()?, *radius, *spread, rng)?
            }
            CocycleSpec::BlockCoboundary { spread } => {
                check_spread(*spread)?;
                block_coboundary(q, need_desc()?, *spread, rng)?
            }
            CocycleSpec::Unitriangular { dim, radius, spread } => {
                check_spread(*spread)?;
                if *dim == 0 {
                    return Err(CliError::Config(format!("{what}: dim must be positive")));
                }
                unitriangular_transfer(q, *dim, *radius, *spread, rng)?
            }
            CocycleSpec::RandomUnipotent { radius, spread } => {
                check_spread(*spread)?;
                unipotent_transfer(q, need_desc()?, *radius, *spread, rng)?
            }
        };
        Ok(a)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    /// Largest number of words an exact enumeration may visit.
    #[serde(default = "default_words")]
    pub words: u64,
    /// Largest number of sampled points or pairs.
    #[serde(default = "default_samples")]
    pub samples: u64,
}

fn default_words() -> u64 {
    1 << 20
}

fn default_samples() -> u64 {
    100_000
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { words: default_words(), samples: default_samples() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSection {
    pub seed: u64,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(flatten)]
    pub params: ExperimentParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentParams {
    Exponents(ExponentsParams),
    Holonomy(HolonomyParams),
    Blocks(BlocksParams),
    Shadow(ShadowParams),
    Reconstruct(ReconstructParams),
    VerifyZimmer(VerifyZimmerParams),
    ExampleUnipotent(ExampleUnipotentParams),
}

impl ExperimentParams {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentParams::Exponents(_) => "exponents",
            ExperimentParams::Holonomy(_) => "holonomy",
            ExperimentParams::Blocks(_) => "blocks",
            ExperimentParams::Shadow(_) => "shadow",
            ExperimentParams::Reconstruct(_) => "reconstruct",
            ExperimentParams::VerifyZimmer(_) => "verify-zimmer",
            ExperimentParams::ExampleUnipotent(_) => "example-unipotent",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentsParams {
    /// Scale of the headline finite-scale and Monte Carlo estimates.
    #[serde(default = "eight")]
    pub n: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Periodic points of every period up to this are enumerated.
    #[serde(default = "six")]
    pub max_period: usize,
    /// Subadditivity is checked for `n + m` up to this.
    #[serde(default = "ten")]
    pub horizon: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolonomyParams {
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    /// Intertwining is checked for `1 ≤ n ≤ max_n`.
    #[serde(default = "twenty")]
    pub max_n: usize,
    /// Truncation depth compared with the exact holonomy.
    #[serde(default = "ten")]
    pub truncation_n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlocksParams {
    pub n: usize,
    pub thetas: Vec<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "eight")]
    pub max_period: usize,
    /// Also test `θ_c·(1 ± 1%)` around each point's critical `θ_c`.
    #[serde(default = "yes")]
    pub around_critical: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShadowParams {
    pub x: String,
    pub y: String,
    pub ms: Vec<usize>,
    #[serde(default = "two")]
    pub b: usize,
    #[serde(default = "two")]
    pub c: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// `(N, θ)` of the regularity set reported for each shadow.
    pub n: usize,
    pub theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_abs_slope: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructParams {
    /// Transfer `u`; then `B = u(σx)A(x)u(x)⁻¹` and the base values are `u⁻¹`
    /// at the basepoints.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer: Option<CocycleSpec>,
    /// `B` given directly, with `base_values` or seeded at periodic basepoints.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<CocycleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_values: Option<Vec<Rows>>,
    #[serde(default = "default_samples_small")]
    pub samples: usize,
    #[serde(default = "default_residual_tol")]
    pub tolerance: f64,
    #[serde(default = "default_path_tol")]
    pub path_tolerance: f64,
    #[serde(default = "default_rule")]
    pub rule: HolonomyKind,
    #[serde(default)]
    pub include_evaluator: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyZimmerParams {
    #[serde(default = "eight")]
    pub max_period: usize,
    #[serde(default = "forty")]
    pub distortion_n: usize,
    #[serde(default = "forty")]
    pub distortion_samples: usize,
    #[serde(default = "default_exponent_tol")]
    pub exponent_tolerance: f64,
    #[serde(default = "default_growth_tol")]
    pub growth_tolerance: f64,
    /// Also require every cocycle value to lie in the block group.
    #[serde(default)]
    pub require_membership: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExampleUnipotentParams {
    /// `φ` as a table over windows of length `2·radius + 1`; omitted means
    /// `φ(x) = x₀`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<PhiTable>,
    #[serde(default = "default_samples_small")]
    pub samples: usize,
    #[serde(default = "default_example_tol")]
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiTable {
    pub radius: usize,
    pub values: BTreeMap<String, f64>,
}

fn two() -> usize {
    2
}
fn six() -> usize {
    6
}
fn eight() -> usize {
    8
}
fn ten() -> usize {
    10
}
fn twenty() -> usize {
    20
}
fn forty() -> usize {
    40
}
fn yes() -> bool {
    true
}
fn default_trials() -> usize {
    2000
}
fn default_pairs() -> usize {
    10_000
}
fn default_points() -> usize {
    200
}
fn default_alpha() -> f64 {
    0.1
}
fn default_samples_small() -> usize {
    1000
}
fn default_residual_tol() -> f64 {
    1e-8
}
fn default_path_tol() -> f64 {
    1e-9
}
fn default_exponent_tol() -> f64 {
    1e-9
}
fn default_growth_tol() -> f64 {
    1e-3
}
fn default_example_tol() -> f64 {
    1e-10
}
fn default_rule() -> HolonomyKind {
    HolonomyKind::ComposedUs
}

/// The validated base system of a config.
pub struct System {
    pub shift: TransitionMatrix,
    pub metric: MetricParams,
    pub measure: MarkovMeasure,
}

impl ExperimentConfig {
    /// Parses a JSON document; syntax and type errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("line {}, column {}: {e}", e.line(), e.column())))
    }

    pub fn system(&self) -> Result<System, CliError> {
        let shift = TransitionMatrix::new(&self.system.transitions)
            .map_err(|e| CliError::Config(format!("system.transitions: {e}")))?;
        let metric = MetricParams::new(self.system.tau).map_err(|e| CliError::Config(format!("system.tau: {e}")))?;
        let measure = match &self.measure {
            None => MarkovMeasure::uniform_successors(&shift),
            Some(m) => {
                let p = matrix_from_rows(&m.transitions, "measure.transitions")?;
                let mu = MarkovMeasure::new(p, m.stationary.clone()).map_err(|e| CliError::Config(format!("measure: {e}")))?;
                if mu.support() != &shift {
                    return Err(CliError::Config("measure.transitions: support differs from system.transitions".into()));
                }
                mu
            }
        };
        Ok(System { shift, metric, measure })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.system()?;
        let b = &self.experiment.budgets;
        if b.words == 0 || b.samples == 0 {
            return Err(CliError::Config("experiment.budgets: budgets must be positive".into()));
        }
        let needs_cocycle = !matches!(self.experiment.params, ExperimentParams::ExampleUnipotent(_));
        if needs_cocycle && self.cocycle.is_none() {
            return Err(CliError::Config(format!("cocycle: required for experiment kind {}", self.experiment.params.kind())));
        }
        if matches!(self.experiment.params, ExperimentParams::Reconstruct(_) | ExperimentParams::VerifyZimmer(_))
            && self.descriptor.is_none()
        {
            return Err(CliError::Config(format!("descriptor: required for experiment kind {}", self.experiment.params.kind())));
        }
        if let Some(d) = &self.descriptor {
            ZimmerDescriptor::new(d.block_dims.clone(), d.exponent).map_err(|e| CliError::Config(format!("descriptor: {e}")))?;
        }
        Ok(())
    }
}
