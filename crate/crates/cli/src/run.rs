//! Experiment runners.

use cocycle_core::fixtures::unipotent_example;
use cocycle_core::holonomy::{lipschitz_bound, stable_holonomy, stable_truncation, unstable_holonomy, HolonomyKind};
use cocycle_core::linalg::{invert, op_norm};
use cocycle_core::regularity::{
    block_membership_periodic, block_period, critical_theta_periodic, distortion_growth, finite_scale_exponents,
    monte_carlo_exponent, periodic_exponents, unipotent_distortion_degree, BlockParams,
};
use cocycle_core::sft::{format_word, parse_word};
use cocycle_core::shadow::{growth_measure, ShadowSpec};
use cocycle_core::transfer::{
    default_basepoints, periodic_consistency_solve, superdiagonal_peel, verify_conjugacy, TransferEvaluator,
};
use cocycle_core::zimmer::{membership, ZimmerDescriptor, DEFAULT_MEMBERSHIP_TOL};
use cocycle_core::{Error, LocallyConstantCocycle, Matrix, PeriodicPoint, SymbolicPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{
    matrix_from_rows, rows_of, BlocksParams, ExampleUnipotentParams, ExperimentConfig, ExperimentParams, ExponentsParams,
    HolonomyParams, ReconstructParams, ShadowParams, System, VerifyZimmerParams,
};
use crate::report::{Check, Report, Table};
use crate::CliError;

/// Relative tolerance of the exact holonomy identities.
const IDENTITY_TOL: f64 = 1e-12;
/// Agreement required between exact and truncated holonomies.
const TRUNCATION_TOL: f64 = 1e-14;
/// Residual allowed in block-group membership of derived matrices.
const DERIVED_MEMBERSHIP_TOL: f64 = 1e-10;

struct Context {
    system: System,
    rng: ChaCha8Rng,
    budgets: crate::config::Budgets,
    notes: Vec<String>,
    partial: bool,
    checks: Vec<Check>,
    tables: Vec<Table>,
}

impl Context {
    fn sample_budget(&mut self, requested: usize, what: &str) -> usize {
        let cap = self.budgets.samples.min(usize::MAX as u64) as usize;
        if requested > cap {
            self.partial = true;
            self.notes.push(format!("{what}: {requested} requested, budget allows {cap}"));
            cap
        } else {
            requested
        }
    }

    fn sample_point(&mut self, reach: usize) -> Result<SymbolicPoint, CliError> {
        let r = reach as i64;
        Ok(self.system.measure.sample_point_on(&mut self.rng, -r, 2 * reach + 1)?)
    }

    /// Periodic points of period `1..=max_period`, stopping at the word budget.
    fn periodic_points(&mut self, max_period: usize) -> Result<Vec<Vec<PeriodicPoint>>, CliError> {
        let mut out = Vec::with_capacity(max_period);
        for period in 1..=max_period {
            match self.system.shift.enumerate_periodic(period, self.budgets.words as u128) {
                Ok(points) => out.push(points),
                Err(Error::BudgetExceeded { needed, .. }) => {
                    self.partial = true;
                    self.notes.push(format!("periodic points of period {period}: {needed} words exceed the word budget"));
                    break;
                }
                Err(e) => return Err(e.into()),
            }
        }
        Ok(out)
    }
}

pub fn run(config: &ExperimentConfig) -> Result<Report, CliError> {
    config.validate()?;
    let system = config.system()?;
    let mut ctx = Context {
        system,
        rng: ChaCha8Rng::seed_from_u64(config.experiment.seed),
        budgets: config.experiment.budgets,
        notes: Vec::new(),
        partial: false,
        checks: Vec::new(),
        tables: Vec::new(),
    };
    let desc = config.descriptor.as_ref();
    let cocycle = match &config.cocycle {
        Some(spec) => Some(spec.build(&ctx.system.shift, desc, &mut ctx.rng, "cocycle")?),
        None => None,
    };
    let a = || cocycle.as_ref().ok_or_else(|| CliError::Config("cocycle: missing".into()));
    let results = match &config.experiment.params {
        ExperimentParams::Exponents(p) => exponents(&mut ctx, a()?, p)?,
        ExperimentParams::Holonomy(p) => holonomy(&mut ctx, a()?, desc, p)?,
        ExperimentParams::Blocks(p) => blocks(&mut ctx, a()?, p)?,
        ExperimentParams::Shadow(p) => shadow(&mut ctx, a()?, p)?,
        ExperimentParams::Reconstruct(p) => reconstruct(&mut ctx, a()?, desc.expect("validated"), p)?,
        ExperimentParams::VerifyZimmer(p) => verify_zimmer(&mut ctx, a()?, desc.expect("validated"), p)?,
        ExperimentParams::ExampleUnipotent(p) => example_unipotent(&mut ctx, p)?,
    };
    let passed = ctx.checks.iter().all(|c| c.passed);
    Ok(Report {
        tool: "cocycle".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: config.experiment.params.kind().into(),
        config: config.clone(),
        passed,
        partial: ctx.partial,
        notes: ctx.notes,
        checks: ctx.checks,
        results,
        tables: ctx.tables,
    })
}

fn exponents(ctx: &mut Context, a: &LocallyConstantCocycle, p: &ExponentsParams) -> Result<Value, CliError> {
    if p.n == 0 || p.trials == 0 {
        return Err(CliError::Config("experiment: n and trials must be positive".into()));
    }
    let mut periodic = Table::new("periodic", &["word", "period", "lambda_plus", "lambda_minus"]);
    let mut max_periodic = f64::NEG_INFINITY;
    for points in ctx.periodic_points(p.max_period)? {
        for pt in points {
            let e = periodic_exponents(a, &pt)?;
            max_periodic = max_periodic.max(e.lambda_plus);
            periodic.push(vec![json!(format_word(pt.word())), json!(pt.period()), json!(e.lambda_plus), json!(e.lambda_minus)]);
        }
    }

    let mut finite = Table::new("finite_scale", &["n", "lambda_plus", "lambda_minus", "n_lambda_plus"]);
    let mut sums: Vec<f64> = Vec::new();
    let mut exact_at_n = None;
    for k in 1..=p.horizon.max(p.n) {
        match finite_scale_exponents(a, &ctx.system.measure, k, ctx.budgets.words as u128) {
            Ok(e) => {
                finite.push(vec![json!(k), json!(e.lambda_plus), json!(e.lambda_minus), json!(k as f64 * e.lambda_plus)]);
                sums.push(k as f64 * e.lambda_plus);
                if k == p.n {
                    exact_at_n = Some(e);
                }
            }
            Err(Error::BudgetExceeded { needed, .. }) => {
                ctx.partial = true;
                ctx.notes.push(format!("finite-scale sums stop at n = {}: {needed} words exceed the word budget", k - 1));
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }
    if sums.len() >= p.horizon {
        let mut worst = f64::NEG_INFINITY;
        for n in 1..p.horizon {
            for m in 1..=p.horizon - n {
                let (sn, sm, snm) = (sums[n - 1], sums[m - 1], sums[n + m - 1]);
                worst = worst.max((snm - sn - sm) / (1.0 + sn.abs() + sm.abs()));
            }
        }
        ctx.checks.push(Check::at_most(
            "subadditivity",
            "regularity: (n+m)·a_{n+m} ≤ n·a_n + m·a_m, relative excess",
            worst.max(0.0),
            1e-10,
        ));
    }

    let trials = ctx.sample_budget(p.trials, "monte carlo trials");
    let mc = monte_carlo_exponent(a, &ctx.system.measure, p.n, trials, &mut ctx.rng)?;
    match &exact_at_n {
        Some(exact) => ctx.checks.push(Check::at_most(
            "monte-carlo-agreement",
            "regularity: |monte carlo − exact a_n| ≤ 3 standard errors",
            (mc.lambda_plus - exact.lambda_plus).abs(),
            3.0 * mc.error_estimate + 1e-12,
        )),
        None => ctx.notes.push(format!("no exact sum at n = {}; monte carlo is unchecked", p.n)),
    }
    let headline = exact_at_n.clone().unwrap_or_else(|| mc.clone());
    ctx.tables.push(finite);
    ctx.tables.push(periodic);
    Ok(json!({
        "lambda_plus": headline.lambda_plus,
        "lambda_minus": headline.lambda_minus,
        "method": headline.method,
        "n": p.n,
        "exact": exact_at_n,
        "monte_carlo": mc,
        "max_periodic_lambda_plus": if max_periodic.is_finite() { json!(max_periodic) } else { Value::Null },
    }))
}

struct Worst(f64);

impl Worst {
    fn add(&mut self, v: f64) {
        self.0 = if v.is_nan() { f64::INFINITY } else { self.0.max(v) };
    }
}

fn holonomy(
    ctx: &mut Context,
    a: &LocallyConstantCocycle,
    desc: Option<&ZimmerDescriptor>,
    p: &HolonomyParams,
) -> Result<Value, CliError> {
    if p.max_n == 0 {
        return Err(CliError::Config("experiment.max_n must be positive".into()));
    }
    let pairs = ctx.sample_budget(p.pairs, "holonomy pairs");
    let tau = ctx.system.metric.tau;
    let bound = lipschitz_bound(a, tau);
    let block = desc.filter(|d| a.entries().all(|(_, m)| membership(m, d, DEFAULT_MEMBERSHIP_TOL).map(|r| r.member).unwrap_or(false)));
    if desc.is_some() && block.is_none() {
        ctx.notes.push("cocycle values are not all in the block group; holonomy membership is unchecked".into());
    }
    let truncation_ok = p.truncation_n >= a.radius();
    if !truncation_ok {
        ctx.notes.push(format!("truncation_n = {} is below the radius {}; truncation is unchecked", p.truncation_n, a.radius()));
    }
    let reach = 2 * (p.max_n + a.radius()) + 12;
    let mu = ctx.system.measure.clone();
    let (mut chain_s, mut chain_u, mut inter_s, mut inter_u) = (Worst(0.0), Worst(0.0), Worst(0.0), Worst(0.0));
    let (mut lip, mut trunc, mut memb) = (Worst(0.0), Worst(0.0), Worst(0.0));
    for i in 0..pairs {
        let x = ctx.sample_point(reach)?;
        let keep = ctx.rng.random_range(0..=10usize);
        let y = mu.resample_past(&mut ctx.rng, &x, keep, 12)?;
        let keep_z = ctx.rng.random_range(0..=10usize);
        let z = mu.resample_past(&mut ctx.rng, &x, keep_z, 12)?;
        let yu = mu.resample_future(&mut ctx.rng, &x, keep, 12)?;
        let zu = mu.resample_future(&mut ctx.rng, &x, 0, 12)?;
        let n = 1 + (i % p.max_n) as i64;

        let hs = |u: &SymbolicPoint, v: &SymbolicPoint| stable_holonomy(a, u, v).map(|h| h.matrix);
        let hu = |u: &SymbolicPoint, v: &SymbolicPoint| unstable_holonomy(a, u, v).map(|h| h.matrix);

        let (hyz, hxz, hyx) = (hs(&y, &z)?, hs(&x, &z)?, hs(&y, &x)?);
        chain_s.add(op_norm(&(&hyz - &hxz * &hyx)) / (op_norm(&hxz) * op_norm(&hyx)));
        let (uyz, uxz, uyx) = (hu(&yu, &zu)?, hu(&x, &zu)?, hu(&yu, &x)?);
        chain_u.add(op_norm(&(&uyz - &uxz * &uyx)) / (op_norm(&uxz) * op_norm(&uyx)));

        for (h, other, m, worst) in [(hs(&x, &y)?, &y, n, &mut inter_s), (hu(&x, &yu)?, &yu, -n, &mut inter_u)] {
            let forward = a.iterate(&x, m)?;
            let back = a.iterate(&other.shift(m), -m)?;
            let moved = if m > 0 { hs(&x.shift(m), &other.shift(m))? } else { hu(&x.shift(m), &other.shift(m))? };
            let rhs = &back * moved * &forward;
            worst.add(op_norm(&(h - &rhs)) / (op_norm(&back) * op_norm(&forward) * op_norm(&rhs).max(1.0)));
        }

        let hxy = hs(&x, &y)?;
        let rho = ctx.system.metric.distance(&x, &y);
        if rho > 0.0 {
            lip.add(op_norm(&(&hxy - Matrix::identity(a.dim(), a.dim()))) / rho);
        }
        if truncation_ok {
            trunc.add((&hxy - stable_truncation(a, &x, &y, p.truncation_n)).abs().max());
        }
        if let Some(d) = block {
            for h in [&hxy, &hu(&x, &yu)?] {
                memb.add(membership(h, d, DERIVED_MEMBERSHIP_TOL)?.max_residual());
            }
        }
    }
    let checks = &mut ctx.checks;
    checks.push(Check::at_most("stable-chain-rule", "holonomy: H^s_{yz} = H^s_{xz}·H^s_{yx}, relative", chain_s.0, IDENTITY_TOL));
    checks.push(Check::at_most("unstable-chain-rule", "holonomy: H^u_{yz} = H^u_{xz}·H^u_{yx}, relative", chain_u.0, IDENTITY_TOL));
    checks.push(Check::at_most(
        "stable-intertwining",
        "holonomy: H^s_{xy} = Aⁿ(y)⁻¹·H^s_{σⁿx,σⁿy}·Aⁿ(x), 1 ≤ n ≤ max_n, relative",
        inter_s.0,
        IDENTITY_TOL,
    ));
    checks.push(Check::at_most(
        "unstable-intertwining",
        "holonomy: H^u_{xy} = A⁻ⁿ(y)⁻¹·H^u_{σ⁻ⁿx,σ⁻ⁿy}·A⁻ⁿ(x), 1 ≤ n ≤ max_n, relative",
        inter_u.0,
        IDENTITY_TOL,
    ));
    checks.push(Check::at_most("lipschitz", "holonomy: ‖H^s_{xy} − I‖/ρ_τ(x,y) ≤ L", lip.0, bound));
    if truncation_ok {
        checks.push(Check::at_most("exact-vs-truncated", "holonomy: exact equals the truncated product", trunc.0, TRUNCATION_TOL));
    }
    if block.is_some() {
        checks.push(Check::at_most("holonomy-membership", "zimmer: holonomies of U_λ cocycles lie in U_λ", memb.0, DERIVED_MEMBERSHIP_TOL));
    }
    Ok(json!({
        "pairs": pairs,
        "lipschitz_estimate": lip.0,
        "lipschitz_bound": bound,
        "truncation_n": p.truncation_n,
        "max_n": p.max_n,
    }))
}

/// `s`-block products checked one by one from their definition, for
/// `1 ≤ s ≤ s_max`, with the same rounding allowance as the decision.
fn exhaustive_membership(a: &LocallyConstantCocycle, x: &SymbolicPoint, params: &BlockParams, s_max: usize) -> Result<bool, CliError> {
    let n = params.n as i64;
    let log_kappa = |m: &Matrix| {
        let s = m.singular_values();
        (s.max() / s.min()).ln()
    };
    let (mut fwd, mut bwd, mut scale_f, mut scale_b) = (0.0, 0.0, 1.0, 1.0);
    for s in 1..=s_max {
        let j = (s - 1) as i64;
        let f = log_kappa(&a.iterate(&x.shift(j * n), n)?);
        let b = log_kappa(&a.iterate(&x.shift(-j * n), -n)?);
        fwd += f;
        bwd += b;
        let budget = (s * params.n) as f64 * params.theta;
        scale_f += f.abs() + params.n as f64 * params.theta;
        scale_b += b.abs() + params.n as f64 * params.theta;
        if fwd - budget > 1e-12 * scale_f || bwd - budget > 1e-12 * scale_b {
            return Ok(false);
        }
    }
    Ok(true)
}

fn blocks(ctx: &mut Context, a: &LocallyConstantCocycle, p: &BlocksParams) -> Result<Value, CliError> {
    if p.n == 0 || p.max_period == 0 {
        return Err(CliError::Config("experiment: n and max_period must be positive".into()));
    }
    for &t in &p.thetas {
        BlockParams::new(p.n, t).map_err(|e| CliError::Config(format!("experiment.thetas: {e}")))?;
    }
    let count = ctx.sample_budget(p.points, "periodic points");
    let by_period = ctx.periodic_points(p.max_period)?;
    if by_period.is_empty() {
        return Err(CliError::Config("experiment: no periodic points fit in the word budget".into()));
    }
    let mut table = Table::new("decisions", &["word", "theta", "critical_theta", "periodic", "exhaustive"]);
    let (mut decisions, mut members, mut disagreements) = (0usize, 0usize, 0usize);
    for _ in 0..count {
        let period = ctx.rng.random_range(0..by_period.len());
        let pool = &by_period[period];
        let pt = pool[ctx.rng.random_range(0..pool.len())].clone();
        let critical = critical_theta_periodic(a, &pt, p.n)?;
        let mut thetas = p.thetas.clone();
        if p.around_critical && critical > 0.0 {
            thetas.extend([critical * 0.99, critical * 1.01]);
        }
        let s_max = 2 * block_period(&pt, p.n) * p.n;
        for theta in thetas {
            let params = BlockParams::new(p.n, theta)?;
            let decided = block_membership_periodic(a, &pt, &params)?;
            let oracle = exhaustive_membership(a, &pt.point(), &params, s_max)?;
            decisions += 1;
            members += decided as usize;
            disagreements += (decided != oracle) as usize;
            table.push(vec![json!(format_word(pt.word())), json!(theta), json!(critical), json!(decided), json!(oracle)]);
        }
    }
    ctx.checks.push(Check::at_most(
        "membership-agreement",
        "regularity: periodic D(N,θ) decision equals exhaustive checking for s ≤ 2·q'·N",
        disagreements as f64,
        0.0,
    ));
    ctx.tables.push(table);
    Ok(json!({ "points": count, "decisions": decisions, "members": members, "disagreements": disagreements }))
}

fn shadow(ctx: &mut Context, a: &LocallyConstantCocycle, p: &ShadowParams) -> Result<Value, CliError> {
    let q = &ctx.system.shift;
    let x = PeriodicPoint::new(q, parse_word(&p.x)?).map_err(|e| CliError::Config(format!("experiment.x: {e}")))?;
    let y = PeriodicPoint::new(q, parse_word(&p.y)?).map_err(|e| CliError::Config(format!("experiment.y: {e}")))?;
    let params = BlockParams::new(p.n, p.theta).map_err(|e| CliError::Config(format!("experiment: {e}")))?;
    let specs = p
        .ms
        .iter()
        .map(|&m| ShadowSpec::new(q, x.clone(), y.clone(), m, p.b, p.c, p.alpha))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Config(format!("experiment.ms: {e}")))?;
    let growth = growth_measure(a, &specs, &params)?;
    let mut table = Table::new("growth", &["m", "period", "log_norm", "in_block_set"]);
    for r in &growth.rows {
        table.push(vec![json!(r.m), json!(r.period), json!(r.log_norm), json!(r.in_block_set)]);
    }
    ctx.tables.push(table);
    if let Some(min) = p.min_slope {
        ctx.checks.push(Check::at_least("growth-slope", "shadow: fitted growth slope of log‖A^{u_m}(p^m)‖ in m", growth.slope, min));
    }
    if let Some(max) = p.max_abs_slope {
        ctx.checks.push(Check::at_most(
            "growth-slope-magnitude",
            "shadow: |fitted growth slope| for a bounded cocycle",
            growth.slope.abs(),
            max,
        ));
    }
    Ok(json!({ "slope": growth.slope, "params": growth.params, "j0": specs.iter().map(|s| s.j0()).collect::<Vec<_>>(), "j1": specs.iter().map(|s| s.j1()).collect::<Vec<_>>() }))
}

fn reconstruct(
    ctx: &mut Context,
    a: &LocallyConstantCocycle,
    desc: &ZimmerDescriptor,
    p: &ReconstructParams,
) -> Result<Value, CliError> {
    let q = ctx.system.shift.clone();
    let basepoints = default_basepoints(&q)?;
    let (b, base) = match (&p.transfer, &p.target) {
        (Some(u_spec), None) => {
            let u = u_spec.build(&q, Some(desc), &mut ctx.rng, "experiment.transfer")?;
            let b = a.coboundary_conjugate(&u)?;
            let base = basepoints.iter().map(|w| invert(u.evaluate(w))).collect::<Result<Vec<_>, _>>()?;
            (b, base)
        }
        (None, Some(b_spec)) => {
            let b = b_spec.build(&q, Some(desc), &mut ctx.rng, "experiment.target")?;
            let base = match &p.base_values {
                Some(values) => values
                    .iter()
                    .enumerate()
                    .map(|(i, rows)| matrix_from_rows(rows, &format!("experiment.base_values.{i}")))
                    .collect::<Result<Vec<_>, _>>()?,
                None => {
                    ctx.notes.push("base values seeded from periodic intertwiners at the basepoints".into());
                    let mut base = Vec::with_capacity(basepoints.len());
                    for (i, _) in basepoints.iter().enumerate() {
                        let mut word = vec![i as u8];
                        word.extend(q.shortest_return(i as u8)?);
                        let space = periodic_consistency_solve(a, &b, &PeriodicPoint::new(&q, word)?)?;
                        match space.representative {
                            Some(m) => base.push(m),
                            None => {
                                ctx.checks.push(Check::at_least(
                                    "periodic-intertwiner",
                                    "transfer: an invertible solution of A^q(p)·C = C·B^q(p) exists",
                                    0.0,
                                    1.0,
                                ));
                                return Ok(json!({ "obstructed_basepoint": i, "solution_dimension": space.basis.len() }));
                            }
                        }
                    }
                    base
                }
            };
            (b, base)
        }
        _ => return Err(CliError::Config("experiment: give exactly one of transfer and target".into())),
    };
    let ev = match superdiagonal_peel(a, &b, desc, basepoints, base, p.rule) {
        Ok(ev) => ev,
        Err(Error::StageResidual { stage, residual, tolerance }) => {
            ctx.checks.push(Check::at_most(&format!("peeling stage {stage}"), "transfer: stage residual", residual, tolerance));
            return Ok(json!({ "failed_stage": stage }));
        }
        Err(e) => return Err(e.into()),
    };
    let mut stages = Table::new("stages", &["stage", "residual", "tolerance", "radius"]);
    for s in &ev.stages {
        stages.push(vec![json!(s.stage), json!(s.residual), json!(s.tolerance), json!(s.radius)]);
    }
    ctx.tables.push(stages);

    let count = ctx.sample_budget(p.samples, "reconstruction samples");
    let reach = 2 * ev.propagation_radius() + 8;
    let samples = (0..count).map(|_| ctx.sample_point(reach)).collect::<Result<Vec<_>, _>>()?;
    let report = verify_conjugacy(a, &b, &ev, &samples, p.tolerance)?;
    let (mut path, mut memb, mut orth) = (Worst(0.0), Worst(0.0), Worst(0.0));
    for x in &samples {
        path.add(ev.path_disagreement(x)?);
        let m = membership(&ev.evaluate(x)?, desc, DERIVED_MEMBERSHIP_TOL)?;
        memb.add(m.max_residual());
        orth.add(m.diagonal.iter().copied().fold(0.0, f64::max));
    }
    ctx.checks.push(Check::at_most("conjugacy-residual", "transfer: max ‖A(x) − C(σx)·B(x)·C(x)⁻¹‖", report.max_residual, p.tolerance));
    ctx.checks.push(Check::at_most("path-agreement", "transfer: su and us propagation agree", path.0, p.path_tolerance));
    ctx.checks.push(Check::at_most("evaluator-membership", "transfer: evaluator values lie in U₀", memb.0, DERIVED_MEMBERSHIP_TOL));
    ctx.checks.push(Check::at_most("diagonal-orthogonality", "transfer: recovered diagonal blocks are orthogonal", orth.0, DERIVED_MEMBERSHIP_TOL));
    Ok(json!({
        "conjugacy": report,
        "path_disagreement": path.0,
        "stages": ev.stages,
        "evaluator": if p.include_evaluator { serde_json::to_value(&ev).map_err(|e| CliError::Output(e.to_string()))? } else { Value::Null },
    }))
}

fn verify_zimmer(
    ctx: &mut Context,
    a: &LocallyConstantCocycle,
    desc: &ZimmerDescriptor,
    p: &VerifyZimmerParams,
) -> Result<Value, CliError> {
    let mut worst_member = Worst(0.0);
    for (_, m) in a.entries() {
        worst_member.add(membership(m, desc, DEFAULT_MEMBERSHIP_TOL)?.max_residual());
    }
    if p.require_membership {
        ctx.checks.push(Check::at_most("cocycle-membership", "zimmer: every cocycle value lies in U_λ", worst_member.0, DEFAULT_MEMBERSHIP_TOL));
    }
    let mut table = Table::new("periodic", &["word", "period", "lambda_plus", "lambda_minus"]);
    let (mut worst_exp, mut worst_gap, mut count) = (Worst(0.0), Worst(0.0), 0usize);
    for points in ctx.periodic_points(p.max_period)? {
        for pt in points {
            let e = periodic_exponents(a, &pt)?;
            worst_exp.add(e.lambda_plus.abs().max(e.lambda_minus.abs()));
            worst_gap.add(e.gap());
            count += 1;
            table.push(vec![json!(format_word(pt.word())), json!(pt.period()), json!(e.lambda_plus), json!(e.lambda_minus)]);
        }
    }
    ctx.tables.push(table);
    ctx.checks.push(Check::at_most("periodic-exponents", "regularity: |λ_±(p)| of every periodic point", worst_exp.0, p.exponent_tolerance));
    ctx.checks.push(Check::at_most("periodic-gap", "regularity: λ_+(p) − λ_−(p) of every periodic point", worst_gap.0, p.exponent_tolerance));
    let samples = ctx.sample_budget(p.distortion_samples, "distortion samples");
    let degree = unipotent_distortion_degree(desc.num_blocks());
    let growth = distortion_growth(a, &ctx.system.measure, p.distortion_n, samples, degree, &mut ctx.rng)?;
    ctx.checks.push(Check::at_most(
        "distortion-growth",
        "regularity: fitted exponential rate of ‖Aⁿ‖·‖(Aⁿ)⁻¹‖ after the polynomial allowance",
        growth.exponent,
        p.growth_tolerance,
    ));
    let mut dist = Table::new("distortion", &["n", "mean_log_distortion"]);
    let half = p.distortion_n as i64;
    for (i, v) in growth.mean_log_distortion.iter().enumerate() {
        dist.push(vec![json!(i as i64 - half), json!(v)]);
    }
    ctx.tables.push(dist);
    Ok(json!({
        "periodic_points": count,
        "max_membership_residual": worst_member.0,
        "distortion_exponent": growth.exponent,
        "polynomial_degree": degree,
    }))
}

fn example_unipotent(ctx: &mut Context, p: &ExampleUnipotentParams) -> Result<Value, CliError> {
    let q = ctx.system.shift.clone();
    let (radius, table) = match &p.phi {
        Some(t) => {
            let mut values = std::collections::BTreeMap::new();
            for (w, v) in &t.values {
                if !v.is_finite() {
                    return Err(CliError::Config(format!("experiment.phi.values.{w}: must be finite")));
                }
                values.insert(parse_word(w)?, *v);
            }
            (t.radius, Some(values))
        }
        None => (0, None),
    };
    let phi = |w: &[u8]| -> Option<f64> {
        match &table {
            Some(t) => t.get(w).copied(),
            None => Some(w[0] as f64),
        }
    };
    let missing = std::cell::RefCell::new(None);
    let (a, u, b) = unipotent_example(&q, radius, |w| {
        phi(w).unwrap_or_else(|| {
            missing.borrow_mut().get_or_insert_with(|| format_word(w));
            0.0
        })
    })?;
    if let Some(w) = missing.into_inner() {
        return Err(CliError::Config(format!("experiment.phi.values: window {w} is missing")));
    }
    let scale = a.entries().chain(b.entries()).map(|(_, m)| m.abs().max()).fold(1.0, f64::max);

    let mut b_table = Table::new("b_table", &["window", "phi_x", "phi_sigma_x", "b01", "formula"]);
    let mut worst = Worst(0.0);
    let k = radius;
    for (w, m) in b.entries() {
        let here = phi(&w[1..=2 * k + 1]).expect("checked");
        let next = phi(&w[2..]).expect("checked");
        let formula = 1.0 - next + here;
        let expected = Matrix::from_row_slice(2, 2, &[1.0, formula, 0.0, 1.0]);
        worst.add((m - expected).abs().max());
        b_table.push(vec![json!(format_word(&w)), json!(here), json!(next), json!(m[(0, 1)]), json!(formula)]);
    }
    ctx.tables.push(b_table);
    ctx.checks.push(Check::at_most(
        "b-formula",
        "cocycle: u(σx)·A·u(x)⁻¹ = [[1, 1 − φ(σx) + φ(x)], [0, 1]] up to rounding",
        worst.0,
        4.0 * f64::EPSILON * scale,
    ));
    let desc = ZimmerDescriptor::new(vec![1, 1], 0.0)?;
    let mut memb = Worst(0.0);
    for (_, m) in b.entries() {
        memb.add(membership(m, &desc, DERIVED_MEMBERSHIP_TOL)?.max_residual());
    }
    ctx.checks.push(Check::at_most("b-membership", "zimmer: B takes values in U₀ for blocks (1, 1)", memb.0, DERIVED_MEMBERSHIP_TOL));

    let basepoints = default_basepoints(&q)?;
    let base = basepoints.iter().map(|w| invert(u.evaluate(w))).collect::<Result<Vec<_>, _>>()?;
    let ev = TransferEvaluator::new(a.clone(), b.clone(), basepoints.clone(), base.clone(), HolonomyKind::ComposedUs)?;
    let count = ctx.sample_budget(p.samples, "samples");
    let reach = 2 * ev.propagation_radius() + 8;
    let samples = (0..count).map(|_| ctx.sample_point(reach)).collect::<Result<Vec<_>, _>>()?;
    let report = verify_conjugacy(&a, &b, &ev, &samples, p.tolerance)?;
    let mut corner = Worst(0.0);
    for x in &samples {
        let c = ev.evaluate(x)?;
        corner.add((c[(0, 1)] - phi(&x.window(0, k)).expect("checked")).abs());
    }
    ctx.checks.push(Check::at_most("reconstruction-residual", "transfer: max ‖A(x) − C(σx)·B(x)·C(x)⁻¹‖ for propagated C", report.max_residual, p.tolerance));
    ctx.checks.push(Check::at_most("recovered-corner", "transfer: propagated corner C₁₂(x) equals φ(x)", corner.0, p.tolerance));
    let peeled = superdiagonal_peel(&a, &b, &desc, basepoints, base, HolonomyKind::ComposedUs)?;
    let peeled_report = verify_conjugacy(&a, &b, &peeled, &samples, p.tolerance)?;
    ctx.checks.push(Check::at_most("peeled-residual", "transfer: residual of the peeled evaluator", peeled_report.max_residual, p.tolerance));
    Ok(json!({
        "a": rows_of(a.evaluate(&samples[0])),
        "phi_radius": radius,
        "b_radius": b.radius(),
        "conjugacy": report,
        "peeled_conjugacy": peeled_report,
    }))
}
