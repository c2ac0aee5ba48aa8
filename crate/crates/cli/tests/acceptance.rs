//! Acceptance suite.  Prints one line per criterion and exits nonzero if
//! any criterion fails.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use cocycle_cli::{run, ExperimentConfig, Report};
use cocycle_core::fixtures::{rotation, unipotent_example};
use cocycle_core::holonomy::{stable_holonomy, stable_truncation, unstable_holonomy, unstable_truncation};
use cocycle_core::linalg::{
    calibrate_growth_constant, cone_growth_bound, cone_invariance_check, op_norm, vector_at_aperture, ConeParams,
};
use cocycle_core::sft::format_word;
use cocycle_core::{LocallyConstantCocycle, MarkovMeasure, Matrix, TransitionMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Outcome { passed, detail: detail.into() }
    }
}

fn full2() -> Value {
    json!({ "transitions": [[1, 1], [1, 1]] })
}

fn golden() -> Value {
    json!({ "transitions": [[1, 1], [1, 0]] })
}

fn full3() -> Value {
    json!({ "transitions": [[1, 1, 1], [1, 1, 1], [1, 1, 1]] })
}

fn rows(m: &Matrix) -> Value {
    json!((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn table_spec(a: &LocallyConstantCocycle) -> Value {
    let values: serde_json::Map<String, Value> = a.entries().map(|(w, m)| (format_word(&w), rows(m))).collect();
    json!({ "table": { "radius": a.radius(), "values": values } })
}

fn run_config(config: Value) -> Report {
    let config = ExperimentConfig::from_json(&config.to_string()).expect("acceptance config parses");
    run(&config).expect("acceptance experiment runs")
}

fn failing(r: &Report) -> Vec<String> {
    r.checks.iter().filter(|c| !c.passed).map(|c| format!("{} = {:e} vs {:e}", c.name, c.value, c.tolerance)).collect()
}

fn worst(r: &Report, name: &str) -> f64 {
    r.checks.iter().find(|c| c.name == name).map(|c| c.value).unwrap_or(f64::NAN)
}

/// The unipotent example cocycle `u(σx)·[[1, 1], [0, 1]]·u(x)⁻¹` for
/// `u = [[1, −φ], [0, 1]]` and `φ(x) = x₋₁ − 2x₁`, whose holonomies along
/// local leaves are nontrivial.
fn unipotent_b(q: &TransitionMatrix) -> LocallyConstantCocycle {
    unipotent_example(q, 1, |w| w[0] as f64 - 2.0 * w[2] as f64).unwrap().2
}

/// Rotations depending on a window of radius 1.
fn orthogonal(q: &TransitionMatrix) -> LocallyConstantCocycle {
    LocallyConstantCocycle::from_fn(q, 1, 2, |w| Ok(rotation(0.3 * w[0] as f64 + 0.7 * w[1] as f64 + 1.1 * w[2] as f64 + 0.2)))
        .unwrap()
}

/// A 1 + 2 block upper triangular cocycle with an expanding scalar block
/// and a rotating, contracting 2×2 block.
fn mixed(q: &TransitionMatrix) -> LocallyConstantCocycle {
    LocallyConstantCocycle::from_fn(q, 1, 3, |w| {
        let (a, b, c) = (w[0] as f64, w[1] as f64, w[2] as f64);
        let mut m = Matrix::zeros(3, 3);
        m[(0, 0)] = 2f64.powf(b) * (1.0 + 0.25 * c);
        m[(0, 1)] = 0.5 * (a - c);
        m[(0, 2)] = 0.3 + 0.2 * b;
        let r = rotation(0.4 * a + 0.9 * b + 0.6 * c) * 0.5f64.powf(c);
        m.view_mut((1, 1), (2, 2)).copy_from(&r);
        Ok(m)
    })
    .unwrap()
}

fn ac1() -> Outcome {
    let q = TransitionMatrix::full_shift(2);
    let fixtures = [("orthogonal", orthogonal(&q)), ("unipotent", unipotent_b(&q)), ("mixed", mixed(&q))];
    let mut notes = Vec::new();
    let mut ok = true;
    for (i, (name, a)) in fixtures.iter().enumerate() {
        let r = run_config(json!({
            "system": full2(),
            "cocycle": table_spec(a),
            "experiment": { "kind": "holonomy", "seed": 100 + i, "pairs": 10_000, "max_n": 20, "truncation_n": 10 }
        }));
        let bad = failing(&r);
        ok &= bad.is_empty() && r.checks.len() >= 5 && !r.partial;
        notes.push(format!(
            "{name}: chain {:.1e}, intertwining {:.1e}, L̂ {:.3} ≤ {:.3}{}",
            worst(&r, "stable-chain-rule").max(worst(&r, "unstable-chain-rule")),
            worst(&r, "stable-intertwining").max(worst(&r, "unstable-intertwining")),
            r.results["lipschitz_estimate"].as_f64().unwrap_or(f64::NAN),
            r.results["lipschitz_bound"].as_f64().unwrap_or(f64::NAN),
            if bad.is_empty() { String::new() } else { format!(" FAILED {bad:?}") }
        ));
    }
    Outcome::new(ok, notes.join("; "))
}

fn ac2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut max_diff = 0.0f64;
    let mut pairs = 0usize;
    for q in [TransitionMatrix::full_shift(2), TransitionMatrix::golden_mean(), TransitionMatrix::full_shift(3)] {
        let mu = MarkovMeasure::uniform_successors(&q);
        for radius in 0..=2usize {
            let a = LocallyConstantCocycle::from_fn(&q, radius, 3, |_| {
                let m = Matrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0)) + Matrix::identity(3, 3) * 2.0;
                Ok(m)
            })
            .unwrap();
            for _ in 0..300 {
                let x = mu.sample_point_on(&mut rng, -30, 61).unwrap();
                let keep = rng.random_range(0..=4usize);
                let y = mu.resample_past(&mut rng, &x, keep, 12).unwrap();
                let z = mu.resample_future(&mut rng, &x, keep, 12).unwrap();
                let hs = stable_holonomy(&a, &x, &y).unwrap().matrix;
                let hu = unstable_holonomy(&a, &x, &z).unwrap().matrix;
                max_diff = max_diff.max((hs - stable_truncation(&a, &x, &y, 10)).abs().max());
                max_diff = max_diff.max((hu - unstable_truncation(&a, &x, &z, 10)).abs().max());
                pairs += 2;
            }
        }
    }
    Outcome::new(max_diff <= 1e-14, format!("{pairs} pairs, radius ≤ 2, max |exact − truncated| = {max_diff:.1e} ≤ 1e-14"))
}

fn ac3() -> Outcome {
    let cases = [
        (full2(), vec![1, 2]),
        (full2(), vec![2, 1]),
        (golden(), vec![1, 1, 1]),
        (full3(), vec![1, 1]),
        (full2(), vec![2, 2]),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (i, (system, dims)) in cases.into_iter().enumerate() {
        let r = run_config(json!({
            "system": system,
            "descriptor": { "block_dims": dims, "exponent": 0.0 },
            "cocycle": { "block-coboundary": { "spread": 1.0 } },
            "experiment": {
                "kind": "verify-zimmer", "seed": 300 + i, "max_period": 8,
                "distortion_n": 40, "distortion_samples": 40,
                "exponent_tolerance": 1e-9, "growth_tolerance": 1e-3
            }
        }));
        let bad = failing(&r);
        ok &= bad.is_empty() && !r.partial;
        notes.push(format!(
            "{dims:?}: |λ±| {:.1e}, growth {:+.4}{}",
            worst(&r, "periodic-exponents"),
            worst(&r, "distortion-growth"),
            if bad.is_empty() { String::new() } else { format!(" FAILED {bad:?}") }
        ));
    }
    Outcome::new(ok, notes.join("; "))
}

fn ac4() -> Outcome {
    let ln2 = std::f64::consts::LN_2;
    let shadow = |values: Value, check: Value| {
        let mut experiment = json!({ "kind": "shadow", "seed": 4, "x": "0", "y": "1", "ms": [4, 8, 12, 16], "n": 4, "theta": 2.0 });
        experiment.as_object_mut().unwrap().extend(check.as_object().unwrap().clone());
        run_config(json!({
            "system": full2(),
            "cocycle": { "table": { "radius": 0, "values": values } },
            "experiment": experiment
        }))
    };
    let mixed = shadow(
        json!({ "0": rows(&rotation(0.6435)), "1": [[2.0, 0.0], [0.0, 0.5]] }),
        json!({ "min_slope": 0.2 * ln2 }),
    );
    let control = shadow(
        json!({ "0": rows(&rotation(0.6435)), "1": rows(&rotation(1.3)) }),
        json!({ "max_abs_slope": 0.02 }),
    );
    let (s1, s2) = (mixed.results["slope"].as_f64().unwrap(), control.results["slope"].as_f64().unwrap());
    let ok = mixed.passed && control.passed && !mixed.checks.is_empty() && !control.checks.is_empty();
    Outcome::new(ok, format!("mixed χ̂ = {s1:.4} ≥ {:.4}; orthogonal |χ̂| = {:.1e} ≤ 0.02", 0.2 * ln2, s2.abs()))
}

fn ac5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let base = |mu: f64, lam: f64, eps: f64, delta: f64, sigma: f64, margin: f64| ConeParams {
        split: 2,
        expansion: mu,
        contraction: lam,
        epsilon: eps,
        delta,
        sigma,
        margin,
    };
    let regimes = [
        ("wide", base(2.0, 0.5, 0.01, 0.5, 0.5, f64::INFINITY)),
        ("weak", base(1.5, 0.8, 0.02, 0.3, 0.5, f64::INFINITY)),
        ("boundary δ = Dε", base(2.0, 0.5, 0.02, 0.2, 0.5, 10.0)),
    ];
    let d = 4;
    let mut inv_violations = 0usize;
    let mut growth_violations = 0usize;
    let mut products = 0usize;
    let mut steps = 0usize;
    for (_, p) in &regimes {
        let k = p.split;
        let mut model = Matrix::zeros(d, d);
        model.view_mut((0, 0), (k, k)).copy_from(&(rotation(0.9) * p.expansion));
        model.view_mut((k, k), (d - k, d - k)).copy_from(&(rotation(-0.4) * p.contraction));
        let c = calibrate_growth_constant(&model, p, 20, 200, &mut rng).unwrap();
        for _ in 0..1000 {
            let j = rng.random_range(1..=20usize);
            let blocks: Vec<Matrix> = (0..j)
                .map(|_| {
                    let mut l = model.clone();
                    for (r0, c0, nr, nc) in [(0, 0, k, k), (0, k, k, d - k), (k, 0, d - k, k), (k, k, d - k, d - k)] {
                        let e = Matrix::from_fn(nr, nc, |_, _| rng.random_range(-1.0..1.0));
                        let size = if rng.random_bool(0.3) { 1.0 } else { rng.random_range(0.0..1.0) };
                        let scale = size * p.epsilon / op_norm(&e);
                        let e = e * scale;
                        let mut v = l.view_mut((r0, c0), (nr, nc));
                        v += e;
                    }
                    l
                })
                .collect();
            let check = cone_invariance_check(&model, &blocks, p, 20, &mut rng).unwrap();
            inv_violations += !check.holds as usize;
            let angle = rng.random_range(p.delta..std::f64::consts::FRAC_PI_2);
            let v = vector_at_aperture(d, k, angle, &mut rng);
            for len in 1..=j {
                let g = cone_growth_bound(&blocks[..len], &v, p, c).unwrap();
                growth_violations += !g.holds() as usize;
                steps += 1;
            }
            products += 1;
        }
    }
    Outcome::new(
        inv_violations == 0 && growth_violations == 0,
        format!(
            "{products} products over {} regimes ({steps} prefixes): {inv_violations} invariance and {growth_violations} growth violations",
            regimes.len()
        ),
    )
}

fn ac6() -> Outcome {
    let fixtures = [
        (full2(), json!({ "table": { "radius": 0, "values": { "0": [[2.0, 1.0], [0.0, 0.5]], "1": rows(&rotation(0.6435)) } } }), 3),
        (golden(), table_spec(&mixed(&TransitionMatrix::golden_mean())), 2),
        (full3(), json!({ "table": { "radius": 0, "values": {
            "0": [[3.0, 0.0], [0.0, 1.0]], "1": [[1.0, 2.0], [0.0, 1.0]], "2": [[0.5, 0.0], [1.0, 2.0]] } } }), 4),
    ];
    let (mut points, mut decisions, mut disagreements, mut members) = (0u64, 0u64, 0u64, 0u64);
    for (i, (system, cocycle, n)) in fixtures.into_iter().enumerate() {
        let r = run_config(json!({
            "system": system,
            "cocycle": cocycle,
            "experiment": { "kind": "blocks", "seed": 600 + i, "n": n, "thetas": [0.05, 0.3, 1.0], "points": 200, "max_period": 8 }
        }));
        points += r.results["points"].as_u64().unwrap();
        decisions += r.results["decisions"].as_u64().unwrap();
        disagreements += r.results["disagreements"].as_u64().unwrap();
        members += r.results["members"].as_u64().unwrap();
    }
    Outcome::new(
        disagreements == 0 && points >= 200,
        format!("{points} periodic points, {decisions} decisions ({members} members), {disagreements} disagreements"),
    )
}

fn ac7() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for (i, (system, dims, a)) in [
        (full2(), vec![1, 2], json!({ "random-block": { "radius": 1, "spread": 1.0 } })),
        (golden(), vec![1, 1], json!({ "block-coboundary": { "spread": 1.0 } })),
        (full2(), vec![1, 1, 1, 1], json!({ "random-block": { "radius": 1, "spread": 1.0 } })),
        (golden(), vec![1, 1, 1, 1], json!({ "block-coboundary": { "spread": 1.0 } })),
    ]
    .into_iter()
    .enumerate()
    {
        let r = run_config(json!({
            "system": system,
            "descriptor": { "block_dims": dims, "exponent": 0.0 },
            "cocycle": a,
            "experiment": {
                "kind": "reconstruct", "seed": 700 + i,
                "transfer": { "random-unipotent": { "radius": 1, "spread": 1.0 } },
                "samples": 10_000, "tolerance": 1e-8, "path_tolerance": 1e-9
            }
        }));
        let bad = failing(&r);
        ok &= bad.is_empty() && !r.partial && r.checks.len() == 4;
        notes.push(format!(
            "{dims:?}: residual {:.1e}, path {:.1e}{}",
            worst(&r, "conjugacy-residual"),
            worst(&r, "path-agreement"),
            if bad.is_empty() { String::new() } else { format!(" FAILED {bad:?}") }
        ));
    }
    let example = run_config(json!({
        "system": full2(),
        "experiment": { "kind": "example-unipotent", "seed": 77, "samples": 10_000 }
    }));
    let b = worst(&example, "b-formula");
    ok &= example.passed && b == 0.0;
    notes.push(format!("unipotent example: B-formula deviation {b:e}"));
    Outcome::new(ok, notes.join("; "))
}

fn ac8() -> Outcome {
    let q2 = TransitionMatrix::full_shift(2);
    let gm = TransitionMatrix::golden_mean();
    let mut ok = true;
    let mut notes = Vec::new();
    for (i, (system, cocycle)) in [
        (full2(), table_spec(&mixed(&q2))),
        (golden(), table_spec(&orthogonal(&gm).map_values(|m| m * 1.5).unwrap())),
        (full3(), json!({ "table": { "radius": 0, "values": {
            "0": [[3.0, 0.0], [0.0, 1.0]], "1": [[1.0, 2.0], [0.0, 1.0]], "2": [[0.5, 0.0], [1.0, 2.0]] } } })),
    ]
    .into_iter()
    .enumerate()
    {
        let r = run_config(json!({
            "system": system,
            "cocycle": cocycle,
            "experiment": { "kind": "exponents", "seed": 800 + i, "n": 8, "trials": 20_000, "horizon": 10, "max_period": 4 }
        }));
        let bad = failing(&r);
        ok &= bad.is_empty() && !r.partial && r.checks.len() == 2;
        let mc = &r.results["monte_carlo"];
        notes.push(format!(
            "a_8 = {:.5}, mc = {:.5} ± {:.1e}, excess {:.1e}{}",
            r.results["lambda_plus"].as_f64().unwrap(),
            mc["lambda_plus"].as_f64().unwrap(),
            mc["error_estimate"].as_f64().unwrap(),
            worst(&r, "subadditivity"),
            if bad.is_empty() { String::new() } else { format!(" FAILED {bad:?}") }
        ));
    }
    Outcome::new(ok, notes.join("; "))
}

fn ac9() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut configs: Vec<PathBuf> = std::fs::read_dir(&dir)
        .expect("configs directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    configs.sort();
    let mut ok = !configs.is_empty();
    let mut mismatched = Vec::new();
    for path in &configs {
        let kind = path.file_stem().unwrap().to_str().unwrap();
        for format in ["json", "csv"] {
            let once = || {
                Command::new(env!("CARGO_BIN_EXE_cocycle"))
                    .args([kind, "--config", path.to_str().unwrap(), "--format", format])
                    .output()
                    .expect("binary runs")
            };
            let (a, b) = (once(), once());
            if a.status.code() != Some(0) || a.stdout != b.stdout || a.stdout.is_empty() {
                ok = false;
                mismatched.push(format!("{kind}/{format}"));
            }
        }
    }
    Outcome::new(
        ok,
        if mismatched.is_empty() {
            format!("{} experiments × 2 formats emitted byte-identical reports", configs.len())
        } else {
            format!("differing or failing: {mismatched:?}")
        },
    )
}

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome, Option<u64>); 9] = [
        ("AC1", "holonomy identity suite", ac1, Some(30)),
        ("AC2", "exact vs truncated holonomy", ac2, Some(5)),
        ("AC3", "zero-exponent rigidity", ac3, Some(120)),
        ("AC4", "shadow growth", ac4, Some(60)),
        ("AC5", "cone lemma", ac5, Some(30)),
        ("AC6", "block membership decision", ac6, Some(60)),
        ("AC7", "reconstruction round trip", ac7, Some(120)),
        ("AC8", "subadditivity and exactness", ac8, Some(60)),
        ("AC9", "determinism", ac9, None),
    ];
    let mut failed = 0;
    for (id, title, f, limit) in criteria {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|s| elapsed <= Duration::from_secs(s));
        let passed = outcome.passed && in_time;
        failed += !passed as usize;
        let budget = limit.map(|s| format!(" / {s} s")).unwrap_or_default();
        println!(
            "{id} {} {title} [{:.2} s{budget}]: {}",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            outcome.detail
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
