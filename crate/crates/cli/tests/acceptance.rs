//! Acceptance suite: one line per criterion, tolerances and time budgets
//! pinned here. Exits non-zero if any criterion fails.

use lpkit_cli::config::Config;
use lpkit_cli::report::{Check, Metric};
use lpkit_cli::setup::Setup;
use lpkit_cli::suites::{random_atoms, run_suite};
use lpkit_core::atoms::{verify_atom, AtomTolerances, Ball, build_atom, Shape};
use lpkit_core::kernel::{
    builtin, builtin_catalog, check_cancellation, check_uniform_l2, default_delta_grid, default_r_samples,
    default_x_samples, dini_integral, log_dini_integral, omega2, ModulusMeta, ModulusTable,
};
use lpkit_core::operators::{evaluate, OperatorParams, OperatorTag};
use lpkit_core::quad::oracle::{dense_oracle, monte_carlo_oracle_sq, DenseResolution};
use lpkit_core::quad::{QuadPlan, SourceField};
use lpkit_core::Verdict;
use std::process::Command;
use std::time::{Duration, Instant};

const SEED: u64 = 20240607;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn standard(suite: &str) -> Setup {
    Setup::new(Config::default(), suite, SEED, false).expect("standard instance is admissible")
}

fn suite_checks(name: &str) -> Vec<Check> {
    run_suite(name, &standard(name)).expect("suite runs").checks
}

fn num(c: &Check, k: &str) -> f64 {
    match c.metrics.get(k) {
        Some(Metric::Num(e)) => e.value,
        _ => f64::NAN,
    }
}

fn count(c: &Check, k: &str) -> Option<u64> {
    match c.metrics.get(k) {
        Some(Metric::Count(v)) => Some(*v),
        _ => None,
    }
}

fn c1_kernels() -> Outcome {
    let mut worst_res: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    let mut ok = true;
    let mut judged = 0;
    for info in builtin_catalog().into_iter().filter(|i| !i.cancellation_exempt) {
        let k = builtin(info.id).unwrap();
        let c = check_cancellation(&k, 64);
        let u = check_uniform_l2(&k, &default_x_samples(k.dim()), &default_r_samples(), 64);
        let Some(bound) = u.analytic_bound else {
            return outcome(false, format!("{}: no analytic bound", info.id));
        };
        let gap = (u.sampled_max - bound).abs() / bound;
        worst_res = worst_res.max(c.residual);
        worst_gap = worst_gap.max(gap);
        ok &= c.residual < 1e-8 && gap <= 0.01;
        judged += 1;
    }
    outcome(ok, format!("{judged} kernels, worst residual {worst_res:.1e} (< 1e-8), worst L2 gap {worst_gap:.1e} (<= 1%)"))
}

fn c2_modulus() -> Outcome {
    let k = builtin("circle-harmonic-1").unwrap();
    let grid = default_delta_grid(40, 2.0);
    let meta = ModulusMeta::new(2);
    let t = omega2(&k, &grid, &meta).unwrap();
    let o = omega2(&k, &grid, &meta.clone().with_refinement(10 * meta.cap_refinement)).unwrap();
    let monotone = t.omega2_values.windows(2).all(|w| w[1] >= w[0]);
    let worst = t
        .omega2_values
        .iter()
        .zip(&o.omega2_values)
        .map(|(a, b)| (a - b).abs() / b)
        .fold(0.0, f64::max);
    outcome(monotone && worst <= 0.05, format!("{} deltas, worst gap {worst:.1e} (<= 5%), monotone {monotone}", grid.len()))
}

fn c3_closed_forms() -> Outcome {
    let g = default_delta_grid(160, 1.0);
    let t = ModulusTable::from_values(g.clone(), g).unwrap();
    let d = dini_integral(&t, 0.5).unwrap().value;
    let l = log_dini_integral(&t, 2.0).unwrap().value;
    outcome(
        (d - 2.0).abs() <= 1e-3 && (l - 5.0).abs() <= 1e-2,
        format!("dini = {d:.6} (2 +- 1e-3), log-dini = {l:.6} (5 +- 1e-2)"),
    )
}

fn c4_atoms() -> Outcome {
    let atoms = random_atoms(SEED, 100, &[1.0, 0.8, 2.0 / 3.0]);
    let tol = AtomTolerances { moment_tol: 1e-9, size_tol: 0.0 };
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for a in &atoms {
        match a {
            Ok(a) => {
                let r = verify_atom(a, &tol);
                worst = worst.max(r.moments.residual);
                failures += usize::from(!(r.all_pass() && r.moments.residual < 1e-9));
            }
            Err(_) => failures += 1,
        }
    }
    outcome(failures == 0, format!("{} atoms, {failures} failures, worst moment residual {worst:.1e} (< 1e-9)", atoms.len()))
}

fn c5_oracles() -> Outcome {
    let k = builtin("circle-harmonic-1").unwrap();
    let atom = build_atom(2, 1.0, Ball::new(&[0.0, 0.0], 1.0), &Shape::radial_bump(), 1).unwrap();
    let f = atom.source();
    let params = OperatorParams::operator_only(2, 1.5, 3.0).unwrap();
    let plan = QuadPlan::default();
    let field = SourceField::new(&k, &f, 1.5, &plan).unwrap();
    let mut worst_dense: f64 = 0.0;
    let mut worst_z: f64 = 0.0;
    for (i, d) in [8.0, 16.0, 32.0, 64.0, 128.0].into_iter().enumerate() {
        let x = [d, 0.0];
        for tag in [OperatorTag::Area, OperatorTag::Star] {
            let a = evaluate(tag, &k, &f, &x, &params, &plan).unwrap().estimate;
            let dense = dense_oracle(&k, &f, &x, tag, 1.5, 3.0, 1e-3, &DenseResolution::default()).unwrap();
            worst_dense = worst_dense.max((a.value - dense).abs() / dense);
            let mc = monte_carlo_oracle_sq(&field, &x, tag, 3.0, 1e-3, 1_000_000, 1000 + i as u64).unwrap();
            let sigma = (mc.uncertainty.powi(2) + (2.0 * a.value * a.uncertainty).powi(2)).sqrt();
            worst_z = worst_z.max((mc.value - a.value * a.value).abs() / sigma);
        }
    }
    outcome(worst_dense <= 0.01 && worst_z <= 3.0, format!("10 evaluations, worst dense gap {worst_dense:.2e} (<= 1%), worst MC z {worst_z:.2} (<= 3)"))
}

fn c6_domination() -> Outcome {
    let checks = suite_checks("domination");
    let mut ok = checks.len() == 3;
    let mut parts = Vec::new();
    for c in &checks {
        let v = count(c, "violations").unwrap_or(u64::MAX);
        ok &= v == 0 && count(c, "points") == Some(100) && c.verdict == Verdict::Pass;
        parts.push(format!("lambda {} -> {v} violations (margin {:.2})", num(c, "lambda"), num(c, "min_margin")));
    }
    outcome(ok, parts.join(", "))
}

fn c7_decay() -> Outcome {
    let checks = suite_checks("decay");
    let bound = -(2.0 + 0.45) + 0.15;
    let mut ok = checks.len() == 2;
    let mut parts = Vec::new();
    for c in &checks {
        let (slope, stab) = (num(c, "slope"), num(c, "stability"));
        ok &= slope <= bound && stab < 2.0 && c.verdict == Verdict::Pass;
        parts.push(format!("{}: slope {slope:.4} (<= {bound:.2}), C_fit ratio {stab:.3} (< 2)", c.id));
    }
    outcome(ok, parts.join(", "))
}

fn c8_lp() -> Outcome {
    let checks = suite_checks("lp");
    let mut ok = checks.len() == 4;
    let mut parts = Vec::new();
    for c in &checks {
        let totals = match c.metrics.get("totals") {
            Some(Metric::Nums(v)) => v.iter().map(|e| e.value).collect::<Vec<_>>(),
            _ => Vec::new(),
        };
        let lo = totals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = totals.iter().cloned().fold(0.0, f64::max);
        let spread = hi / lo - 1.0;
        ok &= totals.len() == 4 && spread < 0.20 && c.verdict == Verdict::Pass;
        parts.push(format!("{}: spread {:.2e}", c.id, spread));
    }
    outcome(ok, format!("{} (< 20%)", parts.join(", ")))
}

fn c9_weak() -> Outcome {
    let checks = suite_checks("weak-type");
    let mut ok = checks.len() == 4 && checks.iter().any(|c| c.id.ends_with("p-endpoint"));
    let mut parts = Vec::new();
    for c in &checks {
        let (fine, coarse) = (num(c, "sup_ratio"), num(c, "sup_ratio_coarse"));
        let change = (fine - coarse).abs() / fine.max(coarse);
        ok &= fine.is_finite() && coarse.is_finite() && change < 0.25 && num(c, "octaves") >= 4.0 - 1e-9 && c.verdict == Verdict::Pass;
        parts.push(format!("{}: sup {fine:.3} vs {coarse:.3}", c.id));
    }
    outcome(ok, format!("{} (change < 25%)", parts.join(", ")))
}

fn c10_lemma() -> Outcome {
    let checks = suite_checks("lemma25");
    let pairs = checks.iter().find(|c| c.id == "lemma25.scale-pairs");
    let scaling = checks.iter().find(|c| c.id == "lemma25.kernel-scaling");
    let (Some(p), Some(s)) = (pairs, scaling) else {
        return outcome(false, "missing lemma25 checks");
    };
    let c_star = num(p, "c_star");
    let change = num(p, "worst_change");
    let inv = num(s, "relative_change");
    let ok = count(p, "pairs") == Some(5)
        && c_star > 0.0
        && c_star.is_finite()
        && change < 0.25
        && inv <= 1e-12
        && p.verdict == Verdict::Pass
        && s.verdict == Verdict::Pass;
    outcome(ok, format!("C* = {c_star:.4}, worst pair change {change:.1e} (< 25%), kernel scaling {inv:.1e} (<= 1e-12)"))
}

/// Reduced resolution: the same code paths as the standard run.
const QUICK: &str = "\
atom-checks.count = 12
decay.points = 3
decay.far = 256
lp.radii = 0.5, 1
lp.per_segment = 3
lp.n_theta = 16
weak-type.p = 1
weak-type.cells_per_radius = 1
weak-type.fit_points = 3
weak-type.fit_far = 256
domination.grid = 3
lemma25.pairs = 2
plan.rel_tol = 0.05
";

fn c11_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("quick.cfg");
    std::fs::write(&cfg, QUICK).unwrap();
    let mut reports = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("run{i}"));
        let status = Command::new(env!("CARGO_BIN_EXE_lpkit"))
            .args(["run", "all", "--config"])
            .arg(&cfg)
            .args(["--seed", "7", "--out"])
            .arg(&out)
            .output()
            .unwrap();
        let code = status.status.code();
        if !matches!(code, Some(0) | Some(2) | Some(3)) {
            return outcome(false, format!("run {i} exited with {code:?}: {}", String::from_utf8_lossy(&status.stderr)));
        }
        reports.push(std::fs::read(out.join("report.json")).unwrap());
    }
    let checks = serde_json::from_slice::<serde_json::Value>(&reports[0]).ok().and_then(|v| v["checks"].as_array().map(|a| a.len()));
    outcome(reports[0] == reports[1], format!("two runs of `run all`, {} bytes, {} checks, identical: {}", reports[0].len(), checks.unwrap_or(0), reports[0] == reports[1]))
}

fn main() {
    // `cargo test -- <filter>` passes arguments; this target runs everything
    let criteria: [(u32, &str, fn() -> Outcome, Option<u64>); 11] = [
        (1, "kernel admissibility", c1_kernels, Some(5)),
        (2, "modulus vs cap-search oracle", c2_modulus, Some(30)),
        (3, "closed-form Dini integrals", c3_closed_forms, None),
        (4, "atom contract", c4_atoms, Some(10)),
        (5, "operators vs dense and Monte-Carlo oracles", c5_oracles, Some(300)),
        (6, "pointwise domination", c6_domination, Some(600)),
        (7, "decay away from the atom", c7_decay, Some(600)),
        (8, "Lp uniformity over atom radii", c8_lp, Some(900)),
        (9, "weak-type stability", c9_weak, Some(1200)),
        (10, "annulus lemma ratio", c10_lemma, Some(300)),
        (11, "determinism of run all", c11_determinism, None),
    ];
    let mut failed = Vec::new();
    for (id, name, f, budget) in criteria {
        let t0 = Instant::now();
        let o = f();
        let el = t0.elapsed();
        let in_time = budget.map_or(true, |b| el <= Duration::from_secs(b));
        let pass = o.pass && in_time;
        let budget_txt = budget.map(|b| format!(" / {b} s")).unwrap_or_default();
        println!(
            "criterion {id:>2} {} {name}: {} [{:.1} s{budget_txt}]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            el.as_secs_f64()
        );
        if !pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 11 criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
