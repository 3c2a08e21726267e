//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use qn_backprop::bench::{self, BenchFunction, ComparisonConfig};
use qn_backprop::math::{dot, is_spd, matvec, norm2, RealMatrix, RealVector};
use qn_backprop::mlp::{finite_diff_grad, grad_backprop, init_params, Dataset, Network, Rows, Topology};
use qn_backprop::optim::{
    bfgs_minimize_observed, bfgs_update_b, bfgs_update_h, BfgsStep, FnObjective, MlpObjective,
    Objective, StopCriteria, WolfeConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: [u64; 3] = [42, 7, 1001];

/// Per-step checks shared by criteria 5 and 6.
#[derive(Debug, Default)]
struct StepAudit {
    steps: usize,
    updates: usize,
    wolfe_violations: usize,
    descent_violations: usize,
    asymmetry_violations: usize,
    spd_violations: usize,
    secant_violations: usize,
    worst_secant: f64,
    worst_asymmetry: f64,
}

impl StepAudit {
    /// Re-evaluates the objective at the accepted point and checks the
    /// strong Wolfe inequalities and the BFGS invariants.
    fn check<O: Objective + ?Sized>(&mut self, obj: &O, wolfe: &WolfeConfig, step: &BfgsStep<'_>) {
        self.steps += 1;
        let slope0 = dot(step.g_prev, step.direction).unwrap();
        if !(slope0 < 0.0) {
            self.descent_violations += 1;
        }
        let x_new = step.x_prev.add_scaled(step.alpha, step.direction).unwrap();
        let (f_new, g_new) = obj.eval(&x_new).unwrap();
        let slope_new = dot(&g_new, step.direction).unwrap();
        let armijo = f_new <= step.f_prev + wolfe.c1 * step.alpha * slope0;
        let curvature = slope_new.abs() <= wolfe.c2 * slope0.abs();
        if !(armijo && curvature && step.alpha > 0.0 && f_new < step.f_prev) {
            self.wolfe_violations += 1;
        }
        if step.updated {
            self.updates += 1;
            let h = &step.state.h;
            let asym = h.max_asymmetry();
            self.worst_asymmetry = self.worst_asymmetry.max(asym);
            if asym > 1e-10 {
                self.asymmetry_violations += 1;
            }
            if !is_spd(h, 1e-14).unwrap_or(false) {
                self.spd_violations += 1;
            }
            let hy = matvec(h, step.y).unwrap();
            let rel = norm2(&hy.sub(step.s).unwrap()) / norm2(step.s);
            self.worst_secant = self.worst_secant.max(rel);
            if rel > 1e-9 {
                self.secant_violations += 1;
            }
        }
    }

    fn merge(&mut self, other: StepAudit) {
        self.steps += other.steps;
        self.updates += other.updates;
        self.wolfe_violations += other.wolfe_violations;
        self.descent_violations += other.descent_violations;
        self.asymmetry_violations += other.asymmetry_violations;
        self.spd_violations += other.spd_violations;
        self.secant_violations += other.secant_violations;
        self.worst_secant = self.worst_secant.max(other.worst_secant);
        self.worst_asymmetry = self.worst_asymmetry.max(other.worst_asymmetry);
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, name: &str, outcome: &Outcome) {
    println!(
        "[{}] criterion {id}: {name} -- {}",
        if outcome.pass { "PASS" } else { "FAIL" },
        outcome.detail
    );
}

fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> RealMatrix {
    let m = RealMatrix::new(n, n, (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    m.transpose()
        .matmul(&m)
        .unwrap()
        .add_scaled(0.5, &RealMatrix::identity(n))
        .unwrap()
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

// 1. Back-propagated gradient vs central differences.
fn gradient_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    let trials = 25;
    for t in 0..trials {
        let hidden = 1 + t % 5;
        let seed = 1000 + t as u64;
        let net = Network::from_params(init_params(Topology::new(2, hidden, 1).unwrap(), seed));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs: Vec<RealVector> = (0..5)
            .map(|_| RealVector::new(vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]).unwrap())
            .collect();
        let targets: Vec<f64> = (0..5).map(|_| rng.gen_range(0.1..0.9)).collect();
        let data = Dataset::from_parts(inputs, targets.clone(), targets, 0.0, 1.0, 4).unwrap();
        let analytic = grad_backprop(&net, &data, Rows::All).unwrap();
        let numeric = finite_diff_grad(&net, &data, Rows::All, 1e-5).unwrap();
        for (a, b) in analytic.as_slice().iter().zip(numeric.as_slice()) {
            worst = worst.max((a - b).abs() / 1.0_f64.max(a.abs()).max(b.abs()));
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: worst <= 1e-6 && within(elapsed, 5.0),
        detail: format!("{trials} networks, max rel error {worst:.2e} (<= 1e-6), {:.3}s (< 5s)", elapsed.as_secs_f64()),
    }
}

// 2. Finite termination on quadratics. Runs are audited for criteria 5/6.
fn quadratic_convergence(audit: &mut StepAudit) -> Outcome {
    let start = Instant::now();
    let wolfe = WolfeConfig {
        c2: 1e-2,
        ..WolfeConfig::default()
    };
    let mut failures = Vec::new();
    let mut worst_iters = [0usize; 3];
    for (k, n) in [2usize, 4, 8].into_iter().enumerate() {
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed * 31 + n as u64);
            let a = random_spd(n, &mut rng);
            let b = RealVector::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            let x0 = RealVector::new((0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
            let (a2, b2) = (a.clone(), b.clone());
            let obj = FnObjective::new(n, move |x: &[f64]| {
                let xv = RealVector::new(x.to_vec()).unwrap();
                let ax = matvec(&a2, &xv).unwrap();
                (
                    0.5 * dot(&xv, &ax).unwrap() - dot(&b2, &xv).unwrap(),
                    ax.sub(&b2).unwrap().into_vec(),
                )
            });
            let stop = StopCriteria {
                grad_tol: 1e-8,
                max_iters: 2 * (n + 1),
                f_tol: 0.0,
            };
            let mut local = StepAudit::default();
            let r = bfgs_minimize_observed(&obj, &x0, &stop, &wolfe, |s| local.check(&obj, &wolfe, s)).unwrap();
            audit.merge(local);
            worst_iters[k] = worst_iters[k].max(r.iters);
            if r.grad_norm_final > 1e-8 {
                failures.push(format!("n={n} seed={seed}"));
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: failures.is_empty() && within(elapsed, 1.0),
        detail: format!(
            "worst iterations n=2/4/8: {worst_iters:?} (limits 6/10/18), failures {failures:?}, {:.3}s (< 1s)",
            elapsed.as_secs_f64()
        ),
    }
}

// 3. BFGS directly on Beale and Booth.
fn direct_minimization(audit: &mut StepAudit) -> Outcome {
    let start = Instant::now();
    let wolfe = WolfeConfig::default();
    let mut details = Vec::new();
    let mut pass = true;
    for (f, x0, limit, f_limit) in [
        (BenchFunction::Beale, [1.0, 1.0], 100, 1e-10),
        (BenchFunction::Booth, [0.0, 0.0], 50, 1e-12),
    ] {
        let obj = FnObjective::new(2, move |x: &[f64]| {
            let (d0, d1) = f.gradient(x[0], x[1]);
            (f.eval(x[0], x[1]), vec![d0, d1])
        });
        let stop = StopCriteria {
            grad_tol: 1e-6,
            max_iters: limit,
            f_tol: 0.0,
        };
        let x0 = RealVector::new(x0.to_vec()).unwrap();
        let mut local = StepAudit::default();
        let r = bfgs_minimize_observed(&obj, &x0, &stop, &wolfe, |s| local.check(&obj, &wolfe, s)).unwrap();
        audit.merge(local);
        let ok = r.grad_norm_final <= 1e-6 && r.iters <= limit && r.f_final <= f_limit;
        pass &= ok;
        details.push(format!(
            "{f}: {} iters (<= {limit}), |g| {:.1e}, f {:.1e} (<= {f_limit:.0e}), x = ({:.6}, {:.6})",
            r.iters, r.grad_norm_final, r.f_final, r.x_final[0], r.x_final[1]
        ));
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: pass && within(elapsed, 1.0),
        detail: format!("{}; {:.3}s (< 1s)", details.join("; "), elapsed.as_secs_f64()),
    }
}

// 4. GD vs BFGS ordering on the function-approximation benchmark.
fn table_ordering(audit: &mut StepAudit) -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    for f in BenchFunction::ALL {
        let mut holds = 0;
        let mut row = Vec::new();
        for seed in SEEDS {
            let cfg = ComparisonConfig::new(f, seed);
            let (data, net) = bench::prepare(f, cfg.n_samples, cfg.train_fraction, cfg.hidden, seed).unwrap();
            let obj = MlpObjective::new(&net, &data, Rows::Train).unwrap();
            let mut local = StepAudit::default();
            let wolfe = cfg.wolfe;
            let cmp = bench::run_comparison_observed(&cfg, |s| local.check(&obj, &wolfe, s)).unwrap();
            audit.merge(local);
            let (gd, bfgs) = (cmp.gd.test_error_pct, cmp.bfgs.test_error_pct);
            let ok = bfgs < gd && bfgs < 5.0 && gd >= 2.0 * bfgs;
            holds += ok as usize;
            row.push(format!("seed {seed}: bfgs {bfgs:.5}% vs gd {gd:.4}%{}", if ok { "" } else { " (miss)" }));
        }
        pass &= holds >= 2;
        details.push(format!("{f} {holds}/3 [{}]", row.join(", ")));
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: pass && within(elapsed, 180.0),
        detail: format!("{}; {:.1}s (< 180s)", details.join("; "), elapsed.as_secs_f64()),
    }
}

// 6 (second half). B-form and H-form updates stay mutual inverses.
fn inverse_consistency() -> (bool, String) {
    let mut worst = 0.0_f64;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..7);
        let curvature = random_spd(n, &mut rng);
        let mut b = RealMatrix::identity(n);
        let mut h = RealMatrix::identity(n);
        for _ in 0..rng.gen_range(1..8) {
            let s = RealVector::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            let y = matvec(&curvature, &s).unwrap();
            b = bfgs_update_b(&b, &s, &y).unwrap();
            h = bfgs_update_h(&h, &s, &y).unwrap();
        }
        let v = RealVector::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let back = matvec(&b, &matvec(&h, &v).unwrap()).unwrap();
        worst = worst.max(norm2(&back.sub(&v).unwrap()) / norm2(&v));
    }
    (worst <= 1e-8, format!("B·H·v vs v over 100 sequences: max rel error {worst:.2e} (<= 1e-8)"))
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_qnbp")
}

fn run_cli(args: &[&str], out: &Path) -> i32 {
    let status = Command::new(bin())
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs");
    status.status.code().unwrap_or(-1)
}

// 7. Reproducible CLI output.
fn determinism(tmp: &Path) -> Outcome {
    let args = ["train", "--function", "booth", "--optimizer", "bfgs", "--seed", "42", "--samples", "200"];
    let (a, b) = (tmp.join("det_a"), tmp.join("det_b"));
    let codes = (run_cli(&args, &a), run_cli(&args, &b));
    let same_history = std::fs::read(a.join("history.csv")).ok() == std::fs::read(b.join("history.csv")).ok()
        && a.join("history.csv").exists();

    // Re-running from the written manifest reproduces the same history.
    let c = tmp.join("det_c");
    let manifest = a.join("manifest.txt");
    let code_c = run_cli(&["train", "--config", manifest.to_str().unwrap()], &c);
    let same_from_manifest = std::fs::read(a.join("history.csv")).ok() == std::fs::read(c.join("history.csv")).ok();

    let cmp_dir = tmp.join("det_cmp");
    let code_cmp = run_cli(&["compare", "--function", "beale", "--samples", "60", "--epochs", "20", "--max-iters", "20"], &cmp_dir);
    let report = std::fs::read_to_string(cmp_dir.join("report.txt")).unwrap_or_default();
    let hash = |key: &str| {
        report
            .lines()
            .find_map(|l| l.strip_prefix(key).map(|v| v.trim_start_matches(" = ").to_string()))
    };
    let hashes_equal = hash("gd_initial_param_hash").is_some()
        && hash("gd_initial_param_hash") == hash("bfgs_initial_param_hash");

    Outcome {
        pass: codes == (0, 0) && code_c == 0 && code_cmp == 0 && same_history && same_from_manifest && hashes_equal,
        detail: format!(
            "history byte-identical: {same_history}, manifest replay identical: {same_from_manifest}, compare initial hashes equal: {hashes_equal}"
        ),
    }
}

fn read_csv(path: &Path) -> Option<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut r = csv::Reader::from_path(path).ok()?;
    let header = r.headers().ok()?.iter().map(String::from).collect();
    let rows = r.records().collect::<Result<Vec<_>, _>>().ok()?;
    Some((header, rows))
}

// 8. Exit codes and CSV formats.
fn cli_contract(tmp: &Path) -> Outcome {
    let fail_cfg = tmp.join("fail.cfg");
    std::fs::write(&fail_cfg, "alpha_init = 1e-12\nalpha_max = 1e-12\nmax_bracket_steps = 1\n").unwrap();
    let bad_cfg = tmp.join("bad.cfg");
    std::fs::write(&bad_cfg, "unknown_key = 1\n").unwrap();

    let cases: Vec<(&str, Vec<String>, i32)> = vec![
        ("train ok", vec!["train", "--function", "booth", "--optimizer", "bfgs", "--seed", "42"], 0),
        ("train bogus function", vec!["train", "--function", "bogus"], 1),
        ("compare with --optimizer", vec!["compare", "--function", "booth", "--optimizer", "gd"], 1),
        ("unknown flag", vec!["train", "--function", "booth", "--nonsense", "1"], 1),
        ("unknown config key", vec!["train", "--function", "booth", "--config", bad_cfg.to_str().unwrap()], 1),
        (
            "line-search failure",
            vec!["train", "--function", "beale", "--samples", "50", "--config", fail_cfg.to_str().unwrap()],
            2,
        ),
        ("compare ok", vec!["compare", "--function", "booth", "--seed", "42"], 0),
    ]
    .into_iter()
    .map(|(n, a, c)| (n, a.into_iter().map(String::from).collect(), c))
    .collect();

    let mut mismatches = Vec::new();
    for (i, (name, args, expected)) in cases.iter().enumerate() {
        let dir = tmp.join(format!("contract_{i}"));
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let code = run_cli(&args, &dir);
        if code != *expected {
            mismatches.push(format!("{name}: got {code}, want {expected}"));
        }
    }
    for (args, expected) in [
        (vec!["gradcheck", "--trials", "20", "--seed", "1"], 0),
        (vec!["gradcheck", "--trials", "0"], 1),
        (vec!["gradcheck", "--trials", "5", "--sabotage"], 2),
    ] {
        let code = Command::new(bin()).args(&args).output().unwrap().status.code().unwrap_or(-1);
        if code != expected {
            mismatches.push(format!("{}: got {code}, want {expected}", args.join(" ")));
        }
    }

    let history = read_csv(&tmp.join("contract_0").join("history.csv"));
    let history_ok = history.as_ref().is_some_and(|(h, rows)| {
        h == &["iter", "train_error_pct", "test_error_pct", "grad_norm"]
            && !rows.is_empty()
            && rows.iter().all(|r| r.len() == 4 && r.iter().all(|v| v.parse::<f64>().is_ok()))
    });
    let comparison = read_csv(&tmp.join("contract_6").join("comparison.csv"));
    let comparison_ok = comparison.as_ref().is_some_and(|(h, rows)| {
        h == &["optimizer", "train_error_pct", "test_error_pct", "iterations", "wall_clock_s"] && rows.len() == 2
    });
    let files_ok = ["history.csv", "report.txt", "manifest.txt"]
        .iter()
        .all(|f| tmp.join("contract_0").join(f).exists());

    Outcome {
        pass: mismatches.is_empty() && history_ok && comparison_ok && files_ok,
        detail: format!(
            "exit-code mismatches {mismatches:?}; history.csv ok: {history_ok}; comparison.csv ok: {comparison_ok}; train files present: {files_ok}"
        ),
    }
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let mut audit = StepAudit::default();
    let mut results = Vec::new();

    let r1 = gradient_oracle();
    report(1, "gradient oracle", &r1);
    results.push(r1.pass);

    let r2 = quadratic_convergence(&mut audit);
    report(2, "BFGS quadratic convergence", &r2);
    results.push(r2.pass);

    let r3 = direct_minimization(&mut audit);
    report(3, "direct Beale/Booth minimization", &r3);
    results.push(r3.pass);

    let r4 = table_ordering(&mut audit);
    report(4, "BFGS beats GD on test error", &r4);
    results.push(r4.pass);

    let r5 = Outcome {
        pass: audit.steps > 0 && audit.wolfe_violations == 0 && audit.descent_violations == 0,
        detail: format!(
            "{} accepted steps re-evaluated, {} Wolfe violations, {} non-descent directions",
            audit.steps, audit.wolfe_violations, audit.descent_violations
        ),
    };
    report(5, "strong Wolfe post-conditions", &r5);
    results.push(r5.pass);

    let (inv_ok, inv_detail) = inverse_consistency();
    let r6 = Outcome {
        pass: audit.updates > 0
            && audit.asymmetry_violations == 0
            && audit.spd_violations == 0
            && audit.secant_violations == 0
            && inv_ok,
        detail: format!(
            "{} updates: asymmetry violations {} (worst {:.1e}), SPD violations {}, secant violations {} (worst {:.1e}); {inv_detail}",
            audit.updates,
            audit.asymmetry_violations,
            audit.worst_asymmetry,
            audit.spd_violations,
            audit.secant_violations,
            audit.worst_secant
        ),
    };
    report(6, "BFGS invariants", &r6);
    results.push(r6.pass);

    let r7 = determinism(tmp.path());
    report(7, "determinism", &r7);
    results.push(r7.pass);

    let r8 = cli_contract(tmp.path());
    report(8, "CLI contract", &r8);
    results.push(r8.pass);

    let passed = results.iter().filter(|p| **p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
