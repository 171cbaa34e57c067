//! Exit-gate checks. Runs as a plain binary (`harness = false`) so every
//! criterion prints exactly one PASS/FAIL line even when others fail.
//!
//!     cargo test --release --test acceptance

use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eos_ssd::instance::{generate_suite, GeneratorConfig};
use eos_ssd::lagrangian::instance_linearization;
use eos_ssd::report::builtin_families;
use eos_ssd::subproblem::{optimal_capacity, solve_inner, PieceConstants};
use eos_ssd::{
    evaluate, generate_instance, linearize, oracle_optimum, solve, CostFunction, Instance,
    Linearization, Opening, SolveReport, SolverConfig,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn main() {
    let suite_runs = SuiteRuns::new();
    let criteria: [(&str, Box<dyn Fn() -> Outcome>); 9] = [
        ("linearization error bound", Box::new(linearization_bound)),
        ("closed form vs root finding", Box::new(closed_form_vs_numeric)),
        ("inner problem exactness", Box::new(inner_exactness)),
        ("capacity stationarity", Box::new(capacity_stationarity)),
        ("weak-duality sandwich", Box::new(duality_sandwich)),
        ("heuristic quality vs oracle", Box::new(heuristic_quality)),
        ("economies-of-scale trend", Box::new(|| scale_trend(&suite_runs))),
        ("convergence protocol", Box::new(|| convergence(&suite_runs))),
        ("cli determinism", Box::new(cli_determinism)),
    ];

    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let result = check();
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("criterion {} [{}] {}: {}", k + 1, tag, name, result.detail);
        failed += usize::from(!result.pass);
    }
    if failed > 0 {
        println!("{failed} of 9 acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 9 acceptance criteria passed");
}

// Reference cost curves, written out independently of the library.
fn g(family: &CostFunction, x: f64) -> f64 {
    match family {
        CostFunction::SquareRoot => x.sqrt(),
        CostFunction::Fractional => x / (x + 1.0),
        _ => x,
    }
}

fn dg(family: &CostFunction, x: f64) -> f64 {
    match family {
        CostFunction::SquareRoot => 0.5 / x.sqrt(),
        CostFunction::Fractional => 1.0 / ((x + 1.0) * (x + 1.0)),
        _ => 1.0,
    }
}

fn tangent_at(family: &CostFunction, mu: f64, x: f64) -> f64 {
    g(family, mu) + dg(family, mu) * (x - mu)
}

fn envelope(family: &CostFunction, lin: &Linearization, x: f64) -> f64 {
    lin.pieces()
        .iter()
        .map(|p| tangent_at(family, p.tangent, x))
        .fold(f64::INFINITY, f64::min)
}

fn linearization_bound() -> Outcome {
    let mut worst = (0.0f64, f64::INFINITY);
    let mut slowest = Duration::ZERO;
    let mut ok = true;
    for family in [CostFunction::SquareRoot, CostFunction::Fractional] {
        let started = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for eps in [0.1, 0.01, 0.001] {
            let lin = linearize(&family, eps, 1.0, 1e4).expect("linearize");
            for _ in 0..100_000 {
                let x = rng.random_range(1.0..=1e4);
                let exact = g(&family, x);
                let lib = (lin.eval(x) - exact) / exact;
                let reference = (envelope(&family, &lin, x) - exact) / exact;
                for err in [lib, reference] {
                    // relative rounding slack of a few ulps on each side
                    if !(err >= -1e-14 && err <= eps * (1.0 + 1e-12)) {
                        ok = false;
                    }
                    worst.0 = worst.0.max(err / eps);
                    worst.1 = worst.1.min(err);
                }
            }
        }
        slowest = slowest.max(started.elapsed());
    }
    let fast = slowest < Duration::from_secs(1);
    outcome(
        ok && fast,
        format!(
            "max err/eps {:.6}, min err {:.2e}, slowest family {:?} (limit 1 s)",
            worst.0, worst.1, slowest
        ),
    )
}

/// Root of an increasing function on `[lo, hi]` by bisection.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn numeric_tangent(family: &CostFunction, eps: f64, left: f64) -> f64 {
    let target = (1.0 + eps) * g(family, left);
    let f = |mu: f64| tangent_at(family, mu, left) - target;
    let mut hi = 2.0 * left;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    bisect(f, left, hi)
}

fn numeric_breakpoint(family: &CostFunction, eps: f64, mu: f64) -> f64 {
    let f = |x: f64| tangent_at(family, mu, x) - (1.0 + eps) * g(family, x);
    let mut hi = 2.0 * mu;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    bisect(f, mu, hi)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn closed_form_vs_numeric() -> Outcome {
    // square root: per-step comparison against bisection on the first 50 pieces
    let sqrt = CostFunction::SquareRoot;
    let mut sqrt_dev = 0.0f64;
    let mut compared = 0;
    for (eps, upper) in [(0.01, 1e12), (0.001, 1e4)] {
        let lin = linearize(&sqrt, eps, 1.0, upper).expect("linearize");
        for k in 0..lin.len().min(50) {
            let left = lin.breakpoints()[k];
            let mu = lin.pieces()[k].tangent;
            sqrt_dev = sqrt_dev.max(rel(mu, numeric_tangent(&sqrt, eps, left)));
            sqrt_dev = sqrt_dev.max(rel(lin.breakpoints()[k + 1], numeric_breakpoint(&sqrt, eps, mu)));
            compared += 1;
        }
    }
    let sqrt_ok = sqrt_dev <= 1e-8 && compared >= 50;

    // fractional: closed form must match bisection, or have fallen back with
    // the fallback satisfying both equations
    let frac = CostFunction::Fractional;
    let mut frac_dev = 0.0f64;
    let mut residual = 0.0f64;
    let mut fallbacks = 0;
    let mut terminal_ok = true;
    for eps in [0.1, 0.01, 0.001] {
        let lin = linearize(&frac, eps, 1.0, 1e4).expect("linearize");
        fallbacks += lin.closed_form_fallbacks();
        for k in 0..lin.len() {
            let left = lin.breakpoints()[k];
            let right = lin.breakpoints()[k + 1];
            let mu = lin.pieces()[k].tangent;
            let step3 = rel(tangent_at(&frac, mu, right), (1.0 + eps) * g(&frac, right));
            residual = residual.max(step3);
            if (1.0 + eps) * g(&frac, left) >= 1.0 {
                // no tangent reaches (1 + eps) g(left): terminal piece, must
                // stay under the bound at `left` and be the last one
                terminal_ok &= k + 1 == lin.len()
                    && tangent_at(&frac, mu, left) <= (1.0 + eps) * g(&frac, left) * (1.0 + 1e-12);
                continue;
            }
            let step2 = rel(tangent_at(&frac, mu, left), (1.0 + eps) * g(&frac, left));
            residual = residual.max(step2);
            frac_dev = frac_dev.max(rel(mu, numeric_tangent(&frac, eps, left)));
            frac_dev = frac_dev.max(rel(right, numeric_breakpoint(&frac, eps, mu)));
        }
    }
    let frac_ok = terminal_ok && (frac_dev <= 1e-8 || fallbacks > 0) && residual <= 1e-10;
    outcome(
        sqrt_ok && frac_ok,
        format!(
            "sqrt max rel dev {sqrt_dev:.2e} over {compared} pieces; fractional max rel dev \
             {frac_dev:.2e}, fallbacks {fallbacks}, max equation residual {residual:.2e}"
        ),
    )
}

fn brute_force(d: &[f64], r: &[f64]) -> Vec<(f64, Vec<usize>)> {
    let n = d.len();
    (0u32..1 << n)
        .map(|mask| {
            let sel: Vec<usize> = (0..n).filter(|&j| mask >> j & 1 == 1).collect();
            let sd: f64 = sel.iter().map(|&j| d[j]).sum();
            let sr: f64 = sel.iter().map(|&j| r[j]).sum();
            (sd + sr.sqrt(), sel)
        })
        .collect()
}

fn inner_exactness() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    let mut tie_cases = 0;
    for case in 0..200 {
        let tie_prone = case % 4 == 3;
        let n = 12;
        let (q, u, r): (Vec<f64>, Vec<f64>, Vec<f64>) = if tie_prone {
            let q: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64).collect();
            let u: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64).collect();
            let r: Vec<f64> = (0..n).map(|_| [1.0, 4.0, 9.0][rng.random_range(0..3)]).collect();
            (q, u, r)
        } else {
            let q: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..50.0)).collect();
            let u: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..60.0)).collect();
            let r: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..2000.0)).collect();
            (q, u, r)
        };
        let d: Vec<f64> = q.iter().zip(&u).map(|(a, b)| a - b).collect();
        let pc = PieceConstants { p: 0.0, q, r: r.clone() };
        let got = solve_inner(&pc, &u);

        let all = brute_force(&d, &r);
        let best = all.iter().map(|x| x.0).fold(f64::INFINITY, f64::min);
        let tol = 1e-9 * best.abs().max(1.0);
        let optimal: Vec<&(f64, Vec<usize>)> = all.iter().filter(|x| x.0 <= best + tol).collect();
        let value_ok = (got.value - best).abs() <= tol;
        let selection_ok = if optimal.len() == 1 {
            got.selection == optimal[0].1
        } else {
            // shorter prefix wins ties: fewest customers among optimal sets
            tie_cases += 1;
            let fewest = optimal.iter().map(|x| x.1.len()).min().unwrap_or(0);
            optimal.iter().any(|x| x.1 == got.selection) && got.selection.len() == fewest
        };
        if !(value_ok && selection_ok) {
            mismatches += 1;
        }
    }
    let elapsed = started.elapsed();
    outcome(
        mismatches == 0 && elapsed < Duration::from_secs(5),
        format!("{mismatches} mismatches in 200 cases ({tie_cases} with ties), {elapsed:?} (limit 5 s)"),
    )
}

fn capacity_stationarity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let arrival = rng.random_range(0.5..500.0);
        let w = rng.random_range(50.0..300.0);
        let c = [1.0, 10.0, 100.0][rng.random_range(0..3)];
        let slope = 10f64.powf(rng.random_range(-4.0..0.0));
        let marginal = c * slope;
        let mu = optimal_capacity(arrival, w, marginal);
        let f = |x: f64| marginal * x + w * arrival / (x - arrival);
        let h = 1e-5 * (mu - arrival);
        let derivative = (f(mu + h) - f(mu - h)) / (2.0 * h);
        worst = worst.max(derivative.abs() / marginal);
    }
    outcome(
        worst < 1e-6,
        format!("max |f'(mu*)| / (c g') = {worst:.2e} over 1000 draws (limit 1e-6)"),
    )
}

/// The 50 small instances shared by the sandwich and heuristic checks.
fn small_instances() -> Vec<Instance> {
    let families = builtin_families();
    (0..50u64)
        .map(|k| {
            let family = families[(k % 3) as usize].clone();
            let n = 1 + ((k / 3) % 3) as usize;
            let m = 6 - ((k / 9) % 6) as usize;
            generate_instance(n, m, 1000 + k, family)
        })
        .collect()
}

fn duality_sandwich() -> Outcome {
    let cfg = SolverConfig::default();
    let mut violations = 0;
    let mut iterations = 0;
    for inst in small_instances() {
        let lin = instance_linearization(&inst, &cfg).expect("linearization");
        let (opt, _) = oracle_optimum(&inst, &lin, false).expect("oracle");
        let report = eos_ssd::lagrangian::solve_with(&inst, &lin, &cfg).expect("solve");
        let ub_lin = evaluate(&inst, &report.solution, Opening::Linearized(&lin))
            .expect("feasible")
            .total;
        let slack = 1e-9 * opt;
        for row in &report.trace {
            iterations += 1;
            if row.lower_bound > opt + slack {
                violations += 1;
            }
        }
        if opt > ub_lin + slack {
            violations += 1;
        }
    }
    outcome(
        violations == 0,
        format!("{violations} violations over 50 instances, {iterations} iterations"),
    )
}

fn heuristic_quality() -> Outcome {
    let cfg = SolverConfig::default();
    let (mut within2, mut within5) = (0, 0);
    let mut worst = 0.0f64;
    let mut slowest = Duration::ZERO;
    for inst in small_instances() {
        let lin = instance_linearization(&inst, &cfg).expect("linearization");
        let (opt, _) = oracle_optimum(&inst, &lin, true).expect("oracle");
        let report = solve(&inst, &cfg).expect("solve");
        slowest = slowest.max(report.elapsed);
        let excess = (report.breakdown.total - opt) / opt;
        worst = worst.max(excess);
        within2 += usize::from(excess <= 0.02);
        within5 += usize::from(excess <= 0.05);
    }
    outcome(
        within2 >= 45 && within5 == 50 && slowest < Duration::from_secs(1),
        format!(
            "{within2}/50 within 2%, {within5}/50 within 5%, worst excess {:.3}%, slowest solve {slowest:?}",
            100.0 * worst
        ),
    )
}

/// Solves of the 27-instance suite under each family, shared by the trend
/// and convergence checks.
struct SuiteRuns {
    runs: Vec<(CostFunction, Vec<SolveReport>)>,
}

const SUITE_SEED: u64 = 2012;

impl SuiteRuns {
    fn new() -> Self {
        let cfg = SolverConfig::default();
        let runs = builtin_families()
            .into_iter()
            .map(|family| {
                let reports = generate_suite(&GeneratorConfig::default(), SUITE_SEED, &family)
                    .iter()
                    .map(|entry| solve(&entry.instance, &cfg).expect("solve"))
                    .collect();
                (family, reports)
            })
            .collect();
        SuiteRuns { runs }
    }

    fn mean(&self, family: usize, f: impl Fn(&SolveReport) -> f64) -> f64 {
        let reports = &self.runs[family].1;
        reports.iter().map(f).sum::<f64>() / reports.len() as f64
    }
}

fn scale_trend(suite: &SuiteRuns) -> Outcome {
    let open = |r: &SolveReport| r.solution.open_count() as f64;
    let capacity = |r: &SolveReport| r.solution.average_capacity();
    let waiting = |r: &SolveReport| r.breakdown.shares()[3];
    let (lin, sqrt, frac) = (0, 1, 2);
    let checks = [
        suite.mean(sqrt, open) <= suite.mean(lin, open),
        suite.mean(frac, open) <= suite.mean(lin, open),
        suite.mean(sqrt, capacity) > suite.mean(lin, capacity),
        suite.mean(frac, capacity) > suite.mean(lin, capacity),
        suite.mean(frac, waiting) < suite.mean(lin, waiting),
    ];
    outcome(
        checks.iter().all(|&c| c),
        format!(
            "mean open linear/sqrt/fractional {:.2}/{:.2}/{:.2}, mean capacity {:.1}/{:.1}/{:.1}, \
             mean waiting share {:.2}%/{:.2}%/{:.2}%",
            suite.mean(lin, open),
            suite.mean(sqrt, open),
            suite.mean(frac, open),
            suite.mean(lin, capacity),
            suite.mean(sqrt, capacity),
            suite.mean(frac, capacity),
            suite.mean(lin, waiting),
            suite.mean(sqrt, waiting),
            suite.mean(frac, waiting),
        ),
    )
}

fn convergence(suite: &SuiteRuns) -> Outcome {
    let mut total = 0;
    let mut converged = 0;
    let mut slowest = Duration::ZERO;
    let mut per_family = Vec::new();
    for (family, reports) in &suite.runs {
        let ok = reports.iter().filter(|r| r.gap <= 0.01).count();
        per_family.push(format!("{} {ok}/{}", family.name(), reports.len()));
        converged += ok;
        total += reports.len();
        slowest = slowest.max(reports.iter().map(|r| r.elapsed).max().unwrap_or_default());
    }
    let share = converged as f64 / total as f64;
    outcome(
        share >= 0.9 && slowest < Duration::from_secs(60),
        format!(
            "{converged}/{total} reached gap <= 0.01 ({:.1}%, need 90%; {}), slowest solve {slowest:?}",
            100.0 * share,
            per_family.join(", ")
        ),
    )
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let ssd = env!("CARGO_BIN_EXE_ssd");
    let instance = dir.path().join("inst.json");
    let status = Command::new(ssd)
        .args(["generate", "--facilities", "20", "--customers", "80", "--seed", "9", "--family", "sqrt", "--out"])
        .arg(&instance)
        .status()
        .expect("run ssd generate");
    if !status.success() {
        return outcome(false, "instance generation failed".into());
    }

    let run = |tag: &str, parallel: &str| -> Option<(Vec<u8>, Vec<u8>)> {
        let trace = dir.path().join(format!("{tag}.trace.csv"));
        let report = dir.path().join(format!("{tag}.report.csv"));
        let status = Command::new(ssd)
            .arg("solve")
            .arg(&instance)
            .args(["--no-timing", "--parallel", parallel, "--trace"])
            .arg(&trace)
            .arg("--report")
            .arg(&report)
            .status()
            .ok()?;
        // 0 converged, 2 iteration limit; both produce files
        matches!(status.code(), Some(0 | 2)).then_some(())?;
        Some((std::fs::read(trace).ok()?, std::fs::read(report).ok()?))
    };
    let runs: Vec<_> = [("serial-a", "1"), ("serial-b", "1"), ("par-a", "4"), ("par-b", "4")]
        .iter()
        .map(|(tag, p)| run(tag, p))
        .collect();
    if runs.iter().any(Option::is_none) {
        return outcome(false, "a solve run failed".into());
    }
    let runs: Vec<_> = runs.into_iter().flatten().collect();
    let serial_same = runs[0] == runs[1];
    let parallel_same = runs[2] == runs[3];
    let cross_same = runs[0] == runs[2];
    outcome(
        serial_same && parallel_same && cross_same,
        format!(
            "serial repeat identical: {serial_same}, --parallel 4 repeat identical: {parallel_same}, \
             serial vs parallel identical: {cross_same} ({} trace bytes)",
            runs[0].0.len()
        ),
    )
}
