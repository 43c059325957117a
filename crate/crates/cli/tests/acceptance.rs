//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use percolation_core::experiments::stats::binomial_sigma;
use percolation_core::experiments::{
    azuma_bound, concatenation_sweep, concentration_curve, counterexample_run, estimate_expected_value,
    hyperplane_sweep, ExperimentConfig,
};
use percolation_core::prf::{derive_seed, Prf};
use percolation_core::{
    brute_force_game, reachable_cone, solve, solve_value, Environment, EnvironmentModel, Exact, GameSpec,
    LatticeBox, LatticePoint, PayoffField, PayoffMatrix, Scalar, SquareKind, SquarePlant, SquaresModel, ValueTable,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

/// Deterministic draws for instance generation.
struct Draws {
    seed: u64,
    next: u64,
}

impl Draws {
    fn new(seed: u64) -> Self {
        Draws { seed, next: 0 }
    }

    fn below(&mut self, k: u64) -> u64 {
        self.next += 1;
        Prf::new(self.seed, 99).push(self.next).finish() % k
    }
}

// 1 -------------------------------------------------------------------------

fn oracle_equivalence() -> Verdict {
    let origin = LatticePoint::origin(1);
    let trials = 64;
    let mut bad = 0;
    let mut asymmetric = 0;
    for t in 0..trials {
        let mut d = Draws::new(derive_seed(1, t));
        let steps = (0..4).map(|_| vec![d.below(3) as i64 - 1]).collect();
        let spec = GameSpec::new(1, 2, 2, steps, None).unwrap();
        let support_size = 1 + d.below(3) as usize;
        let support = (0..support_size)
            .map(|_| PayoffMatrix::new(2, 2, (0..4).map(|_| d.below(2) as f64).collect()).unwrap())
            .collect();
        let model = EnvironmentModel::IidTable {
            support,
            probs: vec![1.0 / support_size as f64; support_size],
        };
        let n = 1 + d.below(3) as usize;
        let env = Environment::new(model, derive_seed(2, t)).unwrap();
        let brute = brute_force_game::<Exact, _>(&env, &spec, &origin, n).unwrap();
        let table: ValueTable<Exact> = solve(&env, &spec, &origin, n).unwrap();
        asymmetric += usize::from(brute.maxmin != brute.minmax);
        bad += usize::from(table.value() != brute.maxmin);
    }
    verdict(
        bad == 0 && asymmetric == 0,
        format!("{trials} instances, {bad} solver mismatches, {asymmetric} with maxmin != minmax"),
    )
}

// 2 -------------------------------------------------------------------------

/// Paints every 1-square, then every 0-square except where a 1-square of
/// equal or larger scale was painted, on a dense array over `[lo, hi]^3`.
fn phase_oracle(model: &SquaresModel, seed: u64, lo: i64, hi: i64) -> Vec<u8> {
    let side = (hi - lo + 1) as usize;
    let at = |z: [i64; 3]| -> Option<usize> {
        z.iter()
            .all(|&v| lo <= v && v <= hi)
            .then(|| ((z[0] - lo) as usize * side + (z[1] - lo) as usize) * side + (z[2] - lo) as usize)
    };
    let mut payoff = vec![0u8; side * side * side];
    let mut one_scale = vec![0u32; side * side * side];
    for k in 1..=model.k_max {
        let r = 1i64 << (k - 1);
        for a in lo..=hi {
            for b in lo - r..=hi + r {
                for c in lo - r..=hi + r {
                    if model.is_center(seed, SquareKind::One, k, [a, b, c]) {
                        for db in -r..=r {
                            for dc in -r..=r {
                                if let Some(ix) = at([a, b + db, c + dc]) {
                                    payoff[ix] = 1;
                                    one_scale[ix] = one_scale[ix].max(k);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    for k in 1..=model.k_max {
        let r = 1i64 << (k - 1);
        for a in lo - r..=hi + r {
            for b in lo..=hi {
                for c in lo - r..=hi + r {
                    if model.is_center(seed, SquareKind::Zero, k, [a, b, c]) {
                        for da in -r..=r {
                            for dc in -r..=r {
                                if let Some(ix) = at([a + da, b, c + dc]) {
                                    if one_scale[ix] < k {
                                        payoff[ix] = 0;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    payoff
}

fn phase_equivalence() -> Verdict {
    let (lo, hi) = (-32, 32);
    let region = LatticeBox::from_bounds(&[lo; 3], &[hi; 3]).unwrap();
    let model = SquaresModel::new(4);
    let mut mismatches = 0usize;
    let mut ones = 0usize;
    for s in 0..20 {
        let seed = derive_seed(2024, s);
        let oracle = phase_oracle(&model, seed, lo, hi);
        let env = Environment::with_region(EnvironmentModel::Squares(model.clone()), seed, &region).unwrap();
        for (ix, z) in region.points().enumerate() {
            let g = env.payoff(&z, 0, 0).unwrap();
            mismatches += usize::from(g != f64::from(oracle[ix]));
            ones += usize::from(oracle[ix] == 1);
        }
    }
    verdict(
        mismatches == 0,
        format!("20 seeds x 65^3 points, {mismatches} mismatches ({ones} payoff-1 points)"),
    )
}

// 3 -------------------------------------------------------------------------

fn concatenation() -> Verdict {
    let mut cfg = ExperimentConfig::new(GameSpec::counterexample(), EnvironmentModel::Squares(SquaresModel::new(10)));
    cfg.base_seed = 3;
    cfg.num_seeds = 100;
    let rows = concatenation_sweep(&cfg, &[1, 2, 4, 8, 16]).unwrap();
    let errors = rows.iter().filter(|r| r.outcome.is_err()).count();
    let violations = rows.iter().filter(|r| matches!(&r.outcome, Ok(o) if !o.holds)).count();
    let tight = rows
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok())
        .map(|o| o.lhs - o.rhs)
        .fold(f64::INFINITY, f64::min);
    verdict(
        errors == 0 && violations == 0 && rows.len() == 2500,
        format!("{} cases, {violations} violations, {errors} errors, min slack {tight}", rows.len()),
    )
}

// 4 -------------------------------------------------------------------------

fn hyperplane_increment() -> Verdict {
    let mut cfg = ExperimentConfig::new(GameSpec::counterexample(), EnvironmentModel::Squares(SquaresModel::new(10)));
    cfg.base_seed = 4;
    cfg.num_seeds = 50;
    cfg.horizons = vec![8, 16, 32];
    let rows = hyperplane_sweep(&cfg).unwrap();
    let violations = rows.iter().filter(|r| !r.holds).count();
    // independent recheck of the bound on the recorded values
    let recheck = rows
        .iter()
        .filter(|r| (r.zeroed - r.value).abs() > 1.0 / r.n as f64 + 1e-12)
        .count();
    let worst = rows
        .iter()
        .map(|r| (r.zeroed - r.value).abs() * r.n as f64)
        .fold(0.0, f64::max);
    verdict(
        violations == 0 && recheck == 0 && rows.len() == 50 * (8 + 16 + 32),
        format!("{} (seed, n, h) cases, {violations} violations, max n|v'-v| = {worst}", rows.len()),
    )
}

// 5 -------------------------------------------------------------------------

fn azuma_tail() -> Verdict {
    let mut cfg = ExperimentConfig::new(GameSpec::counterexample(), EnvironmentModel::IidBernoulli { p: 0.5 });
    cfg.base_seed = 5;
    cfg.num_seeds = 400;
    cfg.horizons = vec![64];
    cfg.lambda_grid = vec![0.05, 0.1, 0.2, 0.3];
    let rows = concentration_curve(&cfg).unwrap();
    let mut parts = Vec::new();
    let mut ok = rows.len() == 4;
    for r in &rows {
        let bound = (-(r.lambda * r.lambda) * 64.0 / 8.0).exp();
        let limit = bound + 3.0 * binomial_sigma(bound, 400);
        ok &= r.samples == 400 && r.empirical <= limit && (r.bound - azuma_bound(r.lambda, 64, 1.0)).abs() < 1e-15;
        parts.push(format!("l={}: {} <= {:.4}", r.lambda, r.empirical, limit));
    }
    verdict(ok, parts.join(", "))
}

// 6 -------------------------------------------------------------------------

fn convergence_shape() -> Verdict {
    let mut cfg = ExperimentConfig::new(GameSpec::counterexample(), EnvironmentModel::IidBernoulli { p: 0.5 });
    cfg.base_seed = 6;
    cfg.num_seeds = 200;
    cfg.horizons = vec![8, 16, 32, 64, 128, 256];
    let (_, report) = estimate_expected_value(&cfg).unwrap();
    let diffs = report.differences();
    let (inversions, unexplained) = report.inversions();
    let slope = report.slope.unwrap_or(f64::NAN);
    let means: Vec<String> = report
        .rows
        .iter()
        .map(|r| format!("{}:{:.4}", r.n, r.summary.map_or(f64::NAN, |s| s.mean)))
        .collect();
    let d: Vec<String> = diffs.iter().map(|(n, x, ci)| format!("{n}:{x:.4}+-{ci:.4}")).collect();
    verdict(
        report.is_complete() && inversions <= 1 && unexplained == 0 && slope <= -0.4,
        format!(
            "means [{}], diffs [{}], {inversions} inversions ({unexplained} beyond CI), slope {slope:.3}",
            means.join(" "),
            d.join(" ")
        ),
    )
}

// 7 -------------------------------------------------------------------------

fn planted_bounds(scale: u32, lower: Exact, upper: Exact) -> (bool, String) {
    let mut cfg = ExperimentConfig::new(
        GameSpec::counterexample(),
        EnvironmentModel::Squares(SquaresModel::plants_only(scale, Vec::new())),
    );
    cfg.epsilon = 0.25;
    let rows = counterexample_run(&cfg, scale, true).unwrap();
    let horizon = 1usize << (scale - 2);
    let r = (horizon / 4) as i64;
    let spec = GameSpec::counterexample();
    let origin = LatticePoint::origin(3);
    let exact = |plants: Vec<SquarePlant>| -> Exact {
        let model = EnvironmentModel::Squares(SquaresModel::plants_only(scale, plants));
        let env = Environment::for_cone(model, 0, &spec, &origin, horizon).unwrap();
        solve_value(&env, &spec, &origin, horizon).unwrap()
    };
    let one = rows.iter().find(|x| x.kind == SquareKind::One).unwrap();
    let v1 = exact(vec![SquarePlant { kind: SquareKind::One, scale, center: [r, 0, 0] }]);
    // dual: a band of smaller 1-squares Player 1 could sit on, cut by a
    // complete 0-square Player 2 can reach
    let band: Vec<SquarePlant> = (-2..=2)
        .map(|x| SquarePlant { kind: SquareKind::One, scale: scale - 1, center: [x, 0, 0] })
        .collect();
    let without_zero = exact(band.clone());
    let mut with_zero = band;
    with_zero.push(SquarePlant { kind: SquareKind::Zero, scale, center: [0, r, 0] });
    let v0 = exact(with_zero);
    let ok = one.center == Some([r, 0, 0])
        && one.holds == Some(true)
        && v1 >= lower
        && one.value == Some(v1.to_f64_lossy())
        && v0 <= upper
        && without_zero == Exact::from_integer(1);
    let detail = format!(
        "side {} horizon {horizon}: v(1-square) = {v1} >= {lower}, v(0-square) = {v0} <= {upper} (without it {without_zero})",
        1u64 << scale
    );
    (ok, detail)
}

fn proposition_bounds() -> Verdict {
    let (a, da) = planted_bounds(6, Exact::new(11, 16), Exact::new(5, 16));
    let (b, db) = planted_bounds(7, Exact::new(23, 32), Exact::new(9, 32));
    verdict(a && b, format!("{da}; {db}"))
}

// 8 -------------------------------------------------------------------------

fn bounds_and_monotonicity() -> Verdict {
    let mut out_of_bounds = 0;
    let mut not_monotone = 0;
    let instances = 100;
    for t in 0..instances {
        let mut d = Draws::new(derive_seed(8, t));
        let dim = 1 + d.below(3) as usize;
        let ni = 1 + d.below(3) as usize;
        let nj = 1 + d.below(3) as usize;
        let transition = (0..ni * nj)
            .map(|_| (0..dim).map(|_| d.below(5) as i64 - 2).collect())
            .collect();
        let spec = GameSpec::new(dim, ni, nj, transition, None).unwrap();
        let k = 1 + d.below(3) as usize;
        let base: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..ni * nj).map(|_| d.below(9) as f64 - 4.0).collect())
            .collect();
        let bump: Vec<f64> = (0..ni * nj).map(|_| d.below(3) as f64).collect();
        let raised: Vec<Vec<f64>> = base
            .iter()
            .map(|m| m.iter().zip(&bump).map(|(g, b)| g + b).collect())
            .collect();
        let model = |s: &[Vec<f64>]| EnvironmentModel::IidTable {
            support: s.iter().map(|m| PayoffMatrix::new(ni, nj, m.clone()).unwrap()).collect(),
            probs: vec![1.0 / k as f64; k],
        };
        let n = 1 + d.below(10) as usize;
        let seed = derive_seed(80, t);
        let origin = LatticePoint::origin(dim);
        let low = Environment::new(model(&base), seed).unwrap();
        let high = Environment::new(model(&raised), seed).unwrap();
        let v: Exact = solve_value(&low, &spec, &origin, n).unwrap();
        let w: Exact = solve_value(&high, &spec, &origin, n).unwrap();
        let cone = reachable_cone(&spec, &origin, n).unwrap();
        let mut g = vec![0.0; ni * nj];
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for layer in cone.layers() {
            for z in layer.states() {
                low.stage_payoffs(&z, &mut g);
                lo = g.iter().fold(lo, |a, &b| a.min(b));
                hi = g.iter().fold(hi, |a, &b| a.max(b));
            }
        }
        let (lo, hi) = (Exact::from_integer(lo as i64), Exact::from_integer(hi as i64));
        out_of_bounds += usize::from(v < lo || v > hi);
        not_monotone += usize::from(w < v);
    }
    verdict(
        out_of_bounds == 0 && not_monotone == 0,
        format!("{instances} instances, {out_of_bounds} outside [min g, max g], {not_monotone} monotonicity failures"),
    )
}

// 9 -------------------------------------------------------------------------

const DETERMINISM_CONFIG: &str = r#"
[game]
dim = 3
actions = [3, 3]
transition = [
    [[-1, -1, 1], [-1, 0, 1], [-1, 1, 1]],
    [[0, -1, 1], [0, 0, 1], [0, 1, 1]],
    [[1, -1, 1], [1, 0, 1], [1, 1, 1]],
]
direction = [0, 0, 1]

[model]
kind = "squares"
k_max = 7

[experiment]
base_seed = 9
num_seeds = 12
horizons = [4, 8, 16]
lambda = [0.05, 0.1, 0.2, 0.3]
cone_min = true
"#;

fn run_binary(args: &[&str], out: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_percolation"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
        .status
        .code()
        .unwrap_or(-1)
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("det.toml");
    std::fs::write(&cfg, DETERMINISM_CONFIG).unwrap();
    let cfg = cfg.to_str().unwrap();
    let commands: [(&[&str], &[&str]); 5] = [
        (&["expect", "--config", cfg], &["runs.csv", "convergence.csv"]),
        (&["concentrate", "--config", cfg], &["runs.csv", "concentration.csv"]),
        (&["concat-check", "--config", cfg, "--pairs", "1,2,4,8"], &["concat.csv"]),
        (&["counterexample", "--config", cfg, "--scale", "5", "--scan", "3,4"], &["counterexample.csv", "witness.csv"]),
        (&["env-dump", "--config", cfg, "--lo=-8,-8,0", "--hi", "8,8,8"], &["env.csv"]),
    ];
    let variants: [&[&str]; 4] = [&[], &[], &["--threads", "1"], &["--threads", "3"]];
    let mut compared = 0;
    let mut differing = Vec::new();
    let mut failed_runs = 0;
    for (args, files) in commands {
        let mut reference: Option<Vec<Vec<u8>>> = None;
        for (v, extra) in variants.iter().enumerate() {
            let out = dir.path().join(format!("{}-{v}", args[0]));
            let full: Vec<&str> = args.iter().chain(extra.iter()).copied().collect();
            failed_runs += usize::from(run_binary(&full, &out) != 0);
            let contents: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(out.join(f)).unwrap_or_default()).collect();
            match &reference {
                None => reference = Some(contents),
                Some(r) => {
                    compared += files.len();
                    if *r != contents {
                        differing.push(format!("{} {:?}", args[0], extra));
                    }
                }
            }
        }
    }
    verdict(
        differing.is_empty() && failed_runs == 0,
        format!(
            "{compared} file comparisons (repeat, --threads 1, --threads 3), {failed_runs} failed runs, differing: {differing:?}"
        ),
    )
}

type Criterion = (&'static str, &'static str, Option<Duration>, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 9] = [
        ("1", "oracle equivalence", Some(Duration::from_secs(10)), oracle_equivalence),
        ("2", "phase-procedure equivalence", Some(Duration::from_secs(60)), phase_equivalence),
        ("3", "concatenation inequality", Some(Duration::from_secs(300)), concatenation),
        ("4", "hyperplane increment", Some(Duration::from_secs(300)), hyperplane_increment),
        ("5", "azuma tail", Some(Duration::from_secs(600)), azuma_tail),
        ("6", "convergence rate shape", Some(Duration::from_secs(1800)), convergence_shape),
        ("7", "conditional value bounds", Some(Duration::from_secs(120)), proposition_bounds),
        ("8", "value bounds and monotonicity", Some(Duration::from_secs(60)), bounds_and_monotonicity),
        ("9", "determinism", None, determinism),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (id, name, budget, check) in criteria {
        if !only.is_empty() && !only.iter().any(|o| o == id) {
            continue;
        }
        let started = Instant::now();
        let v = check();
        let elapsed = started.elapsed();
        let in_time = budget.is_none_or(|b| elapsed <= b);
        let pass = v.pass && in_time;
        failures += usize::from(!pass);
        let budget_note = budget.map(|b| format!(" / {}s", b.as_secs())).unwrap_or_default();
        println!(
            "[{}] {id}. {name}: {} ({:.1}s{budget_note})",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
