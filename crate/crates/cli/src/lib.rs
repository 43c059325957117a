//! Command-line driver: parses a TOML configuration, runs one experiment and
//! writes CSV tables plus a JSON summary into the output directory.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgAction, Parser, Subcommand};
use percolation_core::experiments::{
    concatenation_sweep, concentration_from_records, convergence_report, counterexample_run,
    property_witness_scan, run_records, ExperimentConfig,
};
use percolation_core::prf::{derive_seed, stream, Prf};
use percolation_core::{
    brute_force_game, require_oriented, solve, solve_value, Environment, EnvironmentModel, Exact, GameSpec,
    LatticeBox, LatticePoint, PayoffMatrix, ValueTable,
};
use serde_json::json;

use config::{ConfigFile, Loaded, ModelSection};
use output::*;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("{0}")]
    Core(#[from] percolation_core::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::CheckFailed(_) => 3,
            _ => 1,
        }
    }
}

const EXIT_HELP: &str = "\
Exit codes:
  0  success
  1  runtime failure (i/o, solver budget, ...)
  2  configuration or usage error
  3  a checked inequality failed (oracle-check, concat-check, counterexample)

Outputs (written to --out):
  runs.csv            seed,n,value,min_cone_value,wall_ms   (expect, concentrate)
  convergence.csv     n,mean,std,ci95,diff_to_half          (expect)
  concentration.csv   n,lambda,empirical,bound              (concentrate)
  concat.csv          seed,m,n,lhs,rhs,min_cone_value,holds (concat-check)
  counterexample.csv  seed,scale,kind,center_x,center_y,center_h,dist,horizon,value,bound,holds
  witness.csv         scale,radius_b,radius_c,samples,b_freq,c_freq,joint_freq,product,correlation
  oracle.csv          trial,n,solver,maxmin,minmax,match   (oracle-check)
  env.csv             x,y,h,payoff                          (env-dump)
  summary.json        config echo, content hash, results, run metadata
The seed column is the run index; run k uses the base seed mixed with k.
wall_ms is 0 unless --timing is given, so that repeated runs produce identical files.

Config file (TOML): [game] dim, actions = [|I|, |J|], transition = rows of q(i, j) vectors,
optional direction and origin; [model] kind = \"iid-bernoulli\" (p) | \"iid-table\" (support, probs)
| \"squares\" (k_max, ambient, plants = [{ kind = \"one\"|\"zero\", scale, center }]);
[experiment] base_seed, num_seeds, horizons, lambda, epsilon, cone_min. Unknown keys are errors.";

#[derive(Debug, Parser)]
#[command(name = "percolation", version, about = "Exact solver and Monte Carlo experiments for percolation games", after_help = EXIT_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Horizon; replaces the configured horizon list.
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long = "num-seeds", global = true)]
    num_seeds: Option<usize>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Largest square scale (squares model only).
    #[arg(long = "k-max", global = true)]
    k_max: Option<u32>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Record per-run wall times in runs.csv.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Debug, Clone, Subcommand)]
enum Command {
    /// Solve one game from the origin with the environment of run 0.
    Solve {
        /// Write the full value table in binary form.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Compare the solver with strategy enumeration on small random games.
    OracleCheck {
        #[arg(long, default_value_t = 50)]
        trials: usize,
    },
    /// Estimate E(v_n) per horizon with confidence intervals.
    Expect {
        /// Use the non-oriented up/down, left/right game (exploratory only).
        #[arg(long)]
        benchmark: bool,
    },
    /// Tail frequencies of |v_n - E(v_n)| against the Azuma bound.
    Concentrate,
    /// Check v_{m+n}(m+n) >= m v_m + n min v_n over the stage-(m+1) cone.
    ConcatCheck {
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16")]
        pairs: Vec<usize>,
    },
    /// Value bounds near complete squares of a given scale.
    Counterexample {
        #[arg(long)]
        scale: u32,
        /// Plant a 1-square at (r, 0, 0) and a 0-square at (0, r, 0).
        #[arg(long)]
        planted: bool,
        /// Also tabulate witness-event frequencies at these scales.
        #[arg(long, value_delimiter = ',')]
        scan: Vec<u32>,
    },
    /// Dump payoffs of run 0's environment over a box.
    EnvDump {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        lo: Vec<i64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        hi: Vec<i64>,
        #[arg(long, value_delimiter = ',', default_value = "0,0")]
        action: Vec<usize>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve { .. } => "solve",
            Command::OracleCheck { .. } => "oracle-check",
            Command::Expect { .. } => "expect",
            Command::Concentrate => "concentrate",
            Command::ConcatCheck { .. } => "concat-check",
            Command::Counterexample { .. } => "counterexample",
            Command::EnvDump { .. } => "env-dump",
        }
    }
}

struct Outcome {
    line: String,
    outputs: Vec<PathBuf>,
    results: serde_json::Value,
    failure: Option<String>,
}

/// Runs the CLI and returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.threads {
        Some(0) => Err(CliError::Config("--threads must be at least 1".into())),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Io(format!("thread pool: {e}")))?
            .install(|| dispatch(&cli)),
        None => dispatch(&cli),
    }
}

fn apply_overrides(cli: &Cli, file: &mut ConfigFile) -> Result<(), CliError> {
    let e = &mut file.experiment;
    if let Some(s) = cli.seed {
        e.base_seed = s;
    }
    if let Some(n) = cli.n {
        e.horizons = vec![n];
    }
    if let Some(k) = cli.num_seeds {
        e.num_seeds = k;
    }
    if let Some(eps) = cli.epsilon {
        e.epsilon = eps;
    }
    if let Some(k) = cli.k_max {
        match &mut file.model {
            ModelSection::Squares { k_max, .. } => *k_max = k,
            _ => return Err(CliError::Config("--k-max applies to the squares model only".into())),
        }
    }
    if let Command::ConcatCheck { seeds: Some(s), .. } = &cli.command {
        file.experiment.num_seeds = *s;
    }
    Ok(())
}

fn load(cli: &Cli) -> Result<Option<Loaded>, CliError> {
    let Some(path) = &cli.config else {
        return Ok(None);
    };
    let mut file = ConfigFile::read(path)?;
    apply_overrides(cli, &mut file)?;
    if let Command::Expect { benchmark: true } = cli.command {
        let mut bench = ConfigFile::from_spec(&GameSpec::benchmark_2d(), file.model.clone());
        bench.experiment = file.experiment.clone();
        file = bench;
    }
    file.load().map(Some)
}

fn require_config(loaded: Option<Loaded>, command: &str) -> Result<Loaded, CliError> {
    loaded.ok_or_else(|| CliError::Config(format!("{command} needs --config")))
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let started = Instant::now();
    let name = cli.command.name();
    let loaded = load(cli)?;
    std::fs::create_dir_all(&cli.out).map_err(|e| CliError::Io(format!("{}: {e}", cli.out.display())))?;
    let outcome = match &cli.command {
        Command::OracleCheck { trials } => oracle_check(cli, loaded.as_ref(), *trials)?,
        cmd => {
            let loaded = require_config(loaded.clone(), name)?;
            if cli.verbose > 0 {
                eprintln!(
                    "{name}: {} seeds, horizons {:?}, {} threads",
                    loaded.experiment.num_seeds,
                    loaded.experiment.horizons,
                    rayon::current_num_threads()
                );
            }
            let cfg = &loaded.experiment;
            match cmd {
                Command::Solve { dump } => solve_cmd(cfg, dump.as_deref())?,
                Command::Expect { benchmark } => expect(cli, cfg, *benchmark)?,
                Command::Concentrate => concentrate(cli, cfg)?,
                Command::ConcatCheck { pairs, .. } => concat_check(cli, cfg, pairs)?,
                Command::Counterexample { scale, planted, scan } => counterexample(cli, cfg, *scale, *planted, scan)?,
                Command::EnvDump { lo, hi, action } => env_dump(cli, cfg, lo, hi, action)?,
                Command::OracleCheck { .. } => unreachable!(),
            }
        }
    };
    let summary_path = cli.out.join("summary.json");
    let summary = Summary {
        command: name,
        config: loaded.as_ref().map(|l| &l.file),
        hash_extra: format!("\n# {:?}\n", cli.command),
        results: outcome.results,
        outputs: outcome.outputs.clone(),
        started,
    };
    summary.write(&summary_path)?;
    println!("{}", outcome.line);
    for p in outcome.outputs.iter().chain(std::iter::once(&summary_path)) {
        println!("  wrote {}", p.display());
    }
    match outcome.failure {
        Some(msg) => Err(CliError::CheckFailed(msg)),
        None => Ok(()),
    }
}

fn horizon(cfg: &ExperimentConfig) -> usize {
    *cfg.horizons.last().expect("validated horizons")
}

fn solve_cmd(cfg: &ExperimentConfig, dump: Option<&Path>) -> Result<Outcome, CliError> {
    let n = horizon(cfg);
    let env = cfg.environment(0, n)?;
    let (value, states) = match dump {
        Some(path) => {
            let t: ValueTable<f64> = solve(&env, &cfg.spec, &cfg.origin, n)?;
            write_dump(path, &t)?;
            (t.value(), Some(t.total_states()))
        }
        None => (solve_value::<f64, _>(&env, &cfg.spec, &cfg.origin, n)?, None),
    };
    Ok(Outcome {
        line: format!("v_{n}({}) = {}", cfg.origin, num(value)),
        outputs: dump.map(Path::to_path_buf).into_iter().collect(),
        results: json!({ "n": n, "seed": cfg.seed(0), "value": value, "total_states": states }),
        failure: None,
    })
}

/// A random one-dimensional game with two actions per player, {0, 1}
/// payoffs and horizon at most 3.
fn random_instance(base: u64, t: usize) -> (GameSpec, EnvironmentModel, u64, usize) {
    let seed = derive_seed(base, t as u64);
    let draw = |slot: u64| Prf::new(seed, stream::RUN_SEED).push(slot).finish();
    let steps = (0..4).map(|k| vec![(draw(k) % 3) as i64 - 1]).collect();
    let spec = GameSpec::new(1, 2, 2, steps, None).expect("valid random game");
    let support = (0..2)
        .map(|s| {
            let bits = draw(10 + s);
            PayoffMatrix::new(2, 2, (0..4).map(|b| ((bits >> b) & 1) as f64).collect()).expect("2x2")
        })
        .collect();
    let model = EnvironmentModel::IidTable {
        support,
        probs: vec![0.5, 0.5],
    };
    (spec, model, seed, 1 + (draw(20) % 3) as usize)
}

fn oracle_check(cli: &Cli, loaded: Option<&Loaded>, trials: usize) -> Result<Outcome, CliError> {
    let base = loaded.map(|l| l.experiment.base_seed).or(cli.seed).unwrap_or(1);
    let mut rows = Vec::with_capacity(trials);
    let mut mismatches = 0;
    for t in 0..trials {
        let (spec, model, seed, n) = match loaded {
            Some(l) => {
                let cfg = &l.experiment;
                let n = cfg.horizons[t % cfg.horizons.len()];
                (cfg.spec.clone(), cfg.model.clone(), cfg.seed(t), n)
            }
            None => random_instance(base, t),
        };
        let origin = LatticePoint::origin(spec.dim());
        let env = Environment::new(model, seed)?;
        let brute = brute_force_game::<Exact, _>(&env, &spec, &origin, n)?;
        let solved: ValueTable<Exact> = solve(&env, &spec, &origin, n)?;
        let ok = brute.maxmin == brute.minmax && solved.value() == brute.maxmin;
        mismatches += usize::from(!ok);
        rows.push(vec![
            t.to_string(),
            n.to_string(),
            solved.value().to_string(),
            brute.maxmin.to_string(),
            brute.minmax.to_string(),
            ok.to_string(),
        ]);
    }
    let path = write_csv(
        &cli.out.join("oracle.csv"),
        &["trial", "n", "solver", "maxmin", "minmax", "match"],
        rows,
    )?;
    Ok(Outcome {
        line: format!("oracle-check: {} of {trials} instances match exactly", trials - mismatches),
        outputs: vec![path],
        results: json!({ "trials": trials, "mismatches": mismatches }),
        failure: (mismatches > 0).then(|| format!("{mismatches} oracle mismatches")),
    })
}

fn expect(cli: &Cli, cfg: &ExperimentConfig, benchmark: bool) -> Result<Outcome, CliError> {
    let records = run_records(cfg)?;
    let report = convergence_report(&cfg.horizons, &records);
    let runs = write_csv(&cli.out.join("runs.csv"), &RUNS_HEADER, runs_rows(&records, cli.timing))?;
    let conv = write_csv(&cli.out.join("convergence.csv"), &CONVERGENCE_HEADER, convergence_rows(&report))?;
    let (inv, unexplained) = report.inversions();
    let failed: usize = report.rows.iter().map(|r| r.failed).sum();
    let mut line = format!(
        "expect: {} runs, log-log slope {}, {inv} inversions ({unexplained} beyond CI)",
        records.len(),
        opt(report.slope)
    );
    if failed > 0 {
        line.push_str(&format!(", {failed} runs failed"));
    }
    if benchmark {
        line.push_str(" [exploratory benchmark game, no convergence claim]");
    }
    Ok(Outcome {
        line,
        outputs: vec![runs, conv],
        results: json!({
            "slope": report.slope,
            "inversions": inv,
            "unexplained_inversions": unexplained,
            "failed_runs": failed,
            "complete": report.is_complete(),
            "means": report.rows.iter().map(|r| r.summary.map(|s| s.mean)).collect::<Vec<_>>(),
        }),
        failure: None,
    })
}

fn concentrate(cli: &Cli, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let records = run_records(cfg)?;
    let rows = concentration_from_records(&records, &cfg.horizons, &cfg.lambda_grid, cfg.model.sup_norm());
    let runs = write_csv(&cli.out.join("runs.csv"), &RUNS_HEADER, runs_rows(&records, cli.timing))?;
    let conc = write_csv(&cli.out.join("concentration.csv"), &CONCENTRATION_HEADER, concentration_rows(&rows))?;
    let flagged: Vec<_> = rows.iter().filter(|r| r.flagged).map(|r| json!({"n": r.n, "lambda": r.lambda})).collect();
    Ok(Outcome {
        line: format!(
            "concentrate: {} grid points, {} above bound + 3 sigma",
            rows.len(),
            flagged.len()
        ),
        outputs: vec![runs, conc],
        results: json!({ "grid_points": rows.len(), "flagged": flagged }),
        failure: None,
    })
}

fn concat_check(cli: &Cli, cfg: &ExperimentConfig, pairs: &[usize]) -> Result<Outcome, CliError> {
    require_oriented(&cfg.spec).map_err(|e| CliError::Config(format!("concat-check: {e}")))?;
    if pairs.is_empty() || pairs.contains(&0) {
        return Err(CliError::Config("--pairs must list positive horizons".into()));
    }
    let rows = concatenation_sweep(cfg, pairs)?;
    let path = write_csv(&cli.out.join("concat.csv"), &CONCAT_HEADER, concat_rows(&rows))?;
    let violations = rows.iter().filter(|r| matches!(&r.outcome, Ok(o) if !o.holds)).count();
    let errors = rows.iter().filter(|r| r.outcome.is_err()).count();
    let outcome = Outcome {
        line: format!(
            "concat-check: {} cases, {violations} violations, {errors} solver errors",
            rows.len()
        ),
        outputs: vec![path],
        results: json!({ "cases": rows.len(), "violations": violations, "errors": errors }),
        failure: (violations > 0).then(|| format!("{violations} concatenation violations")),
    };
    if errors > 0 && violations == 0 {
        let first = rows.iter().find_map(|r| r.outcome.as_ref().err()).expect("an error row");
        println!("{}", outcome.line);
        return Err(CliError::Core(first.clone()));
    }
    Ok(outcome)
}

fn counterexample(
    cli: &Cli,
    cfg: &ExperimentConfig,
    scale: u32,
    planted: bool,
    scan: &[u32],
) -> Result<Outcome, CliError> {
    if cfg.model.as_squares().is_none() {
        return Err(CliError::Config("counterexample needs the squares model".into()));
    }
    let rows = counterexample_run(cfg, scale, planted)?;
    let mut outputs = vec![write_csv(
        &cli.out.join("counterexample.csv"),
        &COUNTEREXAMPLE_HEADER,
        counterexample_rows(&rows),
    )?];
    if !scan.is_empty() {
        let w = property_witness_scan(cfg, scan)?;
        outputs.push(write_csv(&cli.out.join("witness.csv"), &WITNESS_HEADER, witness_rows(&w))?);
    }
    let witnesses = rows.iter().filter(|r| r.holds.is_some()).count();
    let violations = rows.iter().filter(|r| r.holds == Some(false)).count();
    Ok(Outcome {
        line: format!(
            "counterexample: scale {scale}, {witnesses} witnesses in {} searches, {violations} bound violations",
            rows.len()
        ),
        outputs,
        results: json!({ "scale": scale, "planted": planted, "witnesses": witnesses, "violations": violations }),
        failure: (violations > 0).then(|| format!("{violations} value bounds violated")),
    })
}

fn env_dump(cli: &Cli, cfg: &ExperimentConfig, lo: &[i64], hi: &[i64], action: &[usize]) -> Result<Outcome, CliError> {
    if cfg.spec.dim() != 3 || lo.len() != 3 || hi.len() != 3 {
        return Err(CliError::Config("env-dump needs a three-dimensional game and --lo/--hi with 3 coordinates".into()));
    }
    let &[i, j] = action else {
        return Err(CliError::Config("--action takes two indices i,j".into()));
    };
    if i >= cfg.spec.num_actions_p1() || j >= cfg.spec.num_actions_p2() {
        return Err(CliError::Config(format!("--action {i},{j} outside the action sets")));
    }
    let region = LatticeBox::from_bounds(lo, hi).map_err(|e| CliError::Config(format!("--lo/--hi: {e}")))?;
    let env = Environment::with_region(cfg.model.clone(), cfg.seed(0), &region)?;
    let mut rows = Vec::with_capacity(region.volume());
    for z in region.points() {
        let g = env.payoff(&z, i, j)?;
        rows.push(vec![z[0].to_string(), z[1].to_string(), z[2].to_string(), num(g)]);
    }
    let path = write_csv(&cli.out.join("env.csv"), &ENV_HEADER, rows)?;
    Ok(Outcome {
        line: format!("env-dump: {} points", region.volume()),
        outputs: vec![path],
        results: json!({ "points": region.volume(), "seed": cfg.seed(0) }),
        failure: None,
    })
}
