//! Command-line front end.
//!
//! Exit codes: 0 success, 1 search budget exhausted (or a check failed), 2 usage error,
//! 3 input error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use godel_trick::bench::{export_curve, run_benchmark, InstanceFilter, SolveRun};
use godel_trick::formula::{parse_dimacs_bytes, parse_formula};
use godel_trick::generate::{flat_graph_colouring, satisfiable_ksat, write_instances};
use godel_trick::noise::NoiseKind;
use godel_trick::oracle::{mc_implicit_prob, prob_logic_exact};
use godel_trick::solver::{solve, Semantics, SolveConfig};
use godel_trick::verify;
use godel_trick::{LogitVector, NoiseModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_UNSOLVED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "godel", version, about = "Gödel Trick SAT solver and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one DIMACS file.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run every matching DIMACS file in a directory and report S and B.
    Bench {
        dir: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Use only the first N files (natural order).
        #[arg(long)]
        limit: Option<usize>,
        /// Glob over file names.
        #[arg(long, default_value = "*.cnf")]
        pattern: String,
    },
    /// Run the randomised property suites.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of cases per suite (statistical suites are scaled down accordingly).
        #[arg(long, default_value_t = 1000)]
        cases: usize,
    },
    /// Compare exact and Monte-Carlo probabilities of a formula given as an s-expression.
    Prob {
        file: PathBuf,
        /// Comma-separated probabilities per variable, in order of first appearance.
        #[arg(long, value_delimiter = ',')]
        probs: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = NoiseArg::Logistic)]
        noise: NoiseArg,
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        noise_a: f64,
        #[arg(long, default_value_t = 1.0)]
        noise_b: f64,
        #[arg(long, default_value_t = 1.0)]
        noise_scale: f64,
        #[arg(long, default_value_t = 100_000)]
        draws: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a generated instance family as DIMACS files.
    Generate {
        #[arg(value_enum)]
        family: Family,
        dir: PathBuf,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Family {
    /// Satisfiable uniform random 3-SAT, 20 variables, 91 clauses.
    Uf20,
    /// Flat graph colouring, 30 vertices, 60 edges, 3 colours.
    Flat30,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SemanticsArg {
    Gt,
    Godel,
    Product,
    Lukasiewicz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NoiseArg {
    Uniform,
    Logistic,
    Gumbel,
    None,
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[arg(long, value_enum, default_value_t = SemanticsArg::Gt)]
    semantics: SemanticsArg,
    /// Defaults to uniform for gt and none otherwise.
    #[arg(long, value_enum)]
    noise: Option<NoiseArg>,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    noise_a: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    noise_b: f64,
    #[arg(long, default_value_t = 1.0)]
    noise_scale: f64,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 50_000)]
    epochs: u64,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 1.0)]
    init_range: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    granularity: u64,
    /// Keep stepping after a sample is solved.
    #[arg(long)]
    keep_going: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the progress curve as CSV.
    #[arg(long)]
    curve: Option<PathBuf>,
}

fn noise_kind(n: NoiseArg) -> NoiseKind {
    match n {
        NoiseArg::Uniform => NoiseKind::Uniform,
        NoiseArg::Logistic => NoiseKind::Logistic,
        NoiseArg::Gumbel => NoiseKind::Gumbel,
        NoiseArg::None => NoiseKind::None,
    }
}

impl SolverArgs {
    fn config(&self) -> Result<SolveConfig, String> {
        let semantics = match self.semantics {
            SemanticsArg::Gt => Semantics::Gt,
            SemanticsArg::Godel => Semantics::Godel,
            SemanticsArg::Product => Semantics::Product,
            SemanticsArg::Lukasiewicz => Semantics::Lukasiewicz,
        };
        let noise = self.noise.unwrap_or(if semantics == Semantics::Gt { NoiseArg::Uniform } else { NoiseArg::None });
        let noise = noise_kind(noise)
            .with_params(self.noise_scale, self.noise_a, self.noise_b)
            .map_err(|e| e.to_string())?;
        let config = SolveConfig {
            semantics,
            noise,
            samples: self.samples,
            max_epochs: self.epochs,
            learning_rate: self.lr,
            init_range: self.init_range,
            master_seed: self.seed,
            stop_on_solve: !self.keep_going,
            progress_granularity: self.granularity,
        };
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn fail(&mut self, code: i32, msg: impl std::fmt::Display) -> i32 {
        let _ = writeln!(self.err, "error: {msg}");
        code
    }

    fn emit(&mut self, json: &str, dest: Option<&Path>) -> Result<(), String> {
        match dest {
            Some(p) => std::fs::write(p, format!("{json}\n")).map_err(|e| format!("{}: {e}", p.display())),
            None => writeln!(self.out, "{json}").map_err(|e| e.to_string()),
        }
    }
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, String> {
    match threads {
        None => Ok(f()),
        Some(0) => Err("--threads must be at least 1".into()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| e.to_string())?;
            Ok(pool.install(f))
        }
    }
}

/// Runs the tool on `argv` (including the program name), writing to the given streams.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let mut io = Io { out, err };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK { write!(io.out, "{rendered}") } else { write!(io.err, "{rendered}") };
            return code;
        }
    };
    match cli.command {
        Command::Solve { file, solver, output } => cmd_solve(&mut io, &file, &solver, &output),
        Command::Bench { dir, solver, output, limit, pattern } => {
            cmd_bench(&mut io, &dir, &solver, &output, InstanceFilter { pattern, limit })
        }
        Command::Verify { seed, cases } => cmd_verify(&mut io, seed, cases),
        Command::Prob { file, probs, noise, noise_a, noise_b, noise_scale, draws, seed } => {
            let model = match noise_kind(noise).with_params(noise_scale, noise_a, noise_b) {
                Ok(m) if !m.is_none() => m,
                Ok(_) => return io.fail(EXIT_USAGE, "prob needs a noise model"),
                Err(e) => return io.fail(EXIT_USAGE, e),
            };
            cmd_prob(&mut io, &file, probs, &model, draws, seed)
        }
        Command::Generate { family, dir, count, seed } => cmd_generate(&mut io, family, &dir, count, seed),
    }
}

fn cmd_solve(io: &mut Io, file: &Path, solver: &SolverArgs, output: &OutputArgs) -> i32 {
    let config = match solver.config() {
        Ok(c) => c,
        Err(e) => return io.fail(EXIT_USAGE, e),
    };
    let cnf = match std::fs::read(file).map_err(|e| e.to_string()).and_then(|b| parse_dimacs_bytes(&b).map_err(|e| e.to_string())) {
        Ok(c) => c,
        Err(e) => return io.fail(EXIT_INPUT, format!("{}: {e}", file.display())),
    };
    let start = Instant::now();
    let report = match with_threads(solver.threads, || solve(&cnf, &config)) {
        Ok(Ok(r)) => r,
        Ok(Err(e)) => return io.fail(EXIT_USAGE, e),
        Err(e) => return io.fail(EXIT_USAGE, e),
    };
    let run = SolveRun::new(&file.display().to_string(), &config, report, start.elapsed().as_secs_f64());
    let solved = run.report.is_solved();
    if let Err(e) = write_outputs(io, run.to_json().map_err(|e| e.to_string()), &run.report.curve, output) {
        return io.fail(EXIT_INPUT, e);
    }
    if solved {
        EXIT_OK
    } else {
        EXIT_UNSOLVED
    }
}

fn write_outputs(
    io: &mut Io,
    json: Result<String, String>,
    curve: &[godel_trick::solver::CurvePoint],
    output: &OutputArgs,
) -> Result<(), String> {
    io.emit(&json?, output.out.as_deref())?;
    if let Some(path) = &output.curve {
        let csv = export_curve(curve).map_err(|e| e.to_string())?;
        std::fs::write(path, csv).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(())
}

fn cmd_bench(io: &mut Io, dir: &Path, solver: &SolverArgs, output: &OutputArgs, filter: InstanceFilter) -> i32 {
    let config = match solver.config() {
        Ok(c) => c,
        Err(e) => return io.fail(EXIT_USAGE, e),
    };
    let report = match with_threads(solver.threads, || run_benchmark(dir, &config, &filter)) {
        Ok(Ok(r)) => r,
        Ok(Err(godel_trick::bench::BenchError::Pattern { pattern, reason })) => {
            return io.fail(EXIT_USAGE, format!("invalid pattern '{pattern}': {reason}"))
        }
        Ok(Err(e)) => return io.fail(EXIT_INPUT, e),
        Err(e) => return io.fail(EXIT_USAGE, e),
    };
    for f in &report.failures {
        let _ = writeln!(io.err, "warning: {}: {}", f.path, f.error);
    }
    if let Err(e) = write_outputs(io, report.to_json().map_err(|e| e.to_string()), &report.curve, output) {
        return io.fail(EXIT_INPUT, e);
    }
    let _ = writeln!(
        io.err,
        "{} instances, S = {:.1}%, B = {:.1}%, {:.2e} steps/s",
        report.instances.len(),
        report.s_percent,
        report.b_percent,
        report.timing.steps_per_second
    );
    if report.instances.is_empty() {
        return io.fail(EXIT_INPUT, format!("no usable instances in {}", dir.display()));
    }
    if report.solved_instances() == report.instances.len() {
        EXIT_OK
    } else {
        EXIT_UNSOLVED
    }
}

fn cmd_verify(io: &mut Io, seed: u64, cases: usize) -> i32 {
    let cases = cases.max(1);
    let statistical = (cases / 5).max(1);
    let draws = 100 * cases as u64;
    let (agree, freq) = verify::gumbel_max_suite(seed, (cases / 10).max(1), draws, 3.0);
    let reports = vec![
        (verify::homomorphism_suite(seed, cases), 1.0),
        (verify::sparse_gradient_suite(seed, cases), 1.0),
        (verify::implicit_product_suite(seed, cases), 1.0),
        (verify::active_clause_suite(seed, cases), 1.0),
        (verify::representation_suite(seed, cases / 2 + 1), 1.0),
        (verify::candidate_condition_suite(seed, cases), 1.0),
        (
            verify::implicit_probability_suite(
                seed,
                statistical,
                draws,
                &[NoiseModel::STANDARD_LOGISTIC, NoiseModel::SYMMETRIC_UNIFORM],
                4.0,
            ),
            0.99,
        ),
        (verify::shift_suite(seed, 100 * cases), 1.0),
        (agree, 1.0),
        (freq, 0.95),
    ];
    let mut ok = true;
    for (r, required) in &reports {
        let pass = r.cases > 0 && r.pass_rate() >= *required;
        ok &= pass;
        let _ = writeln!(io.out, "[{}] {r}", if pass { "PASS" } else { "FAIL" });
    }
    for (name, pass) in [
        ("excluded path example", verify::excluded_path_example()),
        ("subsumed clause example", verify::subsumed_clause_example()),
    ] {
        ok &= pass;
        let _ = writeln!(io.out, "[{}] {name}", if pass { "PASS" } else { "FAIL" });
    }
    if ok {
        EXIT_OK
    } else {
        EXIT_UNSOLVED
    }
}

#[derive(Serialize)]
struct ProbReport {
    formula: String,
    variables: Vec<String>,
    probs: Vec<f64>,
    noise: NoiseModel,
    exact: f64,
    satisfying_count: u64,
    monte_carlo: f64,
    sigma: f64,
    draws: u64,
    within_4_sigma: bool,
}

fn cmd_prob(io: &mut Io, file: &Path, probs: Option<Vec<f64>>, model: &NoiseModel, draws: u64, seed: u64) -> i32 {
    let text = match std::fs::read_to_string(file) {
        Ok(t) => t,
        Err(e) => return io.fail(EXIT_INPUT, format!("{}: {e}", file.display())),
    };
    let parsed = match parse_formula(&text) {
        Ok(p) => p,
        Err(e) => return io.fail(EXIT_INPUT, format!("{}: {e}", file.display())),
    };
    let n = parsed.formula.num_vars();
    let probs = probs.unwrap_or_else(|| vec![0.5; n]);
    if probs.len() != n {
        return io.fail(EXIT_USAGE, format!("expected {n} probabilities, got {}", probs.len()));
    }
    let exact = match prob_logic_exact(&parsed.formula, &probs) {
        Ok(e) => e,
        Err(e) => return io.fail(EXIT_USAGE, e),
    };
    let logits: Result<Vec<f64>, _> = probs.iter().map(|&p| model.theta_inv(p)).collect();
    let logits = match logits.map_err(|e| e.to_string()).and_then(|l| LogitVector::new(l).map_err(|e| e.to_string())) {
        Ok(l) => l,
        Err(e) => return io.fail(EXIT_USAGE, e),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mc = match mc_implicit_prob(&parsed.formula, &logits, model, draws, &mut rng) {
        Ok(m) => m,
        Err(e) => return io.fail(EXIT_USAGE, e),
    };
    let sigma = (exact.probability * (1.0 - exact.probability) / draws as f64).sqrt();
    let within = (mc.estimate - exact.probability).abs() <= 4.0 * sigma + 1e-12;
    let report = ProbReport {
        formula: parsed.formula.to_string(),
        variables: parsed.names,
        probs,
        noise: *model,
        exact: exact.probability,
        satisfying_count: exact.satisfying_count,
        monte_carlo: mc.estimate,
        sigma: mc.sigma,
        draws,
        within_4_sigma: within,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serialises");
    let _ = writeln!(io.out, "{json}");
    if within {
        EXIT_OK
    } else {
        EXIT_UNSOLVED
    }
}

fn cmd_generate(io: &mut Io, family: Family, dir: &Path, count: usize, seed: u64) -> i32 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (stem, cnfs) = match family {
        Family::Uf20 => ("uf20-0", (0..count).map(|_| satisfiable_ksat(&mut rng, 20, 91, 3)).collect::<Vec<_>>()),
        Family::Flat30 => (
            "flat30-",
            (0..count).map(|_| flat_graph_colouring(&mut rng, 30, 60, 3).cnf).collect::<Vec<_>>(),
        ),
    };
    match write_instances(dir, stem, &cnfs) {
        Ok(paths) => {
            let _ = writeln!(io.err, "wrote {} instances to {}", paths.len(), dir.display());
            EXIT_OK
        }
        Err(e) => io.fail(EXIT_INPUT, format!("{}: {e}", dir.display())),
    }
}
