//! Command-line front end.
//!
//! Matrices and GA runs are stored as JSON (see [`crate::io`]); result tables
//! are CSV. Every command is deterministic given `--seed`.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::baselines::{self, BaselineKind, WBE_TOLERANCE};
use crate::ber::{simulate_ber, union_bound};
use crate::capacity::{estimate_capacity, DEFAULT_SAMPLES};
use crate::criteria::{exp_distance, min_distance, q_distance, CriterionKind, CriterionSpec};
use crate::error::{Error, Result};
use crate::exec::{init_workers, Exec};
use crate::ga::{evolve, random_search, GaConfig};
use crate::io::{read_matrix_file, write_csv, write_matrix, MatrixFile, RandomBaseline, RunFile};
use crate::model::{snr_db, SignatureMatrix};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "CDMA_SIG_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "cdma-sig", version, about = "Design and evaluate signature matrices for binary-input overloaded CDMA")]
pub struct Cli {
    /// Worker threads for the inner evaluation loops (results do not depend on it).
    #[arg(long, global = true, env = WORKERS_ENV)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a baseline matrix (wbe, random or orthogonal).
    Generate(GenerateArgs),
    /// Evaluate one matrix at one noise level; prints a CSV row.
    Eval(EvalArgs),
    /// Optimize a matrix for one criterion with the genetic algorithm.
    Optimize(OptimizeArgs),
    /// Evaluate matrices over a grid of noise levels.
    Sweep(SweepArgs),
    /// Optimize per user count and report per-user capacity against n/m.
    OverloadSweep(OverloadArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub kind: BaselineKind,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tight-frame tolerance (wbe only).
    #[arg(long, default_value_t = WBE_TOLERANCE)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub matrix: PathBuf,
    #[arg(long)]
    pub sigma: f64,
    /// Monte-Carlo samples for capacity and blocks for BER.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GaFlags {
    #[arg(long, default_value_t = 64)]
    pub population: usize,
    #[arg(long, default_value_t = 200)]
    pub generations: usize,
    #[arg(long, default_value_t = 3)]
    pub tournament: usize,
    #[arg(long, default_value_t = 0.9)]
    pub crossover_rate: f64,
    #[arg(long, default_value_t = 0.1)]
    pub mutation_scale: f64,
    #[arg(long, default_value_t = 0.99)]
    pub mutation_decay: f64,
    #[arg(long, default_value_t = 2)]
    pub elitism: usize,
}

impl GaFlags {
    fn config(&self, seed: u64) -> GaConfig {
        GaConfig {
            population_size: self.population,
            generations: self.generations,
            tournament_size: self.tournament,
            crossover_rate: self.crossover_rate,
            mutation_scale: self.mutation_scale,
            mutation_decay: self.mutation_decay,
            elitism: self.elitism,
            seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub criterion: CriterionKind,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    /// Design noise level (not used by md).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Samples or blocks per fitness evaluation (capacity and ber only).
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub ga: GaFlags,
    /// Also score population × generations random matrices for comparison.
    #[arg(long)]
    pub random_baseline: bool,
    /// GA run file.
    #[arg(long)]
    pub out: PathBuf,
    /// Matrix file for the best individual; defaults to `<out stem>.matrix.json`.
    #[arg(long)]
    pub matrix_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(required = true)]
    pub matrices: Vec<PathBuf>,
    /// Log-spaced grid `lo:hi:steps`.
    #[arg(long)]
    pub sigma_grid: SigmaGrid,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OverloadArgs {
    #[arg(long)]
    pub criterion: CriterionKind,
    #[arg(long)]
    pub m: usize,
    /// Comma-separated user counts, each at least m.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n_list: Vec<usize>,
    #[arg(long)]
    pub sigma: f64,
    /// Samples and blocks used to report each optimized matrix.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub budget: usize,
    /// Samples or blocks per fitness evaluation during optimization.
    #[arg(long)]
    pub eval_budget: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub ga: GaFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Log-spaced noise grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaGrid {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl SigmaGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        let ratio = (self.hi / self.lo).ln();
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.hi
                } else {
                    self.lo * (ratio * i as f64 / (self.steps - 1) as f64).exp()
                }
            })
            .collect()
    }
}

impl std::str::FromStr for SigmaGrid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, steps] = parts.as_slice() else {
            return Err(format!("expected lo:hi:steps, got `{s}`"));
        };
        let lo: f64 = lo.parse().map_err(|e| format!("bad lo: {e}"))?;
        let hi: f64 = hi.parse().map_err(|e| format!("bad hi: {e}"))?;
        let steps: usize = steps.parse().map_err(|e| format!("bad steps: {e}"))?;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) || steps == 0 {
            return Err("grid needs 0 < lo <= hi and steps >= 1".into());
        }
        Ok(Self { lo, hi, steps })
    }
}

/// One evaluated (matrix, sigma) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub matrix: String,
    pub m: usize,
    pub n: usize,
    pub sigma: f64,
    /// Display only: `-20 log10(sigma)`.
    pub snr_db: f64,
    pub per_user_capacity: f64,
    pub capacity_std_error: f64,
    pub ber: f64,
    pub ber_std_error: f64,
    pub block_error_rate: f64,
    pub block_error_std_error: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub nu3: f64,
    pub union_bound: f64,
}

/// Scores `a` with every evaluator at one noise level.
pub fn evaluate_row(label: &str, a: &SignatureMatrix, sigma: f64, budget: usize, seed: u64) -> Result<SweepRow> {
    let cap = estimate_capacity(a, sigma, budget, seed)?;
    let ber = simulate_ber(a, sigma, budget, seed)?;
    let cons = crate::model::build_constellation(a)?;
    Ok(SweepRow {
        matrix: label.to_string(),
        m: a.chips(),
        n: a.users(),
        sigma,
        snr_db: snr_db(sigma),
        per_user_capacity: cap.per_user_bits,
        capacity_std_error: cap.std_error / a.users() as f64,
        ber: ber.ber,
        ber_std_error: ber.std_error,
        block_error_rate: ber.block_error_rate,
        block_error_std_error: ber.block_std_error,
        nu1: min_distance(&cons),
        nu2: q_distance(&cons, sigma),
        nu3: exp_distance(&cons, sigma),
        union_bound: union_bound(&cons, sigma),
    })
}

/// One optimized matrix of an overload sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverloadRow {
    pub criterion: String,
    pub m: usize,
    pub n: usize,
    pub beta: f64,
    pub sigma: f64,
    pub snr_db: f64,
    pub design_fitness: f64,
    pub per_user_capacity: f64,
    pub capacity_std_error: f64,
    pub ber: f64,
    pub ber_std_error: f64,
}

fn csv_sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn criterion_spec(kind: CriterionKind, sigma: Option<f64>, budget: Option<usize>) -> Result<CriterionSpec> {
    let spec = CriterionSpec::new(kind, sigma)?;
    match budget {
        Some(b) => spec.with_budget(b),
        None => Ok(spec),
    }
}

fn matrix_path_for(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    out.with_file_name(format!("{stem}.matrix.json"))
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let a = match args.kind {
        BaselineKind::Wbe => baselines::wbe_matrix(args.m, args.n, args.seed, args.tol)?,
        kind => baselines::generate(kind, args.m, args.n, args.seed)?,
    };
    write_matrix(&args.out, &MatrixFile::from_matrix(&a, Some(args.kind.name().into()), None))
}

fn label_of(path: &Path, file: &MatrixFile) -> String {
    file.label.clone().unwrap_or_else(|| path.display().to_string())
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let file = read_matrix_file(&args.matrix)?;
    let a = file.to_matrix()?;
    let row = evaluate_row(&label_of(&args.matrix, &file), &a, args.sigma, args.budget, args.seed)?;
    write_csv(&[row], csv_sink(args.out.as_deref())?)
}

pub fn cmd_optimize(args: &OptimizeArgs) -> Result<()> {
    let spec = criterion_spec(args.criterion, args.sigma, args.budget)?;
    let config = args.ga.config(args.seed);
    let run = evolve(args.m, args.n, &spec, &config)?;
    let baseline = if args.random_baseline {
        let evaluations = config.population_size * config.generations;
        let (_, best) = random_search(args.m, args.n, &spec, evaluations, args.seed, Exec::default())?;
        Some(RandomBaseline { evaluations, best_fitness: best })
    } else {
        None
    };
    let file = RunFile::from_run(&run, baseline);
    std::fs::write(&args.out, file.to_json()?)?;
    let matrix_out = args.matrix_out.clone().unwrap_or_else(|| matrix_path_for(&args.out));
    write_matrix(&matrix_out, &file.best_matrix)?;
    eprintln!(
        "{} {}x{}: best fitness {} after {} generations{}",
        spec.kind,
        args.m,
        args.n,
        run.best_fitness,
        config.generations,
        file.random_baseline.as_ref().map(|b| format!(" (random search: {})", b.best_fitness)).unwrap_or_default()
    );
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let mut rows = Vec::new();
    for path in &args.matrices {
        let file = read_matrix_file(path)?;
        let a = file.to_matrix()?;
        let label = label_of(path, &file);
        for sigma in args.sigma_grid.values() {
            rows.push(evaluate_row(&label, &a, sigma, args.budget, args.seed)?);
        }
    }
    write_csv(&rows, csv_sink(args.out.as_deref())?)
}

pub fn cmd_overload_sweep(args: &OverloadArgs) -> Result<()> {
    if let Some(&n) = args.n_list.iter().find(|&&n| n < args.m) {
        return Err(Error::Dimension(format!("user count {n} is below chip count {}", args.m)));
    }
    let spec = criterion_spec(args.criterion, Some(args.sigma), args.eval_budget)?;
    let config = args.ga.config(args.seed);
    let mut rows = Vec::new();
    for &n in &args.n_list {
        let run = evolve(args.m, n, &spec, &config)?;
        let row = evaluate_row(spec.kind.name(), &run.best_matrix, args.sigma, args.budget, args.seed)?;
        rows.push(OverloadRow {
            criterion: spec.kind.name().into(),
            m: args.m,
            n,
            beta: n as f64 / args.m as f64,
            sigma: args.sigma,
            snr_db: row.snr_db,
            design_fitness: run.best_fitness,
            per_user_capacity: row.per_user_capacity,
            capacity_std_error: row.capacity_std_error,
            ber: row.ber,
            ber_std_error: row.ber_std_error,
        });
    }
    write_csv(&rows, csv_sink(args.out.as_deref())?)
}

pub fn run(cli: Cli) -> Result<()> {
    init_workers(cli.workers);
    match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::OverloadSweep(a) => cmd_overload_sweep(a),
    }
}

/// Process exit code for an error: 3 for numerical failures, 2 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_numeric() {
        3
    } else {
        2
    }
}
