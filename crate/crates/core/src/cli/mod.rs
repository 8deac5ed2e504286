//! The `subdet` command line: `gen`, `solve`, `exact` and
//! `anticoncentration`.
//!
//! Exit codes: 0 success, 1 I/O or internal failure, 2 validation error,
//! 3 degenerate result, 4 enumeration cap refused, 5 statistical check
//! failed.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::anticoncentration::{
    check_global_tail, estimate_lower_tail_grid, vertex_opt, BlockRestriction, MultilinearObjective, Objective,
    VolumeObjective,
};
use crate::error::Error;
use crate::format::{InstanceFile, ReportFile};
use crate::instances::{FactorMode, GeneratorSpec, Instance};
use crate::oracle::{brute_force_partition, brute_force_regular};
use crate::partition::{reduce_to_unit_quotas, solve_partition, trials_for_confidence};
use crate::regular::solve_regular;
use crate::report::ProblemKind;
use crate::rng::SeedStream;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_CAP: i32 = 4;
pub const EXIT_STATISTICAL: i32 = 5;

/// Overrides `--threads` when set.
pub const THREADS_ENV: &str = "SUBDET_THREADS";

const DEFAULT_DELTA: f64 = 0.01;
/// Anti-concentration constant used by the harness rows.
const GAMMA: f64 = 2.0;

#[derive(Parser, Debug)]
#[command(name = "subdet", version, about = "Constrained subdeterminant maximization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an instance file.
    Gen(GenArgs),
    /// Run the randomized solver on an instance.
    Solve(SolveArgs),
    /// Solve an instance exactly by enumeration.
    Exact(ExactArgs),
    /// Estimate lower-tail probabilities of the relaxation.
    Anticoncentration(AntiArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GenKind {
    RandomPsdPartition,
    GraphicRegular,
    NsHard,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VMode {
    CopyB,
    Gaussian,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: GenKind,
    /// Ground set size (random-psd-partition).
    #[arg(long)]
    m: Option<usize>,
    /// Factor rank (random-psd-partition).
    #[arg(long)]
    d: Option<usize>,
    /// Comma-separated quotas, one per part (random-psd-partition).
    #[arg(long, value_delimiter = ',')]
    quotas: Option<Vec<usize>>,
    /// Vertex count (graphic-regular).
    #[arg(long)]
    nodes: Option<usize>,
    /// Edge count (graphic-regular).
    #[arg(long)]
    edges: Option<usize>,
    /// Rank (ns-hard).
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, value_enum, default_value = "gaussian")]
    v_mode: VMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReportFormat {
    Json,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Defaults to the count reaching 99% confidence.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: ReportFormat,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct ExactArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct AntiArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Comma-separated threshold fractions in (0, 1).
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2")]
    c_grid: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    format: TableFormat,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::CapExceeded { .. } => EXIT_CAP,
            Error::Invariant(_) => EXIT_INTERNAL,
            _ => EXIT_VALIDATION,
        };
        Failure::new(code, e.to_string())
    }
}

type CliResult = std::result::Result<i32, Failure>;

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to stderr.
pub fn run<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => with_threads(a.threads, || cmd_solve(&a)),
        Command::Exact(a) => cmd_exact(a),
        Command::Anticoncentration(a) => with_threads(a.threads, || cmd_anticoncentration(&a)),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn thread_count(flag: Option<usize>) -> std::result::Result<Option<usize>, Failure> {
    match std::env::var(THREADS_ENV) {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Failure::new(EXIT_VALIDATION, format!("{THREADS_ENV}={s:?} is not a thread count"))),
        Err(_) => Ok(flag),
    }
}

fn with_threads(flag: Option<usize>, body: impl FnOnce() -> CliResult + Send) -> CliResult {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count(flag)? {
        if n == 0 {
            return Err(Failure::new(EXIT_VALIDATION, "thread count must be positive"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Failure::new(EXIT_INTERNAL, format!("cannot start thread pool: {e}")))?;
    pool.install(body)
}

fn read_instance(path: &Path) -> std::result::Result<Instance<f64>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_VALIDATION, format!("cannot read {}: {e}", path.display())))?;
    let file = InstanceFile::parse(&text)?;
    Ok(file.to_instance()?)
}

fn emit(out: Option<&Path>, text: &str) -> std::result::Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::new(EXIT_INTERNAL, format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn required<T>(value: Option<T>, flag: &str, kind: &str) -> std::result::Result<T, Failure> {
    value.ok_or_else(|| Failure::new(EXIT_VALIDATION, format!("--{flag} is required for --kind {kind}")))
}

fn cmd_gen(a: GenArgs) -> CliResult {
    let spec = match a.kind {
        GenKind::RandomPsdPartition => GeneratorSpec::RandomPsdPartition {
            m: required(a.m, "m", "random-psd-partition")?,
            d: required(a.d, "d", "random-psd-partition")?,
            quotas: required(a.quotas, "quotas", "random-psd-partition")?,
        },
        GenKind::GraphicRegular => GeneratorSpec::GraphicRegular {
            nodes: required(a.nodes, "nodes", "graphic-regular")?,
            edges: required(a.edges, "edges", "graphic-regular")?,
            mode: match a.v_mode {
                VMode::CopyB => FactorMode::CopyRepresentation,
                VMode::Gaussian => FactorMode::Gaussian,
            },
        },
        GenKind::NsHard => GeneratorSpec::NsHard {
            r: required(a.r, "r", "ns-hard")?,
        },
    };
    let inst = spec.generate::<f64>(a.seed)?;
    emit(a.out.as_deref(), &InstanceFile::from_instance(&inst).to_json())?;
    Ok(EXIT_OK)
}

fn cmd_solve(a: &SolveArgs) -> CliResult {
    let ReportFormat::Json = a.format;
    let inst = read_instance(&a.instance)?;
    let stream = SeedStream::new(a.seed);
    let report = match &inst {
        Instance::Partition(p) => {
            let trials = match a.trials {
                Some(t) => t,
                None => trials_for_confidence(p.rank(), DEFAULT_DELTA)?,
            };
            solve_partition(p, trials, stream)?
        }
        Instance::Regular(r) => {
            let trials = match a.trials {
                Some(t) => t,
                None => trials_for_confidence(r.ground_size().max(2), DEFAULT_DELTA)?,
            };
            solve_regular(r, trials, stream)?
        }
    };
    emit(a.out.as_deref(), &ReportFile::from_solve(&report).to_json())?;
    if report.is_degenerate() {
        eprintln!("warning: all trials degenerate");
        return Ok(EXIT_DEGENERATE);
    }
    Ok(EXIT_OK)
}

fn cmd_exact(a: ExactArgs) -> CliResult {
    let inst = read_instance(&a.instance)?;
    let (kind, exact) = match &inst {
        Instance::Partition(p) => (ProblemKind::Partition, brute_force_partition(p)?),
        Instance::Regular(r) => (ProblemKind::Regular, brute_force_regular(r)?),
    };
    emit(a.out.as_deref(), &ReportFile::from_exact(kind, &exact).to_json())?;
    if exact.best_log.is_zero() {
        eprintln!("warning: optimum is zero");
        return Ok(EXIT_DEGENERATE);
    }
    Ok(EXIT_OK)
}

/// One line of the anti-concentration table.
#[derive(Clone, Debug, Serialize)]
struct TableRow {
    check: &'static str,
    c: f64,
    empirical_prob: f64,
    samples: usize,
    std_error: f64,
    bound: f64,
    /// Global row only: the bound read with a base-2 logarithm.
    bound_alt: Option<f64>,
    pass: bool,
}

fn cmd_anticoncentration(a: &AntiArgs) -> CliResult {
    if a.samples == 0 {
        return Err(Failure::new(EXIT_VALIDATION, "--samples must be positive"));
    }
    if let Some(c) = a.c_grid.iter().find(|c| !(**c > 0.0 && **c < 1.0)) {
        return Err(Failure::new(
            EXIT_VALIDATION,
            format!("--c-grid value {c} not in (0, 1)"),
        ));
    }
    let inst = read_instance(&a.instance)?;
    let stream = SeedStream::new(a.seed);
    let rows = match &inst {
        Instance::Partition(p) => {
            let unit = reduce_to_unit_quotas(p);
            tail_table(&VolumeObjective::new(&unit), a, stream)?
        }
        Instance::Regular(r) => tail_table(&MultilinearObjective::new(r)?, a, stream)?,
    };
    let text = match a.format {
        TableFormat::Json => {
            let mut s = serde_json::to_string_pretty(&rows).expect("rows serialize");
            s.push('\n');
            s
        }
        TableFormat::Csv => {
            let mut s = String::from("check,c,empirical_prob,samples,std_error,bound,bound_alt,pass\n");
            for r in &rows {
                let alt = r.bound_alt.map(|b| b.to_string()).unwrap_or_default();
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    r.check, r.c, r.empirical_prob, r.samples, r.std_error, r.bound, alt, r.pass
                );
            }
            s
        }
    };
    emit(a.out.as_deref(), &text)?;
    Ok(if rows.iter().all(|r| r.pass) {
        EXIT_OK
    } else {
        EXIT_STATISTICAL
    })
}

/// Restriction rows for block 0 (bound `γ·p_0·c`), then the global row.
fn tail_table<O: Objective<f64>>(
    f: &O,
    a: &AntiArgs,
    stream: SeedStream,
) -> std::result::Result<Vec<TableRow>, Failure> {
    let r = f.shape().num_blocks();
    if (r as f64) < GAMMA {
        return Err(Failure::new(
            EXIT_VALIDATION,
            format!("the global check needs at least {GAMMA} blocks, instance has {r}"),
        ));
    }
    let (_, opt) = vertex_opt(f)?;
    if opt <= 0.0 {
        return Err(Failure::new(EXIT_DEGENERATE, "objective vanishes on every vertex"));
    }
    let restriction = BlockRestriction::random(f, 0, stream.child(1))?;
    let (_, local_opt) = vertex_opt(&restriction)?;
    let mut rows = Vec::new();
    if local_opt > 0.0 {
        for est in estimate_lower_tail_grid(&restriction, local_opt, &a.c_grid, GAMMA, a.samples, stream.child(2))? {
            rows.push(TableRow {
                check: "restriction",
                c: est.threshold_fraction,
                pass: est.below_bound(),
                empirical_prob: est.empirical_prob,
                samples: est.samples,
                std_error: est.std_error,
                bound: est.bound,
                bound_alt: None,
            });
        }
    } else {
        // restriction identically zero: its lower tail is empty
        let p0 = f.shape().block_sizes()[0] as f64;
        for &c in &a.c_grid {
            rows.push(TableRow {
                check: "restriction",
                c,
                empirical_prob: 0.0,
                samples: 0,
                std_error: 0.0,
                bound: (GAMMA * p0 * c).min(1.0),
                bound_alt: None,
                pass: true,
            });
        }
    }
    let global = check_global_tail(f, opt, GAMMA, a.samples, stream.child(3))?;
    rows.push(TableRow {
        check: "global",
        c: global.estimate.threshold_fraction,
        empirical_prob: global.estimate.empirical_prob,
        samples: global.estimate.samples,
        std_error: global.estimate.std_error,
        bound: global.estimate.bound,
        bound_alt: Some(global.bound_log2),
        pass: global.passes,
    });
    Ok(rows)
}
