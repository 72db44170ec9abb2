use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use trial_error::experiment::{
    audit, rows_to_csv, rows_to_json, run_experiment, validate, ExperimentSpec, Instance,
    OracleKind, Problem, TranscriptFile,
};
use trial_error::trial::{HonestyReport, OracleBudget};
use trial_error::Error;

const EXIT_OK: u8 = 0;
const EXIT_FAILURE: u8 = 1;
const EXIT_BUDGET: u8 = 2;
const EXIT_INPUT: u8 = 3;

/// Trial-and-error solvers run against verification oracles that only say
/// "yes" or point at one violated constraint.
#[derive(Parser, Debug)]
#[command(name = "trial-error", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Recover a hidden total order.
    Sort(RunArgs),
    /// Find a stable matching under hidden preference lists.
    Sm(RunArgs),
    /// Find a satisfying assignment of a hidden CNF (`--m` clauses).
    Sat(RunArgs),
    /// Find an isomorphism between two hidden graphs.
    Graphiso(RunArgs),
    /// Find a `--k`-clique through the graph isomorphism solver.
    Clique(RunArgs),
    /// Hamiltonian cycle on a prime number of vertices via the group isomorphism reduction.
    #[command(name = "groupiso-reduce")]
    GroupIsoReduce(RunArgs),
    /// Find a core allocation of a hidden cost-sharing game.
    Core(RunArgs),
    /// Trial counts of the subset-sum elimination solver, one row per layout.
    #[command(name = "ssum-demo")]
    SsumDemo(RunArgs),
    /// Replay a transcript file and report whether the oracle was honest.
    Audit(AuditArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Instance size.
    #[arg(long, default_value_t = 6)]
    n: usize,
    /// Clauses (sat), clique size (clique) or M (ssum-demo).
    #[arg(long, visible_alias = "k")]
    m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Maximum number of trials per run.
    #[arg(long)]
    budget: Option<usize>,
    /// honest, random, kahn-saks, sm-adversary, block, learning or simulator.
    #[arg(long)]
    oracle: Option<String>,
    /// Hidden instance file used by every repetition (DIMACS for sat, JSON otherwise).
    #[arg(long, visible_alias = "graph")]
    instance: Option<PathBuf>,
    /// Write the result table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write every run's transcript (JSON) here.
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Add a wall_ms column. Timings make the output nondeterministic.
    #[arg(long)]
    timing: bool,
    /// Validate the arguments and instance, then exit without running.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args, Debug)]
struct AuditArgs {
    /// Transcript file written with --transcript.
    #[arg(long)]
    transcript: PathBuf,
    /// Hidden instance to check against; defaults to the instance recorded with each run.
    #[arg(long, visible_alias = "graph")]
    instance: Option<PathBuf>,
    /// Validate the files, then exit without replaying.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. } | Error::InvalidInput(_) | Error::Capacity { .. } => {
                Failure::Input(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write_to(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    let result = match path {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| e.to_string()),
    };
    result.map_err(Failure::Runtime)
}

fn build_spec(problem: Problem, args: &RunArgs) -> Result<ExperimentSpec, Failure> {
    let mut spec = ExperimentSpec::new(problem, args.n);
    spec.m = args.m;
    spec.seed = args.seed;
    spec.reps = args.reps;
    spec.timing = args.timing;
    if let Some(b) = args.budget {
        spec.budget = OracleBudget::trials(b);
    }
    if let Some(name) = &args.oracle {
        spec.oracle = name.parse::<OracleKind>()?;
    }
    if let Some(path) = &args.instance {
        let text = read(path)?;
        spec.instance = Some(Instance::parse(
            problem,
            &text,
            &path.display().to_string(),
        )?);
    }
    validate(&spec)?;
    Ok(spec)
}

fn run(problem: Problem, args: &RunArgs) -> Result<u8, Failure> {
    let spec = build_spec(problem, args)?;
    if args.dry_run {
        eprintln!(
            "ok: {problem} n={} oracle={} reps={}",
            spec.instance.as_ref().map_or(spec.n, Instance::size),
            spec.oracle,
            spec.reps
        );
        return Ok(EXIT_OK);
    }
    let experiment = run_experiment(&spec)?;
    let table = match args.format {
        Format::Csv => rows_to_csv(&experiment.rows, args.timing)?,
        Format::Json => rows_to_json(&experiment.rows),
    };
    write_to(args.out.as_deref(), &table)?;
    if let Some(path) = &args.transcript {
        let json = serde_json::to_string_pretty(&experiment.transcripts)
            .map_err(|e| Failure::Runtime(e.to_string()))?;
        write_to(Some(path), &(json + "\n"))?;
    }
    if experiment.any_budget_exhausted() {
        eprintln!("budget exhausted in at least one repetition");
        return Ok(EXIT_BUDGET);
    }
    Ok(EXIT_OK)
}

fn run_audit(args: &AuditArgs) -> Result<u8, Failure> {
    let text = read(&args.transcript)?;
    let file: TranscriptFile = serde_json::from_str(&text).map_err(|e| {
        Failure::Input(format!(
            "{}:{}:{}: {e}",
            args.transcript.display(),
            e.line(),
            e.column()
        ))
    })?;
    let problem: Problem = file.problem.parse()?;
    let hidden = match &args.instance {
        Some(path) => Some(Instance::parse(
            problem,
            &read(path)?,
            &path.display().to_string(),
        )?),
        None => None,
    };
    if args.dry_run {
        eprintln!("ok: {problem} transcript with {} runs", file.runs.len());
        return Ok(EXIT_OK);
    }
    let lines = audit(&file, hidden.as_ref())?;
    let mut failed = false;
    for line in &lines {
        match line.report {
            HonestyReport::Honest => {
                println!("PASS seed={} repetition={}", line.seed, line.repetition)
            }
            HonestyReport::Dishonest { entry, kind } => {
                failed = true;
                println!(
                    "FAIL seed={} repetition={} entry={entry}: {kind}",
                    line.seed, line.repetition
                );
            }
        }
    }
    Ok(if failed { EXIT_FAILURE } else { EXIT_OK })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { EXIT_OK });
        }
    };
    let result = match &cli.command {
        Command::Sort(a) => run(Problem::Sort, a),
        Command::Sm(a) => run(Problem::Sm, a),
        Command::Sat(a) => run(Problem::Sat, a),
        Command::Graphiso(a) => run(Problem::GraphIso, a),
        Command::Clique(a) => run(Problem::Clique, a),
        Command::GroupIsoReduce(a) => run(Problem::GroupIsoReduce, a),
        Command::Core(a) => run(Problem::Core, a),
        Command::SsumDemo(a) => run(Problem::SsumDemo, a),
        Command::Audit(a) => run_audit(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
