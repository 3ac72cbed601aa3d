//! The `modetab` command line.
//!
//! ```text
//! modetab run <file> --query "<goal>" [--sched local|batched] [--stats] [--trace-events <path>]
//! modetab bench <name> --size N --seed S [--sched local,batched] [--check] [--json <path>]
//! modetab gen <name> --size N --seed S
//! ```
//!
//! `run` prints one answer per line and exits 0 when there is at least one
//! answer, 1 when there are none and 2 on any error. `bench` exits 1 when
//! `--check` is given and some run disagrees with its oracle.

pub mod bench;
pub mod oracle;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::engine::{Engine, EngineOptions, Strategy};
use crate::lang::{has_errors, parse_program, parse_query, validate, Severity};
use bench::{gen_instance, BenchName};
use report::default_strategies;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO_ANSWERS: i32 = 1;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "modetab", version, about = "Mode-directed tabled evaluation of logic programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a query against a program file.
    Run {
        file: PathBuf,
        /// Goals to prove, comma separated, without the final period.
        #[arg(long, short)]
        query: String,
        /// Default scheduling strategy; `table_strategy` directives override it.
        #[arg(long, default_value_t = Strategy::Batched)]
        sched: Strategy,
        /// Print evaluation statistics after the answers.
        #[arg(long)]
        stats: bool,
        /// Write the insertion, delivery and completion events as JSON lines.
        #[arg(long, value_name = "PATH")]
        trace_events: Option<PathBuf>,
        /// Abort after this many clause resolutions.
        #[arg(long, value_name = "N")]
        max_derivations: Option<u64>,
    },
    /// Run a generated benchmark instance and compare it with its oracle.
    Bench {
        name: BenchName,
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Strategies to run; defaults to local and batched (local only for pagerank).
        #[arg(long, value_delimiter = ',')]
        sched: Vec<Strategy>,
        /// Exit nonzero if any run disagrees with the oracle.
        #[arg(long)]
        check: bool,
        /// Write the reports as a JSON array.
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
    },
    /// Print a generated benchmark program and its query.
    Gen {
        name: BenchName,
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Parses `args` (program name first) and runs the command, writing to
/// `out` and `err`. Returns the process exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = if e.use_stderr() { write!(err, "{}", e.render()) } else { write!(out, "{}", e.render()) };
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Run { file, query, sched, stats, trace_events, max_derivations } => {
            let opts = EngineOptions { strategy: sched, max_derivations, record_events: trace_events.is_some() };
            run(&file, &query, opts, stats, trace_events.as_deref(), out, err)
        }
        Command::Bench { name, size, seed, sched, check, json } => {
            run_bench(name, size, seed, &sched, check, json.as_deref(), out, err)
        }
        Command::Gen { name, size, seed } => match gen_instance(name, size, seed) {
            Ok(inst) => {
                writeln!(out, "% query: {}.", inst.query_text())
                    .and_then(|_| write!(out, "{}", inst.program()))
                    .map(|_| EXIT_OK)
                    .map_err(|e| e.to_string())
            }
            Err(e) => Err(format!("usage error: {e}")),
        },
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "modetab: {msg}");
            EXIT_ERROR
        }
    }
}

fn run(
    file: &Path,
    query: &str,
    opts: EngineOptions,
    stats: bool,
    trace: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, String> {
    let src = fs::read_to_string(file).map_err(|e| format!("cannot read {}: {e}", file.display()))?;
    let program = parse_program(&src).map_err(|e| format!("{}:{e}", file.display()))?;
    let diags = validate(&program);
    for d in diags.iter().filter(|d| d.severity == Severity::Warning) {
        let _ = writeln!(err, "{}: {d}", file.display());
    }
    if has_errors(&diags) {
        let msgs: Vec<String> = diags.iter().filter(|d| d.severity == Severity::Error).map(|d| d.to_string()).collect();
        return Err(format!("{}: {}", file.display(), msgs.join("; ")));
    }
    let query = parse_query(query).map_err(|e| format!("query:{e}"))?;
    let mut engine = Engine::new(&program, opts).map_err(|e| e.to_string())?;
    let result = engine.solve(&query);
    if let Some(path) = trace {
        let mut text = String::new();
        for ev in engine.events() {
            text.push_str(&ev.to_json().to_string());
            text.push('\n');
        }
        fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    let solution = result.map_err(|e| e.to_string())?;
    let mut text = String::new();
    for line in solution.lines() {
        text.push_str(&line);
        text.push('\n');
    }
    if stats {
        text.push_str("% stats\n");
        for line in solution.stats.to_string().lines() {
            text.push_str("% ");
            text.push_str(line);
            text.push('\n');
        }
    }
    out.write_all(text.as_bytes()).map_err(|e| e.to_string())?;
    Ok(if solution.answers.is_empty() { EXIT_NO_ANSWERS } else { EXIT_OK })
}

#[allow(clippy::too_many_arguments)]
fn run_bench(
    name: BenchName,
    size: usize,
    seed: u64,
    sched: &[Strategy],
    check: bool,
    json: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, String> {
    let inst = gen_instance(name, size, seed).map_err(|e| format!("usage error: {e}"))?;
    let strategies = if sched.is_empty() { default_strategies(name) } else { sched.to_vec() };
    if name.uses_sum() && strategies.contains(&Strategy::Batched) {
        let _ = writeln!(err, "modetab: {name} uses sum mode and runs under local scheduling only");
    }
    let reports = report::bench(&inst, &strategies).map_err(|e| e.to_string())?;
    for r in &reports {
        writeln!(out, "{} mean_ms={:.3}", r.summary(), r.mean_ms()).map_err(|e| e.to_string())?;
        if let Some(m) = &r.mismatch {
            let _ = writeln!(err, "modetab: {} ({}) mismatch: {m}", r.instance.name, r.strategy);
        }
    }
    if let Some(path) = json {
        let text = serde_json::to_string_pretty(&reports).map_err(|e| e.to_string())?;
        fs::write(path, text + "\n").map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    Ok(if check && reports.iter().any(|r| !r.matched) { EXIT_MISMATCH } else { EXIT_OK })
}

/// Entry point of the `modetab` binary.
pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
