//! Command-line front end. `run` returns the process exit code: 0 on
//! success, 2 for usage and input errors, 1 when a solve fails.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use crate::benders::{solve_bd, solve_dsg, Method, OracleChoice, SolveOptions};
use crate::ef::solve_ef;
use crate::error::{Error, Result};
use crate::generator::{generate_instance, Family, GeneratorSpec};
use crate::instance::{parse_instance, serialize_instance, validate, Design, Instance};
use crate::report::{
    bench, check_tradeoff_monotone, default_suite, fmt_num, solution_json, sweep_tradeoff,
    verify_design_with, write_bench_csv, write_log, write_tradeoff_csv, BenchCase, BenchOptions,
    DEFAULT_VERIFY_CAP,
};

#[derive(Debug, Parser)]
#[command(name = "sndp", version, about = "Survivable network design under edge attacks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Find a minimum-cost design against the worst budgeted attack.
    Solve(SolveArgs),
    /// Compute the worst shed of a given design by enumeration.
    Verify(VerifyArgs),
    /// Write a generated instance.
    Gen(GenArgs),
    /// Cost of full or partial survivability over a grid of (ε, Γ).
    Sweep(SweepArgs),
    /// Run every method on a suite of instances and write a CSV table.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct Overrides {
    /// Attack budget Γ.
    #[arg(long)]
    budget: Option<f64>,
    /// Penalty per unit of shed fraction.
    #[arg(long)]
    penalty: Option<f64>,
    /// Allowed shed fraction ε; above zero it becomes a hard cap.
    #[arg(long)]
    eps: Option<f64>,
}

impl Overrides {
    fn apply(&self, mut inst: Instance) -> Result<Instance> {
        if let Some(b) = self.budget {
            inst = inst.with_budget(b);
        }
        if let Some(p) = self.penalty {
            inst = inst.with_penalty(Some(p));
        }
        if let Some(e) = self.eps {
            inst = inst.with_allowed_shed(e);
        }
        check_overrides(&inst)?;
        Ok(inst)
    }
}

fn check_overrides(inst: &Instance) -> Result<()> {
    let report = validate(inst);
    if report.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(report))
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Instance file (JSON).
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long, default_value = "dsg")]
    method: Method,
    /// Separation oracle for dsg: general, strong or auto.
    #[arg(long, default_value = "auto")]
    oracle: OracleChoice,
    #[command(flatten)]
    overrides: Overrides,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Largest scenario enumeration accepted by ef and bd.
    #[arg(long)]
    scenario_cap: Option<u64>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Report file (JSON); printed to stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Iteration log file (JSON lines).
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// Design file: a solve report or a JSON array of edge labels.
    #[arg(short, long)]
    design: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
    /// Attack count above which the separation oracles decide.
    #[arg(long, default_value_t = DEFAULT_VERIFY_CAP)]
    scenario_cap: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Print the full report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, default_value = "random")]
    family: Family,
    #[arg(long, default_value_t = 10)]
    nodes: usize,
    /// Edges beyond the spanning tree; defaults to half the node count.
    #[arg(long)]
    extra: Option<usize>,
    /// Copies per base edge (replicated family).
    #[arg(long, default_value_t = 2)]
    factor: usize,
    #[arg(long, default_value_t = 1.0)]
    budget: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// Comma-separated shed fractions.
    #[arg(long, value_delimiter = ',', default_value = "0,0.01,0.05,0.2,1")]
    eps: Vec<f64>,
    /// Comma-separated attack budgets; defaults to the instance budget.
    #[arg(long, value_delimiter = ',')]
    budgets: Vec<f64>,
    #[arg(long, default_value = "auto")]
    oracle: OracleChoice,
    /// Wall-clock limit per point, in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// CSV file; printed to stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Instance files; the generated suite when none is given.
    #[arg(short, long)]
    input: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "ef,bd,dsg")]
    methods: Vec<Method>,
    /// Per-cell limit in seconds.
    #[arg(long, default_value_t = 600.0)]
    timeout: f64,
    /// Run cells concurrently.
    #[arg(long)]
    parallel: bool,
    /// Seed of the generated suite.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// CSV file; printed to stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Syntax { .. }
        | Error::Validation(_)
        | Error::Input(_)
        | Error::Inconsistent(_)
        | Error::Spec(_)
        | Error::Io(_) => 2,
        _ => 1,
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn read_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_instance(&text)
}

fn timeout(secs: Option<f64>) -> Result<Option<Duration>> {
    secs.map(|s| {
        Duration::try_from_secs_f64(s).map_err(|_| Error::Input(format!("bad timeout {s}")))
    })
    .transpose()
}

fn emit(path: Option<&Path>, body: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, body)?,
        None => io::stdout().write_all(body)?,
    }
    Ok(())
}

fn cmd_solve(a: SolveArgs) -> Result<()> {
    let inst = a.overrides.apply(read_instance(&a.input)?)?;
    let mut opts = SolveOptions {
        scenario_cap: a.scenario_cap,
        oracle: a.oracle,
        threads: a.threads.max(1),
        ..SolveOptions::default()
    };
    if let Some(t) = timeout(a.timeout)? {
        opts = opts.with_timeout(t);
    }
    let sol = match a.method {
        Method::Ef => solve_ef(&inst, &opts),
        Method::Bd => solve_bd(&inst, &opts),
        Method::Dsg => solve_dsg(&inst, &opts),
    }?;
    let check = verify_design_with(&inst, &sol.design, DEFAULT_VERIFY_CAP, opts.threads)?;
    let name = a.input.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let doc = solution_json(&inst, &name, &sol, Some(&check));
    let mut body = serde_json::to_vec_pretty(&doc).map_err(|e| Error::Io(e.into()))?;
    body.push(b'\n');
    if let Some(path) = &a.log {
        write_log(&sol.log, io::BufWriter::new(fs::File::create(path)?))?;
    }
    let labels: Vec<String> = sol.design.labels(&inst).iter().map(u64::to_string).collect();
    eprintln!(
        "{}: objective {}, build cost {}, worst shed {}, design [{}], verified worst shed {}",
        sol.method.name(),
        fmt_num(sol.objective),
        fmt_num(sol.build_cost),
        fmt_num(sol.theta),
        labels.join(", "),
        fmt_num(check.worst_shed)
    );
    emit(a.output.as_deref(), &body)
}

/// Labels from a solve report (`design` field) or a bare array.
fn read_design(inst: &Instance, path: &Path) -> Result<Design> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| Error::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let list = match &doc {
        Value::Array(_) => &doc,
        Value::Object(map) => map
            .get("design")
            .ok_or_else(|| Error::Input("design file has no \"design\" field".into()))?,
        _ => return Err(Error::Input("design must be an array of edge labels".into())),
    };
    let labels: Vec<u64> = serde_json::from_value(list.clone())
        .map_err(|e| Error::Input(format!("design labels: {e}")))?;
    Design::from_labels(inst, &labels)
}

fn cmd_verify(a: VerifyArgs) -> Result<()> {
    let inst = a.overrides.apply(read_instance(&a.input)?)?;
    let design = read_design(&inst, &a.design)?;
    let rep = verify_design_with(&inst, &design, a.scenario_cap, a.threads.max(1))?;
    if a.json {
        let mut body =
            serde_json::to_vec_pretty(&rep.to_json(&inst)).map_err(|e| Error::Io(e.into()))?;
        body.push(b'\n');
        emit(None, &body)
    } else {
        println!("{}", rep.summary(&inst));
        if let Some(note) = &rep.note {
            println!("{note}");
        }
        Ok(())
    }
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let spec = GeneratorSpec {
        family: a.family,
        nodes: a.nodes,
        extra_edges: a.extra.unwrap_or(a.nodes / 2),
        factor: a.factor,
        budget: a.budget,
        seed: a.seed,
    };
    let inst = generate_instance(&spec)?;
    emit(a.output.as_deref(), serialize_instance(&inst).as_bytes())
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let inst = read_instance(&a.input)?;
    if a.eps.iter().any(|e| !(0.0..=1.0).contains(e)) {
        return Err(Error::Input("every eps must lie in [0, 1]".into()));
    }
    let budgets = if a.budgets.is_empty() { vec![inst.budget] } else { a.budgets };
    if budgets.iter().any(|b| b.is_nan() || *b < 0.0) {
        return Err(Error::Input("budgets must be nonnegative".into()));
    }
    let mut points = Vec::new();
    // a fresh deadline per point
    for &budget in &budgets {
        for &eps in &a.eps {
            let mut opts = SolveOptions {
                oracle: a.oracle,
                threads: a.threads.max(1),
                ..SolveOptions::default()
            };
            if let Some(t) = timeout(a.timeout)? {
                opts = opts.with_timeout(t);
            }
            points.extend(sweep_tradeoff(&inst, &[eps], &[budget], &opts));
        }
    }
    if let Err(msg) = check_tradeoff_monotone(&points) {
        eprintln!("warning: trade-off not monotone: {msg}");
    }
    let mut buf = Vec::new();
    write_tradeoff_csv(&points, &mut buf)?;
    emit(a.output.as_deref(), &buf)
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let cases = if a.input.is_empty() {
        default_suite(a.seed)?
    } else {
        a.input
            .iter()
            .map(|p| {
                Ok(BenchCase {
                    name: p.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned()),
                    inst: read_instance(p)?,
                })
            })
            .collect::<Result<_>>()?
    };
    if a.parallel {
        eprintln!("warning: parallel cells share the CPU; timings are indicative only");
    }
    let opts = BenchOptions {
        methods: a.methods,
        timeout: timeout(Some(a.timeout))?.unwrap_or_default(),
        parallel: a.parallel,
        solve: SolveOptions {
            threads: a.threads.max(1),
            ..SolveOptions::default()
        },
    };
    let rows = bench(&cases, &opts);
    let mut buf = Vec::new();
    write_bench_csv(&rows, &mut buf)?;
    emit(a.output.as_deref(), &buf)
}
