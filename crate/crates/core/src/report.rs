//! Verification postpass, trade-off sweeps, benchmark tables and the JSON
//! renderings of solver results.

use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::benders::{solve_bd, solve_dsg, DesignSolution, IterationRecord, Method, SolveOptions};
use crate::ef::solve_ef;
use crate::error::{Error, Result};
use crate::generator::{generate_instance, Family, GeneratorSpec};
use crate::instance::{check_consistent, tri3a, Attack, Design, Instance, TOL};
use crate::maxflow::{build_augmented, max_flow};
use crate::ndp::{solve_ndp_general, solve_ndp_strong};
use crate::scenarios::{count_attacks, count_scenarios, enumerate_attacks_on, ScenarioCount, DEFAULT_SCENARIO_CAP};
use crate::subproblem::{solve_psp, solve_psp_many};

pub const VERIFY_TOL: f64 = 1e-7;
pub const DEFAULT_VERIFY_CAP: u64 = 100_000;
pub const DEFAULT_BENCH_TIMEOUT: Duration = Duration::from_secs(600);

/// Compact decimal rendering: at most six decimals, trailing zeros dropped.
pub fn fmt_num(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyPath {
    Enumeration,
    StrongOracle,
    GeneralOracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub design: Design,
    pub attacks_enumerated: usize,
    pub worst_attack: Option<Attack>,
    pub worst_shed: f64,
    pub allowed_shed: f64,
    pub pass: bool,
    pub path: VerifyPath,
    pub note: Option<String>,
}

impl VerificationReport {
    pub fn summary(&self, inst: &Instance) -> String {
        let verdict = if self.pass { "pass" } else { "fail" };
        let mut s = format!("{verdict}, worst shed {}", fmt_num(self.worst_shed));
        if let Some(a) = &self.worst_attack {
            let labels: Vec<String> = a.labels(inst).iter().map(u64::to_string).collect();
            s.push_str(&format!(", worst attack [{}]", labels.join(", ")));
        }
        s
    }

    pub fn to_json(&self, inst: &Instance) -> Value {
        json!({
            "pass": self.pass,
            "worst_shed": self.worst_shed,
            "allowed_shed": self.allowed_shed,
            "worst_attack": self.worst_attack.as_ref().map(|a| a.labels(inst)),
            "attacks_enumerated": self.attacks_enumerated,
            "path": self.path,
            "note": self.note,
            "design": self.design.labels(inst),
        })
    }
}

pub fn verify_design(inst: &Instance, design: &Design) -> Result<VerificationReport> {
    verify_design_with(inst, design, DEFAULT_VERIFY_CAP, 1)
}

/// Worst shed of `design` over every budget-feasible attack on its built
/// edges (the no-attack case included). Above `cap` attacks the strong
/// oracle decides, falling back to the exact general oracle when some shed
/// is allowed.
pub fn verify_design_with(
    inst: &Instance,
    design: &Design,
    cap: u64,
    threads: usize,
) -> Result<VerificationReport> {
    let empty = Attack::empty(inst.edge_count());
    check_consistent(inst, design, &empty)?;
    let eps = inst.allowed_shed;
    let built: Vec<_> = design.edges().collect();
    let count = count_attacks(inst, &built, cap);
    let demand = inst.total_demand();

    if count.exceeds(cap) {
        let threshold = (1.0 - eps) * demand;
        let strong = solve_ndp_strong(inst, design, threshold)?;
        if let Some(attack) = strong.attack {
            let shed = solve_psp(inst, design, &attack)?.gamma;
            return Ok(VerificationReport {
                design: design.clone(),
                attacks_enumerated: 0,
                worst_shed: shed,
                pass: shed <= eps + VERIFY_TOL,
                worst_attack: Some(attack),
                allowed_shed: eps,
                path: VerifyPath::StrongOracle,
                note: Some(format!(
                    "{count} attacks exceed the cap {cap}; the strong oracle found a residual cut of {}, so the worst shed is at least the value shown",
                    fmt_num(strong.severity)
                )),
            });
        }
        if eps <= TOL {
            return Ok(VerificationReport {
                design: design.clone(),
                attacks_enumerated: 0,
                worst_shed: 0.0,
                pass: true,
                worst_attack: None,
                allowed_shed: eps,
                path: VerifyPath::StrongOracle,
                note: Some(format!(
                    "{count} attacks exceed the cap {cap}; the strong oracle certifies full demand after every attack"
                )),
            });
        }
        let general = solve_ndp_general(inst, design)?;
        return Ok(VerificationReport {
            design: design.clone(),
            attacks_enumerated: 0,
            worst_shed: general.severity,
            pass: general.severity <= eps + VERIFY_TOL,
            worst_attack: general.attack.filter(|_| general.severity > TOL),
            allowed_shed: eps,
            path: VerifyPath::GeneralOracle,
            note: Some(format!(
                "{count} attacks exceed the cap {cap}; worst shed from the exact separation MILP"
            )),
        });
    }

    let attacks = enumerate_attacks_on(inst, design, cap)?;
    let mut worst = (solve_psp(inst, design, &empty)?.gamma, None);
    // max-flow settles every attack that leaves the full demand routable
    let mut hard = Vec::new();
    for a in &attacks {
        let flow = max_flow(&build_augmented(inst, design, a)?).value;
        if flow < demand - TOL {
            hard.push(a.clone());
        }
    }
    for res in solve_psp_many(inst, design, &hard, threads)? {
        if res.gamma > worst.0 + 1e-12 {
            worst = (res.gamma, Some(res.attack));
        }
    }
    let (shed, attack) = worst;
    Ok(VerificationReport {
        design: design.clone(),
        attacks_enumerated: attacks.len(),
        worst_attack: attack.filter(|_| shed > TOL),
        worst_shed: shed,
        allowed_shed: eps,
        pass: shed <= eps + VERIFY_TOL,
        path: VerifyPath::Enumeration,
        note: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffPoint {
    pub eps: f64,
    pub budget: f64,
    /// `None` when no design meets the cap or the solve failed.
    pub build_cost: Option<f64>,
    pub worst_shed: Option<f64>,
    pub design: Option<Vec<u64>>,
    pub error: Option<String>,
}

/// One delayed-scenario-generation solve per `(ε, Γ)` with `θ ≤ ε` as a
/// hard cap, ε = 0 included.
pub fn sweep_tradeoff(
    inst: &Instance,
    eps_grid: &[f64],
    budgets: &[f64],
    opts: &SolveOptions,
) -> Vec<TradeoffPoint> {
    let opts = SolveOptions {
        force_cap: true,
        ..opts.clone()
    };
    let mut points = Vec::new();
    for &budget in budgets {
        for &eps in eps_grid {
            let case = inst.with_budget(budget).with_allowed_shed(eps);
            let point = match solve_dsg(&case, &opts) {
                Ok(sol) => TradeoffPoint {
                    eps,
                    budget,
                    build_cost: Some(sol.build_cost),
                    worst_shed: Some(sol.theta),
                    design: Some(sol.design.labels(inst)),
                    error: None,
                },
                Err(e) => TradeoffPoint {
                    eps,
                    budget,
                    build_cost: None,
                    worst_shed: None,
                    design: None,
                    error: Some(e.to_string()),
                },
            };
            points.push(point);
        }
    }
    points
}

/// Check that cost never rises with ε and never falls with Γ. A point
/// without a design counts as infinitely expensive.
pub fn check_tradeoff_monotone(points: &[TradeoffPoint]) -> std::result::Result<(), String> {
    let cost = |p: &TradeoffPoint| p.build_cost.unwrap_or(f64::INFINITY);
    for a in points {
        for b in points {
            if a.budget == b.budget && a.eps < b.eps && cost(b) > cost(a) + 1e-6 {
                return Err(format!(
                    "Γ={}: cost {} at ε={} exceeds {} at ε={}",
                    a.budget,
                    cost(b),
                    b.eps,
                    cost(a),
                    a.eps
                ));
            }
            if a.eps == b.eps && a.budget < b.budget && cost(b) < cost(a) - 1e-6 {
                return Err(format!(
                    "ε={}: cost {} at Γ={} is below {} at Γ={}",
                    a.eps,
                    cost(b),
                    b.budget,
                    cost(a),
                    a.budget
                ));
            }
        }
    }
    Ok(())
}

pub fn write_tradeoff_csv(points: &[TradeoffPoint], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["eps", "budget", "build_cost", "worst_shed", "design", "error"])
        .map_err(csv_error)?;
    for p in points {
        let design = p
            .design
            .as_ref()
            .map(|d| d.iter().map(u64::to_string).collect::<Vec<_>>().join(" "))
            .unwrap_or_default();
        out.write_record([
            fmt_num(p.eps),
            fmt_num(p.budget),
            p.build_cost.map(fmt_num).unwrap_or_else(|| "x".into()),
            p.worst_shed.map(fmt_num).unwrap_or_else(|| "x".into()),
            design,
            p.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[derive(Debug, Clone)]
pub struct BenchCase {
    pub name: String,
    pub inst: Instance,
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub methods: Vec<Method>,
    pub timeout: Duration,
    /// Run cells concurrently; timings are then indicative only.
    pub parallel: bool,
    pub solve: SolveOptions,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            methods: vec![Method::Ef, Method::Bd, Method::Dsg],
            timeout: DEFAULT_BENCH_TIMEOUT,
            parallel: false,
            solve: SolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub objective: f64,
    pub build_cost: f64,
    pub theta: f64,
    pub iterations: usize,
    pub scenarios_evaluated: usize,
    pub t_total: f64,
    pub t_rmp: f64,
    pub t_ndp: f64,
    pub t_sp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub instance: String,
    pub edges: usize,
    pub budget: f64,
    pub scenarios: ScenarioCount,
    pub method: Method,
    /// `Err` holds the reason a cell did not finish; it prints as `x`.
    pub result: std::result::Result<BenchResult, String>,
}

pub const BENCH_COLUMNS: [&str; 14] = [
    "instance",
    "N",
    "k",
    "scenarios",
    "method",
    "objective",
    "build_cost",
    "theta",
    "iters",
    "scen_evaluated",
    "t_total",
    "t_rmp",
    "t_ndp",
    "t_sp",
];

impl BenchRow {
    pub fn record(&self) -> Vec<String> {
        let mut r = vec![
            self.instance.clone(),
            self.edges.to_string(),
            fmt_num(self.budget),
            self.scenarios.display_capped(),
            self.method.name().to_string(),
        ];
        match &self.result {
            Ok(b) => r.extend([
                fmt_num(b.objective),
                fmt_num(b.build_cost),
                fmt_num(b.theta),
                b.iterations.to_string(),
                b.scenarios_evaluated.to_string(),
                format!("{:.3}", b.t_total),
                format!("{:.3}", b.t_rmp),
                format!("{:.3}", b.t_ndp),
                format!("{:.3}", b.t_sp),
            ]),
            Err(_) => r.extend(std::iter::repeat_n("x".to_string(), 9)),
        }
        r
    }
}

fn run_cell(case: &BenchCase, method: Method, opts: &BenchOptions) -> BenchRow {
    let solve = opts.solve.clone().with_timeout(opts.timeout);
    let start = Instant::now();
    let outcome = match method {
        Method::Ef => solve_ef(&case.inst, &solve),
        Method::Bd => solve_bd(&case.inst, &solve),
        Method::Dsg => solve_dsg(&case.inst, &solve),
    };
    let wall = start.elapsed().as_secs_f64();
    BenchRow {
        instance: case.name.clone(),
        edges: case.inst.edge_count(),
        budget: case.inst.budget,
        scenarios: count_scenarios(&case.inst, DEFAULT_SCENARIO_CAP),
        method,
        result: outcome
            .map(|s: DesignSolution| BenchResult {
                objective: s.objective,
                build_cost: s.build_cost,
                theta: s.theta,
                iterations: s.iterations,
                scenarios_evaluated: s.scenarios_evaluated,
                t_total: wall,
                t_rmp: s.times.rmp,
                t_ndp: s.times.ndp,
                t_sp: s.times.sp,
            })
            .map_err(|e| e.to_string()),
    }
}

/// One row per `(case, method)`, in case-major order.
pub fn bench(cases: &[BenchCase], opts: &BenchOptions) -> Vec<BenchRow> {
    let cells: Vec<(&BenchCase, Method)> = cases
        .iter()
        .flat_map(|c| opts.methods.iter().map(move |&m| (c, m)))
        .collect();
    if opts.parallel {
        cells.par_iter().map(|&(c, m)| run_cell(c, m, opts)).collect()
    } else {
        cells.iter().map(|&(c, m)| run_cell(c, m, opts)).collect()
    }
}

pub fn write_bench_csv(rows: &[BenchRow], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(BENCH_COLUMNS).map_err(csv_error)?;
    for row in rows {
        out.write_record(row.record()).map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

/// The generated benchmark suite: small fixtures through a replicated
/// network whose scenario count only has a lower bound.
pub fn default_suite(seed: u64) -> Result<Vec<BenchCase>> {
    let mut cases = vec![
        BenchCase {
            name: "tri3a".into(),
            inst: tri3a(),
        },
        BenchCase {
            name: "tri3a-k2".into(),
            inst: tri3a().with_budget(2.0),
        },
    ];
    let specs = [
        ("grid9", GeneratorSpec::new(Family::Grid, 9, seed)),
        (
            "rand8-k2",
            GeneratorSpec {
                extra_edges: 4,
                budget: 2.0,
                ..GeneratorSpec::new(Family::Random, 8, seed)
            },
        ),
        (
            "rep20x4-k1",
            GeneratorSpec {
                extra_edges: 15,
                factor: 4,
                budget: 1.0,
                ..GeneratorSpec::new(Family::Replicated, 20, seed)
            },
        ),
        (
            "rep20x4-k2",
            GeneratorSpec {
                extra_edges: 15,
                factor: 4,
                budget: 2.0,
                ..GeneratorSpec::new(Family::Replicated, 20, seed)
            },
        ),
        (
            "rep20x4-k4",
            GeneratorSpec {
                extra_edges: 15,
                factor: 4,
                budget: 4.0,
                ..GeneratorSpec::new(Family::Replicated, 20, seed)
            },
        ),
    ];
    for (name, spec) in specs {
        cases.push(BenchCase {
            name: name.into(),
            inst: generate_instance(&spec)?,
        });
    }
    Ok(cases)
}

/// Solve result as a JSON document. Timings sit under `timings` so the rest
/// is reproducible byte for byte.
pub fn solution_json(
    inst: &Instance,
    name: &str,
    sol: &DesignSolution,
    verification: Option<&VerificationReport>,
) -> Value {
    json!({
        "instance": name,
        "method": sol.method,
        "objective": sol.objective,
        "build_cost": sol.build_cost,
        "theta": sol.theta,
        "design": sol.design.labels(inst),
        "worst_attack": sol.worst_attack.as_ref().map(|a| a.labels(inst)),
        "iterations": sol.iterations,
        "master_solves": sol.master_solves,
        "scenarios_evaluated": sol.scenarios_evaluated,
        "scenario_count": count_scenarios(inst, DEFAULT_SCENARIO_CAP).display_capped(),
        "cuts": sol.cuts,
        "budget": inst.budget,
        "penalty": inst.penalty(),
        "allowed_shed": inst.allowed_shed,
        "verification": verification.map(|v| v.to_json(inst)),
        "theta_verified": verification.map(|v| (v.worst_shed - sol.theta).abs() <= 1e-6),
        "timings": sol.times,
    })
}

/// Iteration log, one JSON object per line.
pub fn write_log(log: &[IterationRecord], mut w: impl Write) -> Result<()> {
    for rec in log {
        let line = serde_json::to_string(rec).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}
