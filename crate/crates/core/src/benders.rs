//! Restricted master problem and the two decomposition drivers: Benders
//! decomposition over the full scenario list and delayed scenario
//! generation driven by a separation oracle.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{Attack, Design, Instance, TOL};
use crate::lp::{Relation, Sense, VarId};
use crate::milp::{solve_milp_with, MilpModel, MilpOptions, MilpStatus};
use crate::ndp::{self, SeparationResult};
use crate::scenarios::DEFAULT_SCENARIO_CAP;
use crate::subproblem::{
    make_cut, solve_psp, solve_psp_many, BendersCut, CutPool, SubproblemResult,
};

pub use crate::scenarios::{count_scenarios, enumerate_scenarios, ScenarioCount};

/// Absolute tolerance for calling a scenario violated.
pub const VIOLATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ef,
    Bd,
    Dsg,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ef => "ef",
            Method::Bd => "bd",
            Method::Dsg => "dsg",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ef" => Ok(Method::Ef),
            "bd" => Ok(Method::Bd),
            "dsg" => Ok(Method::Dsg),
            _ => Err(Error::Input(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleChoice {
    General,
    Strong,
    /// Strong when some shed is permitted or the penalty is the default,
    /// general otherwise.
    Auto,
}

impl std::str::FromStr for OracleChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(OracleChoice::General),
            "strong" => Ok(OracleChoice::Strong),
            "auto" => Ok(OracleChoice::Auto),
            _ => Err(Error::Input(format!("unknown oracle {s:?}"))),
        }
    }
}

impl OracleChoice {
    pub fn uses_strong(self, inst: &Instance, capped: bool) -> bool {
        match self {
            OracleChoice::General => false,
            OracleChoice::Strong => true,
            OracleChoice::Auto => capped || inst.penalty_is_default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Largest scenario enumeration accepted; `None` picks the method default.
    pub scenario_cap: Option<u64>,
    pub oracle: OracleChoice,
    pub threads: usize,
    pub deadline: Option<Instant>,
    /// Treat the allowed shed as a hard cap even when it is zero.
    pub force_cap: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            scenario_cap: None,
            oracle: OracleChoice::Auto,
            threads: 1,
            deadline: None,
            force_cap: false,
        }
    }
}

impl SolveOptions {
    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.deadline = Some(Instant::now() + timeout);
        self
    }

    /// Shed cap in force, if the solve runs in shortage-cap mode.
    pub fn shed_cap(&self, inst: &Instance) -> Option<f64> {
        if self.force_cap {
            Some(inst.allowed_shed)
        } else {
            inst.shortage_cap()
        }
    }

    pub(crate) fn milp(&self) -> MilpOptions {
        MilpOptions {
            node_limit: None,
            deadline: self.deadline,
        }
    }

    fn check_deadline(&self) -> Result<()> {
        match self.deadline {
            Some(d) if Instant::now() >= d => Err(Error::Timeout),
            _ => Ok(()),
        }
    }
}

/// Wall-clock seconds per phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PhaseTimes {
    pub total: f64,
    pub rmp: f64,
    pub ndp: f64,
    pub sp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Step {
    /// The design fails without any attack.
    Nominal,
    /// Some listed scenario produced a violated cut.
    Recheck,
    /// The oracle produced a new scenario.
    Oracle,
    Optimal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    /// Oracle round (DSG) or master solve index (BD).
    pub t: usize,
    pub rmp_objective: f64,
    pub theta: f64,
    pub severity: Option<f64>,
    pub scenarios: usize,
    pub cuts_added: usize,
    pub step: Step,
    pub t_rmp: f64,
    pub t_ndp: f64,
    pub t_sp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignSolution {
    pub method: Method,
    pub design: Design,
    /// Build cost plus `p·θ`; build cost alone in shortage-cap mode.
    pub objective: f64,
    pub build_cost: f64,
    /// Worst shed of the design over the method's scenarios.
    pub theta: f64,
    pub worst_attack: Option<Attack>,
    pub iterations: usize,
    pub master_solves: usize,
    pub scenarios_evaluated: usize,
    pub cuts: usize,
    pub times: PhaseTimes,
    pub log: Vec<IterationRecord>,
}

/// Objective of `design` with worst shed `theta`: build cost plus `p·θ`,
/// or build cost alone under a shed cap.
pub fn design_objective(inst: &Instance, design: &Design, theta: f64, cap: Option<f64>) -> f64 {
    let build = inst.build_cost(design);
    if cap.is_some() {
        build
    } else {
        build + inst.penalty() * theta
    }
}

#[derive(Debug, Clone)]
pub struct RmpModel {
    pub milp: MilpModel,
    /// One variable per edge; existing edges are fixed at one.
    pub x: Vec<VarId>,
    pub theta: VarId,
}

/// Master problem over `(x, θ)` with one row per cut, in the mode the
/// instance selects.
pub fn build_rmp(inst: &Instance, cuts: &[BendersCut]) -> RmpModel {
    build_rmp_capped(inst, cuts, inst.shortage_cap())
}

/// Master problem whose objective drops `p·θ` and adds `θ ≤ cap` when a
/// cap is given.
pub fn build_rmp_capped(inst: &Instance, cuts: &[BendersCut], cap: Option<f64>) -> RmpModel {
    let mut m = MilpModel::new(Sense::Minimize);
    let x: Vec<VarId> = inst
        .edges
        .iter()
        .map(|e| {
            let v = m.add_binary(format!("x{}", e.label), e.build_cost);
            if e.existing {
                m.lp.set_bounds(v, 1.0, 1.0);
            }
            v
        })
        .collect();
    let theta_cost = if cap.is_some() { 0.0 } else { inst.penalty() };
    let theta = m.lp.add_var("theta", 0.0, f64::INFINITY, theta_cost);
    for (k, cut) in cuts.iter().enumerate() {
        let mut row: Vec<(VarId, f64)> = cut
            .coefficients
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(e, &c)| (x[e], c))
            .collect();
        row.push((theta, -1.0));
        let shift: f64 = cut
            .coefficients
            .iter()
            .zip(cut.attack.bits())
            .filter(|(_, &d)| d)
            .map(|(c, _)| c)
            .sum();
        m.lp.add_row(format!("cut{k}"), row, Relation::Le, shift - cut.constant);
    }
    if let Some(eps) = cap {
        m.lp.add_row("shed_cap", vec![(theta, 1.0)], Relation::Le, eps);
    }
    RmpModel { milp: m, x, theta }
}

/// Cut pool, scenario list and timers shared by the drivers.
#[derive(Debug, Clone, Default)]
pub struct MasterState {
    pub pool: CutPool,
    pub scenarios: Vec<Attack>,
    pub t: usize,
    pub incumbent: Option<(Design, f64)>,
    pub times: PhaseTimes,
    pub log: Vec<IterationRecord>,
    pub master_solves: usize,
}

struct MasterSolution {
    design: Design,
    theta: f64,
    objective: f64,
}

impl MasterState {
    fn solve_master(&mut self, inst: &Instance, opts: &SolveOptions) -> Result<MasterSolution> {
        opts.check_deadline()?;
        let start = Instant::now();
        let rmp = build_rmp_capped(inst, self.pool.cuts(), opts.shed_cap(inst));
        let sol = solve_milp_with(&rmp.milp, &opts.milp())?;
        self.times.rmp += start.elapsed().as_secs_f64();
        self.master_solves += 1;
        if sol.status == MilpStatus::Infeasible {
            return Err(Error::Solver(format!(
                "no design keeps the worst shed within {}",
                inst.allowed_shed
            )));
        }
        if sol.status != MilpStatus::Optimal {
            return Err(Error::Solver(format!("master problem {:?}", sol.status)));
        }
        let design = Design::from_bits(rmp.x.iter().map(|&v| sol.flag(v)).collect());
        let theta = sol.value(rmp.theta).max(0.0);
        self.incumbent = Some((design.clone(), theta));
        Ok(MasterSolution {
            design,
            theta,
            objective: sol.objective,
        })
    }

    fn timed_psp(
        &mut self,
        inst: &Instance,
        design: &Design,
        attacks: &[Attack],
        threads: usize,
    ) -> Result<Vec<SubproblemResult>> {
        let start = Instant::now();
        let out = solve_psp_many(inst, design, attacks, threads);
        self.times.sp += start.elapsed().as_secs_f64();
        out
    }

    fn record(&mut self, master: &MasterSolution, severity: Option<f64>, cuts_added: usize, step: Step, before: PhaseTimes) {
        self.log.push(IterationRecord {
            t: self.t,
            rmp_objective: master.objective,
            theta: master.theta,
            severity,
            scenarios: self.scenarios.len(),
            cuts_added,
            step,
            t_rmp: self.times.rmp - before.rmp,
            t_ndp: self.times.ndp - before.ndp,
            t_sp: self.times.sp - before.sp,
        });
    }
}

/// Shed at which a scenario counts as violated at master value `theta`.
fn violation_level(cap: Option<f64>, theta: f64) -> f64 {
    cap.unwrap_or(theta) + VIOLATION_TOL
}

/// Benders decomposition over every budget-feasible attack.
pub fn solve_bd(inst: &Instance, opts: &SolveOptions) -> Result<DesignSolution> {
    let start = Instant::now();
    let mut scenarios =
        enumerate_scenarios(inst, opts.scenario_cap.unwrap_or(DEFAULT_SCENARIO_CAP))?;
    if scenarios.is_empty() {
        scenarios.push(Attack::empty(inst.edge_count()));
    }
    let mut state = MasterState::default();
    let mut producing = vec![false; scenarios.len()];
    loop {
        state.t += 1;
        let before = state.times;
        let master = state.solve_master(inst, opts)?;
        opts.check_deadline()?;
        let results = state.timed_psp(inst, &master.design, &scenarios, opts.threads)?;
        let level = violation_level(opts.shed_cap(inst), master.theta);
        let mut added = 0;
        let mut worst: Option<(f64, usize)> = None;
        for (s, res) in results.iter().enumerate() {
            if worst.is_none_or(|(g, _)| res.gamma > g + 1e-12) {
                worst = Some((res.gamma, s));
            }
            if res.gamma > level && state.pool.insert(make_cut(res, inst)) {
                added += 1;
                producing[s] = true;
            }
        }
        let violated = results.iter().any(|r| r.gamma > level);
        if violated && added == 0 {
            return Err(Error::Solver("violated scenario produced no new cut".into()));
        }
        let (theta, s) = worst.expect("scenario list is nonempty");
        if added > 0 {
            state.record(&master, Some(theta), added, Step::Recheck, before);
            continue;
        }
        state.record(&master, Some(theta), 0, Step::Optimal, before);
        state.times.total = start.elapsed().as_secs_f64();
        let worst_attack = (theta > TOL).then(|| scenarios[s].restricted_to(&master.design));
        return Ok(finish(
            inst,
            opts,
            Method::Bd,
            master.design,
            theta,
            worst_attack,
            state.t,
            producing.iter().filter(|&&p| p).count(),
            state,
        ));
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    inst: &Instance,
    opts: &SolveOptions,
    method: Method,
    design: Design,
    theta: f64,
    worst_attack: Option<Attack>,
    iterations: usize,
    scenarios_evaluated: usize,
    state: MasterState,
) -> DesignSolution {
    DesignSolution {
        method,
        objective: design_objective(inst, &design, theta, opts.shed_cap(inst)),
        build_cost: inst.build_cost(&design),
        design,
        theta,
        worst_attack,
        iterations,
        master_solves: state.master_solves,
        scenarios_evaluated,
        cuts: state.pool.len(),
        times: state.times,
        log: state.log,
    }
}

/// Outcome of one oracle round at a master solution.
enum OracleOutcome {
    /// A new violated attack with its recourse solution.
    Violated(Attack),
    /// No violated attack; the exact worst shed when known.
    Clean { worst: f64, attack: Option<Attack> },
}

fn run_oracle(
    inst: &Instance,
    design: &Design,
    theta: f64,
    opts: &SolveOptions,
    state: &mut MasterState,
) -> Result<(OracleOutcome, f64)> {
    let cap = opts.shed_cap(inst);
    let level = violation_level(cap, theta);
    let milp = opts.milp();
    let general = |state: &mut MasterState| -> Result<SeparationResult> {
        let start = Instant::now();
        let r = ndp::solve_ndp_general_with(inst, design, &milp);
        state.times.ndp += start.elapsed().as_secs_f64();
        r
    };
    let classify = |sep: SeparationResult| {
        let attack = sep.attack.expect("general oracle always returns an attack");
        if sep.severity > level {
            OracleOutcome::Violated(attack)
        } else {
            OracleOutcome::Clean {
                worst: sep.severity,
                attack: (sep.severity > TOL).then_some(attack),
            }
        }
    };

    if !opts.oracle.uses_strong(inst, cap.is_some()) {
        let sep = general(state)?;
        let severity = sep.severity;
        return Ok((classify(sep), severity));
    }

    let demand = inst.total_demand();
    let shed = cap.unwrap_or(theta);
    let threshold = demand * (1.0 - shed);
    let start = Instant::now();
    let sep = ndp::solve_ndp_strong_with(inst, design, threshold, &milp);
    state.times.ndp += start.elapsed().as_secs_f64();
    let sep = sep?;
    let severity = sep.severity;
    if let Some(attack) = sep.attack {
        let start = Instant::now();
        let gamma = solve_psp(inst, design, &attack)?.gamma;
        state.times.sp += start.elapsed().as_secs_f64();
        if gamma > level {
            return Ok((OracleOutcome::Violated(attack), severity));
        }
    } else if shed <= TOL {
        // every attack leaves the full demand routable
        return Ok((
            OracleOutcome::Clean {
                worst: 0.0,
                attack: None,
            },
            severity,
        ));
    }
    // a residual cut of at least (1 − shed)·D does not bound the
    // proportional shed, so confirm with the exact oracle
    let sep = general(state)?;
    let severity = sep.severity;
    Ok((classify(sep), severity))
}

/// Delayed scenario generation.
///
/// Each round first solves the master problem over the listed scenarios to
/// optimality, re-solving after every batch of violated cuts (the nominal
/// no-attack case included), and only then asks the oracle for a new
/// scenario. Every round therefore adds a scenario or terminates.
pub fn solve_dsg(inst: &Instance, opts: &SolveOptions) -> Result<DesignSolution> {
    let start = Instant::now();
    let mut state = MasterState::default();
    let empty = Attack::empty(inst.edge_count());
    loop {
        state.t += 1;
        let master = loop {
            let before = state.times;
            let master = state.solve_master(inst, opts)?;
            let level = violation_level(opts.shed_cap(inst), master.theta);
            let nominal = state.timed_psp(inst, &master.design, std::slice::from_ref(&empty), 1)?;
            if nominal[0].gamma > level {
                if !state.pool.insert(make_cut(&nominal[0], inst)) {
                    return Err(Error::Solver("nominal cut repeated".into()));
                }
                state.record(&master, None, 1, Step::Nominal, before);
                continue;
            }
            let listed = state.scenarios.clone();
            let results = state.timed_psp(inst, &master.design, &listed, opts.threads)?;
            let mut added = 0;
            for res in results.iter().filter(|r| r.gamma > level) {
                if state.pool.insert(make_cut(res, inst)) {
                    added += 1;
                }
            }
            if added == 0 && results.iter().any(|r| r.gamma > level) {
                return Err(Error::Solver("violated scenario produced no new cut".into()));
            }
            if added > 0 {
                state.record(&master, None, added, Step::Recheck, before);
                continue;
            }
            break (master, before);
        };
        let (master, before) = master;
        opts.check_deadline()?;
        let (outcome, severity) = run_oracle(inst, &master.design, master.theta, opts, &mut state)?;
        match outcome {
            OracleOutcome::Violated(attack) => {
                if state.scenarios.contains(&attack) {
                    return Err(Error::Solver("oracle repeated a listed scenario".into()));
                }
                let res = state.timed_psp(inst, &master.design, std::slice::from_ref(&attack), 1)?;
                state.pool.insert(make_cut(&res[0], inst));
                state.scenarios.push(attack);
                state.record(&master, Some(severity), 1, Step::Oracle, before);
            }
            OracleOutcome::Clean { worst, attack } => {
                state.record(&master, Some(severity), 0, Step::Optimal, before);
                state.times.total = start.elapsed().as_secs_f64();
                let evaluated = state.scenarios.len();
                let t = state.t;
                return Ok(finish(
                    inst,
                    opts,
                    Method::Dsg,
                    master.design,
                    worst,
                    attack,
                    t,
                    evaluated,
                    state,
                ));
            }
        }
    }
}

/// Exact worst shed of `design` over `scenarios` (the no-attack case
/// included), with the attaining scenario.
pub fn worst_over(inst: &Instance, design: &Design, scenarios: &[Attack], threads: usize) -> Result<(f64, Option<Attack>)> {
    let nominal = solve_psp(inst, design, &Attack::empty(inst.edge_count()))?.gamma;
    let mut worst = (nominal, None);
    for res in solve_psp_many(inst, design, scenarios, threads)? {
        if res.gamma > worst.0 + 1e-12 {
            worst = (res.gamma, Some(res.attack));
        }
    }
    if worst.0 <= TOL {
        worst.1 = None;
    }
    Ok(worst)
}
