//! Mixed-binary linear programs solved by best-first branch and bound over
//! LP relaxations from [`crate::lp`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::lp::{self, LpModel, LpStatus, Sense, VarId};

pub const INTEGRALITY_TOL: f64 = 1e-6;
pub const FATHOM_TOL: f64 = 1e-9;
pub const BRUTEFORCE_MAX_BINARIES: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    pub lp: LpModel,
    binaries: Vec<VarId>,
}

impl MilpModel {
    pub fn new(sense: Sense) -> Self {
        Self {
            lp: LpModel::new(sense),
            binaries: Vec::new(),
        }
    }

    pub fn from_lp(lp: LpModel) -> Self {
        Self {
            lp,
            binaries: Vec::new(),
        }
    }

    pub fn add_binary(&mut self, name: impl Into<String>, cost: f64) -> VarId {
        let v = self.lp.add_var(name, 0.0, 1.0, cost);
        self.binaries.push(v);
        v
    }

    /// Restrict an existing variable to {0, 1}, intersecting its bounds with [0, 1].
    pub fn mark_binary(&mut self, v: VarId) {
        let var = self.lp.var(v);
        let (lo, hi) = (var.lower.max(0.0), var.upper.min(1.0));
        self.lp.set_bounds(v, lo, hi);
        if !self.binaries.contains(&v) {
            self.binaries.push(v);
        }
    }

    pub fn binaries(&self) -> &[VarId] {
        &self.binaries
    }

    pub fn is_binary(&self, v: VarId) -> bool {
        self.binaries.contains(&v)
    }

    pub fn check(&self) -> Result<()> {
        self.lp.check()?;
        for &b in &self.binaries {
            let v = self.lp.var(b);
            if v.lower < 0.0 || v.upper > 1.0 {
                return Err(Error::Solver(format!(
                    "binary {} has bounds [{}, {}]",
                    v.name, v.lower, v.upper
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub status: MilpStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    /// LP relaxations solved.
    pub nodes: usize,
    pub best_bound: f64,
    /// Bound of each node taken from the queue, in processing order.
    pub bound_trace: Vec<f64>,
    /// Incumbent objective after each improvement.
    pub incumbent_trace: Vec<f64>,
}

impl MilpSolution {
    fn empty(status: MilpStatus, n: usize, nodes: usize) -> Self {
        Self {
            status,
            values: vec![0.0; n],
            objective: f64::NAN,
            nodes,
            best_bound: f64::NAN,
            bound_trace: Vec::new(),
            incumbent_trace: Vec::new(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == MilpStatus::Optimal
    }

    pub fn value(&self, v: VarId) -> f64 {
        self.values[v.0]
    }

    /// Binary value rounded to a bool.
    pub fn flag(&self, v: VarId) -> bool {
        self.values[v.0] > 0.5
    }
}

#[derive(Debug, Clone, Default)]
pub struct MilpOptions {
    pub node_limit: Option<usize>,
    pub deadline: Option<Instant>,
}

struct Node {
    /// Bound in minimization terms.
    bound: f64,
    seq: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    values: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap is a max-heap: the smallest bound, then the oldest node,
    // must compare greatest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

pub fn solve_milp(model: &MilpModel) -> Result<MilpSolution> {
    solve_milp_with(model, &MilpOptions::default())
}

pub fn solve_milp_with(model: &MilpModel, opts: &MilpOptions) -> Result<MilpSolution> {
    model.check()?;
    let lp = &model.lp;
    let n = lp.num_vars();
    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut nodes = 0usize;
    let mut seq = 0usize;

    let relax = |lower: &[f64], upper: &[f64], nodes: &mut usize| -> Result<lp::LpSolution> {
        if let Some(deadline) = opts.deadline {
            if Instant::now() >= deadline {
                return Err(Error::Timeout);
            }
        }
        if let Some(limit) = opts.node_limit {
            if *nodes >= limit {
                return Err(Error::Solver(format!("node limit {limit} reached")));
            }
        }
        *nodes += 1;
        Ok(lp::solve_with_bounds(lp, lower, upper)?)
    };

    let lower: Vec<f64> = lp.vars().iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = lp.vars().iter().map(|v| v.upper).collect();
    let root = relax(&lower, &upper, &mut nodes)?;
    match root.status {
        LpStatus::Infeasible => return Ok(MilpSolution::empty(MilpStatus::Infeasible, n, nodes)),
        LpStatus::Unbounded => return Ok(MilpSolution::empty(MilpStatus::Unbounded, n, nodes)),
        LpStatus::Optimal => {}
    }

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut incumbent_trace = Vec::new();
    let mut bound_trace = Vec::new();
    let mut heap = BinaryHeap::new();

    let root_bound = sign * root.objective;
    if branch_variable(model, &root.primal).is_none() {
        incumbent_trace.push(root.objective);
        incumbent = Some((root_bound, root.primal));
    } else {
        heap.push(Node {
            bound: root_bound,
            seq,
            lower,
            upper,
            values: root.primal,
        });
        seq += 1;
    }

    while let Some(node) = heap.pop() {
        let cutoff = incumbent.as_ref().map_or(f64::INFINITY, |(z, _)| *z);
        if node.bound >= cutoff - FATHOM_TOL {
            // best-first: every remaining node is at least as bad
            bound_trace.push(sign * cutoff);
            heap.clear();
            break;
        }
        bound_trace.push(sign * node.bound);
        let var = branch_variable(model, &node.values).expect("queued nodes are fractional");
        for fix in [0.0, 1.0] {
            let mut lower = node.lower.clone();
            let mut upper = node.upper.clone();
            lower[var.0] = fix;
            upper[var.0] = fix;
            let sol = relax(&lower, &upper, &mut nodes)?;
            match sol.status {
                LpStatus::Infeasible => continue,
                LpStatus::Unbounded => {
                    return Err(Error::Solver("unbounded relaxation below the root".into()))
                }
                LpStatus::Optimal => {}
            }
            let bound = sign * sol.objective;
            let cutoff = incumbent.as_ref().map_or(f64::INFINITY, |(z, _)| *z);
            if bound >= cutoff - FATHOM_TOL {
                continue;
            }
            if branch_variable(model, &sol.primal).is_none() {
                incumbent_trace.push(sol.objective);
                incumbent = Some((bound, sol.primal));
            } else {
                heap.push(Node {
                    bound,
                    seq,
                    lower,
                    upper,
                    values: sol.primal,
                });
                seq += 1;
            }
        }
    }

    match incumbent {
        None => {
            let mut sol = MilpSolution::empty(MilpStatus::Infeasible, n, nodes);
            sol.bound_trace = bound_trace;
            Ok(sol)
        }
        Some((z, mut values)) => {
            snap_binaries(model, &mut values);
            Ok(MilpSolution {
                status: MilpStatus::Optimal,
                objective: lp.objective_value(&values),
                values,
                nodes,
                best_bound: sign * z,
                bound_trace,
                incumbent_trace,
            })
        }
    }
}

/// Most fractional binary; ties go to the lowest variable index.
fn branch_variable(model: &MilpModel, values: &[f64]) -> Option<VarId> {
    let mut best: Option<(VarId, f64)> = None;
    for &b in &model.binaries {
        let x = values[b.0];
        let frac = (x - x.floor()).min(x.ceil() - x);
        if frac <= INTEGRALITY_TOL {
            continue;
        }
        match best {
            Some((v, f)) if f > frac || (f == frac && v < b) => {}
            _ => best = Some((b, frac)),
        }
    }
    best.map(|(v, _)| v)
}

fn snap_binaries(model: &MilpModel, values: &mut [f64]) {
    for &b in &model.binaries {
        values[b.0] = values[b.0].round();
    }
}

/// Exhaustive enumeration of the binary assignments, each completed by an
/// LP over the continuous variables. Test oracle for [`solve_milp`].
pub fn solve_bruteforce(model: &MilpModel) -> Result<MilpSolution> {
    model.check()?;
    let k = model.binaries.len();
    if k > BRUTEFORCE_MAX_BINARIES {
        return Err(Error::SizeLimit(format!(
            "{k} binaries, limit {BRUTEFORCE_MAX_BINARIES}"
        )));
    }
    let lp = &model.lp;
    let n = lp.num_vars();
    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let base_lower: Vec<f64> = lp.vars().iter().map(|v| v.lower).collect();
    let base_upper: Vec<f64> = lp.vars().iter().map(|v| v.upper).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut solves = 0;
    let mut unbounded = false;
    for mask in 0u64..(1u64 << k) {
        let mut lower = base_lower.clone();
        let mut upper = base_upper.clone();
        let mut admissible = true;
        for (bit, &b) in model.binaries.iter().enumerate() {
            let x = if mask & (1 << bit) != 0 { 1.0 } else { 0.0 };
            if x < lower[b.0] - INTEGRALITY_TOL || x > upper[b.0] + INTEGRALITY_TOL {
                admissible = false;
                break;
            }
            lower[b.0] = x;
            upper[b.0] = x;
        }
        if !admissible {
            continue;
        }
        solves += 1;
        let sol = lp::solve_with_bounds(lp, &lower, &upper)?;
        match sol.status {
            LpStatus::Infeasible => {}
            LpStatus::Unbounded => unbounded = true,
            LpStatus::Optimal => {
                let z = sign * sol.objective;
                if best.as_ref().is_none_or(|(bz, _)| z < *bz - FATHOM_TOL) {
                    best = Some((z, sol.primal));
                }
            }
        }
    }
    if unbounded {
        return Ok(MilpSolution::empty(MilpStatus::Unbounded, n, solves));
    }
    Ok(match best {
        None => MilpSolution::empty(MilpStatus::Infeasible, n, solves),
        Some((z, values)) => MilpSolution {
            status: MilpStatus::Optimal,
            objective: sign * z,
            values,
            nodes: solves,
            best_bound: sign * z,
            bound_trace: Vec::new(),
            incumbent_trace: Vec::new(),
        },
    })
}
