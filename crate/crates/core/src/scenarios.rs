//! Enumeration and counting of budget-feasible attacks.
//!
//! Attacks are produced by cardinality, and within one cardinality in
//! lexicographic order of edge ids. The empty attack is never produced.

use std::fmt;

use crate::error::{Error, Result};
use crate::instance::{Attack, Design, EdgeId, Instance, TOL};

pub const DEFAULT_SCENARIO_CAP: u64 = 10_000_000;

/// Number of nonempty budget-feasible attacks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioCount {
    Exact(u128),
    /// More than this many.
    Above(u128),
}

impl ScenarioCount {
    pub fn exceeds(&self, cap: u64) -> bool {
        match *self {
            ScenarioCount::Exact(n) => n > u128::from(cap),
            ScenarioCount::Above(n) => n >= u128::from(cap),
        }
    }

    pub fn exact(&self) -> Option<u128> {
        match *self {
            ScenarioCount::Exact(n) => Some(n),
            ScenarioCount::Above(_) => None,
        }
    }

    /// Counts above the default cap are shown as `>10000000`.
    pub fn display_capped(&self) -> String {
        let cap = u128::from(DEFAULT_SCENARIO_CAP);
        match *self {
            ScenarioCount::Exact(n) if n <= cap => n.to_string(),
            ScenarioCount::Exact(_) => format!(">{cap}"),
            ScenarioCount::Above(n) => format!(">{}", n.min(cap)),
        }
    }
}

impl fmt::Display for ScenarioCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioCount::Exact(n) => write!(f, "{n}"),
            ScenarioCount::Above(n) => write!(f, ">{n}"),
        }
    }
}

fn affordable(inst: &Instance, cost: f64) -> bool {
    cost <= inst.budget + TOL
}

/// Common attack cost when all edges in `edges` share one, else `None`.
fn uniform_cost(inst: &Instance, edges: &[EdgeId]) -> Option<f64> {
    let first = inst.edge(*edges.first()?).attack_cost;
    edges
        .iter()
        .all(|&e| (inst.edge(e).attack_cost - first).abs() <= TOL)
        .then_some(first)
}

fn binomial(n: u128, k: u128) -> u128 {
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Count attacks over `edges`, stopping once the count passes `cap`.
pub fn count_attacks(inst: &Instance, edges: &[EdgeId], cap: u64) -> ScenarioCount {
    if edges.is_empty() {
        return ScenarioCount::Exact(0);
    }
    if let Some(r) = uniform_cost(inst, edges) {
        let kmax = ((inst.budget + TOL) / r).floor().max(0.0) as u128;
        let m = edges.len() as u128;
        let total = (1..=kmax.min(m)).fold(0u128, |acc, k| acc.saturating_add(binomial(m, k)));
        return ScenarioCount::Exact(total);
    }
    let mut costs: Vec<f64> = edges.iter().map(|&e| inst.edge(e).attack_cost).collect();
    costs.sort_by(f64::total_cmp);
    let mut count = 0u128;
    let limit = u128::from(cap);
    let complete = count_dfs(inst, &costs, 0, 0.0, &mut count, limit);
    if complete {
        ScenarioCount::Exact(count)
    } else {
        ScenarioCount::Above(count)
    }
}

// Costs sorted ascending, so once one edge is unaffordable all later ones are.
fn count_dfs(inst: &Instance, costs: &[f64], start: usize, spent: f64, count: &mut u128, limit: u128) -> bool {
    for k in start..costs.len() {
        let total = spent + costs[k];
        if !affordable(inst, total) {
            break;
        }
        *count += 1;
        if *count > limit {
            return false;
        }
        if !count_dfs(inst, costs, k + 1, total, count, limit) {
            return false;
        }
    }
    true
}

/// Nonempty budget-feasible attacks over all edges.
pub fn count_scenarios(inst: &Instance, cap: u64) -> ScenarioCount {
    let edges: Vec<EdgeId> = inst.edge_ids().collect();
    count_attacks(inst, &edges, cap)
}

/// Visit every nonempty affordable subset of `edges` by cardinality, then
/// lexicographically. Returning `false` from `visit` stops the walk.
pub fn for_each_attack(
    inst: &Instance,
    edges: &[EdgeId],
    mut visit: impl FnMut(Attack) -> bool,
) {
    let n = inst.edge_count();
    let mut chosen: Vec<EdgeId> = Vec::new();
    for size in 1..=edges.len() {
        let mut any = false;
        if !combinations(inst, edges, size, 0, 0.0, &mut chosen, &mut any, &mut |set| {
            visit(Attack::from_edges(n, set.iter().copied()))
        }) {
            return;
        }
        if !any {
            // nothing affordable at this size means nothing at larger sizes
            return;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn combinations(
    inst: &Instance,
    edges: &[EdgeId],
    size: usize,
    start: usize,
    spent: f64,
    chosen: &mut Vec<EdgeId>,
    any: &mut bool,
    visit: &mut impl FnMut(&[EdgeId]) -> bool,
) -> bool {
    if chosen.len() == size {
        *any = true;
        return visit(chosen);
    }
    let remaining = size - chosen.len();
    for k in start..=edges.len().saturating_sub(remaining) {
        let total = spent + inst.edge(edges[k]).attack_cost;
        if !affordable(inst, total) {
            continue;
        }
        chosen.push(edges[k]);
        let go_on = combinations(inst, edges, size, k + 1, total, chosen, any, visit);
        chosen.pop();
        if !go_on {
            return false;
        }
    }
    true
}

fn collect(inst: &Instance, edges: &[EdgeId], cap: u64) -> Result<Vec<Attack>> {
    let count = count_attacks(inst, edges, cap);
    if count.exceeds(cap) {
        return Err(Error::ScenarioCap {
            count: count.display_capped(),
            cap,
            hint: "",
        });
    }
    let mut out = Vec::new();
    for_each_attack(inst, edges, |a| {
        out.push(a);
        true
    });
    Ok(out)
}

/// All nonempty budget-feasible attacks over every edge of the instance.
pub fn enumerate_scenarios(inst: &Instance, cap: u64) -> Result<Vec<Attack>> {
    let edges: Vec<EdgeId> = inst.edge_ids().collect();
    collect(inst, &edges, cap)
}

/// All nonempty budget-feasible attacks on the built edges of `design`.
pub fn enumerate_attacks_on(inst: &Instance, design: &Design, cap: u64) -> Result<Vec<Attack>> {
    let edges: Vec<EdgeId> = design.edges().collect();
    collect(inst, &edges, cap)
}
