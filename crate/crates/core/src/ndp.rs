//! Separation oracles: given a design, find a budget-feasible attack that
//! hurts it the most.
//!
//! * [`solve_ndp_general`] maximizes the shed fraction through the dual of
//!   the recourse LP, with big-M rows switching off the dual constraint of
//!   every attacked arc.
//! * [`solve_ndp_strong`] minimizes the capacity of an `s`-`t` cut in the
//!   augmented network, where attacked edges cross the cut for free.
//! * [`solve_ndp_bruteforce`] enumerates attacks and solves each recourse LP.

use crate::error::{Error, Result};
use crate::instance::{Attack, Design, EdgeId, Instance, TOL};
use crate::lp::{Relation, Sense, VarId};
use crate::maxflow::{build_augmented, max_flow, ArcTag, FlowGraph};
use crate::milp::{solve_milp_with, MilpModel, MilpOptions, MilpStatus};
use crate::scenarios::enumerate_attacks_on;
use crate::subproblem::solve_psp;

/// Tolerance on severity comparisons against a threshold.
pub const SEPARATION_TOL: f64 = 1e-6;
pub const BRUTEFORCE_MAX_ATTACKS: u64 = 1_000_000;
/// Node subsets are enumerated exactly up to this many nonzero injections.
const EXACT_BOX_NODES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    General,
    Strong,
    BruteForce,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationResult {
    pub attack: Option<Attack>,
    /// Worst shed fraction (general, brute force) or smallest residual cut
    /// capacity (strong).
    pub severity: f64,
    pub mode: OracleMode,
    /// Cut indicators of the strong model, one per augmented arc.
    pub omega: Vec<f64>,
    pub milp_nodes: usize,
}

impl SeparationResult {
    /// Lower bound on the shed fraction of the returned attack.
    pub fn shed_lower_bound(&self, inst: &Instance) -> f64 {
        match self.mode {
            OracleMode::Strong => {
                let d = inst.total_demand();
                if d <= TOL {
                    0.0
                } else {
                    ((d - self.severity) / d).max(0.0)
                }
            }
            _ => self.severity,
        }
    }
}

/// Add built, unattacked edges in id order while the budget allows. Shed
/// is monotone in the attack, so padding never makes an attack weaker.
pub fn pad_attack(inst: &Instance, design: &Design, attack: &mut Attack) {
    let mut spent = inst.attack_cost(attack);
    for e in design.edges() {
        if attack.contains(e) {
            continue;
        }
        let r = inst.edge(e).attack_cost;
        if spent + r <= inst.budget + TOL {
            attack.insert(e);
            spent += r;
        }
    }
}

/// Upper bound on the node potentials of an extreme optimal dual solution:
/// `1 / δ` with `δ` the smallest positive net injection of a node subset.
pub fn dual_bound(inst: &Instance) -> f64 {
    let b: Vec<f64> = inst
        .nodes
        .iter()
        .map(|n| n.supply)
        .filter(|&s| s.abs() > TOL)
        .collect();
    if b.is_empty() {
        return 1.0;
    }
    if b.iter().all(|s| (s - s.round()).abs() <= TOL) {
        return 1.0;
    }
    let delta = if b.len() <= EXACT_BOX_NODES {
        let mut sums = vec![0.0f64; 1 << b.len()];
        let mut best = f64::INFINITY;
        for mask in 1usize..sums.len() {
            let low = mask.trailing_zeros() as usize;
            sums[mask] = sums[mask & (mask - 1)] + b[low];
            if sums[mask] > TOL {
                best = best.min(sums[mask]);
            }
        }
        best
    } else {
        b.iter().map(|s| s.abs()).fold(f64::INFINITY, f64::min)
    };
    1.0 / delta
}

#[derive(Debug, Clone)]
pub struct NdpGeneralModel {
    pub milp: MilpModel,
    pub alpha: Vec<VarId>,
    /// Attack flag and the two arc duals of every built edge.
    pub edges: Vec<(EdgeId, VarId, [VarId; 2])>,
    pub bound: f64,
}

pub fn build_ndp_general(inst: &Instance, design: &Design) -> NdpGeneralModel {
    let bound = dual_bound(inst);
    let mut m = MilpModel::new(Sense::Maximize);
    let alpha: Vec<VarId> = inst
        .nodes
        .iter()
        .map(|n| m.lp.add_var(format!("alpha{}", n.label), 0.0, bound, n.supply))
        .collect();
    let mut edges = Vec::new();
    for e in design.edges() {
        let edge = inst.edge(e);
        let d = m.add_binary(format!("d{}", edge.label), 0.0);
        let fw = m.lp.add_var(format!("beta{}+", edge.label), -bound, 0.0, edge.capacity);
        let bw = m.lp.add_var(format!("beta{}-", edge.label), -bound, 0.0, edge.capacity);
        let [i, j] = edge.endpoints;
        m.lp.add_row(
            format!("arc{}+", edge.label),
            vec![(alpha[i.0], 1.0), (alpha[j.0], -1.0), (fw, 1.0), (d, -bound)],
            Relation::Le,
            0.0,
        );
        m.lp.add_row(
            format!("arc{}-", edge.label),
            vec![(alpha[j.0], 1.0), (alpha[i.0], -1.0), (bw, 1.0), (d, -bound)],
            Relation::Le,
            0.0,
        );
        edges.push((e, d, [fw, bw]));
    }
    let norm: Vec<(VarId, f64)> = inst
        .nodes
        .iter()
        .zip(&alpha)
        .filter(|(n, _)| n.supply != 0.0)
        .map(|(n, &a)| (a, n.supply))
        .collect();
    m.lp.add_row("norm", norm, Relation::Le, 1.0);
    if !edges.is_empty() {
        let budget = edges
            .iter()
            .map(|&(e, d, _)| (d, inst.edge(e).attack_cost))
            .collect();
        m.lp.add_row("budget", budget, Relation::Le, inst.budget);
    }
    NdpGeneralModel {
        milp: m,
        alpha,
        edges,
        bound,
    }
}

pub fn solve_ndp_general(inst: &Instance, design: &Design) -> Result<SeparationResult> {
    solve_ndp_general_with(inst, design, &MilpOptions::default())
}

pub fn solve_ndp_general_with(
    inst: &Instance,
    design: &Design,
    opts: &MilpOptions,
) -> Result<SeparationResult> {
    let model = build_ndp_general(inst, design);
    let sol = solve_milp_with(&model.milp, opts)?;
    if sol.status != MilpStatus::Optimal {
        return Err(Error::Solver(format!("general oracle MILP {:?}", sol.status)));
    }
    let mut attack = Attack::from_edges(
        inst.edge_count(),
        model.edges.iter().filter(|(_, d, _)| sol.flag(*d)).map(|(e, _, _)| *e),
    );
    pad_attack(inst, design, &mut attack);
    let gamma = solve_psp(inst, design, &attack)?.gamma;
    Ok(SeparationResult {
        attack: Some(attack),
        severity: gamma,
        mode: OracleMode::General,
        omega: Vec::new(),
        milp_nodes: sol.nodes,
    })
}

#[derive(Debug, Clone)]
pub struct NdpStrongModel {
    pub milp: MilpModel,
    pub graph: FlowGraph,
    /// Side indicator per internal node; `1` is the terminal side.
    pub rho: Vec<VarId>,
    pub attack: Vec<(EdgeId, VarId)>,
    /// One cut indicator per arc of `graph`.
    pub omega: Vec<VarId>,
}

pub fn build_ndp_strong(inst: &Instance, design: &Design) -> Result<NdpStrongModel> {
    let graph = build_augmented(inst, design, &Attack::empty(inst.edge_count()))?;
    let mut m = MilpModel::new(Sense::Minimize);
    let rho: Vec<VarId> = inst
        .nodes
        .iter()
        .map(|n| m.add_binary(format!("rho{}", n.label), 0.0))
        .collect();
    let mut attack = Vec::new();
    let mut d_of = vec![None; inst.edge_count()];
    for e in design.edges() {
        let d = m.add_binary(format!("d{}", inst.edge(e).label), 0.0);
        d_of[e.0] = Some(d);
        attack.push((e, d));
    }
    let mut omega = Vec::with_capacity(graph.arcs.len());
    for (k, arc) in graph.arcs.iter().enumerate() {
        let w = m.lp.add_var(format!("omega{k}"), 0.0, 1.0, arc.capacity);
        omega.push(w);
        let mut row = vec![(w, 1.0)];
        let mut rhs = 0.0;
        match arc.tag {
            ArcTag::Edge { edge, .. } => {
                row.push((rho[arc.tail], 1.0));
                row.push((rho[arc.head], -1.0));
                row.push((d_of[edge.0].expect("edge arcs are built"), 1.0));
            }
            // ρ_s = 0
            ArcTag::Source { node } => row.push((rho[node.0], -1.0)),
            // ρ_t = 1
            ArcTag::Sink { node } => {
                row.push((rho[node.0], 1.0));
                rhs = 1.0;
            }
        }
        m.lp.add_row(format!("cut{k}"), row, Relation::Ge, rhs);
    }
    if !attack.is_empty() {
        let budget = attack
            .iter()
            .map(|&(e, d)| (d, inst.edge(e).attack_cost))
            .collect();
        m.lp.add_row("budget", budget, Relation::Le, inst.budget);
    }
    Ok(NdpStrongModel {
        milp: m,
        graph,
        rho,
        attack,
        omega,
    })
}

pub fn solve_ndp_strong(inst: &Instance, design: &Design, threshold: f64) -> Result<SeparationResult> {
    solve_ndp_strong_with(inst, design, threshold, &MilpOptions::default())
}

pub fn solve_ndp_strong_with(
    inst: &Instance,
    design: &Design,
    threshold: f64,
    opts: &MilpOptions,
) -> Result<SeparationResult> {
    let model = build_ndp_strong(inst, design)?;
    let sol = solve_milp_with(&model.milp, opts)?;
    if sol.status != MilpStatus::Optimal {
        return Err(Error::Solver(format!("strong oracle MILP {:?}", sol.status)));
    }
    let omega: Vec<f64> = model.omega.iter().map(|&w| sol.value(w)).collect();
    let mut attack = Attack::from_edges(
        inst.edge_count(),
        model.attack.iter().filter(|(_, d)| sol.flag(*d)).map(|(e, _)| *e),
    );
    let mut severity = max_flow(&build_augmented(inst, design, &attack)?).value;
    if severity >= threshold - SEPARATION_TOL {
        return Ok(SeparationResult {
            attack: None,
            severity,
            mode: OracleMode::Strong,
            omega,
            milp_nodes: sol.nodes,
        });
    }
    if attack.is_empty() {
        pad_attack(inst, design, &mut attack);
        severity = max_flow(&build_augmented(inst, design, &attack)?).value;
    }
    Ok(SeparationResult {
        attack: Some(attack),
        severity,
        mode: OracleMode::Strong,
        omega,
        milp_nodes: sol.nodes,
    })
}

/// Exact worst attack by enumeration; the empty attack stands in when no
/// nonempty attack is affordable.
pub fn solve_ndp_bruteforce(inst: &Instance, design: &Design) -> Result<SeparationResult> {
    let attacks = enumerate_attacks_on(inst, design, BRUTEFORCE_MAX_ATTACKS).map_err(|e| match e {
        Error::ScenarioCap { count, cap, .. } => {
            Error::SizeLimit(format!("{count} attacks, limit {cap}"))
        }
        other => other,
    })?;
    let mut best: Option<(f64, Attack)> = None;
    for a in attacks {
        let g = solve_psp(inst, design, &a)?.gamma;
        if best.as_ref().is_none_or(|(v, _)| g > v + 1e-9) {
            best = Some((g, a));
        }
    }
    let (severity, attack) = match best {
        Some(b) => b,
        None => {
            let empty = Attack::empty(inst.edge_count());
            (solve_psp(inst, design, &empty)?.gamma, empty)
        }
    };
    Ok(SeparationResult {
        attack: Some(attack),
        severity,
        mode: OracleMode::BruteForce,
        omega: Vec::new(),
        milp_nodes: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{tri3a, tri3b};

    #[test]
    fn general_on_fixtures() {
        let b = solve_ndp_general(&tri3b(), &Design::full(3)).unwrap();
        assert!((b.severity - 0.4).abs() < 1e-6);
        assert_eq!(b.attack.unwrap().bits(), &[true, false, false]);
        let a = solve_ndp_general(&tri3a(), &Design::full(3)).unwrap();
        assert!(a.severity.abs() < 1e-6);
        let zero = tri3b().with_budget(0.0);
        let z = solve_ndp_general(&zero, &Design::full(3)).unwrap();
        assert!(z.attack.unwrap().is_empty());
        assert!(z.severity.abs() < 1e-9);
    }

    #[test]
    fn strong_on_fixtures() {
        let b = solve_ndp_strong(&tri3b(), &Design::full(3), 10.0).unwrap();
        assert!((b.severity - 6.0).abs() < 1e-9);
        assert_eq!(b.attack.as_ref().unwrap().bits(), &[true, false, false]);
        assert!(b.omega.iter().all(|w| w.min(1.0 - w).abs() < 1e-6));
        let a = solve_ndp_strong(&tri3a(), &Design::full(3), 10.0).unwrap();
        assert!((a.severity - 10.0).abs() < 1e-9);
        assert!(a.attack.is_none());
        let e = solve_ndp_strong(&tri3a(), &Design::empty(3), 10.0).unwrap();
        assert!(e.severity.abs() < 1e-9);
        assert!(e.attack.is_some());
    }

    #[test]
    fn bruteforce_on_fixtures() {
        let b = solve_ndp_bruteforce(&tri3b(), &Design::full(3)).unwrap();
        assert!((b.severity - 0.4).abs() < 1e-9);
        let a = solve_ndp_bruteforce(&tri3a(), &Design::full(3)).unwrap();
        assert!(a.severity.abs() < 1e-9);
        let poor = tri3b().with_budget(0.5);
        let p = solve_ndp_bruteforce(&poor, &Design::full(3)).unwrap();
        assert!(p.attack.unwrap().is_empty());
        assert!(p.severity.abs() < 1e-9);
    }

    #[test]
    fn dual_bound_cases() {
        assert_eq!(dual_bound(&tri3a()), 1.0);
        let inst = crate::instance::InstanceBuilder::new()
            .node(1, 0.5)
            .node(2, 0.25)
            .node(3, -0.75)
            .candidate(1, 1, 3, 1.0, 1.0)
            .build()
            .unwrap();
        assert_eq!(dual_bound(&inst), 4.0);
    }

    #[test]
    fn padding_respects_budget() {
        let inst = tri3a().with_budget(2.0);
        let mut a = Attack::empty(3);
        pad_attack(&inst, &Design::full(3), &mut a);
        assert_eq!(a.len(), 2);
        let mut b = Attack::empty(3);
        pad_attack(&inst, &Design::from_edges(3, [EdgeId(2)]), &mut b);
        assert_eq!(b.bits(), &[false, false, true]);
    }
}
