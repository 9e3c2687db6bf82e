//! Extensive form: one monolithic MILP holding a recourse block per scenario.

use std::time::Instant;

use crate::benders::{
    design_objective, worst_over, DesignSolution, Method, PhaseTimes, SolveOptions,
};
use crate::error::{Error, Result};
use crate::instance::{Attack, Design, Instance};
use crate::lp::{Relation, Sense, VarId};
use crate::milp::{solve_milp_with, MilpModel, MilpStatus};
use crate::scenarios::{count_scenarios, enumerate_scenarios};

pub const EF_SCENARIO_CAP: u64 = 2000;
/// Largest dense tableau (rows × columns) the extensive form may allocate.
pub const EF_DENSE_LIMIT: u128 = 40_000_000;

#[derive(Debug, Clone)]
pub struct EfBlock {
    pub attack: Attack,
    pub flows: Vec<[VarId; 2]>,
    pub gamma: VarId,
}

#[derive(Debug, Clone)]
pub struct EfModel {
    pub milp: MilpModel,
    pub x: Vec<VarId>,
    pub theta: VarId,
    pub blocks: Vec<EfBlock>,
}

/// One block per scenario; a single no-attack block when `scenarios` is
/// empty. Per block: a balance row per node, two capacity rows per edge and
/// the link `γ^s ≤ θ`.
pub fn build_ef(inst: &Instance, scenarios: &[Attack]) -> EfModel {
    build_ef_capped(inst, scenarios, inst.shortage_cap())
}

pub fn build_ef_capped(inst: &Instance, scenarios: &[Attack], cap: Option<f64>) -> EfModel {
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
    if let Some(eps) = cap {
        m.lp.add_row("shed_cap", vec![(theta, 1.0)], Relation::Le, eps);
    }

    let nominal = [Attack::empty(inst.edge_count())];
    let list = if scenarios.is_empty() { &nominal[..] } else { scenarios };
    let blocks = list
        .iter()
        .enumerate()
        .map(|(s, attack)| {
            let flows: Vec<[VarId; 2]> = inst
                .edges
                .iter()
                .map(|e| {
                    [
                        m.lp.add_var(format!("f{s}_{}+", e.label), 0.0, f64::INFINITY, 0.0),
                        m.lp.add_var(format!("f{s}_{}-", e.label), 0.0, f64::INFINITY, 0.0),
                    ]
                })
                .collect();
            let gamma = m.lp.add_var(format!("gamma{s}"), 0.0, f64::INFINITY, 0.0);
            let mut terms: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); inst.node_count()];
            for (e, edge) in inst.edges.iter().enumerate() {
                let [i, j] = edge.endpoints;
                let [fw, bw] = flows[e];
                terms[i.0].extend([(fw, 1.0), (bw, -1.0)]);
                terms[j.0].extend([(bw, 1.0), (fw, -1.0)]);
            }
            for (node, mut row) in inst.nodes.iter().zip(terms) {
                if node.supply != 0.0 {
                    row.push((gamma, node.supply));
                }
                m.lp.add_row(format!("bal{s}_{}", node.label), row, Relation::Eq, node.supply);
            }
            for (e, edge) in inst.edges.iter().enumerate() {
                for (dir, &f) in ["+", "-"].iter().zip(&flows[e]) {
                    let mut row = vec![(f, 1.0)];
                    if !attack.bits()[e] {
                        row.push((x[e], -edge.capacity));
                    }
                    m.lp.add_row(format!("cap{s}_{}{dir}", edge.label), row, Relation::Le, 0.0);
                }
            }
            m.lp.add_row(
                format!("link{s}"),
                vec![(gamma, 1.0), (theta, -1.0)],
                Relation::Le,
                0.0,
            );
            EfBlock {
                attack: attack.clone(),
                flows,
                gamma,
            }
        })
        .collect();
    EfModel {
        milp: m,
        x,
        theta,
        blocks,
    }
}

pub fn solve_ef(inst: &Instance, opts: &SolveOptions) -> Result<DesignSolution> {
    let start = Instant::now();
    let limit = opts.scenario_cap.unwrap_or(EF_SCENARIO_CAP);
    let count = count_scenarios(inst, limit);
    if count.exceeds(limit) {
        return Err(Error::ScenarioCap {
            count: count.display_capped(),
            cap: limit,
            hint: "; use dsg",
        });
    }
    let scenarios = enumerate_scenarios(inst, limit)?;
    let blocks = scenarios.len().max(1) as u128;
    let rows = blocks * (inst.node_count() + 2 * inst.edge_count() + 1) as u128;
    let cols = inst.edge_count() as u128 + 1 + blocks * (2 * inst.edge_count() + 1) as u128;
    if rows * (rows + cols) > EF_DENSE_LIMIT {
        return Err(Error::SizeLimit(format!(
            "extensive form with {blocks} blocks ({rows} rows) is too large for the dense simplex; use dsg"
        )));
    }
    let cap = opts.shed_cap(inst);
    let model = build_ef_capped(inst, &scenarios, cap);
    let build = start.elapsed().as_secs_f64();
    let sol = solve_milp_with(&model.milp, &opts.milp())?;
    let milp_time = start.elapsed().as_secs_f64() - build;
    if sol.status == MilpStatus::Infeasible {
        return Err(Error::Solver(format!(
            "no design keeps the worst shed within {}",
            inst.allowed_shed
        )));
    }
    if sol.status != MilpStatus::Optimal {
        return Err(Error::Solver(format!("extensive form {:?}", sol.status)));
    }
    let design = Design::from_bits(model.x.iter().map(|&v| sol.flag(v)).collect());
    let sp_start = Instant::now();
    let (theta, worst_attack) = worst_over(inst, &design, &scenarios, opts.threads)?;
    let sp = sp_start.elapsed().as_secs_f64();
    let total = start.elapsed().as_secs_f64();
    Ok(DesignSolution {
        method: Method::Ef,
        objective: design_objective(inst, &design, theta, cap),
        build_cost: inst.build_cost(&design),
        design,
        theta,
        worst_attack,
        iterations: 1,
        master_solves: 1,
        scenarios_evaluated: scenarios.len(),
        cuts: 0,
        // the monolithic solve is booked as master time
        times: PhaseTimes {
            total,
            rmp: milp_time,
            ndp: 0.0,
            sp,
        },
        log: Vec::new(),
    })
}
