//! Brute-force reference oracles and random instance strategies shared by
//! the integration tests.

#![allow(dead_code)]

use proptest::prelude::*;
use sndp::instance::{Attack, Design, EdgeId, Instance, InstanceBuilder};
use sndp::lp::{LpModel, Relation, Sense};

pub const TOL: f64 = 1e-9;

/// Shed fraction from cut enumeration: the largest λ ≤ 1 such that every
/// node set S with b(S) > 0 has `λ·b(S) ≤ u(δ(S))` over surviving edges.
pub fn gale_shed(inst: &Instance, design: &Design, attack: &Attack) -> f64 {
    let n = inst.node_count();
    assert!(n <= 16, "cut enumeration limited to 16 nodes");
    let mut lambda: f64 = 1.0;
    for mask in 1u32..(1u32 << n) {
        let inside = |v: usize| mask & (1 << v) != 0;
        let supply: f64 = (0..n).filter(|&v| inside(v)).map(|v| inst.nodes[v].supply).sum();
        if supply <= TOL {
            continue;
        }
        let cap: f64 = inst
            .edges
            .iter()
            .enumerate()
            .filter(|&(e, _)| design.contains(EdgeId(e)) && !attack.contains(EdgeId(e)))
            .filter(|(_, edge)| inside(edge.endpoints[0].0) != inside(edge.endpoints[1].0))
            .map(|(_, edge)| edge.capacity)
            .sum();
        lambda = lambda.min(cap / supply);
    }
    1.0 - lambda
}

/// Every subset of `edges`, in mask order.
pub fn subsets(m: usize, edges: &[EdgeId]) -> Vec<Attack> {
    (0u32..(1u32 << edges.len()))
        .map(|mask| {
            Attack::from_edges(
                m,
                edges.iter().enumerate().filter(|(k, _)| mask & (1 << k) != 0).map(|(_, &e)| e),
            )
        })
        .collect()
}

/// Worst shed over every affordable attack on the built edges, the empty
/// attack included.
pub fn worst_shed_bruteforce(inst: &Instance, design: &Design) -> (f64, Attack) {
    let built: Vec<EdgeId> = design.edges().collect();
    let mut best = (f64::NEG_INFINITY, Attack::empty(inst.edge_count()));
    for a in subsets(inst.edge_count(), &built) {
        if !inst.attack_affordable(&a) {
            continue;
        }
        let g = gale_shed(inst, design, &a);
        if g > best.0 + 1e-12 {
            best = (g, a);
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct BruteDesign {
    pub objective: f64,
    pub design: Design,
    pub worst_shed: f64,
}

/// Optimal design by enumerating every design and every attack. With a cap
/// the objective is the build cost subject to worst shed ≤ cap; otherwise
/// build cost plus penalty times worst shed. `None` when no design meets
/// the cap.
pub fn design_bruteforce(inst: &Instance, cap: Option<f64>) -> Option<BruteDesign> {
    let m = inst.edge_count();
    let candidates: Vec<EdgeId> = inst.candidate_edges().collect();
    let base = Design::existing_only(inst);
    let mut best: Option<BruteDesign> = None;
    for extra in subsets(m, &candidates) {
        let mut design = base.clone();
        for e in extra.edges() {
            design.insert(e);
        }
        let (worst, _) = worst_shed_bruteforce(inst, &design);
        let objective = match cap {
            Some(eps) if worst > eps + 1e-6 => continue,
            Some(_) => inst.build_cost(&design),
            None => inst.build_cost(&design) + inst.penalty() * worst,
        };
        if best.as_ref().is_none_or(|b| objective < b.objective - 1e-9) {
            best = Some(BruteDesign {
                objective,
                design,
                worst_shed: worst,
            });
        }
    }
    best
}

/// Raw data for a random instance: supplies of all but the last node,
/// edges `(i, j, capacity, cost, attack cost, existing)` and a budget.
pub type InstanceParts = (Vec<i32>, Vec<(usize, usize, u32, u32, u32, bool)>, u32);

pub fn assemble(parts: &InstanceParts) -> Instance {
    let (supplies, edges, budget) = parts;
    let mut b = InstanceBuilder::new().budget(f64::from(*budget));
    let last = -supplies.iter().sum::<i32>();
    for (v, &s) in supplies.iter().chain(std::iter::once(&last)).enumerate() {
        b = b.node(v as u64 + 1, f64::from(s));
    }
    for (k, &(i, j, u, c, r, existing)) in edges.iter().enumerate() {
        let cost = if existing { 0.0 } else { f64::from(c) };
        b = b.edge(
            k as u64 + 1,
            i as u64 + 1,
            j as u64 + 1,
            f64::from(u),
            cost,
            f64::from(r),
            existing,
        );
    }
    b.build().expect("generated instance is valid")
}

/// Instances with 2..=`max_nodes` nodes, 1..=`max_edges` edges, integer
/// data and budget 0..=`max_budget`.
pub fn instances(
    max_nodes: usize,
    max_edges: usize,
    max_budget: u32,
) -> impl Strategy<Value = Instance> {
    (2..=max_nodes)
        .prop_flat_map(move |n| {
            let edge = (0..n, 0..n - 1, 1u32..=10, 1u32..=6, 1u32..=2, prop::bool::weighted(0.25))
                .prop_map(|(i, j, u, c, r, ex)| (i, if j >= i { j + 1 } else { j }, u, c, r, ex));
            (
                prop::collection::vec(-5i32..=5, n - 1),
                prop::collection::vec(edge, 1..=max_edges),
                0..=max_budget,
            )
        })
        .prop_map(|parts| assemble(&parts))
}

/// A random design that keeps every existing edge.
pub fn design_from_mask(inst: &Instance, mask: u64) -> Design {
    let mut d = Design::existing_only(inst);
    for (k, e) in inst.candidate_edges().collect::<Vec<_>>().into_iter().enumerate() {
        if mask & (1 << (k % 64)) != 0 {
            d.insert(e);
        }
    }
    d
}

pub fn attack_from_mask(inst: &Instance, mask: u64) -> Attack {
    Attack::from_edges(
        inst.edge_count(),
        (0..inst.edge_count()).filter(|k| mask & (1 << (k % 64)) != 0).map(EdgeId),
    )
}

/// `max c·x` subject to rows `a·x (≤|≥|=) b` and `0 ≤ x ≤ ub`.
#[derive(Debug, Clone)]
pub struct SmallLp {
    pub cost: Vec<f64>,
    pub rows: Vec<(Vec<f64>, Relation, f64)>,
    pub ub: f64,
}

impl SmallLp {
    pub fn model(&self) -> LpModel {
        let mut m = LpModel::new(Sense::Maximize);
        let vars: Vec<_> = self
            .cost
            .iter()
            .enumerate()
            .map(|(j, &c)| m.add_var(format!("x{j}"), 0.0, self.ub, c))
            .collect();
        for (i, (a, rel, b)) in self.rows.iter().enumerate() {
            let coeffs = vars.iter().zip(a).map(|(&v, &c)| (v, c)).collect();
            m.add_row(format!("r{i}"), coeffs, *rel, *b);
        }
        m
    }
}

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[piv][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                let pivot = a[col].clone();
                for (x, p) in a[r][col..].iter_mut().zip(&pivot[col..]) {
                    *x -= f * p;
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if n < k {
        return Vec::new();
    }
    let mut out = combinations(n - 1, k);
    for mut c in combinations(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out
}

/// Optimum by enumerating every basic solution; `None` when infeasible.
/// The box keeps the feasible region bounded, so an optimum is a vertex.
pub fn lp_vertex_bruteforce(lp: &SmallLp) -> Option<f64> {
    let n = lp.cost.len();
    let mut eqs: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut ineqs: Vec<(Vec<f64>, f64)> = Vec::new();
    for (a, rel, b) in &lp.rows {
        match rel {
            Relation::Le => ineqs.push((a.clone(), *b)),
            Relation::Ge => ineqs.push((a.iter().map(|x| -x).collect(), -b)),
            Relation::Eq => eqs.push((a.clone(), *b)),
        }
    }
    for j in 0..n {
        let mut unit = vec![0.0; n];
        unit[j] = 1.0;
        ineqs.push((unit.clone(), lp.ub));
        unit[j] = -1.0;
        ineqs.push((unit, 0.0));
    }
    if eqs.len() > n {
        panic!("more equalities than variables");
    }
    let feasible = |x: &[f64]| {
        let dot = |a: &[f64]| a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
        ineqs.iter().all(|(a, b)| dot(a) <= b + 1e-7)
            && eqs.iter().all(|(a, b)| (dot(a) - b).abs() <= 1e-7)
    };
    let mut best: Option<f64> = None;
    for pick in combinations(ineqs.len(), n - eqs.len()) {
        let mut a: Vec<Vec<f64>> = eqs.iter().map(|(r, _)| r.clone()).collect();
        let mut b: Vec<f64> = eqs.iter().map(|(_, v)| *v).collect();
        for &k in &pick {
            a.push(ineqs[k].0.clone());
            b.push(ineqs[k].1);
        }
        if let Some(x) = solve_square(a, b) {
            if feasible(&x) {
                let v: f64 = lp.cost.iter().zip(&x).map(|(c, xi)| c * xi).sum();
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
    }
    best
}

pub fn small_lps() -> impl Strategy<Value = SmallLp> {
    let coef = || (-4i32..=6).prop_map(f64::from);
    (1usize..=3, 1usize..=4).prop_flat_map(move |(n, m)| {
        let row = (
            prop::collection::vec(coef(), n),
            prop_oneof![
                6 => Just(Relation::Le),
                2 => Just(Relation::Ge),
                1 => Just(Relation::Eq),
            ],
            (-3i32..=12).prop_map(f64::from),
        );
        (prop::collection::vec(coef(), n), prop::collection::vec(row, m))
            .prop_map(|(cost, rows)| {
                let mut seen_eq = false;
                let rows = rows
                    .into_iter()
                    .map(|(a, rel, b)| {
                        if rel == Relation::Eq {
                            if seen_eq {
                                return (a, Relation::Le, b);
                            }
                            seen_eq = true;
                        }
                        (a, rel, b)
                    })
                    .collect();
                SmallLp { cost, rows, ub: 10.0 }
            })
    })
}
