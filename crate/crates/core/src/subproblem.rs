//! The per-scenario recourse LP: minimize the uniform shed fraction `γ`
//! given a design and an attack, then turn its dual multipliers into an
//! optimality cut on `(x, θ)`.
//!
//! Row layout of the recourse LP (min γ):
//!
//! ```text
//! Σ_out f − Σ_in f + b_i γ = b_i     (α_i, one per node)
//! f_ij ≤ u_e (x_e − d_e)             (β_ij, one per direction)
//! ```
//!
//! Its dual reads `max Σ b_i α_i + Σ u_e (x_e − d_e)(β_ij + β_ji)` subject to
//! `α_i − α_j + β_ij ≤ 0`, `Σ b_i α_i ≤ 1` and `β ≤ 0`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instance::{check_consistent, Attack, Design, Instance};
use crate::lp::{self, LpModel, LpStatus, Relation, RowId, Sense, VarId};

/// Tolerance for identifying two cuts as the same.
pub const CUT_DEDUP_TOL: f64 = 1e-9;

/// Layout of a recourse LP inside an [`LpModel`].
#[derive(Debug, Clone)]
pub struct PspLayout {
    /// Forward and backward flow per edge.
    pub flows: Vec<[VarId; 2]>,
    pub gamma: VarId,
    pub balance: Vec<RowId>,
    pub capacity: Vec<[RowId; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemResult {
    pub design: Design,
    pub attack: Attack,
    pub gamma: f64,
    /// Flow per edge, `[i → j, j → i]` for endpoints `[i, j]`.
    pub flows: Vec<[f64; 2]>,
    /// Balance-row multiplier per node.
    pub alpha: Vec<f64>,
    /// Capacity-row multipliers per edge, same orientation as `flows`.
    pub beta: Vec<[f64; 2]>,
}

impl SubproblemResult {
    /// Dual objective at the generating point.
    pub fn dual_objective(&self, inst: &Instance) -> f64 {
        let supply: f64 = inst
            .nodes
            .iter()
            .zip(&self.alpha)
            .map(|(n, a)| n.supply * a)
            .sum();
        let capacity: f64 = inst
            .edge_ids()
            .map(|e| {
                let open = f64::from(u8::from(self.design.contains(e) && !self.attack.contains(e)));
                inst.edge(e).capacity * open * (self.beta[e.0][0] + self.beta[e.0][1])
            })
            .sum();
        supply + capacity
    }

    /// Largest deviation from flow balance `Σ_out f − Σ_in f = b_i (1 − γ)`.
    pub fn balance_residual(&self, inst: &Instance) -> f64 {
        let mut net = vec![0.0; inst.node_count()];
        for e in inst.edge_ids() {
            let [i, j] = inst.edge(e).endpoints;
            let [fw, bw] = self.flows[e.0];
            net[i.0] += fw - bw;
            net[j.0] += bw - fw;
        }
        inst.nodes
            .iter()
            .zip(&net)
            .map(|(n, v)| (v - n.supply * (1.0 - self.gamma)).abs())
            .fold(0.0, f64::max)
    }
}

pub fn build_psp(inst: &Instance, design: &Design, attack: &Attack) -> Result<LpModel> {
    Ok(build_psp_with_layout(inst, design, attack)?.0)
}

pub fn build_psp_with_layout(
    inst: &Instance,
    design: &Design,
    attack: &Attack,
) -> Result<(LpModel, PspLayout)> {
    check_consistent(inst, design, attack)?;
    let mut m = LpModel::new(Sense::Minimize);
    let flows: Vec<[VarId; 2]> = inst
        .edges
        .iter()
        .map(|e| {
            [
                m.add_var(format!("f{}+", e.label), 0.0, f64::INFINITY, 0.0),
                m.add_var(format!("f{}-", e.label), 0.0, f64::INFINITY, 0.0),
            ]
        })
        .collect();
    let gamma = m.add_var("gamma", 0.0, f64::INFINITY, 1.0);

    let mut terms: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); inst.node_count()];
    for (e, edge) in inst.edges.iter().enumerate() {
        let [i, j] = edge.endpoints;
        let [fw, bw] = flows[e];
        terms[i.0].push((fw, 1.0));
        terms[i.0].push((bw, -1.0));
        terms[j.0].push((bw, 1.0));
        terms[j.0].push((fw, -1.0));
    }
    let balance = inst
        .nodes
        .iter()
        .zip(terms)
        .map(|(node, mut row)| {
            if node.supply != 0.0 {
                row.push((gamma, node.supply));
            }
            m.add_row(format!("bal{}", node.label), row, Relation::Eq, node.supply)
        })
        .collect();
    let capacity = inst
        .edge_ids()
        .map(|e| {
            let edge = inst.edge(e);
            let open = design.contains(e) && !attack.contains(e);
            let rhs = if open { edge.capacity } else { 0.0 };
            let [fw, bw] = flows[e.0];
            [
                m.add_row(format!("cap{}+", edge.label), vec![(fw, 1.0)], Relation::Le, rhs),
                m.add_row(format!("cap{}-", edge.label), vec![(bw, 1.0)], Relation::Le, rhs),
            ]
        })
        .collect();
    Ok((
        m,
        PspLayout {
            flows,
            gamma,
            balance,
            capacity,
        },
    ))
}

pub fn solve_psp(inst: &Instance, design: &Design, attack: &Attack) -> Result<SubproblemResult> {
    let (model, layout) = build_psp_with_layout(inst, design, attack)?;
    let sol = lp::solve_lp(&model)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Solver(format!(
            "recourse LP returned {:?}",
            sol.status
        )));
    }
    Ok(SubproblemResult {
        design: design.clone(),
        attack: attack.clone(),
        gamma: sol.value(layout.gamma).clamp(0.0, 1.0),
        flows: layout
            .flows
            .iter()
            .map(|[a, b]| [sol.value(*a), sol.value(*b)])
            .collect(),
        alpha: layout.balance.iter().map(|&r| sol.dual(r)).collect(),
        beta: layout
            .capacity
            .iter()
            .map(|[a, b]| [sol.dual(*a), sol.dual(*b)])
            .collect(),
    })
}

/// Solve the recourse LP of `design` against each attack, restricted to the
/// built edges. Results come back in input order whatever `threads` is.
pub fn solve_psp_many(
    inst: &Instance,
    design: &Design,
    attacks: &[Attack],
    threads: usize,
) -> Result<Vec<SubproblemResult>> {
    let one = |a: &Attack| solve_psp(inst, design, &a.restricted_to(design));
    if threads <= 1 || attacks.len() < 2 {
        return attacks.iter().map(one).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Solver(e.to_string()))?;
    pool.install(|| attacks.par_iter().map(one).collect())
}

/// `constant + Σ_e coefficients[e] (x_e − d_e) ≤ θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BendersCut {
    pub constant: f64,
    pub coefficients: Vec<f64>,
    pub attack: Attack,
    pub design: Design,
}

impl BendersCut {
    /// Right-hand side of the cut at design `x`.
    pub fn value_at(&self, x: &Design) -> f64 {
        self.constant
            + self
                .coefficients
                .iter()
                .zip(x.bits().iter().zip(self.attack.bits()))
                .map(|(c, (&xe, &de))| c * (f64::from(u8::from(xe)) - f64::from(u8::from(de))))
                .sum::<f64>()
    }

    pub fn same_as(&self, other: &BendersCut) -> bool {
        (self.constant - other.constant).abs() <= CUT_DEDUP_TOL
            && self.coefficients.len() == other.coefficients.len()
            && self
                .coefficients
                .iter()
                .zip(&other.coefficients)
                .all(|(a, b)| (a - b).abs() <= CUT_DEDUP_TOL)
    }
}

/// Cut from the recourse duals of `res`.
///
/// Edges of the generating attack get coefficient zero: their capacity rows
/// are closed in every scenario that attacks them, so the dual multiplier
/// there carries no information and may not be priced.
pub fn make_cut(res: &SubproblemResult, inst: &Instance) -> BendersCut {
    let constant = inst
        .nodes
        .iter()
        .zip(&res.alpha)
        .map(|(n, a)| n.supply * a)
        .sum();
    let coefficients = inst
        .edge_ids()
        .map(|e| {
            if res.attack.contains(e) {
                0.0
            } else {
                inst.edge(e).capacity * (res.beta[e.0][0] + res.beta[e.0][1])
            }
        })
        .collect();
    BendersCut {
        constant,
        coefficients,
        attack: res.attack.clone(),
        design: res.design.clone(),
    }
}

/// `constant + Σ coeff·(x − d) − θ`; positive when the cut is violated.
pub fn evaluate_cut(cut: &BendersCut, x: &Design, theta: f64) -> f64 {
    cut.value_at(x) - theta
}

/// Cuts with duplicate detection.
#[derive(Debug, Clone, Default)]
pub struct CutPool {
    cuts: Vec<BendersCut>,
}

impl CutPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add `cut` unless an identical one is present; reports whether it was added.
    pub fn insert(&mut self, cut: BendersCut) -> bool {
        if self.cuts.iter().any(|c| c.same_as(&cut)) {
            return false;
        }
        self.cuts.push(cut);
        true
    }

    pub fn cuts(&self) -> &[BendersCut] {
        &self.cuts
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{tri3a, tri3b, EdgeId};
    use crate::maxflow::feasible_full_demand;

    // edge ids: 0 = e12, 1 = e13, 2 = e23
    fn atk(ids: &[usize]) -> Attack {
        Attack::from_edges(3, ids.iter().map(|&i| EdgeId(i)))
    }

    #[test]
    fn psp_dimensions() {
        let inst = tri3a();
        let m = build_psp(&inst, &Design::full(3), &Attack::empty(3)).unwrap();
        assert_eq!(m.num_vars(), 7);
        assert_eq!(m.num_rows(), 9);
        assert_eq!(m.rows().iter().filter(|r| r.relation == Relation::Eq).count(), 3);
        let m = build_psp(&inst, &Design::empty(3), &Attack::empty(3)).unwrap();
        assert!(m
            .rows()
            .iter()
            .filter(|r| r.name.starts_with("cap"))
            .all(|r| r.rhs == 0.0));
        let m = build_psp(&tri3b(), &Design::full(3), &atk(&[0])).unwrap();
        for name in ["cap12+", "cap12-"] {
            assert_eq!(m.rows()[m.row_by_name(name).unwrap().0].rhs, 0.0);
        }
        assert_eq!(m.rows()[m.row_by_name("cap13+").unwrap().0].rhs, 6.0);
    }

    #[test]
    fn inconsistent_pair_rejected() {
        let err = build_psp(&tri3a(), &Design::empty(3), &atk(&[1])).unwrap_err();
        assert!(matches!(err, Error::Inconsistent(_)));
    }

    #[test]
    fn fixture_sheds() {
        let a = solve_psp(&tri3a(), &Design::full(3), &atk(&[1])).unwrap();
        assert!(a.gamma.abs() < 1e-9);
        let none = solve_psp(&tri3a(), &Design::empty(3), &Attack::empty(3)).unwrap();
        assert!((none.gamma - 1.0).abs() < 1e-9);
        let b = solve_psp(&tri3b(), &Design::full(3), &atk(&[0])).unwrap();
        assert!((b.gamma - 0.4).abs() < 1e-9);
        assert!(b.balance_residual(&tri3b()) < 1e-9);
        assert!(b.beta.iter().flatten().all(|&x| x <= 1e-12));
        assert!((b.dual_objective(&tri3b()) - 0.4).abs() < 1e-7);
    }

    #[test]
    fn gamma_zero_iff_full_demand() {
        let inst = tri3b();
        for mask in 0..8usize {
            let x = Design::from_bits((0..3).map(|i| mask & (1 << i) != 0).collect());
            for e in 0..3 {
                let d = atk(&[e]).restricted_to(&x);
                let res = solve_psp(&inst, &x, &d).unwrap();
                assert_eq!(res.gamma < 1e-9, feasible_full_demand(&inst, &x, &d).unwrap());
            }
        }
    }

    #[test]
    fn cut_from_fixture() {
        let inst = tri3b();
        let res = solve_psp(&inst, &Design::full(3), &atk(&[0])).unwrap();
        let cut = make_cut(&res, &inst);
        assert!((evaluate_cut(&cut, &Design::full(3), 0.0) - 0.4).abs() < 1e-7);
        assert!(evaluate_cut(&cut, &Design::full(3), 1e18) < 0.0);
        let only13 = Design::from_edges(3, [EdgeId(1)]);
        let truth = solve_psp(&inst, &only13, &atk(&[0]).restricted_to(&only13)).unwrap();
        assert!(evaluate_cut(&cut, &only13, 0.0) <= truth.gamma + 1e-7);
        for (e, c) in cut.coefficients.iter().enumerate() {
            if !cut.attack.contains(EdgeId(e)) {
                assert!(*c <= 1e-12);
            }
        }

        let zero = solve_psp(&tri3a(), &Design::full(3), &atk(&[1])).unwrap();
        let zcut = make_cut(&zero, &tri3a());
        assert!(evaluate_cut(&zcut, &Design::full(3), 0.0) <= 1e-9);
    }

    #[test]
    fn pool_deduplicates() {
        let inst = tri3b();
        let res = solve_psp(&inst, &Design::full(3), &atk(&[0])).unwrap();
        let mut pool = CutPool::new();
        assert!(pool.insert(make_cut(&res, &inst)));
        assert!(!pool.insert(make_cut(&res, &inst)));
        assert_eq!(pool.len(), 1);
    }

    #[test]
    fn parallel_matches_sequential() {
        let inst = tri3b();
        let attacks = vec![atk(&[0]), atk(&[1]), atk(&[2]), atk(&[0, 2])];
        let seq = solve_psp_many(&inst, &Design::full(3), &attacks, 1).unwrap();
        let par = solve_psp_many(&inst, &Design::full(3), &attacks, 3).unwrap();
        assert_eq!(seq, par);
    }
}
