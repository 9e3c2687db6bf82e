//! Linear programming: a dense tableau primal simplex with bounded variables.
//!
//! Variables are shifted/complemented onto `[0, ub]`, rows are normalized to
//! nonnegative right-hand sides and phase one drives auxiliary artificial
//! columns out of the basis. Nonbasic variables at their upper bound are kept
//! complemented in the tableau, so every nonbasic column sits at zero.
//!
//! Dual values follow the sensitivity convention: `duals[i]` is the rate of
//! change of the optimal objective (in the model's own sense) per unit
//! increase of row `i`'s right-hand side. In a minimization, binding `≤`
//! rows therefore have nonpositive duals and binding `≥` rows nonnegative
//! duals. Reduced costs are `c_j - Σ_i duals[i]·a_ij`.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

pub const PIVOT_TOL: f64 = 1e-10;
pub const FEAS_TOL: f64 = 1e-9;
pub const OPT_TOL: f64 = 1e-9;
pub const GAP_TOL: f64 = 1e-7;
/// Degenerate pivots tolerated before switching to Bland's rule.
const BLAND_AFTER: usize = 1000;
const DROP_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub coefficients: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coefficients.iter().map(|&(v, a)| a * x[v.0]).sum()
    }
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("numerical failure after {iterations} iterations ({detail}); basis {basis:?}")]
    NumericalFailure {
        iterations: usize,
        detail: String,
        basis: Vec<usize>,
    },
    #[error("unknown row {0}")]
    UnknownRow(String),
    #[error("solution is not optimal")]
    NotOptimal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpModel {
    pub sense: Sense,
    vars: Vec<Variable>,
    rows: Vec<Row>,
}

impl LpModel {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            vars: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> VarId {
        self.vars.push(Variable {
            name: name.into(),
            lower,
            upper,
            cost,
        });
        VarId(self.vars.len() - 1)
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coefficients: Vec<(VarId, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> RowId {
        self.rows.push(Row {
            name: name.into(),
            coefficients,
            relation,
            rhs,
        });
        RowId(self.rows.len() - 1)
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn row(&self, id: RowId) -> &Row {
        &self.rows[id.0]
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn set_bounds(&mut self, id: VarId, lower: f64, upper: f64) {
        self.vars[id.0].lower = lower;
        self.vars[id.0].upper = upper;
    }

    pub fn set_cost(&mut self, id: VarId, cost: f64) {
        self.vars[id.0].cost = cost;
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn row_by_name(&self, name: &str) -> Option<RowId> {
        self.rows.iter().position(|r| r.name == name).map(RowId)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.vars.iter().zip(x).map(|(v, &xv)| v.cost * xv).sum()
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (v, &xv) in self.vars.iter().zip(x) {
            worst = worst.max(v.lower - xv).max(xv - v.upper);
        }
        for row in &self.rows {
            let lhs = row.activity(x);
            let viol = match row.relation {
                Relation::Le => lhs - row.rhs,
                Relation::Ge => row.rhs - lhs,
                Relation::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// Enforce the model invariants: finite data, at least one variable,
    /// unique names, known variable references.
    pub fn check(&self) -> Result<(), LpError> {
        if self.vars.is_empty() {
            return Err(LpError::InvalidModel("model has no variables".into()));
        }
        let mut names = HashSet::new();
        for v in &self.vars {
            if !names.insert(v.name.as_str()) {
                return Err(LpError::InvalidModel(format!("duplicate variable {}", v.name)));
            }
            if !v.cost.is_finite() || v.lower.is_nan() || v.upper.is_nan() {
                return Err(LpError::InvalidModel(format!("non-finite data on {}", v.name)));
            }
            if v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(LpError::InvalidModel(format!("empty bound range on {}", v.name)));
            }
        }
        let mut names = HashSet::new();
        for r in &self.rows {
            if !names.insert(r.name.as_str()) {
                return Err(LpError::InvalidModel(format!("duplicate row {}", r.name)));
            }
            if !r.rhs.is_finite() {
                return Err(LpError::InvalidModel(format!("non-finite rhs on {}", r.name)));
            }
            for &(v, a) in &r.coefficients {
                if v.0 >= self.vars.len() {
                    return Err(LpError::InvalidModel(format!("row {} references {:?}", r.name, v)));
                }
                if !a.is_finite() {
                    return Err(LpError::InvalidModel(format!("non-finite coefficient in {}", r.name)));
                }
            }
        }
        Ok(())
    }

    /// Human-readable dump in a fixed order, for regression snapshots.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let sense = match self.sense {
            Sense::Minimize => "minimize",
            Sense::Maximize => "maximize",
        };
        let _ = write!(out, "{sense}");
        for v in &self.vars {
            if v.cost != 0.0 {
                let _ = write!(out, " {:+} {}", v.cost, v.name);
            }
        }
        out.push_str("\nsubject to\n");
        for r in &self.rows {
            let _ = write!(out, "  {}:", r.name);
            for &(v, a) in &r.coefficients {
                let _ = write!(out, " {:+} {}", a, self.vars[v.0].name);
            }
            let rel = match r.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
                Relation::Ge => ">=",
            };
            let _ = writeln!(out, " {rel} {}", r.rhs);
        }
        out.push_str("bounds\n");
        for v in &self.vars {
            let _ = writeln!(out, "  {} <= {} <= {}", v.lower, v.name, v.upper);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Improving direction certifying unboundedness.
    pub ray: Option<Vec<f64>>,
}

impl LpSolution {
    fn without_optimum(status: LpStatus, n: usize, m: usize, iterations: usize) -> Self {
        Self {
            status,
            primal: vec![0.0; n],
            duals: vec![0.0; m],
            reduced_costs: vec![0.0; n],
            objective: f64::NAN,
            iterations,
            ray: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn value(&self, v: VarId) -> f64 {
        self.primal[v.0]
    }

    pub fn dual(&self, r: RowId) -> f64 {
        self.duals[r.0]
    }
}

/// Dual multiplier of the named row.
pub fn dual_values(model: &LpModel, sol: &LpSolution, row: &str) -> Result<f64, LpError> {
    if !sol.is_optimal() {
        return Err(LpError::NotOptimal);
    }
    let id = model
        .row_by_name(row)
        .ok_or_else(|| LpError::UnknownRow(row.to_string()))?;
    Ok(sol.duals[id.0])
}

/// Objective of the dual built from `sol.duals` and the reduced costs:
/// `Σ y_i b_i + Σ_j d_j · bound_j`, each reduced cost priced at the bound
/// its sign selects.
pub fn dual_objective(model: &LpModel, sol: &LpSolution) -> f64 {
    let mut total: f64 = model
        .rows
        .iter()
        .zip(&sol.duals)
        .map(|(r, &y)| r.rhs * y)
        .sum();
    let minimize = model.sense == Sense::Minimize;
    for (v, &d) in model.vars.iter().zip(&sol.reduced_costs) {
        if d == 0.0 {
            continue;
        }
        // In a minimization a positive reduced cost pushes to the lower bound.
        let at_lower = (d > 0.0) == minimize;
        let bound = if at_lower { v.lower } else { v.upper };
        if bound.is_finite() {
            total += d * bound;
        }
    }
    total
}

pub fn solve_lp(model: &LpModel) -> Result<LpSolution, LpError> {
    model.check()?;
    let lower: Vec<f64> = model.vars.iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = model.vars.iter().map(|v| v.upper).collect();
    solve_with_bounds(model, &lower, &upper)
}

/// Solve `model` with its variable bounds replaced by `lower` / `upper`.
/// The model is assumed to have passed [`LpModel::check`].
pub fn solve_with_bounds(
    model: &LpModel,
    lower: &[f64],
    upper: &[f64],
) -> Result<LpSolution, LpError> {
    let n = model.vars.len();
    let m = model.rows.len();
    for j in 0..n {
        if lower[j] > upper[j] + FEAS_TOL {
            return Ok(LpSolution::without_optimum(LpStatus::Infeasible, n, m, 0));
        }
    }

    let sign = match model.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };

    // Column layout for structural variables.
    let mut maps = Vec::with_capacity(n);
    let mut col_ub = Vec::new();
    let mut col_cost = Vec::new();
    for j in 0..n {
        let (lo, hi) = (lower[j], upper[j].max(lower[j]));
        let c = sign * model.vars[j].cost;
        let map = if lo.is_finite() {
            col_ub.push(hi - lo);
            col_cost.push(c);
            VarMap::Shift {
                col: col_ub.len() - 1,
                offset: lo,
            }
        } else if hi.is_finite() {
            col_ub.push(f64::INFINITY);
            col_cost.push(-c);
            VarMap::Neg {
                col: col_ub.len() - 1,
                offset: hi,
            }
        } else {
            col_ub.push(f64::INFINITY);
            col_cost.push(c);
            col_ub.push(f64::INFINITY);
            col_cost.push(-c);
            VarMap::Split {
                pos: col_ub.len() - 2,
                neg: col_ub.len() - 1,
            }
        };
        maps.push(map);
    }
    let structural = col_ub.len();

    // Rows in column space, normalized to rhs >= 0.
    struct KeptRow {
        orig: usize,
        flip: f64,
        relation: Relation,
        rhs: f64,
        entries: Vec<(usize, f64)>,
    }
    let mut kept = Vec::with_capacity(m);
    let mut dense = vec![0.0; structural];
    let mut touched = Vec::new();
    for (i, row) in model.rows.iter().enumerate() {
        let mut rhs = row.rhs;
        for &(v, a) in &row.coefficients {
            if a == 0.0 {
                continue;
            }
            match maps[v.0] {
                VarMap::Shift { col, offset } => {
                    rhs -= a * offset;
                    add_entry(&mut dense, &mut touched, col, a);
                }
                VarMap::Neg { col, offset } => {
                    rhs -= a * offset;
                    add_entry(&mut dense, &mut touched, col, -a);
                }
                VarMap::Split { pos, neg } => {
                    add_entry(&mut dense, &mut touched, pos, a);
                    add_entry(&mut dense, &mut touched, neg, -a);
                }
            }
        }
        let mut entries: Vec<(usize, f64)> = touched
            .drain(..)
            .filter_map(|c| {
                let a = std::mem::take(&mut dense[c]);
                (a != 0.0).then_some((c, a))
            })
            .collect();
        entries.sort_unstable_by_key(|e| e.0);
        if entries.is_empty() {
            let scale = 1.0 + row.rhs.abs();
            let ok = match row.relation {
                Relation::Le => rhs >= -FEAS_TOL * scale,
                Relation::Ge => rhs <= FEAS_TOL * scale,
                Relation::Eq => rhs.abs() <= FEAS_TOL * scale,
            };
            if !ok {
                return Ok(LpSolution::without_optimum(LpStatus::Infeasible, n, m, 0));
            }
            continue;
        }
        let mut relation = row.relation;
        let mut flip = 1.0;
        if rhs < 0.0 {
            flip = -1.0;
            rhs = -rhs;
            for e in &mut entries {
                e.1 = -e.1;
            }
            relation = match relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        kept.push(KeptRow {
            orig: i,
            flip,
            relation,
            rhs,
            entries,
        });
    }

    // Logical columns.
    let rows = kept.len();
    let mut kinds = vec![ColKind::Structural; structural];
    let mut id_col = vec![0; rows];
    let mut logical = Vec::new(); // (row, col, coefficient)
    for (r, k) in kept.iter().enumerate() {
        match k.relation {
            Relation::Le => {
                kinds.push(ColKind::Slack);
                col_ub.push(f64::INFINITY);
                col_cost.push(0.0);
                id_col[r] = kinds.len() - 1;
                logical.push((r, kinds.len() - 1, 1.0));
            }
            Relation::Ge => {
                kinds.push(ColKind::Slack);
                col_ub.push(f64::INFINITY);
                col_cost.push(0.0);
                logical.push((r, kinds.len() - 1, -1.0));
                kinds.push(ColKind::Artificial);
                col_ub.push(f64::INFINITY);
                col_cost.push(0.0);
                id_col[r] = kinds.len() - 1;
                logical.push((r, kinds.len() - 1, 1.0));
            }
            Relation::Eq => {
                kinds.push(ColKind::Artificial);
                col_ub.push(f64::INFINITY);
                col_cost.push(0.0);
                id_col[r] = kinds.len() - 1;
                logical.push((r, kinds.len() - 1, 1.0));
            }
        }
    }
    let w = kinds.len();
    let mut tab = Tableau {
        m: rows,
        w,
        t: vec![0.0; rows * w],
        rhs: kept.iter().map(|k| k.rhs).collect(),
        d: vec![0.0; w],
        ub: col_ub,
        cost: col_cost,
        flipped: vec![false; w],
        basis: id_col.clone(),
        basic_row: vec![usize::MAX; w],
        kinds,
        iterations: 0,
        degenerate: 0,
        bland: false,
        scratch: Vec::new(),
    };
    for (r, k) in kept.iter().enumerate() {
        for &(c, a) in &k.entries {
            tab.t[r * w + c] = a;
        }
    }
    for &(r, c, a) in &logical {
        tab.t[r * w + c] = a;
    }
    for (r, &c) in id_col.iter().enumerate() {
        tab.basic_row[c] = r;
    }
    let rhs_scale = 1.0 + tab.rhs.iter().fold(0.0f64, |a, &b| a.max(b));
    let max_iter = 100 * (rows + w) + 10_000;

    // Phase one.
    let has_artificial = tab.kinds.contains(&ColKind::Artificial);
    if has_artificial {
        let phase_one: Vec<f64> = tab
            .kinds
            .iter()
            .map(|k| if *k == ColKind::Artificial { 1.0 } else { 0.0 })
            .collect();
        tab.price(&phase_one);
        match tab.run(max_iter, false)? {
            Outcome::Optimal => {}
            Outcome::Unbounded(_) => {
                return Err(tab.failure("phase one reported unbounded"));
            }
        }
        let infeas: f64 = (0..rows)
            .filter(|&r| tab.kinds[tab.basis[r]] == ColKind::Artificial)
            .map(|r| tab.rhs[r])
            .sum();
        if infeas > FEAS_TOL * rhs_scale {
            let mut sol = LpSolution::without_optimum(LpStatus::Infeasible, n, m, tab.iterations);
            sol.objective = f64::NAN;
            return Ok(sol);
        }
        tab.expel_artificials();
        for j in 0..w {
            if tab.kinds[j] == ColKind::Artificial {
                tab.ub[j] = 0.0;
            }
        }
    }

    // Phase two.
    let phase_two: Vec<f64> = (0..w)
        .map(|j| if tab.flipped[j] { -tab.cost[j] } else { tab.cost[j] })
        .collect();
    tab.price(&phase_two);
    let outcome = tab.run(max_iter, true)?;

    // Column values in the original (uncomplemented) space.
    let col_value = |tab: &Tableau, j: usize| -> f64 {
        let v = match tab.basic_row[j] {
            usize::MAX => 0.0,
            r => tab.rhs[r],
        };
        if tab.flipped[j] {
            tab.ub[j] - v
        } else {
            v
        }
    };

    if let Outcome::Unbounded(q) = outcome {
        let mut dir = vec![0.0; w];
        dir[q] = if tab.flipped[q] { -1.0 } else { 1.0 };
        for r in 0..rows {
            let b = tab.basis[r];
            let step = -tab.t[r * w + q];
            dir[b] = if tab.flipped[b] { -step } else { step };
        }
        let ray = maps
            .iter()
            .map(|map| match *map {
                VarMap::Shift { col, .. } => dir[col],
                VarMap::Neg { col, .. } => -dir[col],
                VarMap::Split { pos, neg } => dir[pos] - dir[neg],
            })
            .collect();
        let mut sol = LpSolution::without_optimum(LpStatus::Unbounded, n, m, tab.iterations);
        sol.ray = Some(ray);
        return Ok(sol);
    }

    let cols: Vec<f64> = (0..w).map(|j| col_value(&tab, j)).collect();
    let primal: Vec<f64> = maps
        .iter()
        .map(|map| match *map {
            VarMap::Shift { col, offset } => offset + cols[col],
            VarMap::Neg { col, offset } => offset - cols[col],
            VarMap::Split { pos, neg } => cols[pos] - cols[neg],
        })
        .collect();

    let mut duals = vec![0.0; m];
    for (r, k) in kept.iter().enumerate() {
        // The identity column has zero phase-two cost, so its reduced cost
        // is minus the normalized row dual.
        let y = -tab.d[id_col[r]];
        duals[k.orig] = sign * k.flip * y;
    }
    let mut reduced_costs: Vec<f64> = model.vars.iter().map(|v| v.cost).collect();
    for (row, &y) in model.rows.iter().zip(&duals) {
        if y == 0.0 {
            continue;
        }
        for &(v, a) in &row.coefficients {
            reduced_costs[v.0] -= y * a;
        }
    }
    let objective = model.objective_value(&primal);

    let mut bounded = model.clone();
    for (j, v) in bounded.vars.iter_mut().enumerate() {
        v.lower = lower[j];
        v.upper = upper[j];
    }
    let violation = bounded.max_violation(&primal);
    let data_scale = rhs_scale.max(1.0 + primal.iter().fold(0.0f64, |a, &b| a.max(b.abs())));
    if violation > 1e-6 * data_scale {
        return Err(tab.failure(&format!("primal violation {violation:.3e} after substitution")));
    }

    Ok(LpSolution {
        status: LpStatus::Optimal,
        primal,
        duals,
        reduced_costs,
        objective,
        iterations: tab.iterations,
        ray: None,
    })
}

fn add_entry(dense: &mut [f64], touched: &mut Vec<usize>, col: usize, a: f64) {
    if dense[col] == 0.0 {
        touched.push(col);
    }
    dense[col] += a;
    if dense[col] == 0.0 {
        // keep it in `touched`; the zero is filtered later
        dense[col] = 0.0;
    }
}

#[derive(Debug, Clone, Copy)]
enum VarMap {
    Shift { col: usize, offset: f64 },
    Neg { col: usize, offset: f64 },
    Split { pos: usize, neg: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

enum Outcome {
    Optimal,
    Unbounded(usize),
}

struct Tableau {
    m: usize,
    w: usize,
    t: Vec<f64>,
    rhs: Vec<f64>,
    /// Reduced costs of the current phase.
    d: Vec<f64>,
    ub: Vec<f64>,
    /// Phase-two cost in the uncomplemented column space.
    cost: Vec<f64>,
    flipped: Vec<bool>,
    basis: Vec<usize>,
    basic_row: Vec<usize>,
    kinds: Vec<ColKind>,
    iterations: usize,
    degenerate: usize,
    bland: bool,
    scratch: Vec<usize>,
}

impl Tableau {
    fn failure(&self, detail: &str) -> LpError {
        LpError::NumericalFailure {
            iterations: self.iterations,
            detail: detail.to_string(),
            basis: self.basis.clone(),
        }
    }

    /// Reduced costs for column costs `c` (already in complemented space).
    fn price(&mut self, c: &[f64]) {
        self.d.copy_from_slice(c);
        for r in 0..self.m {
            let cb = c[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.t[r * self.w..(r + 1) * self.w];
            for (dj, &a) in self.d.iter_mut().zip(row) {
                *dj -= cb * a;
            }
        }
        for r in 0..self.m {
            self.d[self.basis[r]] = 0.0;
        }
    }

    fn eligible(&self, j: usize, phase_two: bool) -> bool {
        self.basic_row[j] == usize::MAX
            && self.ub[j] > 0.0
            && !(phase_two && self.kinds[j] == ColKind::Artificial)
    }

    fn entering(&self, phase_two: bool) -> Option<usize> {
        let mut best = None;
        let mut best_d = -OPT_TOL;
        for j in 0..self.w {
            let dj = self.d[j];
            if dj < best_d && self.eligible(j, phase_two) {
                best = Some(j);
                if self.bland {
                    return best;
                }
                best_d = dj;
            }
        }
        best
    }

    fn run(&mut self, max_iter: usize, phase_two: bool) -> Result<Outcome, LpError> {
        loop {
            if self.iterations >= max_iter {
                return Err(self.failure("iteration limit"));
            }
            let Some(q) = self.entering(phase_two) else {
                return Ok(Outcome::Optimal);
            };
            self.iterations += 1;

            // Ratio test: (row, ratio, leaves at upper bound).
            let w = self.w;
            let mut min_ratio = f64::INFINITY;
            for r in 0..self.m {
                let a = self.t[r * w + q];
                let ratio = if a > PIVOT_TOL {
                    self.rhs[r].max(0.0) / a
                } else if a < -PIVOT_TOL {
                    let ub = self.ub[self.basis[r]];
                    if ub.is_finite() {
                        (ub - self.rhs[r]).max(0.0) / -a
                    } else {
                        continue;
                    }
                } else {
                    continue;
                };
                min_ratio = min_ratio.min(ratio);
            }

            let own = self.ub[q];
            if min_ratio == f64::INFINITY && own == f64::INFINITY {
                return Ok(Outcome::Unbounded(q));
            }
            if own <= min_ratio {
                self.flip_column(q);
                continue;
            }

            // Among near-ties prefer the largest pivot (or the smallest
            // basic index under Bland's rule).
            let slack = 1e-12 * (1.0 + min_ratio.abs());
            let mut leave: Option<(usize, bool)> = None;
            let mut best_key = f64::NEG_INFINITY;
            let mut best_basic = usize::MAX;
            for r in 0..self.m {
                let a = self.t[r * w + q];
                let (ratio, at_upper) = if a > PIVOT_TOL {
                    (self.rhs[r].max(0.0) / a, false)
                } else if a < -PIVOT_TOL {
                    let ub = self.ub[self.basis[r]];
                    if !ub.is_finite() {
                        continue;
                    }
                    ((ub - self.rhs[r]).max(0.0) / -a, true)
                } else {
                    continue;
                };
                if ratio > min_ratio + slack {
                    continue;
                }
                if self.bland {
                    if self.basis[r] < best_basic {
                        best_basic = self.basis[r];
                        leave = Some((r, at_upper));
                    }
                } else if a.abs() > best_key {
                    best_key = a.abs();
                    leave = Some((r, at_upper));
                }
            }
            let (r, at_upper) = leave.expect("ratio test found a row");
            if min_ratio <= 1e-12 {
                self.degenerate += 1;
                if self.degenerate >= BLAND_AFTER {
                    self.bland = true;
                }
            }
            if at_upper {
                self.flip_basic(r);
            }
            self.pivot(r, q);
        }
    }

    /// Complement nonbasic column `q`, moving it to its other bound.
    fn flip_column(&mut self, q: usize) {
        let u = self.ub[q];
        let w = self.w;
        for r in 0..self.m {
            let a = self.t[r * w + q];
            if a != 0.0 {
                self.rhs[r] -= a * u;
                self.t[r * w + q] = -a;
            }
        }
        self.d[q] = -self.d[q];
        self.flipped[q] = !self.flipped[q];
    }

    /// Complement the basic variable of row `r`.
    fn flip_basic(&mut self, r: usize) {
        let b = self.basis[r];
        let u = self.ub[b];
        let w = self.w;
        for (j, a) in self.t[r * w..(r + 1) * w].iter_mut().enumerate() {
            if j != b {
                *a = -*a;
            }
        }
        self.rhs[r] = u - self.rhs[r];
        self.flipped[b] = !self.flipped[b];
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.w;
        let (head, tail) = self.t.split_at_mut(r * w);
        let (prow, rest) = tail.split_at_mut(w);
        let inv = 1.0 / prow[q];
        for a in prow.iter_mut() {
            *a *= inv;
        }
        prow[q] = 1.0;
        self.rhs[r] *= inv;
        let prhs = self.rhs[r];

        self.scratch.clear();
        self.scratch
            .extend((0..w).filter(|&j| prow[j] != 0.0 && j != q));
        let nz = &self.scratch;

        let eliminate = |row: &mut [f64], f: f64| {
            for &j in nz {
                let v = row[j] - f * prow[j];
                row[j] = if v.abs() < DROP_TOL { 0.0 } else { v };
            }
            row[q] = 0.0;
        };
        for (i, row) in head.chunks_exact_mut(w).enumerate() {
            let f = row[q];
            if f != 0.0 {
                eliminate(row, f);
                self.rhs[i] -= f * prhs;
            }
        }
        for (k, row) in rest.chunks_exact_mut(w).enumerate() {
            let f = row[q];
            if f != 0.0 {
                eliminate(row, f);
                self.rhs[r + 1 + k] -= f * prhs;
            }
        }
        let f = self.d[q];
        if f != 0.0 {
            eliminate(&mut self.d, f);
        }

        let old = self.basis[r];
        self.basic_row[old] = usize::MAX;
        self.basis[r] = q;
        self.basic_row[q] = r;
    }

    /// Pivot zero-level artificials out of the basis where the row allows.
    fn expel_artificials(&mut self) {
        let w = self.w;
        for r in 0..self.m {
            if self.kinds[self.basis[r]] != ColKind::Artificial {
                continue;
            }
            let mut best = None;
            let mut best_abs = 1e-9;
            for j in 0..w {
                if self.kinds[j] == ColKind::Artificial || self.basic_row[j] != usize::MAX {
                    continue;
                }
                let a = self.t[r * w + j].abs();
                if a > best_abs {
                    best_abs = a;
                    best = Some(j);
                }
            }
            if let Some(j) = best {
                self.pivot(r, j);
            }
        }
    }
}
