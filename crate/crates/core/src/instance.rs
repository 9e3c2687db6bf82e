//! Network instance model: nodes with injections, undirected (multi)edges,
//! the disruption budget and the shed penalty.
//!
//! Nodes and edges carry the integer labels used in the instance document;
//! internally they are addressed by dense [`NodeId`] / [`EdgeId`] indices
//! which are positions in the label-sorted node and edge lists.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used for comparisons on instance data.
pub const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    /// Label from the instance document.
    pub label: u64,
    /// Injection: positive for supply, negative for demand.
    pub supply: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub label: u64,
    pub endpoints: [NodeId; 2],
    /// Capacity available in each direction.
    pub capacity: f64,
    pub build_cost: f64,
    pub attack_cost: f64,
    pub existing: bool,
}

impl Edge {
    pub fn other(&self, node: NodeId) -> NodeId {
        if self.endpoints[0] == node {
            self.endpoints[1]
        } else {
            self.endpoints[0]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    /// Disruption budget.
    pub budget: f64,
    /// Penalty per unit shed fraction; `None` selects [`Instance::default_penalty`].
    pub penalty: Option<f64>,
    /// Permitted worst-case shed fraction. Zero means full survivability.
    pub allowed_shed: f64,
}

impl Instance {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.0]
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.edges.len()).map(EdgeId)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(NodeId)
    }

    /// `D`, the sum of all demands.
    pub fn total_demand(&self) -> f64 {
        self.nodes
            .iter()
            .filter(|n| n.supply < 0.0)
            .map(|n| -n.supply)
            .fold(0.0, |a, b| a + b)
    }

    /// `10 * (1 + total candidate build cost)`.
    pub fn default_penalty(&self) -> f64 {
        let candidate: f64 = self
            .edges
            .iter()
            .filter(|e| !e.existing)
            .map(|e| e.build_cost)
            .sum();
        10.0 * (1.0 + candidate)
    }

    pub fn penalty(&self) -> f64 {
        self.penalty.unwrap_or_else(|| self.default_penalty())
    }

    pub fn penalty_is_default(&self) -> bool {
        self.penalty.is_none()
    }

    /// Shortage-cap mode is active when some shed is permitted.
    pub fn shortage_cap(&self) -> Option<f64> {
        (self.allowed_shed > TOL).then_some(self.allowed_shed)
    }

    pub fn edge_by_label(&self, label: u64) -> Option<EdgeId> {
        self.edges
            .binary_search_by_key(&label, |e| e.label)
            .ok()
            .map(EdgeId)
    }

    pub fn node_by_label(&self, label: u64) -> Option<NodeId> {
        self.nodes
            .binary_search_by_key(&label, |n| n.label)
            .ok()
            .map(NodeId)
    }

    pub fn candidate_edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edge_ids().filter(|&e| !self.edge(e).existing)
    }

    pub fn with_budget(&self, budget: f64) -> Instance {
        Instance {
            budget,
            ..self.clone()
        }
    }

    pub fn with_allowed_shed(&self, allowed_shed: f64) -> Instance {
        Instance {
            allowed_shed,
            ..self.clone()
        }
    }

    pub fn with_penalty(&self, penalty: Option<f64>) -> Instance {
        Instance {
            penalty,
            ..self.clone()
        }
    }

    /// Sum of build costs over the built candidate edges of `design`.
    pub fn build_cost(&self, design: &Design) -> f64 {
        self.edge_ids()
            .filter(|&e| design.contains(e))
            .map(|e| self.edge(e).build_cost)
            .fold(0.0, |a, b| a + b)
    }

    pub fn attack_cost(&self, attack: &Attack) -> f64 {
        attack.edges().map(|e| self.edge(e).attack_cost).fold(0.0, |a, b| a + b)
    }

    pub fn attack_affordable(&self, attack: &Attack) -> bool {
        self.attack_cost(attack) <= self.budget + TOL
    }
}

macro_rules! edge_set {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name {
            bits: Vec<bool>,
        }

        impl $name {
            pub fn empty(edge_count: usize) -> Self {
                Self { bits: vec![false; edge_count] }
            }

            pub fn full(edge_count: usize) -> Self {
                Self { bits: vec![true; edge_count] }
            }

            pub fn from_bits(bits: Vec<bool>) -> Self {
                Self { bits }
            }

            pub fn from_edges(edge_count: usize, edges: impl IntoIterator<Item = EdgeId>) -> Self {
                let mut set = Self::empty(edge_count);
                for e in edges {
                    set.bits[e.0] = true;
                }
                set
            }

            pub fn contains(&self, e: EdgeId) -> bool {
                self.bits[e.0]
            }

            pub fn insert(&mut self, e: EdgeId) {
                self.bits[e.0] = true;
            }

            pub fn remove(&mut self, e: EdgeId) {
                self.bits[e.0] = false;
            }

            pub fn len(&self) -> usize {
                self.bits.iter().filter(|&&b| b).count()
            }

            pub fn is_empty(&self) -> bool {
                !self.bits.iter().any(|&b| b)
            }

            pub fn edge_count(&self) -> usize {
                self.bits.len()
            }

            pub fn edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
                self.bits
                    .iter()
                    .enumerate()
                    .filter(|(_, &b)| b)
                    .map(|(i, _)| EdgeId(i))
            }

            pub fn bits(&self) -> &[bool] {
                &self.bits
            }

            pub fn is_subset(&self, other: &Self) -> bool {
                self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
            }

            /// Edge labels of the members, in id order.
            pub fn labels(&self, inst: &Instance) -> Vec<u64> {
                self.edges().map(|e| inst.edge(e).label).collect()
            }

            pub fn from_labels(inst: &Instance, labels: &[u64]) -> Result<Self> {
                let mut set = Self::empty(inst.edge_count());
                for &l in labels {
                    let e = inst
                        .edge_by_label(l)
                        .ok_or_else(|| Error::Input(format!("unknown edge id {l}")))?;
                    set.insert(e);
                }
                Ok(set)
            }
        }
    };
}

edge_set!(
    /// First-level build decisions, one flag per edge.
    Design
);
edge_set!(
    /// Second-level disruption decisions, one flag per edge.
    Attack
);

impl Design {
    /// The design that builds only the existing edges.
    pub fn existing_only(inst: &Instance) -> Design {
        Design::from_bits(inst.edges.iter().map(|e| e.existing).collect())
    }

    /// Whether every existing edge is built.
    pub fn respects_existing(&self, inst: &Instance) -> bool {
        inst.edges
            .iter()
            .zip(&self.bits)
            .all(|(e, &b)| !e.existing || b)
    }
}

impl Attack {
    /// Restrict the attack to the built edges of `design`.
    pub fn restricted_to(&self, design: &Design) -> Attack {
        Attack::from_bits(
            self.bits
                .iter()
                .zip(design.bits())
                .map(|(&a, &b)| a && b)
                .collect(),
        )
    }

    pub fn compatible_with(&self, design: &Design) -> bool {
        self.bits
            .iter()
            .zip(design.bits())
            .all(|(&a, &b)| !a || b)
    }
}

/// Fail unless `attack` only hits edges built in `design`.
pub fn check_consistent(inst: &Instance, design: &Design, attack: &Attack) -> Result<()> {
    if design.edge_count() != inst.edge_count() || attack.edge_count() != inst.edge_count() {
        return Err(Error::Inconsistent(format!(
            "decision vectors sized {} / {} for {} edges",
            design.edge_count(),
            attack.edge_count(),
            inst.edge_count()
        )));
    }
    if let Some(e) = attack.edges().find(|&e| !design.contains(e)) {
        return Err(Error::Inconsistent(format!(
            "edge {} is attacked but not built",
            inst.edge(e).label
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Balance,
    NonFinite,
    NegativeCapacity,
    NegativeBuildCost,
    NonPositiveAttackCost,
    ExistingBuildCost,
    UnknownEndpoint,
    DuplicateNodeId,
    DuplicateEdgeId,
    NegativeBudget,
    NonPositivePenalty,
    ShedOutOfRange,
}

impl Rule {
    pub fn message(self) -> &'static str {
        match self {
            Rule::Balance => "injections do not sum to zero",
            Rule::NonFinite => "value is not finite",
            Rule::NegativeCapacity => "capacity must be nonnegative",
            Rule::NegativeBuildCost => "build cost must be nonnegative",
            Rule::NonPositiveAttackCost => "attack cost must be positive",
            Rule::ExistingBuildCost => "existing edges must have zero build cost",
            Rule::UnknownEndpoint => "unknown endpoint",
            Rule::DuplicateNodeId => "duplicate node id",
            Rule::DuplicateEdgeId => "duplicate edge id",
            Rule::NegativeBudget => "budget must be nonnegative",
            Rule::NonPositivePenalty => "penalty must be positive",
            Rule::ShedOutOfRange => "allowed shed must lie in [0, 1]",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub rule: Rule,
    /// Where the rule fails, e.g. `edge 12`.
    pub subject: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.rule.message())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn has(&self, rule: Rule) -> bool {
        self.findings.iter().any(|f| f.rule == rule)
    }

    fn push(&mut self, rule: Rule, subject: impl Into<String>) {
        self.findings.push(Finding {
            rule,
            subject: subject.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, finding) in self.findings.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{finding}")?;
        }
        Ok(())
    }
}

/// Check every instance rule and list all violations.
pub fn validate(inst: &Instance) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = inst.nodes.len();

    for w in inst.nodes.windows(2) {
        if w[0].label == w[1].label {
            report.push(Rule::DuplicateNodeId, format!("node {}", w[0].label));
        }
    }
    for w in inst.edges.windows(2) {
        if w[0].label == w[1].label {
            report.push(Rule::DuplicateEdgeId, format!("edge {}", w[0].label));
        }
    }

    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    for node in &inst.nodes {
        if !node.supply.is_finite() {
            report.push(Rule::NonFinite, format!("node {}", node.label));
        } else {
            sum += node.supply;
            abs_sum += node.supply.abs();
        }
    }
    if sum.abs() > TOL * (1.0 + abs_sum) {
        report.push(Rule::Balance, "nodes");
    }

    for edge in &inst.edges {
        let subject = format!("edge {}", edge.label);
        if edge.endpoints.iter().any(|p| p.0 >= n) {
            report.push(Rule::UnknownEndpoint, subject.clone());
        }
        let values = [edge.capacity, edge.build_cost, edge.attack_cost];
        if values.iter().any(|v| !v.is_finite()) {
            report.push(Rule::NonFinite, subject.clone());
            continue;
        }
        if edge.capacity < 0.0 {
            report.push(Rule::NegativeCapacity, subject.clone());
        }
        if edge.build_cost < 0.0 {
            report.push(Rule::NegativeBuildCost, subject.clone());
        }
        if edge.attack_cost <= 0.0 {
            report.push(Rule::NonPositiveAttackCost, subject.clone());
        }
        if edge.existing && edge.build_cost != 0.0 {
            report.push(Rule::ExistingBuildCost, subject);
        }
    }

    if !inst.budget.is_finite() {
        report.push(Rule::NonFinite, "budget");
    } else if inst.budget < 0.0 {
        report.push(Rule::NegativeBudget, "budget");
    }
    if let Some(p) = inst.penalty {
        if !p.is_finite() {
            report.push(Rule::NonFinite, "penalty");
        } else if p <= 0.0 {
            report.push(Rule::NonPositivePenalty, "penalty");
        }
    }
    if !(0.0..=1.0).contains(&inst.allowed_shed) {
        report.push(Rule::ShedOutOfRange, "allowed_shed");
    }
    report
}

// ---------------------------------------------------------------------------
// Instance document

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: u64,
    b: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    id: u64,
    i: u64,
    j: u64,
    u: f64,
    c: f64,
    r: f64,
    existing: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    nodes: Vec<NodeDoc>,
    edges: Vec<EdgeDoc>,
    budget: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    penalty: Option<f64>,
    #[serde(default)]
    allowed_shed: f64,
}

/// Parse and validate an instance document.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(|e| Error::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    let mut nodes: Vec<Node> = doc
        .nodes
        .iter()
        .map(|n| Node {
            label: n.id,
            supply: n.b,
        })
        .collect();
    nodes.sort_by_key(|n| n.label);

    let lookup = |label: u64| -> NodeId {
        nodes
            .binary_search_by_key(&label, |n| n.label)
            .map(NodeId)
            // out-of-range id, reported by `validate`
            .unwrap_or(NodeId(usize::MAX))
    };
    let mut edges: Vec<Edge> = doc
        .edges
        .iter()
        .map(|e| Edge {
            label: e.id,
            endpoints: [lookup(e.i), lookup(e.j)],
            capacity: e.u,
            build_cost: e.c,
            attack_cost: e.r,
            existing: e.existing,
        })
        .collect();
    edges.sort_by_key(|e| e.label);

    let inst = Instance {
        nodes,
        edges,
        budget: doc.budget,
        penalty: doc.penalty,
        allowed_shed: doc.allowed_shed,
    };
    let report = validate(&inst);
    if report.is_empty() {
        Ok(inst)
    } else {
        Err(Error::Validation(report))
    }
}

/// Canonical document: ids sorted, fixed field order, pretty printed.
pub fn serialize_instance(inst: &Instance) -> String {
    let label = |id: NodeId| inst.nodes.get(id.0).map_or(u64::MAX, |n| n.label);
    let doc = InstanceDoc {
        nodes: inst
            .nodes
            .iter()
            .map(|n| NodeDoc {
                id: n.label,
                b: n.supply,
            })
            .collect(),
        edges: inst
            .edges
            .iter()
            .map(|e| EdgeDoc {
                id: e.label,
                i: label(e.endpoints[0]),
                j: label(e.endpoints[1]),
                u: e.capacity,
                c: e.build_cost,
                r: e.attack_cost,
                existing: e.existing,
            })
            .collect(),
        budget: inst.budget,
        penalty: inst.penalty,
        allowed_shed: inst.allowed_shed,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("instance document serializes");
    text.push('\n');
    text
}

// ---------------------------------------------------------------------------
// Fixtures

/// Builder used by fixtures, generators and tests.
#[derive(Debug, Clone, Default)]
pub struct InstanceBuilder {
    nodes: Vec<Node>,
    edges: Vec<(u64, u64, u64, f64, f64, f64, bool)>,
    budget: f64,
    penalty: Option<f64>,
    allowed_shed: f64,
}

impl InstanceBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node(mut self, label: u64, supply: f64) -> Self {
        self.nodes.push(Node { label, supply });
        self
    }

    /// Candidate edge with unit attack cost.
    pub fn candidate(self, label: u64, i: u64, j: u64, capacity: f64, cost: f64) -> Self {
        self.edge(label, i, j, capacity, cost, 1.0, false)
    }

    /// Existing edge with unit attack cost.
    pub fn existing(self, label: u64, i: u64, j: u64, capacity: f64) -> Self {
        self.edge(label, i, j, capacity, 0.0, 1.0, true)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn edge(
        mut self,
        label: u64,
        i: u64,
        j: u64,
        capacity: f64,
        cost: f64,
        attack_cost: f64,
        existing: bool,
    ) -> Self {
        self.edges
            .push((label, i, j, capacity, cost, attack_cost, existing));
        self
    }

    pub fn budget(mut self, budget: f64) -> Self {
        self.budget = budget;
        self
    }

    pub fn penalty(mut self, penalty: f64) -> Self {
        self.penalty = Some(penalty);
        self
    }

    pub fn allowed_shed(mut self, eps: f64) -> Self {
        self.allowed_shed = eps;
        self
    }

    /// Assemble without validating.
    pub fn build_unchecked(self) -> Instance {
        let mut nodes = self.nodes;
        nodes.sort_by_key(|n| n.label);
        let lookup = |label: u64| {
            nodes
                .binary_search_by_key(&label, |n| n.label)
                .map(NodeId)
                .unwrap_or(NodeId(usize::MAX))
        };
        let mut edges: Vec<Edge> = self
            .edges
            .iter()
            .map(|&(label, i, j, u, c, r, existing)| Edge {
                label,
                endpoints: [lookup(i), lookup(j)],
                capacity: u,
                build_cost: c,
                attack_cost: r,
                existing,
            })
            .collect();
        edges.sort_by_key(|e| e.label);
        Instance {
            nodes,
            edges,
            budget: self.budget,
            penalty: self.penalty,
            allowed_shed: self.allowed_shed,
        }
    }

    pub fn build(self) -> Result<Instance> {
        let inst = self.build_unchecked();
        let report = validate(&inst);
        if report.is_empty() {
            Ok(inst)
        } else {
            Err(Error::Validation(report))
        }
    }
}

/// Three-node triangle: supply 10 at node 1, demand 10 at node 3, every
/// edge a candidate of capacity 10 with costs 1 (e12, e23) and 3 (e13).
/// Edge labels are 12, 13 and 23. Budget 1, penalty 100.
pub fn tri3a() -> Instance {
    tri3(10.0)
}

/// [`tri3a`] with the capacity of e13 lowered to 6.
pub fn tri3b() -> Instance {
    tri3(6.0)
}

fn tri3(cap13: f64) -> Instance {
    InstanceBuilder::new()
        .node(1, 10.0)
        .node(2, 0.0)
        .node(3, -10.0)
        .candidate(12, 1, 2, 10.0, 1.0)
        .candidate(23, 2, 3, 10.0, 1.0)
        .candidate(13, 1, 3, cap13, 3.0)
        .budget(1.0)
        .penalty(100.0)
        .build()
        .expect("fixture is valid")
}
