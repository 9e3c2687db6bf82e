//! Deterministic instance families: grid, random and replicated networks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, InstanceBuilder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Near-square grid, every edge a candidate.
    Grid,
    /// Random spanning tree, a second edge at every leaf, then extra edges;
    /// every edge a candidate.
    Random,
    /// Random tree plus extra edges kept as existing edges, each with
    /// `factor − 1` candidate copies.
    Replicated,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(Family::Grid),
            "random" => Ok(Family::Random),
            "replicated" => Ok(Family::Replicated),
            _ => Err(Error::Input(format!("unknown family {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub family: Family,
    pub nodes: usize,
    /// Edges added on top of the spanning tree (random and replicated).
    pub extra_edges: usize,
    pub factor: usize,
    pub budget: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(family: Family, nodes: usize, seed: u64) -> Self {
        Self {
            family,
            nodes,
            extra_edges: nodes / 2,
            factor: 2,
            budget: 1.0,
            seed,
        }
    }
}

type Topology = Vec<(u64, u64)>;

fn grid(n: usize) -> Topology {
    let rows = (1..=n).filter(|&r| n.is_multiple_of(r) && r * r <= n).max().unwrap_or(1);
    let cols = n / rows;
    let id = |r: usize, c: usize| (r * cols + c + 1) as u64;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    edges
}

fn random_topology(n: usize, extra: usize, close_leaves: bool, rng: &mut ChaCha8Rng) -> Topology {
    let mut edges: Topology = (2..=n as u64)
        .map(|v| (rng.gen_range(1..v), v))
        .collect();
    // give every tree leaf a second neighbour
    let mut degree = vec![0usize; n + 1];
    for &(i, j) in &edges {
        degree[i as usize] += 1;
        degree[j as usize] += 1;
    }
    if close_leaves && n >= 3 {
        for v in 1..=n as u64 {
            if degree[v as usize] != 1 {
                continue;
            }
            let (a, b) = *edges.iter().find(|&&(i, j)| i == v || j == v).unwrap();
            let neighbour = if a == v { b } else { a };
            let mut w = rng.gen_range(1..=n as u64 - 2);
            for skip in [v.min(neighbour), v.max(neighbour)] {
                if w >= skip {
                    w += 1;
                }
            }
            edges.push((v.min(w), v.max(w)));
            degree[v as usize] += 1;
            degree[w as usize] += 1;
        }
    }
    for _ in 0..extra {
        let i = rng.gen_range(1..=n as u64);
        let mut j = rng.gen_range(1..n as u64);
        if j >= i {
            j += 1;
        }
        edges.push((i.min(j), i.max(j)));
    }
    edges
}

/// Integer injections: about a third of the nodes demand 1..=5 units, the
/// same number supply the total in integer shares.
fn injections(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let k = (n / 3).max(1);
    let mut b = vec![0.0; n];
    let demand: Vec<u32> = (0..k).map(|_| rng.gen_range(1..=5)).collect();
    let total: u32 = demand.iter().sum();
    for (&v, &d) in order[k..2 * k].iter().zip(&demand) {
        b[v] = -f64::from(d);
    }
    // split total into k positive parts
    let mut cuts: Vec<u32> = (1..total).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<u32> = cuts.into_iter().take(k - 1).collect();
    cuts.sort_unstable();
    let mut prev = 0;
    for (idx, &v) in order[..k].iter().enumerate() {
        let next = cuts.get(idx).copied().unwrap_or(total);
        b[v] = f64::from(next - prev);
        prev = next;
    }
    b
}

pub fn generate_instance(spec: &GeneratorSpec) -> Result<Instance> {
    if spec.nodes < 2 {
        return Err(Error::Spec(format!("need at least 2 nodes, got {}", spec.nodes)));
    }
    if spec.factor < 1 {
        return Err(Error::Spec("replication factor must be at least 1".into()));
    }
    if spec.budget.is_nan() || spec.budget < 0.0 {
        return Err(Error::Spec(format!("budget {} is negative", spec.budget)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.nodes;
    let topology = match spec.family {
        Family::Grid => grid(n),
        Family::Random => random_topology(n, spec.extra_edges, true, &mut rng),
        Family::Replicated => random_topology(n, spec.extra_edges, false, &mut rng),
    };
    let b = injections(n, &mut rng);
    let demand: f64 = b.iter().filter(|&&x| x < 0.0).map(|x| -x).sum();
    let hi = demand.max(1.0) as u32;

    let mut builder = InstanceBuilder::new().budget(spec.budget);
    for (v, &s) in b.iter().enumerate() {
        builder = builder.node(v as u64 + 1, s);
    }
    let mut label = 0u64;
    for &(i, j) in &topology {
        let u = f64::from(rng.gen_range(hi.div_ceil(2)..=hi));
        match spec.family {
            Family::Grid | Family::Random => {
                label += 1;
                let c = f64::from(rng.gen_range(1..=10u32));
                builder = builder.candidate(label, i, j, u, c);
            }
            Family::Replicated => {
                label += 1;
                builder = builder.existing(label, i, j, u);
                for _ in 1..spec.factor {
                    label += 1;
                    let c = f64::from(rng.gen_range(1..=10u32));
                    builder = builder.candidate(label, i, j, u, c);
                }
            }
        }
    }
    builder.build()
}

/// Keep every edge of `base` as an existing edge and add `factor − 1`
/// candidate copies of each. Copies keep the base build cost when it is
/// positive, else cost 1.
pub fn replicate(base: &Instance, factor: usize) -> Result<Instance> {
    if factor < 1 {
        return Err(Error::Spec("replication factor must be at least 1".into()));
    }
    let mut builder = InstanceBuilder::new().budget(base.budget);
    if let Some(p) = base.penalty {
        builder = builder.penalty(p);
    }
    builder = builder.allowed_shed(base.allowed_shed);
    for node in &base.nodes {
        builder = builder.node(node.label, node.supply);
    }
    let mut next = base.edges.iter().map(|e| e.label).max().unwrap_or(0);
    for e in &base.edges {
        let [i, j] = e.endpoints.map(|v| base.node(v).label);
        builder = builder.edge(e.label, i, j, e.capacity, 0.0, e.attack_cost, true);
    }
    for e in &base.edges {
        let [i, j] = e.endpoints.map(|v| base.node(v).label);
        let c = if e.build_cost > 0.0 { e.build_cost } else { 1.0 };
        for _ in 1..factor {
            next += 1;
            builder = builder.edge(next, i, j, e.capacity, c, e.attack_cost, false);
        }
    }
    builder.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{serialize_instance, tri3a};

    #[test]
    fn grid_two_by_two() {
        let spec = GeneratorSpec::new(Family::Grid, 4, 7);
        let inst = generate_instance(&spec).unwrap();
        assert_eq!(inst.node_count(), 4);
        assert_eq!(inst.edge_count(), 4);
        assert!(inst.nodes.iter().map(|n| n.supply).sum::<f64>().abs() < 1e-12);
        assert!(inst.total_demand() > 0.0);
    }

    #[test]
    fn replicate_triangle() {
        let inst = replicate(&tri3a(), 2).unwrap();
        assert_eq!(inst.edge_count(), 6);
        assert_eq!(inst.edges.iter().filter(|e| e.existing).count(), 3);
        assert!(inst.edges.iter().filter(|e| !e.existing).all(|e| e.build_cost > 0.0));
    }

    #[test]
    fn deterministic_bytes() {
        for family in [Family::Grid, Family::Random, Family::Replicated] {
            let spec = GeneratorSpec {
                factor: 3,
                ..GeneratorSpec::new(family, 9, 42)
            };
            let a = serialize_instance(&generate_instance(&spec).unwrap());
            let b = serialize_instance(&generate_instance(&spec).unwrap());
            assert_eq!(a, b);
        }
    }

    #[test]
    fn replicated_counts() {
        let spec = GeneratorSpec {
            factor: 4,
            extra_edges: 3,
            ..GeneratorSpec::new(Family::Replicated, 6, 1)
        };
        let inst = generate_instance(&spec).unwrap();
        assert_eq!(inst.edge_count(), (5 + 3) * 4);
        assert_eq!(inst.edges.iter().filter(|e| e.existing).count(), 8);
        assert!(inst.edges.iter().filter(|e| !e.existing).all(|e| e.build_cost > 0.0));
    }

    #[test]
    fn bad_specs() {
        assert!(matches!(
            generate_instance(&GeneratorSpec::new(Family::Grid, 0, 1)),
            Err(Error::Spec(_))
        ));
        let spec = GeneratorSpec {
            factor: 0,
            ..GeneratorSpec::new(Family::Replicated, 4, 1)
        };
        assert!(generate_instance(&spec).is_err());
    }
}
