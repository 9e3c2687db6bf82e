//! Max-flow / min-cut on the source/terminal augmented network.
//!
//! The augmented network has one node per instance node plus a super
//! source `s` (index `n`) and a super terminal `t` (index `n + 1`). Each
//! supply node `i` gets an arc `s → i` of capacity `b_i`, each demand node
//! `j` an arc `j → t` of capacity `-b_j`. Every built, non-attacked edge
//! contributes two independently bounded directed arcs.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::instance::{check_consistent, Attack, Design, EdgeId, Instance, NodeId, TOL};

/// Residual capacities at or below this are treated as saturated.
const BOTTLENECK_EPS: f64 = 1e-12;

/// Largest number of internal nodes accepted by [`min_cut_bruteforce`].
pub const BRUTEFORCE_MAX_NODES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcTag {
    Edge { edge: EdgeId, forward: bool },
    Source { node: NodeId },
    Sink { node: NodeId },
}

impl ArcTag {
    pub fn is_augmentation(&self) -> bool {
        !matches!(self, ArcTag::Edge { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowArc {
    pub tail: usize,
    pub head: usize,
    pub capacity: f64,
    pub tag: ArcTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowGraph {
    /// Number of nodes including source and sink.
    pub node_count: usize,
    pub source: usize,
    pub sink: usize,
    pub arcs: Vec<FlowArc>,
}

impl FlowGraph {
    /// A graph with `internal` plain nodes and no arcs.
    pub fn new(internal: usize) -> Self {
        Self {
            node_count: internal + 2,
            source: internal,
            sink: internal + 1,
            arcs: Vec::new(),
        }
    }

    pub fn internal_nodes(&self) -> usize {
        self.node_count - 2
    }

    pub fn add_arc(&mut self, tail: usize, head: usize, capacity: f64, tag: ArcTag) {
        self.arcs.push(FlowArc {
            tail,
            head,
            capacity,
            tag,
        });
    }

    /// One arc per line: `tail head capacity`. Source and sink print as `s`/`t`.
    pub fn dump(&self) -> String {
        let name = |v: usize| match v {
            v if v == self.source => "s".to_string(),
            v if v == self.sink => "t".to_string(),
            v => v.to_string(),
        };
        let mut out = String::new();
        for a in &self.arcs {
            let _ = writeln!(out, "{} {} {}", name(a.tail), name(a.head), a.capacity);
        }
        out
    }

    /// Capacity of the arcs leaving the node set flagged in `source_side`.
    pub fn cut_capacity(&self, source_side: &[bool]) -> f64 {
        self.arcs
            .iter()
            .filter(|a| source_side[a.tail] && !source_side[a.head])
            .map(|a| a.capacity)
            .sum()
    }
}

/// Augmented network for design `design` after attack `attack`.
pub fn build_augmented(inst: &Instance, design: &Design, attack: &Attack) -> Result<FlowGraph> {
    check_consistent(inst, design, attack)?;
    let mut g = FlowGraph::new(inst.node_count());
    for e in inst.edge_ids() {
        if !design.contains(e) || attack.contains(e) {
            continue;
        }
        let edge = inst.edge(e);
        let [i, j] = edge.endpoints;
        g.add_arc(i.0, j.0, edge.capacity, ArcTag::Edge { edge: e, forward: true });
        g.add_arc(j.0, i.0, edge.capacity, ArcTag::Edge { edge: e, forward: false });
    }
    for v in inst.node_ids() {
        let b = inst.node(v).supply;
        if b > 0.0 {
            g.add_arc(g.source, v.0, b, ArcTag::Source { node: v });
        }
    }
    for v in inst.node_ids() {
        let b = inst.node(v).supply;
        if b < 0.0 {
            g.add_arc(v.0, g.sink, -b, ArcTag::Sink { node: v });
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutCertificate {
    /// Flags per node; `true` for the source side `N1`.
    pub source_side: Vec<bool>,
    pub capacity: f64,
    /// Indices of arcs from `N1` to `N2`.
    pub crossing: Vec<usize>,
}

impl CutCertificate {
    pub fn sink_side(&self) -> impl Iterator<Item = usize> + '_ {
        self.source_side
            .iter()
            .enumerate()
            .filter(|(_, &s)| !s)
            .map(|(v, _)| v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxFlow {
    pub value: f64,
    /// Flow per arc of the input graph.
    pub flow: Vec<f64>,
    pub cut: CutCertificate,
}

struct Residual {
    head: Vec<usize>,
    cap: Vec<f64>,
    adj: Vec<Vec<usize>>,
}

/// Dinic's algorithm: BFS layering then blocking flows along the level graph.
pub fn max_flow(g: &FlowGraph) -> MaxFlow {
    let n = g.node_count;
    let mut res = Residual {
        head: Vec::with_capacity(2 * g.arcs.len()),
        cap: Vec::with_capacity(2 * g.arcs.len()),
        adj: vec![Vec::new(); n],
    };
    for a in &g.arcs {
        res.adj[a.tail].push(res.head.len());
        res.head.push(a.head);
        res.cap.push(a.capacity.max(0.0));
        res.adj[a.head].push(res.head.len());
        res.head.push(a.tail);
        res.cap.push(0.0);
    }

    let (s, t) = (g.source, g.sink);
    let mut level = vec![usize::MAX; n];
    let mut next = vec![0usize; n];
    if s != t {
        while bfs_levels(&res, s, &mut level) && level[t] != usize::MAX {
            next.iter_mut().for_each(|x| *x = 0);
            loop {
                let pushed = push_blocking(&mut res, &level, &mut next, s, t, f64::INFINITY);
                if pushed <= BOTTLENECK_EPS {
                    break;
                }
            }
        }
    }

    let flow: Vec<f64> = g
        .arcs
        .iter()
        .enumerate()
        .map(|(k, a)| (a.capacity - res.cap[2 * k]).clamp(0.0, a.capacity.max(0.0)))
        .collect();
    let value = g
        .arcs
        .iter()
        .zip(&flow)
        .filter(|(a, _)| a.tail == s)
        .map(|(_, f)| f)
        .sum::<f64>()
        - g.arcs
            .iter()
            .zip(&flow)
            .filter(|(a, _)| a.head == s)
            .map(|(_, f)| f)
            .sum::<f64>();

    bfs_levels(&res, s, &mut level);
    let source_side: Vec<bool> = level.iter().map(|&l| l != usize::MAX).collect();
    let crossing: Vec<usize> = g
        .arcs
        .iter()
        .enumerate()
        .filter(|(_, a)| source_side[a.tail] && !source_side[a.head])
        .map(|(k, _)| k)
        .collect();
    let capacity = crossing.iter().map(|&k| g.arcs[k].capacity).sum();
    MaxFlow {
        value,
        flow,
        cut: CutCertificate {
            source_side,
            capacity,
            crossing,
        },
    }
}

fn bfs_levels(res: &Residual, s: usize, level: &mut [usize]) -> bool {
    level.iter_mut().for_each(|l| *l = usize::MAX);
    level[s] = 0;
    let mut queue = VecDeque::from([s]);
    while let Some(v) = queue.pop_front() {
        for &k in &res.adj[v] {
            let w = res.head[k];
            if res.cap[k] > BOTTLENECK_EPS && level[w] == usize::MAX {
                level[w] = level[v] + 1;
                queue.push_back(w);
            }
        }
    }
    true
}

fn push_blocking(
    res: &mut Residual,
    level: &[usize],
    next: &mut [usize],
    v: usize,
    t: usize,
    limit: f64,
) -> f64 {
    if v == t {
        return limit;
    }
    while next[v] < res.adj[v].len() {
        let k = res.adj[v][next[v]];
        let w = res.head[k];
        if res.cap[k] > BOTTLENECK_EPS && level[w] == level[v].wrapping_add(1) {
            let pushed = push_blocking(res, level, next, w, t, limit.min(res.cap[k]));
            if pushed > BOTTLENECK_EPS {
                res.cap[k] -= pushed;
                res.cap[k ^ 1] += pushed;
                return pushed;
            }
        }
        next[v] += 1;
    }
    0.0
}

/// Whether the built, surviving network can carry all demand.
pub fn feasible_full_demand(inst: &Instance, design: &Design, attack: &Attack) -> Result<bool> {
    let g = build_augmented(inst, design, attack)?;
    Ok(max_flow(&g).value >= inst.total_demand() - TOL)
}

/// Minimum s-t cut by enumerating every bipartition of the internal nodes.
pub fn min_cut_bruteforce(g: &FlowGraph) -> Result<f64> {
    let internal = g.internal_nodes();
    if internal > BRUTEFORCE_MAX_NODES {
        return Err(Error::SizeLimit(format!(
            "{internal} internal nodes, limit {BRUTEFORCE_MAX_NODES}"
        )));
    }
    // internal nodes are 0..internal, with s/t as the last two indices
    let mut best = f64::INFINITY;
    let mut side = vec![false; g.node_count];
    side[g.source] = true;
    side[g.sink] = false;
    for mask in 0u32..(1u32 << internal) {
        for (v, flag) in side.iter_mut().enumerate().take(internal) {
            *flag = mask & (1 << v) != 0;
        }
        best = best.min(g.cut_capacity(&side));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{tri3a, tri3b};

    fn e(i: usize) -> EdgeId {
        EdgeId(i)
    }

    // tri3 edge order by label: 12, 13, 23

    #[test]
    fn augmented_tri3a_counts() {
        let inst = tri3a();
        let g = build_augmented(&inst, &Design::full(3), &Attack::empty(3)).unwrap();
        assert_eq!(g.node_count, 5);
        assert_eq!(g.arcs.len(), 8);
        assert_eq!(g.arcs.iter().filter(|a| a.tag.is_augmentation()).count(), 2);
        let empty = build_augmented(&inst, &Design::empty(3), &Attack::empty(3)).unwrap();
        assert_eq!(empty.arcs.len(), 2);
        assert!(empty.arcs.iter().all(|a| a.tag.is_augmentation()));
    }

    #[test]
    fn removal_drops_attacked_edge() {
        let inst = tri3b();
        let g = build_augmented(&inst, &Design::full(3), &Attack::from_edges(3, [e(0)])).unwrap();
        let edges: Vec<EdgeId> = g
            .arcs
            .iter()
            .filter_map(|a| match a.tag {
                ArcTag::Edge { edge, .. } => Some(edge),
                _ => None,
            })
            .collect();
        assert_eq!(edges, vec![e(1), e(1), e(2), e(2)]);
    }

    #[test]
    fn inconsistent_pair_rejected() {
        let inst = tri3a();
        let r = build_augmented(&inst, &Design::empty(3), &Attack::from_edges(3, [e(0)]));
        assert!(matches!(r, Err(Error::Inconsistent(_))));
    }

    #[test]
    fn tri3a_full_flow() {
        let inst = tri3a();
        let g = build_augmented(&inst, &Design::full(3), &Attack::empty(3)).unwrap();
        let mf = max_flow(&g);
        assert!((mf.value - 10.0).abs() < 1e-12);
        assert!((mf.cut.capacity - 10.0).abs() < 1e-12);
        assert!(mf.cut.source_side[g.source] && !mf.cut.source_side[g.sink]);
        assert_eq!(min_cut_bruteforce(&g).unwrap(), 10.0);
    }

    #[test]
    fn empty_network() {
        let g = FlowGraph::new(0);
        let mf = max_flow(&g);
        assert_eq!(mf.value, 0.0);
        assert_eq!(mf.cut.source_side, vec![true, false]);
        assert_eq!(min_cut_bruteforce(&g).unwrap(), 0.0);
    }

    #[test]
    fn tri3b_after_attack() {
        let inst = tri3b();
        let g = build_augmented(&inst, &Design::full(3), &Attack::from_edges(3, [e(0)])).unwrap();
        let mf = max_flow(&g);
        assert!((mf.value - 6.0).abs() < 1e-12);
        assert_eq!(mf.cut.crossing.len(), 1);
        let arc = &g.arcs[mf.cut.crossing[0]];
        assert_eq!(arc.tag, ArcTag::Edge { edge: e(1), forward: true });
        assert_eq!(min_cut_bruteforce(&g).unwrap(), 6.0);
    }

    #[test]
    fn full_demand_checks() {
        assert!(feasible_full_demand(&tri3a(), &Design::full(3), &Attack::from_edges(3, [e(1)])).unwrap());
        assert!(!feasible_full_demand(&tri3b(), &Design::full(3), &Attack::from_edges(3, [e(0)])).unwrap());
        let mut zero = tri3a();
        for n in &mut zero.nodes {
            n.supply = 0.0;
        }
        assert!(feasible_full_demand(&zero, &Design::empty(3), &Attack::empty(3)).unwrap());
    }

    #[test]
    fn bruteforce_size_limit() {
        let g = FlowGraph::new(21);
        assert!(matches!(min_cut_bruteforce(&g), Err(Error::SizeLimit(_))));
    }

    #[test]
    fn dump_lists_arcs() {
        let inst = tri3a();
        let g = build_augmented(&inst, &Design::empty(3), &Attack::empty(3)).unwrap();
        assert_eq!(g.dump(), "s 0 10\n2 t 10\n");
    }
}
