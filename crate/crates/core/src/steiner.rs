//! Approximate Steiner trees (Mehlhorn's variant of the Kou-Markowsky-Berman
//! 2-approximation) and community terminal selection.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::community::CommunityAssignment;
use crate::view_graph::ViewGraph;

/// Edge length used by the tree construction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// Every edge has length 1: minimizes the number of connector views.
    #[default]
    UnitHop,
    /// Length `1 / match_count`: prefers strongly matched connectors.
    InverseMatch,
}

impl WeightMode {
    pub fn length(self, match_count: u32) -> f64 {
        match self {
            WeightMode::UnitHop => 1.0,
            WeightMode::InverseMatch => 1.0 / match_count as f64,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SteinerError {
    #[error("terminal set is empty")]
    NoTerminals,
    #[error("terminal {0} is not a graph node")]
    UnknownTerminal(u32),
    #[error("terminals {0:?} cannot be reached from the first terminal")]
    DisconnectedTerminals(Vec<u32>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteinerResult {
    pub terminals: BTreeSet<u32>,
    pub tree_nodes: BTreeSet<u32>,
    /// Edges as `(smaller id, larger id)`.
    pub tree_edges: BTreeSet<(u32, u32)>,
    pub total_weight: f64,
}

/// One seeded-random member per community present in `part`.
pub fn select_terminals(
    part: &BTreeSet<u32>,
    communities: &CommunityAssignment,
    seed: u64,
) -> BTreeSet<u32> {
    select_terminals_with_rng(part, communities, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn select_terminals_with_rng<R: Rng + ?Sized>(
    part: &BTreeSet<u32>,
    communities: &CommunityAssignment,
    rng: &mut R,
) -> BTreeSet<u32> {
    let mut groups: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    for &v in part {
        if let Some(c) = communities.label(v) {
            groups.entry(c).or_default().push(v);
        }
    }
    groups
        .values()
        .map(|members| *members.choose(rng).expect("groups are non-empty"))
        .collect()
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier {
    dist: f64,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on (dist, node).
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Voronoi {
    dist: Vec<f64>,
    source: Vec<Option<usize>>,
    pred: Vec<Option<usize>>,
}

/// Multi-source Dijkstra from all terminals. Equal-distance paths keep the
/// predecessor with the smallest id.
fn voronoi(graph: &ViewGraph, terminals: &[usize], mode: WeightMode) -> Voronoi {
    let n = graph.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut source = vec![None; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &t in terminals {
        dist[t] = 0.0;
        source[t] = Some(t);
        heap.push(Frontier { dist: 0.0, node: t });
    }
    while let Some(Frontier { dist: d, node: u }) = heap.pop() {
        if done[u] || d > dist[u] {
            continue;
        }
        done[u] = true;
        for &(v, w) in graph.adjacent(u) {
            let len = mode.length(w);
            if done[v] || !len.is_finite() {
                continue;
            }
            let nd = d + len;
            let better = nd < dist[v] || (nd == dist[v] && pred[v].is_some_and(|p| u < p));
            if better {
                dist[v] = nd;
                pred[v] = Some(u);
                source[v] = source[u];
                heap.push(Frontier { dist: nd, node: v });
            }
        }
    }
    Voronoi { dist, source, pred }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut c = x;
        while self.parent[c] != r {
            let next = self.parent[c];
            self.parent[c] = r;
            c = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Kruskal over `(length, a, b)` triples; ties resolve by node order.
fn kruskal(n: usize, mut edges: Vec<(f64, usize, usize)>) -> Vec<(f64, usize, usize)> {
    edges.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut dsu = DisjointSet::new(n);
    edges
        .into_iter()
        .filter(|&(_, a, b)| dsu.union(a, b))
        .collect()
}

/// Approximate minimum Steiner tree spanning `terminals`.
///
/// Voronoi regions are grown around the terminals, the cheapest boundary
/// edge between each pair of regions defines the terminal distance graph,
/// its MST is expanded into graph paths, and the MST of those paths is
/// stripped of non-terminal leaves. The weight is within
/// `2 (1 - 1/|T|)` of optimal.
pub fn approximate_steiner_tree(
    graph: &ViewGraph,
    terminals: &BTreeSet<u32>,
    mode: WeightMode,
) -> Result<SteinerResult, SteinerError> {
    let term_idx = terminals
        .iter()
        .map(|&t| graph.index_of(t).ok_or(SteinerError::UnknownTerminal(t)))
        .collect::<Result<Vec<_>, _>>()?;
    let Some(&first) = term_idx.first() else {
        return Err(SteinerError::NoTerminals);
    };
    if term_idx.len() == 1 {
        return Ok(SteinerResult {
            terminals: terminals.clone(),
            tree_nodes: terminals.clone(),
            tree_edges: BTreeSet::new(),
            total_weight: 0.0,
        });
    }

    let vor = voronoi(graph, &term_idx, mode);

    // Cheapest bridge between each pair of Voronoi regions.
    let mut bridges: BTreeMap<(usize, usize), (f64, usize, usize)> = BTreeMap::new();
    for u in 0..graph.node_count() {
        let Some(su) = vor.source[u] else { continue };
        for &(v, w) in graph.adjacent(u).iter().filter(|(v, _)| *v > u) {
            let Some(sv) = vor.source[v] else { continue };
            let len = mode.length(w);
            if su == sv || !len.is_finite() {
                continue;
            }
            let cand = (vor.dist[u] + len + vor.dist[v], u, v);
            let key = (su.min(sv), su.max(sv));
            let keep = bridges.get(&key).is_none_or(|cur| {
                cand.0
                    .total_cmp(&cur.0)
                    .then((cand.1, cand.2).cmp(&(cur.1, cur.2)))
                    .is_lt()
            });
            if keep {
                bridges.insert(key, cand);
            }
        }
    }
    let closure: Vec<(f64, usize, usize)> = bridges
        .iter()
        .map(|(&(a, b), &(len, _, _))| (len, a, b))
        .collect();
    let closure_mst = kruskal(graph.node_count(), closure);

    let mut dsu = DisjointSet::new(graph.node_count());
    for &(_, a, b) in &closure_mst {
        dsu.union(a, b);
    }
    let root = dsu.find(first);
    let unreachable: Vec<u32> = term_idx
        .iter()
        .filter(|&&t| dsu.find(t) != root)
        .map(|&t| graph.id_of(t))
        .collect();
    if !unreachable.is_empty() {
        return Err(SteinerError::DisconnectedTerminals(unreachable));
    }

    // Expand closure edges into shortest paths of the original graph.
    let mut path_edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for &(_, sa, sb) in &closure_mst {
        let (_, u, v) = bridges[&(sa.min(sb), sa.max(sb))];
        path_edges.insert((u.min(v), u.max(v)));
        for mut x in [u, v] {
            while let Some(p) = vor.pred[x] {
                path_edges.insert((x.min(p), x.max(p)));
                x = p;
            }
        }
    }

    let weight_of = |a: usize, b: usize| -> f64 {
        let w = graph
            .adjacent(a)
            .iter()
            .find(|(n, _)| *n == b)
            .map(|&(_, w)| w)
            .expect("path edges exist in the graph");
        mode.length(w)
    };
    let candidates = path_edges
        .iter()
        .map(|&(a, b)| (weight_of(a, b), a, b))
        .collect();
    let mut tree: BTreeSet<(usize, usize)> = kruskal(graph.node_count(), candidates)
        .into_iter()
        .map(|(_, a, b)| (a, b))
        .collect();

    // Strip non-terminal leaves until none remain.
    let is_terminal: BTreeSet<usize> = term_idx.iter().copied().collect();
    loop {
        let mut degree: BTreeMap<usize, usize> = BTreeMap::new();
        for &(a, b) in &tree {
            *degree.entry(a).or_insert(0) += 1;
            *degree.entry(b).or_insert(0) += 1;
        }
        let leaves: BTreeSet<usize> = degree
            .iter()
            .filter(|(n, d)| **d == 1 && !is_terminal.contains(n))
            .map(|(&n, _)| n)
            .collect();
        if leaves.is_empty() {
            break;
        }
        tree.retain(|(a, b)| !leaves.contains(a) && !leaves.contains(b));
    }

    let mut tree_nodes: BTreeSet<u32> = terminals.clone();
    let mut tree_edges = BTreeSet::new();
    let mut total_weight = 0.0;
    for &(a, b) in &tree {
        total_weight += weight_of(a, b);
        let (ia, ib) = (graph.id_of(a), graph.id_of(b));
        tree_nodes.insert(ia);
        tree_nodes.insert(ib);
        tree_edges.insert((ia.min(ib), ia.max(ib)));
    }
    Ok(SteinerResult {
        terminals: terminals.clone(),
        tree_nodes,
        tree_edges,
        total_weight,
    })
}
