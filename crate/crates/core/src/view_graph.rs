//! Weighted covisibility graph over views: construction, pruning, traversal
//! and long-tail statistics.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::real::Real;
use crate::recon_io::{MatchEdge, SceneReconstruction};

/// Match-count cutoff below which an overlap is considered minor.
pub const DEFAULT_PRUNE_THRESHOLD: u32 = 50;

/// Degrees reported in [`GraphStatsReport::frac_degree_le`].
pub const LOW_DEGREE_LEVELS: [usize; 4] = [0, 1, 2, 3];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("view {0} is not a node of the graph")]
    UnknownNode(u32),
}

/// Undirected weighted graph keyed by view id.
///
/// Nodes are stored densely in ascending id order and every adjacency list is
/// sorted by neighbor id, so all traversals are reproducible.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViewGraph {
    ids: Vec<u32>,
    adj: Vec<Vec<(usize, u32)>>,
    prune_threshold: u32,
}

impl ViewGraph {
    pub fn from_edges(
        nodes: impl IntoIterator<Item = u32>,
        edges: &[MatchEdge],
    ) -> Result<Self, GraphError> {
        let ids: Vec<u32> = nodes
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut adj = vec![Vec::new(); ids.len()];
        let index = |v: u32| {
            ids.binary_search(&v)
                .map_err(|_| GraphError::UnknownNode(v))
        };
        let mut seen = BTreeSet::new();
        for e in edges {
            let (a, b) = (index(e.view_a)?, index(e.view_b)?);
            if a == b || !seen.insert((a.min(b), a.max(b))) {
                continue;
            }
            adj[a].push((b, e.match_count));
            adj[b].push((a, e.match_count));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Self {
            ids,
            adj,
            prune_threshold: 0,
        })
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Node ids in ascending order.
    pub fn nodes(&self) -> &[u32] {
        &self.ids
    }

    pub fn contains(&self, id: u32) -> bool {
        self.index_of(id).is_some()
    }

    pub fn index_of(&self, id: u32) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    pub fn id_of(&self, index: usize) -> u32 {
        self.ids[index]
    }

    pub fn prune_threshold(&self) -> u32 {
        self.prune_threshold
    }

    /// `(neighbor index, weight)` pairs in ascending neighbor order.
    pub fn adjacent(&self, index: usize) -> &[(usize, u32)] {
        &self.adj[index]
    }

    /// `(neighbor id, weight)` pairs in ascending neighbor order.
    pub fn neighbors(&self, id: u32) -> Result<impl Iterator<Item = (u32, u32)> + '_, GraphError> {
        let i = self.index_of(id).ok_or(GraphError::UnknownNode(id))?;
        Ok(self.adj[i].iter().map(move |&(j, w)| (self.ids[j], w)))
    }

    pub fn degree(&self, id: u32) -> Result<usize, GraphError> {
        let i = self.index_of(id).ok_or(GraphError::UnknownNode(id))?;
        Ok(self.adj[i].len())
    }

    pub fn weight(&self, a: u32, b: u32) -> Option<u32> {
        let (i, j) = (self.index_of(a)?, self.index_of(b)?);
        self.adj[i]
            .binary_search_by_key(&j, |&(n, _)| n)
            .ok()
            .map(|k| self.adj[i][k].1)
    }

    /// All edges with `view_a < view_b`, sorted.
    pub fn edges(&self) -> Vec<MatchEdge> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (i, list) in self.adj.iter().enumerate() {
            for &(j, w) in list.iter().filter(|(j, _)| *j > i) {
                out.push(MatchEdge {
                    view_a: self.ids[i],
                    view_b: self.ids[j],
                    match_count: w,
                });
            }
        }
        out
    }

    /// Subgraph induced on `keep`; ids not in the graph are ignored.
    pub fn induced(&self, keep: &BTreeSet<u32>) -> ViewGraph {
        let ids: Vec<u32> = keep.iter().copied().filter(|&v| self.contains(v)).collect();
        let remap: BTreeMap<usize, usize> = ids
            .iter()
            .enumerate()
            .map(|(new, &v)| (self.index_of(v).expect("filtered"), new))
            .collect();
        let adj = remap
            .keys()
            .map(|&old| {
                self.adj[old]
                    .iter()
                    .filter_map(|&(j, w)| remap.get(&j).map(|&nj| (nj, w)))
                    .collect()
            })
            .collect();
        ViewGraph {
            ids,
            adj,
            prune_threshold: self.prune_threshold,
        }
    }

    /// Hop distances from a set of source indices; `None` when unreachable.
    pub fn bfs_hops(&self, sources: impl IntoIterator<Item = usize>) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count()];
        let mut queue = VecDeque::new();
        for s in sources {
            if dist[s].is_none() {
                dist[s] = Some(0);
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            let du = dist[u].expect("queued nodes have a distance");
            for &(v, _) in &self.adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}

/// One node per view, one undirected edge per match record.
pub fn build_graph<T: Real>(scene: &SceneReconstruction<T>) -> ViewGraph {
    ViewGraph::from_edges(scene.views.keys().copied(), &scene.edges)
        .expect("scene invariants guarantee edge endpoints exist")
}

/// Keeps edges with weight `>= threshold`; the node set is unchanged.
pub fn prune_edges(graph: &ViewGraph, threshold: u32) -> ViewGraph {
    let adj = graph
        .adj
        .iter()
        .map(|list| {
            list.iter()
                .copied()
                .filter(|&(_, w)| w >= threshold)
                .collect()
        })
        .collect();
    ViewGraph {
        ids: graph.ids.clone(),
        adj,
        prune_threshold: graph.prune_threshold.max(threshold),
    }
}

/// Connected components ordered by their smallest view id.
pub fn connected_components(graph: &ViewGraph) -> Vec<BTreeSet<u32>> {
    let mut label = vec![usize::MAX; graph.node_count()];
    let mut out = Vec::new();
    for start in 0..graph.node_count() {
        if label[start] != usize::MAX {
            continue;
        }
        let comp = out.len();
        let mut members = BTreeSet::new();
        let mut queue = VecDeque::from([start]);
        label[start] = comp;
        while let Some(u) = queue.pop_front() {
            members.insert(graph.ids[u]);
            for &(v, _) in &graph.adj[u] {
                if label[v] == usize::MAX {
                    label[v] = comp;
                    queue.push_back(v);
                }
            }
        }
        out.push(members);
    }
    out
}

/// Number of connected components of the subgraph induced on `nodes`.
pub fn induced_component_count(graph: &ViewGraph, nodes: &BTreeSet<u32>) -> usize {
    connected_components(&graph.induced(nodes)).len()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphStatsReport {
    pub node_count: usize,
    pub edge_count: usize,
    pub prune_threshold: u32,
    pub degree_histogram: BTreeMap<usize, usize>,
    pub frac_degree_le: BTreeMap<usize, f64>,
    /// Mean edge weight; `None` for an edgeless graph.
    pub mean_match_count: Option<f64>,
    /// Largest first.
    pub connected_component_sizes: Vec<usize>,
}

impl GraphStatsReport {
    /// Key/value lines followed by `[degree_histogram]` and
    /// `[component_sizes]` sections.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "node_count {}", self.node_count);
        let _ = writeln!(s, "edge_count {}", self.edge_count);
        let _ = writeln!(s, "prune_threshold {}", self.prune_threshold);
        match self.mean_match_count {
            Some(m) => {
                let _ = writeln!(s, "mean_match_count {m}");
            }
            None => s.push_str("mean_match_count none\n"),
        }
        for (k, f) in &self.frac_degree_le {
            let _ = writeln!(s, "frac_degree_le_{k} {f}");
        }
        let _ = writeln!(
            s,
            "component_count {}",
            self.connected_component_sizes.len()
        );
        s.push_str("[degree_histogram]\n");
        for (d, c) in &self.degree_histogram {
            let _ = writeln!(s, "{d} {c}");
        }
        s.push_str("[component_sizes]\n");
        for c in &self.connected_component_sizes {
            let _ = writeln!(s, "{c}");
        }
        s
    }
}

pub fn compute_stats(graph: &ViewGraph) -> GraphStatsReport {
    let n = graph.node_count();
    let mut degree_histogram = BTreeMap::new();
    for list in &graph.adj {
        *degree_histogram.entry(list.len()).or_insert(0) += 1;
    }
    let frac_degree_le = LOW_DEGREE_LEVELS
        .iter()
        .map(|&k| {
            let count: usize = degree_histogram.range(..=k).map(|(_, c)| c).sum();
            let frac = if n == 0 { 0.0 } else { count as f64 / n as f64 };
            (k, frac)
        })
        .collect();
    let edges = graph.edges();
    let mean_match_count = (!edges.is_empty())
        .then(|| edges.iter().map(|e| e.match_count as f64).sum::<f64>() / edges.len() as f64);
    let mut sizes: Vec<usize> = connected_components(graph)
        .iter()
        .map(BTreeSet::len)
        .collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    GraphStatsReport {
        node_count: n,
        edge_count: edges.len(),
        prune_threshold: graph.prune_threshold,
        degree_histogram,
        frac_degree_le,
        mean_match_count,
        connected_component_sizes: sizes,
    }
}
