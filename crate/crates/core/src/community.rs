//! Louvain modularity maximization over the weighted view graph.
//!
//! Match counts are used as edge weights. Local moves visit nodes in a seeded
//! shuffled order and accept a move only when it strictly improves modularity;
//! equal-gain targets resolve to the lowest community id.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::view_graph::ViewGraph;

/// Upper bound on local-move passes per level.
const MAX_PASSES: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CommunityError {
    #[error("modularity is undefined for a graph without edges")]
    EmptyGraph,
    #[error("view {0} has no community label")]
    MissingLabel(u32),
}

/// Community label per view, dense ids `0..K`.
#[derive(Clone, Debug, PartialEq)]
pub struct CommunityAssignment {
    labels: BTreeMap<u32, usize>,
    community_count: usize,
    /// Modularity of the final labels at resolution 1 (0 for an edgeless graph).
    pub modularity: f64,
    /// Number of coarsening levels that moved at least one node.
    pub level_count: usize,
    /// Modularity of the original graph after each level in `level_count`.
    pub level_modularity: Vec<f64>,
}

impl CommunityAssignment {
    /// Relabels arbitrary community keys densely, in order of the smallest
    /// view id of each community. Modularity fields are left at zero.
    pub fn from_labels<K: Ord + Clone>(labels: impl IntoIterator<Item = (u32, K)>) -> Self {
        let raw: BTreeMap<u32, K> = labels.into_iter().collect();
        let mut remap: BTreeMap<K, usize> = BTreeMap::new();
        let mut dense = BTreeMap::new();
        for (id, k) in raw {
            let next = remap.len();
            let c = *remap.entry(k).or_insert(next);
            dense.insert(id, c);
        }
        Self {
            community_count: remap.len(),
            labels: dense,
            modularity: 0.0,
            level_count: 0,
            level_modularity: Vec::new(),
        }
    }

    pub fn label(&self, view: u32) -> Option<usize> {
        self.labels.get(&view).copied()
    }

    pub fn labels(&self) -> &BTreeMap<u32, usize> {
        &self.labels
    }

    pub fn community_count(&self) -> usize {
        self.community_count
    }

    /// Communities as sorted member lists, indexed by community id.
    pub fn members(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.community_count];
        for (&v, &c) in &self.labels {
            out[c].push(v);
        }
        out
    }

    /// `VIEW_ID COMMUNITY_ID` lines.
    pub fn render(&self) -> String {
        self.labels
            .iter()
            .map(|(v, c)| format!("{v} {c}\n"))
            .collect()
    }
}

/// Weighted Newman-Girvan modularity at resolution 1.
pub fn modularity(graph: &ViewGraph, labels: &CommunityAssignment) -> Result<f64, CommunityError> {
    modularity_with_resolution(graph, labels, 1.0)
}

pub fn modularity_with_resolution(
    graph: &ViewGraph,
    labels: &CommunityAssignment,
    resolution: f64,
) -> Result<f64, CommunityError> {
    let dense = graph
        .nodes()
        .iter()
        .map(|&v| labels.label(v).ok_or(CommunityError::MissingLabel(v)))
        .collect::<Result<Vec<_>, _>>()?;
    dense_modularity(graph, &dense, resolution)
}

fn dense_modularity(
    graph: &ViewGraph,
    comm: &[usize],
    resolution: f64,
) -> Result<f64, CommunityError> {
    let k = comm.iter().max().map_or(0, |m| m + 1);
    let mut internal = vec![0.0; k];
    let mut total = vec![0.0; k];
    let mut two_m = 0.0;
    for (i, &ci) in comm.iter().enumerate() {
        for &(j, w) in graph.adjacent(i) {
            let w = w as f64;
            two_m += w;
            total[ci] += w;
            if comm[j] == ci {
                internal[ci] += w;
            }
        }
    }
    if two_m <= 0.0 {
        return Err(CommunityError::EmptyGraph);
    }
    Ok(internal
        .iter()
        .zip(&total)
        .map(|(&inn, &tot)| inn / two_m - resolution * (tot / two_m) * (tot / two_m))
        .sum())
}

#[derive(Clone, Copy, Debug)]
pub struct LouvainParams {
    pub seed: u64,
    pub resolution: f64,
}

impl Default for LouvainParams {
    fn default() -> Self {
        Self {
            seed: 0,
            resolution: 1.0,
        }
    }
}

pub fn louvain(graph: &ViewGraph, seed: u64) -> CommunityAssignment {
    louvain_with(
        graph,
        &LouvainParams {
            seed,
            ..LouvainParams::default()
        },
    )
}

/// Coarsened graph of one Louvain level.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    /// Ordered internal weight of each supernode (twice its internal edge weight).
    loops: Vec<f64>,
    degree: Vec<f64>,
    two_m: f64,
}

impl Level {
    fn from_graph(graph: &ViewGraph) -> Self {
        let n = graph.node_count();
        let adj: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| {
                graph
                    .adjacent(i)
                    .iter()
                    .map(|&(j, w)| (j, w as f64))
                    .collect()
            })
            .collect();
        let degree: Vec<f64> = adj.iter().map(|l| l.iter().map(|(_, w)| w).sum()).collect();
        let two_m = degree.iter().sum();
        Self {
            adj,
            loops: vec![0.0; n],
            degree,
            two_m,
        }
    }

    /// Repeated local-move passes. Returns the community of each node and
    /// whether any node moved.
    fn local_moves(&self, rng: &mut ChaCha8Rng, resolution: f64) -> (Vec<usize>, bool) {
        let n = self.adj.len();
        let mut comm: Vec<usize> = (0..n).collect();
        let mut tot = self.degree.clone();
        let mut order: Vec<usize> = (0..n).collect();
        let mut moved_any = false;
        for _ in 0..MAX_PASSES {
            order.shuffle(rng);
            let mut moved = false;
            for &i in &order {
                let ki = self.degree[i];
                if ki <= 0.0 {
                    continue;
                }
                let own = comm[i];
                let mut links: BTreeMap<usize, f64> = BTreeMap::new();
                links.insert(own, 0.0);
                for &(j, w) in &self.adj[i] {
                    *links.entry(comm[j]).or_insert(0.0) += w;
                }
                tot[own] -= ki;
                let gain = |c: usize, w: f64| w - resolution * tot[c] * ki / self.two_m;
                let eps = 1e-10 * ki.max(1.0);
                let mut best = own;
                let mut best_gain = gain(own, links[&own]);
                for (&c, &w) in &links {
                    let g = gain(c, w);
                    if g > best_gain + eps {
                        best = c;
                        best_gain = g;
                    }
                }
                tot[best] += ki;
                if best != own {
                    comm[i] = best;
                    moved = true;
                }
            }
            if !moved {
                break;
            }
            moved_any = true;
        }
        (comm, moved_any)
    }

    /// Collapses each community to a supernode. `comm` must be dense.
    fn aggregate(&self, comm: &[usize], k: usize) -> Level {
        let mut loops = vec![0.0; k];
        let mut degree = vec![0.0; k];
        let mut links: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); k];
        for (i, &ci) in comm.iter().enumerate() {
            loops[ci] += self.loops[i];
            degree[ci] += self.degree[i];
            for &(j, w) in &self.adj[i] {
                let cj = comm[j];
                if cj == ci {
                    loops[ci] += w;
                } else {
                    *links[ci].entry(cj).or_insert(0.0) += w;
                }
            }
        }
        Level {
            adj: links.into_iter().map(|m| m.into_iter().collect()).collect(),
            loops,
            degree,
            two_m: self.two_m,
        }
    }
}

/// Renumbers labels densely in order of first appearance.
fn densify(comm: &[usize]) -> (Vec<usize>, usize) {
    let mut remap = BTreeMap::new();
    let dense = comm
        .iter()
        .map(|&c| {
            let next = remap.len();
            *remap.entry(c).or_insert(next)
        })
        .collect();
    (dense, remap.len())
}

pub fn louvain_with(graph: &ViewGraph, params: &LouvainParams) -> CommunityAssignment {
    let n = graph.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    // Supernode of every original node.
    let mut membership: Vec<usize> = (0..n).collect();
    let mut level = Level::from_graph(graph);
    let mut level_modularity = Vec::new();
    if level.two_m > 0.0 {
        loop {
            let (comm, moved) = level.local_moves(&mut rng, params.resolution);
            if !moved {
                break;
            }
            let (comm, k) = densify(&comm);
            for m in membership.iter_mut() {
                *m = comm[*m];
            }
            level_modularity
                .push(dense_modularity(graph, &membership, 1.0).expect("graph has edges"));
            level = level.aggregate(&comm, k);
        }
    }
    let (dense, community_count) = densify(&membership);
    let modularity = dense_modularity(graph, &dense, 1.0).unwrap_or(0.0);
    CommunityAssignment {
        labels: graph.nodes().iter().copied().zip(dense).collect(),
        community_count,
        modularity,
        level_count: level_modularity.len(),
        level_modularity,
    }
}
