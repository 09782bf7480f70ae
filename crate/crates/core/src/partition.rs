//! Round-robin breadth-first partitioning of a view graph into at most
//! `n_cc` connected parts.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::community::CommunityAssignment;
use crate::view_graph::ViewGraph;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PartitionError {
    #[error("n_cc must be in 1..={nodes}, got {n_cc}")]
    InvalidNcc { n_cc: usize, nodes: usize },
    #[error("seed view {0} is not a graph node")]
    UnknownSeed(u32),
    #[error("seed view {0} is given twice")]
    DuplicateSeed(u32),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partitioning {
    pub parts: Vec<BTreeSet<u32>>,
    pub seed_nodes: Vec<u32>,
    /// Part index of every reachable view; unreachable views are absent.
    pub assignment: BTreeMap<u32, usize>,
}

/// Seeded entry point; see [`partition_with_rng`].
pub fn partition_round_robin(
    graph: &ViewGraph,
    n_cc: usize,
    seed: u64,
    communities: &CommunityAssignment,
) -> Result<Partitioning, PartitionError> {
    partition_with_rng(
        graph,
        n_cc,
        &mut ChaCha8Rng::seed_from_u64(seed),
        communities,
    )
}

/// Chooses `n_cc` seeds and grows the parts with [`partition_from_seeds`].
///
/// When the scene has at least `n_cc` communities the seeds come from
/// `n_cc` distinct, randomly chosen communities; otherwise they are drawn
/// uniformly without replacement.
pub fn partition_with_rng<R: Rng + ?Sized>(
    graph: &ViewGraph,
    n_cc: usize,
    rng: &mut R,
    communities: &CommunityAssignment,
) -> Result<Partitioning, PartitionError> {
    let n = graph.node_count();
    if n_cc == 0 || n_cc > n {
        return Err(PartitionError::InvalidNcc { n_cc, nodes: n });
    }
    let mut by_community: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    for &v in graph.nodes() {
        if let Some(c) = communities.label(v) {
            by_community.entry(c).or_default().push(v);
        }
    }
    let seeds: Vec<u32> = if by_community.len() >= n_cc {
        let mut groups: Vec<&Vec<u32>> = by_community.values().collect();
        groups.shuffle(rng);
        groups[..n_cc]
            .iter()
            .map(|g| *g.choose(rng).expect("communities are non-empty"))
            .collect()
    } else {
        graph.nodes().choose_multiple(rng, n_cc).copied().collect()
    };
    partition_from_seeds(graph, &seeds)
}

/// Round-robin BFS from fixed seeds. Each round expands every part's
/// frontier by one full BFS layer, in part order; a node joins the first part
/// that reaches it.
pub fn partition_from_seeds(
    graph: &ViewGraph,
    seeds: &[u32],
) -> Result<Partitioning, PartitionError> {
    let n = graph.node_count();
    if seeds.is_empty() || seeds.len() > n {
        return Err(PartitionError::InvalidNcc {
            n_cc: seeds.len(),
            nodes: n,
        });
    }
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let mut frontiers: Vec<Vec<usize>> = Vec::with_capacity(seeds.len());
    for (p, &s) in seeds.iter().enumerate() {
        let i = graph.index_of(s).ok_or(PartitionError::UnknownSeed(s))?;
        if owner[i].is_some() {
            return Err(PartitionError::DuplicateSeed(s));
        }
        owner[i] = Some(p);
        frontiers.push(vec![i]);
    }
    while frontiers.iter().any(|f| !f.is_empty()) {
        for (p, frontier) in frontiers.iter_mut().enumerate() {
            let mut next = Vec::new();
            for &u in frontier.iter() {
                for &(v, _) in graph.adjacent(u) {
                    if owner[v].is_none() {
                        owner[v] = Some(p);
                        next.push(v);
                    }
                }
            }
            *frontier = next;
        }
    }
    let mut parts = vec![BTreeSet::new(); seeds.len()];
    let mut assignment = BTreeMap::new();
    for (i, o) in owner.iter().enumerate() {
        if let Some(p) = *o {
            let v = graph.id_of(i);
            parts[p].insert(v);
            assignment.insert(v, p);
        }
    }
    Ok(Partitioning {
        parts,
        seed_nodes: seeds.to_vec(),
        assignment,
    })
}
