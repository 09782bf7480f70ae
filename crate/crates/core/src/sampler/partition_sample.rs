use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{greedy_step, Phase, SamplerError};
use crate::community::CommunityAssignment;
use crate::geometry::Vec3;
use crate::real::Real;
use crate::steiner::{approximate_steiner_tree, select_terminals_with_rng, WeightMode};
use crate::view_graph::ViewGraph;

/// Inputs shared by every partition of one batch.
#[derive(Clone, Copy)]
pub struct PartitionContext<'a, T> {
    pub graph: &'a ViewGraph,
    pub communities: &'a CommunityAssignment,
    pub positions: &'a BTreeMap<u32, Vec3<T>>,
    pub weight_mode: WeightMode,
}

/// Seeded entry point; see [`sample_partition_with_rng`].
pub fn sample_partition<T: Real>(
    ctx: PartitionContext<'_, T>,
    part: &BTreeSet<u32>,
    quota: usize,
    depth: usize,
    seed: u64,
) -> Result<Vec<(u32, Phase)>, SamplerError> {
    sample_partition_with_rng(
        ctx,
        part,
        quota,
        depth,
        &mut ChaCha8Rng::seed_from_u64(seed),
    )
}

/// Samples up to `quota` views inside one partition.
///
/// The first `min(quota, depth)` views form the skeleton: the Steiner tree
/// over one terminal per community (cut down to a connected subtree holding
/// the most terminals when it is too large), extended by greedy steps. The
/// rest of the quota is drawn uniformly from successive hop rings around the
/// views sampled so far. Every prefix of the result is connected whenever
/// the partition is.
pub fn sample_partition_with_rng<T: Real, R: Rng + ?Sized>(
    ctx: PartitionContext<'_, T>,
    part: &BTreeSet<u32>,
    quota: usize,
    depth: usize,
    rng: &mut R,
) -> Result<Vec<(u32, Phase)>, SamplerError> {
    if part.is_empty() {
        return Err(SamplerError::EmptyPartition);
    }
    if quota == 0 || depth == 0 {
        return Err(SamplerError::InvalidConfig(
            "partition quota and depth must be positive".into(),
        ));
    }
    let sub = ctx.graph.induced(part);
    let budget = quota.min(depth).min(sub.node_count());

    let mut terminals = select_terminals_with_rng(part, ctx.communities, rng);
    if terminals.is_empty() {
        let all: Vec<u32> = part.iter().copied().collect();
        terminals.insert(*all.choose(rng).expect("part is non-empty"));
    }
    let tree = approximate_steiner_tree(&sub, &terminals, ctx.weight_mode)?;
    let tree_adj = adjacency(&tree.tree_edges);
    let kept: BTreeSet<u32> = if tree.tree_nodes.len() <= budget {
        tree.tree_nodes.clone()
    } else {
        trim_tree(&tree.tree_nodes, &tree_adj, &terminals, budget)
    };

    let kept_list: Vec<u32> = kept.iter().copied().collect();
    let start = *kept_list.choose(rng).expect("tree has at least one node");
    let mut out: Vec<(u32, Phase)> = Vec::with_capacity(quota);
    let mut sampled: BTreeSet<u32> = BTreeSet::new();

    // Skeleton in breadth-first order from the walk start.
    let mut queue = VecDeque::from([start]);
    sampled.insert(start);
    while let Some(v) = queue.pop_front() {
        let phase = if terminals.contains(&v) {
            Phase::Terminal
        } else {
            Phase::Steiner
        };
        out.push((v, phase));
        for &n in tree_adj.get(&v).into_iter().flatten() {
            if kept.contains(&n) && sampled.insert(n) {
                queue.push_back(n);
            }
        }
    }

    // Greedy expansion with backtracking along the walk.
    let mut walk = vec![start];
    let mut current = start;
    while out.len() < budget {
        match greedy_step(&sub, current, &sampled, ctx.communities, ctx.positions)? {
            Some(u) => {
                sampled.insert(u);
                out.push((u, Phase::Greedy));
                walk.push(u);
                current = u;
            }
            None => {
                let has_room = |v: u32| {
                    sub.neighbors(v)
                        .map(|mut it| it.any(|(n, _)| !sampled.contains(&n)))
                        .unwrap_or(false)
                };
                while walk.last().is_some_and(|&v| !has_room(v)) {
                    walk.pop();
                }
                match walk.last() {
                    Some(&v) => current = v,
                    None => match out.iter().rev().map(|&(v, _)| v).find(|&v| has_room(v)) {
                        Some(v) => {
                            walk.push(v);
                            current = v;
                        }
                        None => break,
                    },
                }
            }
        }
    }

    // Local fill: uniform draws from the hop ring around the sample.
    while out.len() < quota {
        let mut ring: Vec<u32> = sampled
            .iter()
            .flat_map(|&v| {
                sub.neighbors(v)
                    .expect("sampled views are in the partition")
            })
            .map(|(n, _)| n)
            .filter(|n| !sampled.contains(n))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if ring.is_empty() {
            ring = part
                .iter()
                .copied()
                .filter(|v| !sampled.contains(v))
                .collect();
        }
        if ring.is_empty() {
            break;
        }
        ring.shuffle(rng);
        for v in ring.into_iter().take(quota - out.len()) {
            sampled.insert(v);
            out.push((v, Phase::Fill));
        }
    }
    Ok(out)
}

fn adjacency(edges: &BTreeSet<(u32, u32)>) -> BTreeMap<u32, Vec<u32>> {
    let mut adj: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for &(a, b) in edges {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    for list in adj.values_mut() {
        list.sort_unstable();
    }
    adj
}

/// Best connected subtree found so far: terminal count and sorted members.
type Candidate = (usize, Vec<u32>);

fn better(a: &Candidate, b: &Candidate) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Connected subtree with exactly `size` nodes holding the most terminals;
/// ties go to the lexicographically smallest sorted id list.
pub(crate) fn trim_tree(
    nodes: &BTreeSet<u32>,
    adj: &BTreeMap<u32, Vec<u32>>,
    terminals: &BTreeSet<u32>,
    size: usize,
) -> BTreeSet<u32> {
    let root = *nodes.iter().next().expect("non-empty tree");
    // Post-order over the tree rooted at the smallest id.
    let mut order = Vec::with_capacity(nodes.len());
    let mut parent: BTreeMap<u32, u32> = BTreeMap::new();
    let mut stack = vec![root];
    let mut seen = BTreeSet::from([root]);
    while let Some(v) = stack.pop() {
        order.push(v);
        for &n in adj.get(&v).into_iter().flatten() {
            if seen.insert(n) {
                parent.insert(n, v);
                stack.push(n);
            }
        }
    }
    // table[v][k]: best subtree of k nodes whose topmost node is v.
    let mut table: BTreeMap<u32, Vec<Option<Candidate>>> = BTreeMap::new();
    let mut best: Option<Candidate> = None;
    for &v in order.iter().rev() {
        let mut cur: Vec<Option<Candidate>> = vec![None; size + 1];
        cur[1] = Some((usize::from(terminals.contains(&v)), vec![v]));
        for &c in adj.get(&v).into_iter().flatten() {
            if parent.get(&c) != Some(&v) {
                continue;
            }
            let child = table.remove(&c).expect("children are processed first");
            let mut next = cur.clone();
            for (i, a) in cur.iter().enumerate() {
                let Some(a) = a else { continue };
                for (j, b) in child.iter().enumerate().skip(1) {
                    if i + j > size {
                        break;
                    }
                    let Some(b) = b else { continue };
                    let mut members = a.1.clone();
                    members.extend_from_slice(&b.1);
                    members.sort_unstable();
                    let cand = (a.0 + b.0, members);
                    if next[i + j].as_ref().is_none_or(|n| better(&cand, n)) {
                        next[i + j] = Some(cand);
                    }
                }
            }
            cur = next;
        }
        if let Some(c) = &cur[size] {
            if best.as_ref().is_none_or(|b| better(c, b)) {
                best = Some(c.clone());
            }
        }
        table.insert(v, cur);
    }
    best.map(|(_, m)| m.into_iter().collect())
        .unwrap_or_else(|| nodes.iter().copied().take(size).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trim_keeps_most_terminals() {
        // Path 1-2-3-4-5 with a branch 3-6; terminals at 1, 5, 6.
        let nodes: BTreeSet<u32> = (1..=6).collect();
        let edges: BTreeSet<(u32, u32)> = [(1, 2), (2, 3), (3, 4), (4, 5), (3, 6)].into();
        let adj = adjacency(&edges);
        let terminals = BTreeSet::from([1, 5, 6]);
        // No 3-node subtree holds two terminals; smallest ids win.
        assert_eq!(
            trim_tree(&nodes, &adj, &terminals, 3),
            BTreeSet::from([1, 2, 3])
        );
        assert_eq!(
            trim_tree(&nodes, &adj, &terminals, 5),
            BTreeSet::from([1, 2, 3, 4, 5])
        );
        assert_eq!(
            trim_tree(&nodes, &adj, &terminals, 4),
            BTreeSet::from([1, 2, 3, 6])
        );
        assert_eq!(trim_tree(&nodes, &adj, &terminals, 1), BTreeSet::from([1]));
    }
}
