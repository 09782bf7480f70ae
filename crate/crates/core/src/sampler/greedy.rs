use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use super::SamplerError;
use crate::community::CommunityAssignment;
use crate::geometry::{distance, Vec3};
use crate::real::Real;
use crate::view_graph::ViewGraph;

/// Next view of the greedy walk from `current`.
///
/// Unsampled neighbors are ranked by community novelty (a community not yet
/// present in `sampled` first), then by distance from `current` (farther
/// first), then by ascending id. Returns `None` when every neighbor is
/// already sampled.
pub fn greedy_step<T: Real>(
    graph: &ViewGraph,
    current: u32,
    sampled: &BTreeSet<u32>,
    communities: &CommunityAssignment,
    positions: &BTreeMap<u32, Vec3<T>>,
) -> Result<Option<u32>, SamplerError> {
    let neighbors = graph
        .neighbors(current)
        .map_err(|_| SamplerError::UnknownNode(current))?;
    let origin = positions
        .get(&current)
        .ok_or(SamplerError::MissingPosition(current))?;
    let covered: BTreeSet<usize> = sampled
        .iter()
        .filter_map(|&s| communities.label(s))
        .collect();

    let mut best: Option<(bool, T, u32)> = None;
    for (u, _) in neighbors {
        if sampled.contains(&u) {
            continue;
        }
        let novel = communities.label(u).is_some_and(|c| !covered.contains(&c));
        let pos = positions.get(&u).ok_or(SamplerError::MissingPosition(u))?;
        let cand = (novel, distance(pos, origin), u);
        let better = match &best {
            None => true,
            Some(b) => rank(&cand, b) == Ordering::Greater,
        };
        if better {
            best = Some(cand);
        }
    }
    Ok(best.map(|(_, _, u)| u))
}

/// Total order of candidates; `Greater` means preferred.
pub(crate) fn rank<T: Real>(a: &(bool, T, u32), b: &(bool, T, u32)) -> Ordering {
    a.0.cmp(&b.0)
        .then_with(|| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal))
        .then_with(|| b.2.cmp(&a.2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recon_io::MatchEdge;

    fn star(leaves: &[u32]) -> ViewGraph {
        let e: Vec<_> = leaves
            .iter()
            .map(|&l| MatchEdge::new(0, l, 100).unwrap())
            .collect();
        ViewGraph::from_edges(std::iter::once(0).chain(leaves.iter().copied()), &e).unwrap()
    }

    #[test]
    fn novelty_beats_distance() {
        let g = star(&[1, 2]);
        let comms = CommunityAssignment::from_labels([(0, 0), (1, 1), (2, 0)]);
        let pos: BTreeMap<u32, Vec3<f64>> = [
            (0, [0.0, 0.0, 0.0]),
            (1, [1.0, 0.0, 0.0]),
            (2, [100.0, 0.0, 0.0]),
        ]
        .into();
        let sampled = BTreeSet::from([0]);
        assert_eq!(greedy_step(&g, 0, &sampled, &comms, &pos).unwrap(), Some(1));
    }

    #[test]
    fn farther_wins_within_seen_communities() {
        let g = star(&[1, 2]);
        let comms = CommunityAssignment::from_labels([(0, 0), (1, 0), (2, 0)]);
        let pos: BTreeMap<u32, Vec3<f64>> = [
            (0, [0.0, 0.0, 0.0]),
            (1, [2.0, 0.0, 0.0]),
            (2, [0.0, 5.0, 0.0]),
        ]
        .into();
        assert_eq!(
            greedy_step(&g, 0, &BTreeSet::from([0]), &comms, &pos).unwrap(),
            Some(2)
        );
    }

    #[test]
    fn equal_rank_takes_smaller_id() {
        let g = star(&[7, 3]);
        let comms = CommunityAssignment::from_labels([(0, 0), (3, 0), (7, 0)]);
        let pos: BTreeMap<u32, Vec3<f32>> = [
            (0, [0.0, 0.0, 0.0]),
            (3, [1.0, 0.0, 0.0]),
            (7, [0.0, 1.0, 0.0]),
        ]
        .into();
        assert_eq!(
            greedy_step(&g, 0, &BTreeSet::from([0]), &comms, &pos).unwrap(),
            Some(3)
        );
    }

    #[test]
    fn exhausted_neighborhood() {
        let g = star(&[1]);
        let comms = CommunityAssignment::from_labels([(0, 0), (1, 0)]);
        let pos: BTreeMap<u32, Vec3<f64>> = [(0, [0.0; 3]), (1, [1.0, 0.0, 0.0])].into();
        assert_eq!(
            greedy_step(&g, 0, &BTreeSet::from([0, 1]), &comms, &pos).unwrap(),
            None
        );
        assert!(matches!(
            greedy_step(&g, 9, &BTreeSet::from([9]), &comms, &pos),
            Err(SamplerError::UnknownNode(9))
        ));
    }
}
