//! Brute-force oracles and random fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tailview::geometry::Quaternion;
use tailview::recon_io::{
    CameraIntrinsics, CameraModel, MatchEdge, PosedView, SceneReconstruction, SparsePoint,
};
use tailview::sampler::{Phase, Preset, Provenance, SampledBatch, SamplingConfig};
use tailview::view_graph::ViewGraph;

/// Random graph on ids `0..n`; each pair is joined with probability `p`.
pub fn random_edges<R: Rng>(rng: &mut R, n: u32, p: f64, weights: (u32, u32)) -> Vec<MatchEdge> {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p) {
                edges.push(MatchEdge::new(a, b, rng.random_range(weights.0..=weights.1)).unwrap());
            }
        }
    }
    edges
}

/// Random connected graph: a random spanning tree plus extra edges.
pub fn random_connected_edges<R: Rng>(
    rng: &mut R,
    n: u32,
    p: f64,
    weights: (u32, u32),
) -> Vec<MatchEdge> {
    let mut order: Vec<u32> = (0..n).collect();
    order.shuffle(rng);
    let mut pairs = BTreeMap::new();
    for i in 1..order.len() {
        let j = rng.random_range(0..i);
        let e =
            MatchEdge::new(order[i], order[j], rng.random_range(weights.0..=weights.1)).unwrap();
        pairs.insert((e.view_a, e.view_b), e);
    }
    for e in random_edges(rng, n, p, weights) {
        pairs.entry((e.view_a, e.view_b)).or_insert(e);
    }
    pairs.into_values().collect()
}

pub fn graph(n: u32, edges: &[MatchEdge]) -> ViewGraph {
    ViewGraph::from_edges(0..n, edges).unwrap()
}

/// Dense symmetric adjacency matrix of lengths, `None` for non-edges.
pub fn length_matrix(
    n: usize,
    edges: &[MatchEdge],
    length: impl Fn(u32) -> f64,
) -> Vec<Vec<Option<f64>>> {
    let mut m = vec![vec![None; n]; n];
    for e in edges {
        let l = length(e.match_count);
        m[e.view_a as usize][e.view_b as usize] = Some(l);
        m[e.view_b as usize][e.view_a as usize] = Some(l);
    }
    m
}

/// Prim's algorithm on the nodes in `subset`; `None` if they are not
/// connected through each other.
pub fn prim(m: &[Vec<Option<f64>>], subset: &[usize]) -> Option<f64> {
    if subset.is_empty() {
        return Some(0.0);
    }
    let mut in_tree = vec![false; subset.len()];
    let mut best = vec![f64::INFINITY; subset.len()];
    best[0] = 0.0;
    let mut total = 0.0;
    for _ in 0..subset.len() {
        let (i, &d) = best
            .iter()
            .enumerate()
            .filter(|(i, _)| !in_tree[*i])
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())?;
        if !d.is_finite() {
            return None;
        }
        in_tree[i] = true;
        total += d;
        for (j, b) in best.iter_mut().enumerate() {
            if !in_tree[j] {
                if let Some(l) = m[subset[i]][subset[j]] {
                    *b = b.min(l);
                }
            }
        }
    }
    Some(total)
}

/// Minimum spanning forest weight over all nodes.
pub fn msf_weight(m: &[Vec<Option<f64>>]) -> f64 {
    let n = m.len();
    let mut seen = vec![false; n];
    let mut total = 0.0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut comp = vec![s];
        seen[s] = true;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for v in 0..n {
                if m[u][v].is_some() && !seen[v] {
                    seen[v] = true;
                    comp.push(v);
                    q.push_back(v);
                }
            }
        }
        total += prim(m, &comp).unwrap();
    }
    total
}

/// Optimal Steiner tree weight by enumerating every node superset of the
/// terminals.
pub fn steiner_optimum(m: &[Vec<Option<f64>>], terminals: &BTreeSet<usize>) -> Option<f64> {
    let n = m.len();
    let term_mask: usize = terminals.iter().map(|&t| 1 << t).sum();
    let mut best: Option<f64> = None;
    for mask in 0usize..(1 << n) {
        if mask & term_mask != term_mask {
            continue;
        }
        let subset: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        if let Some(w) = prim(m, &subset) {
            if best.is_none_or(|b| w < b) {
                best = Some(w);
            }
        }
    }
    best
}

/// Modularity from the full adjacency matrix.
pub fn modularity_oracle(n: usize, edges: &[MatchEdge], labels: &[usize]) -> f64 {
    let mut a = vec![vec![0.0; n]; n];
    for e in edges {
        a[e.view_a as usize][e.view_b as usize] += e.match_count as f64;
        a[e.view_b as usize][e.view_a as usize] += e.match_count as f64;
    }
    let k: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += a[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Partition maximizing modularity, enumerated as restricted growth strings.
pub fn best_partition(n: usize, edges: &[MatchEdge]) -> (Vec<usize>, f64) {
    fn rec(
        i: usize,
        n: usize,
        max_label: usize,
        cur: &mut Vec<usize>,
        edges: &[MatchEdge],
        best: &mut (Vec<usize>, f64),
    ) {
        if i == n {
            let q = modularity_oracle(n, edges, cur);
            if q > best.1 + 1e-12 {
                *best = (cur.clone(), q);
            }
            return;
        }
        for l in 0..=max_label + 1 {
            cur.push(l);
            rec(i + 1, n, max_label.max(l), cur, edges, best);
            cur.pop();
        }
    }
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    let mut cur = vec![0];
    rec(1, n, 0, &mut cur, edges, &mut best);
    best
}

/// Groups node ids by label.
pub fn blocks(labels: impl IntoIterator<Item = (u32, usize)>) -> BTreeSet<BTreeSet<u32>> {
    let mut by: BTreeMap<usize, BTreeSet<u32>> = BTreeMap::new();
    for (v, l) in labels {
        by.entry(l).or_default().insert(v);
    }
    by.into_values().collect()
}

/// Connected components of the subgraph induced by `nodes`, by BFS over a
/// plain edge list.
pub fn induced_components(edges: &[MatchEdge], nodes: &BTreeSet<u32>) -> usize {
    let mut adj: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for e in edges {
        if nodes.contains(&e.view_a) && nodes.contains(&e.view_b) {
            adj.entry(e.view_a).or_default().push(e.view_b);
            adj.entry(e.view_b).or_default().push(e.view_a);
        }
    }
    let mut seen = BTreeSet::new();
    let mut count = 0;
    for &s in nodes {
        if !seen.insert(s) {
            continue;
        }
        count += 1;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &v in adj.get(&u).into_iter().flatten() {
                if seen.insert(v) {
                    q.push_back(v);
                }
            }
        }
    }
    count
}

/// Nodes reachable from `sources` over a plain edge list.
pub fn reachable(edges: &[MatchEdge], sources: &[u32]) -> BTreeSet<u32> {
    let mut adj: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for e in edges {
        adj.entry(e.view_a).or_default().push(e.view_b);
        adj.entry(e.view_b).or_default().push(e.view_a);
    }
    let mut seen: BTreeSet<u32> = sources.iter().copied().collect();
    let mut q: VecDeque<u32> = sources.iter().copied().collect();
    while let Some(u) = q.pop_front() {
        for &v in adj.get(&u).into_iter().flatten() {
            if seen.insert(v) {
                q.push_back(v);
            }
        }
    }
    seen
}

/// Greedy-step reference: sort every unsampled neighbor by
/// (novelty desc, distance desc, id asc) and take the first.
pub fn greedy_oracle(
    edges: &[MatchEdge],
    current: u32,
    sampled: &BTreeSet<u32>,
    labels: &BTreeMap<u32, usize>,
    positions: &BTreeMap<u32, [f64; 3]>,
) -> Option<u32> {
    let covered: BTreeSet<usize> = sampled.iter().map(|s| labels[s]).collect();
    let p = positions[&current];
    let mut cands: Vec<(bool, f64, u32)> = edges
        .iter()
        .filter_map(|e| {
            if e.view_a == current {
                Some(e.view_b)
            } else if e.view_b == current {
                Some(e.view_a)
            } else {
                None
            }
        })
        .filter(|u| !sampled.contains(u))
        .map(|u| {
            let q = positions[&u];
            let d = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2) + (q[2] - p[2]).powi(2)).sqrt();
            (!covered.contains(&labels[&u]), d, u)
        })
        .collect();
    cands.sort_by(|a, b| {
        b.0.cmp(&a.0)
            .then(b.1.partial_cmp(&a.1).unwrap())
            .then(a.2.cmp(&b.2))
    });
    cands.first().map(|c| c.2)
}

/// All-pairs hop distances by Floyd–Warshall.
pub fn hop_matrix(n: usize, edges: &[MatchEdge]) -> Vec<Vec<Option<usize>>> {
    let mut d = vec![vec![None; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(0);
    }
    for e in edges {
        d[e.view_a as usize][e.view_b as usize] = Some(1);
        d[e.view_b as usize][e.view_a as usize] = Some(1);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|c| a + b < c) {
                        d[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    d
}

/// Random but valid scene with every camera model, points and edges.
pub fn random_scene(seed: u64) -> SceneReconstruction<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let models = [
        CameraModel::SimplePinhole,
        CameraModel::Pinhole,
        CameraModel::SimpleRadial,
        CameraModel::Radial,
        CameraModel::OpenCV,
    ];
    let mut intrinsics = BTreeMap::new();
    for id in 1..=rng.random_range(1..4u32) {
        let model = models[rng.random_range(0..models.len())];
        let params = (0..model.arity())
            .map(|_| rng.random_range(1.0..900.0))
            .collect();
        intrinsics.insert(
            id,
            CameraIntrinsics {
                camera_id: id,
                model,
                width: 640,
                height: 480,
                params,
            },
        );
    }
    let cams = intrinsics.len() as u32;
    let mut views = BTreeMap::new();
    let n = rng.random_range(2..15u32);
    for id in 0..n {
        let id = id * 3 + 1;
        let q = Quaternion::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        )
        .normalized();
        let t = [
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
        ];
        views.insert(
            id,
            PosedView::new(
                id,
                rng.random_range(1..=cams),
                q,
                t,
                format!("img_{id}.png"),
            ),
        );
    }
    let ids: Vec<u32> = views.keys().copied().collect();
    let mut edges = BTreeMap::new();
    for _ in 0..n * 2 {
        let a = ids[rng.random_range(0..ids.len())];
        let b = ids[rng.random_range(0..ids.len())];
        if let Some(e) = MatchEdge::new(a, b, rng.random_range(1..1000)) {
            edges.insert((e.view_a, e.view_b), e);
        }
    }
    let points = (0..rng.random_range(0..20u64))
        .map(|i| SparsePoint {
            point_id: i * 7 + 2,
            xyz: [
                rng.random_range(-9.0..9.0),
                rng.random_range(-9.0..9.0),
                rng.random_range(-9.0..9.0),
            ],
            color: [rng.random(), rng.random(), rng.random()],
            error: rng.random_range(0.0..2.0),
            track: (0..rng.random_range(0..4))
                .map(|k| (ids[rng.random_range(0..ids.len())], k))
                .collect(),
        })
        .collect();
    SceneReconstruction::new(
        format!("scene{seed}"),
        intrinsics,
        views,
        edges.into_values().collect(),
        points,
    )
    .unwrap()
}

pub fn random_batch(rng: &mut ChaCha8Rng) -> SampledBatch {
    let n = rng.random_range(0..30usize);
    let phases = [
        Phase::Terminal,
        Phase::Steiner,
        Phase::Greedy,
        Phase::Fill,
        Phase::Dfs,
        Phase::Random,
    ];
    SampledBatch {
        scene_id: format!("s \"{}\"", rng.random::<u16>()),
        config: SamplingConfig {
            n_views: n.max(2),
            seed: rng.random(),
            preset: [None, Some(Preset::Mixed), Some(Preset::Random)][rng.random_range(0..3)],
            ..SamplingConfig::default()
        },
        views: (0..n).map(|_| rng.random()).collect(),
        provenance: (0..n)
            .map(|_| Provenance {
                partition: rng.random_range(0..4),
                community: rng.random_range(0..9),
                phase: phases[rng.random_range(0..phases.len())],
            })
            .collect(),
        truncated: rng.random(),
    }
}
