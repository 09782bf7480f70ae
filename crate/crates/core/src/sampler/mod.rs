//! Sparsity-aware batch sampling.
//!
//! A batch of `N` views is split over at most `N_cc` round-robin BFS
//! partitions. Inside each partition a Steiner skeleton linking one view per
//! community is extended by a greedy walk that favors unseen communities and
//! wide baselines, for at most `D` views; the remainder is filled from the
//! local neighborhood.

mod greedy;
mod partition_sample;

use std::collections::{BTreeMap, BTreeSet};

use log::warn;
use rand::seq::{index, IndexedRandom};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::community::{louvain_with, CommunityAssignment, LouvainParams};
use crate::geometry::Vec3;
use crate::partition::{partition_with_rng, PartitionError};
use crate::real::Real;
use crate::recon_io::SceneReconstruction;
use crate::steiner::{SteinerError, WeightMode};
use crate::view_graph::{
    build_graph, induced_component_count, prune_edges, ViewGraph, DEFAULT_PRUNE_THRESHOLD,
};

pub use greedy::greedy_step;
pub use partition_sample::{sample_partition, sample_partition_with_rng, PartitionContext};

pub const DENSE_DEPTH: usize = 5;
pub const SPARSE_DEPTH: usize = 24;
pub const SPARSE_NCC: usize = 4;
pub const MIXED_DEPTH_RANGE: (usize, usize) = (5, 24);
pub const MIXED_NCC_RANGE: (usize, usize) = (1, 4);
/// Views per offline mini-batch.
pub const DEFAULT_BATCH_VIEWS: usize = 24;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("invalid sampling config: {0}")]
    InvalidConfig(String),
    #[error("view {0} is not a graph node")]
    UnknownNode(u32),
    #[error("view {0} has no camera position")]
    MissingPosition(u32),
    #[error("partition is empty")]
    EmptyPartition,
    #[error("subsample size {k} must be in 2..={len}")]
    InvalidK { k: usize, len: usize },
    #[error(transparent)]
    Steiner(#[from] SteinerError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("batch forms {found} components, at most {allowed} allowed")]
    ComponentBound { found: usize, allowed: usize },
    #[error("batch repeats view {0}")]
    DuplicateView(u32),
}

impl SamplerError {
    /// True for violated internal invariants, as opposed to bad input.
    pub fn is_internal(&self) -> bool {
        matches!(
            self,
            SamplerError::ComponentBound { .. } | SamplerError::DuplicateView(_)
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Dense,
    Sparse,
    Mixed,
    Random,
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dense" => Ok(Preset::Dense),
            "sparse" => Ok(Preset::Sparse),
            "mixed" => Ok(Preset::Mixed),
            "random" => Ok(Preset::Random),
            other => Err(format!("unknown preset `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    #[serde(rename = "N")]
    pub n_views: usize,
    #[serde(rename = "N_cc")]
    pub n_cc: usize,
    #[serde(rename = "D")]
    pub depth: usize,
    pub seed: u64,
    pub prune_threshold: u32,
    pub weight_mode: WeightMode,
    pub preset: Option<Preset>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            n_views: DEFAULT_BATCH_VIEWS,
            n_cc: SPARSE_NCC,
            depth: SPARSE_DEPTH,
            seed: 0,
            prune_threshold: DEFAULT_PRUNE_THRESHOLD,
            weight_mode: WeightMode::UnitHop,
            preset: None,
        }
    }
}

impl SamplingConfig {
    /// Config with the preset's depth and component count. Mixed and Random
    /// keep the sparse values until resolved per batch.
    pub fn from_preset(preset: Preset, n_views: usize, seed: u64) -> Self {
        let (depth, n_cc) = match preset {
            Preset::Dense => (DENSE_DEPTH, 1),
            _ => (SPARSE_DEPTH, SPARSE_NCC.min(n_views.max(1))),
        };
        Self {
            n_views,
            n_cc,
            depth,
            seed,
            preset: Some(preset),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.n_views < 2 {
            return Err(SamplerError::InvalidConfig(format!(
                "N must be at least 2, got {}",
                self.n_views
            )));
        }
        if self.n_cc < 1 || self.n_cc > self.n_views {
            return Err(SamplerError::InvalidConfig(format!(
                "N_cc must be in 1..={}, got {}",
                self.n_views, self.n_cc
            )));
        }
        if self.depth < 1 {
            return Err(SamplerError::InvalidConfig("D must be at least 1".into()));
        }
        Ok(())
    }

    /// Applies the preset; Mixed draws `D` and `N_cc` from `rng`.
    fn resolve<R: Rng + ?Sized>(&self, rng: &mut R) -> SamplingConfig {
        let mut out = self.clone();
        match self.preset {
            Some(Preset::Dense) => {
                out.depth = DENSE_DEPTH;
                out.n_cc = 1;
            }
            Some(Preset::Sparse) => {
                out.depth = SPARSE_DEPTH;
                out.n_cc = SPARSE_NCC.min(self.n_views);
            }
            Some(Preset::Mixed) => {
                out.depth = rng.random_range(MIXED_DEPTH_RANGE.0..=MIXED_DEPTH_RANGE.1);
                out.n_cc = rng
                    .random_range(MIXED_NCC_RANGE.0..=MIXED_NCC_RANGE.1)
                    .min(self.n_views);
            }
            Some(Preset::Random) | None => {}
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Terminal,
    Steiner,
    Greedy,
    Fill,
    Dfs,
    /// Uniform choice under the Random preset.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub partition: usize,
    pub community: usize,
    pub phase: Phase,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledBatch {
    pub scene_id: String,
    /// Snapshot with `D` and `N_cc` as actually used.
    pub config: SamplingConfig,
    pub views: Vec<u32>,
    /// One record per entry of `views`.
    pub provenance: Vec<Provenance>,
    /// Set when the scene could not supply `N` distinct views.
    #[serde(default)]
    pub truncated: bool,
}

impl SampledBatch {
    pub fn view_set(&self) -> BTreeSet<u32> {
        self.views.iter().copied().collect()
    }

    pub fn count_phase(&self, phase: Phase) -> usize {
        self.provenance.iter().filter(|p| p.phase == phase).count()
    }
}

/// Pruned graph, communities and positions of one scene, computed once and
/// shared by every batch.
#[derive(Clone, Debug)]
pub struct SceneSampler<T> {
    scene_id: String,
    graph: ViewGraph,
    communities: CommunityAssignment,
    positions: BTreeMap<u32, Vec3<T>>,
}

impl<T: Real> SceneSampler<T> {
    pub fn new(
        scene: &SceneReconstruction<T>,
        prune_threshold: u32,
        louvain: &LouvainParams,
    ) -> Self {
        let graph = prune_edges(&build_graph(scene), prune_threshold);
        let communities = louvain_with(&graph, louvain);
        Self::from_parts(
            scene.scene_id.clone(),
            graph,
            communities,
            scene.positions(),
        )
    }

    pub fn from_parts(
        scene_id: String,
        graph: ViewGraph,
        communities: CommunityAssignment,
        positions: BTreeMap<u32, Vec3<T>>,
    ) -> Self {
        Self {
            scene_id,
            graph,
            communities,
            positions,
        }
    }

    pub fn graph(&self) -> &ViewGraph {
        &self.graph
    }

    pub fn communities(&self) -> &CommunityAssignment {
        &self.communities
    }

    pub fn positions(&self) -> &BTreeMap<u32, Vec3<T>> {
        &self.positions
    }

    fn provenance(&self, view: u32, partition: usize, phase: Phase) -> Provenance {
        Provenance {
            partition,
            community: self.communities.label(view).unwrap_or(usize::MAX),
            phase,
        }
    }

    /// One batch. A scene too small for `N` views yields a shorter batch
    /// with `truncated` set.
    pub fn sample(&self, config: &SamplingConfig) -> Result<SampledBatch, SamplerError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut resolved = config.resolve(&mut rng);
        let n = resolved.n_views;

        let mut views = Vec::with_capacity(n);
        let mut provenance = Vec::with_capacity(n);
        if resolved.preset == Some(Preset::Random) {
            for &v in self.graph.nodes().choose_multiple(&mut rng, n) {
                views.push(v);
                provenance.push(self.provenance(v, 0, Phase::Random));
            }
        } else if !self.graph.is_empty() {
            resolved.n_cc = resolved.n_cc.min(self.graph.node_count());
            let parts =
                partition_with_rng(&self.graph, resolved.n_cc, &mut rng, &self.communities)?;
            let capacity: Vec<usize> = parts.parts.iter().map(BTreeSet::len).collect();
            let quotas = fit_quotas(random_composition(n, resolved.n_cc, &mut rng), &capacity);
            let ctx = PartitionContext {
                graph: &self.graph,
                communities: &self.communities,
                positions: &self.positions,
                weight_mode: resolved.weight_mode,
            };
            for (p, (part, &quota)) in parts.parts.iter().zip(&quotas).enumerate() {
                if quota == 0 {
                    continue;
                }
                for (v, phase) in
                    sample_partition_with_rng(ctx, part, quota, resolved.depth, &mut rng)?
                {
                    views.push(v);
                    provenance.push(self.provenance(v, p, phase));
                }
            }
        }

        let batch = SampledBatch {
            scene_id: self.scene_id.clone(),
            truncated: views.len() < n,
            config: resolved,
            views,
            provenance,
        };
        if batch.truncated {
            warn!(
                "scene {}: only {} of {} views available",
                batch.scene_id,
                batch.views.len(),
                n
            );
        }
        self.check(&batch)?;
        Ok(batch)
    }

    /// Verifies distinct views and, except for Random batches, the
    /// component bound on the pruned graph.
    pub fn check(&self, batch: &SampledBatch) -> Result<(), SamplerError> {
        let mut seen = BTreeSet::new();
        for &v in &batch.views {
            if !seen.insert(v) {
                return Err(SamplerError::DuplicateView(v));
            }
        }
        if batch.config.preset != Some(Preset::Random) {
            let found = induced_component_count(&self.graph, &seen);
            if found > batch.config.n_cc {
                return Err(SamplerError::ComponentBound {
                    found,
                    allowed: batch.config.n_cc,
                });
            }
        }
        Ok(())
    }

    /// `count` batches with per-batch seeds drawn from `config.seed`.
    pub fn sample_many(
        &self,
        config: &SamplingConfig,
        count: usize,
    ) -> Result<Vec<SampledBatch>, SamplerError> {
        batch_seeds(config.seed, count)
            .into_iter()
            .map(|seed| {
                self.sample(&SamplingConfig {
                    seed,
                    ..config.clone()
                })
            })
            .collect()
    }
}

/// Per-batch seeds derived from a base seed.
pub fn batch_seeds(base: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    (0..count).map(|_| rng.next_u64()).collect()
}

/// Builds the scene model and samples a single batch; communities use the
/// batch seed.
pub fn sample_batch<T: Real>(
    scene: &SceneReconstruction<T>,
    config: &SamplingConfig,
) -> Result<SampledBatch, SamplerError> {
    let sampler = SceneSampler::new(
        scene,
        config.prune_threshold,
        &LouvainParams {
            seed: config.seed,
            ..LouvainParams::default()
        },
    );
    sampler.sample(config)
}

/// Uniform random composition of `total` into `parts` positive summands.
pub fn random_composition<R: Rng + ?Sized>(total: usize, parts: usize, rng: &mut R) -> Vec<usize> {
    assert!(
        parts >= 1 && parts <= total,
        "composition needs 1 <= parts <= total"
    );
    let mut cuts: Vec<usize> = index::sample(rng, total - 1, parts - 1)
        .into_iter()
        .map(|i| i + 1)
        .collect();
    cuts.sort_unstable();
    cuts.push(total);
    let mut prev = 0;
    cuts.into_iter()
        .map(|c| {
            let q = c - prev;
            prev = c;
            q
        })
        .collect()
}

/// Caps quotas at partition capacity and hands the excess to partitions
/// with room, in partition order.
fn fit_quotas(mut quotas: Vec<usize>, capacity: &[usize]) -> Vec<usize> {
    let mut excess = 0;
    for (q, &cap) in quotas.iter_mut().zip(capacity) {
        if *q > cap {
            excess += *q - cap;
            *q = cap;
        }
    }
    for (q, &cap) in quotas.iter_mut().zip(capacity) {
        let take = (cap - *q).min(excess);
        *q += take;
        excess -= take;
    }
    quotas
}

/// Depth-first subsample of `k` views from a batch.
///
/// The walk runs on the subgraph of `graph` induced by the batch, visiting
/// neighbors in ascending id order, and restarts from a random unvisited
/// batch view when a component is exhausted.
pub fn dfs_subsample(
    batch: &SampledBatch,
    graph: &ViewGraph,
    k: usize,
    seed: u64,
) -> Result<SampledBatch, SamplerError> {
    let len = batch.views.len();
    if k < 2 || k > len {
        return Err(SamplerError::InvalidK { k, len });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sub = graph.induced(&batch.view_set());
    let origin: BTreeMap<u32, Provenance> = batch
        .views
        .iter()
        .copied()
        .zip(batch.provenance.iter().copied())
        .collect();
    let mut visited: BTreeSet<u32> = BTreeSet::new();
    let mut order: Vec<u32> = Vec::with_capacity(k);
    while order.len() < k {
        let pool: Vec<u32> = batch
            .views
            .iter()
            .copied()
            .filter(|v| !visited.contains(v))
            .collect();
        let start = *pool.choose(&mut rng).expect("k <= batch size");
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            if order.len() == k {
                break;
            }
            if !visited.insert(v) {
                continue;
            }
            order.push(v);
            let mut next: Vec<u32> = sub
                .neighbors(v)
                .map(|it| it.map(|(n, _)| n).collect())
                .unwrap_or_default();
            next.retain(|n| !visited.contains(n));
            stack.extend(next.into_iter().rev());
        }
    }
    let provenance = order
        .iter()
        .map(|v| Provenance {
            phase: Phase::Dfs,
            ..origin[v]
        })
        .collect();
    Ok(SampledBatch {
        scene_id: batch.scene_id.clone(),
        config: batch.config.clone(),
        views: order,
        provenance,
        truncated: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recon_io::MatchEdge;

    #[test]
    fn composition_is_positive_and_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let q = random_composition(24, 4, &mut rng);
            assert_eq!(q.len(), 4);
            assert_eq!(q.iter().sum::<usize>(), 24);
            assert!(q.iter().all(|&x| x >= 1));
        }
        assert_eq!(random_composition(5, 1, &mut rng), vec![5]);
        assert_eq!(random_composition(3, 3, &mut rng), vec![1, 1, 1]);
    }

    #[test]
    fn quotas_respect_capacity() {
        assert_eq!(fit_quotas(vec![10, 2, 12], &[3, 20, 12]), vec![3, 9, 12]);
        assert_eq!(fit_quotas(vec![10, 10], &[3, 4]), vec![3, 4]);
    }

    #[test]
    fn config_validation() {
        let mut c = SamplingConfig::default();
        assert!(c.validate().is_ok());
        c.n_cc = 30;
        assert!(c.validate().is_err());
        c = SamplingConfig {
            n_views: 1,
            n_cc: 1,
            ..SamplingConfig::default()
        };
        assert!(c.validate().is_err());
        c = SamplingConfig {
            depth: 0,
            ..SamplingConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn presets_expand() {
        let d = SamplingConfig::from_preset(Preset::Dense, 24, 1);
        assert_eq!((d.depth, d.n_cc), (5, 1));
        let s = SamplingConfig::from_preset(Preset::Sparse, 24, 1);
        assert_eq!((s.depth, s.n_cc), (24, 4));
        let m = SamplingConfig::from_preset(Preset::Mixed, 24, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let r = m.resolve(&mut rng);
            assert!((5..=24).contains(&r.depth));
            assert!((1..=4).contains(&r.n_cc));
        }
    }

    fn path_batch(n: u32) -> (SampledBatch, ViewGraph) {
        let edges: Vec<_> = (0..n - 1)
            .map(|i| MatchEdge::new(i, i + 1, 100).unwrap())
            .collect();
        let g = ViewGraph::from_edges(0..n, &edges).unwrap();
        let views: Vec<u32> = (0..n).collect();
        let batch = SampledBatch {
            scene_id: "s".into(),
            config: SamplingConfig::default(),
            provenance: views
                .iter()
                .map(|_| Provenance {
                    partition: 0,
                    community: 0,
                    phase: Phase::Greedy,
                })
                .collect(),
            views,
            truncated: false,
        };
        (batch, g)
    }

    #[test]
    fn dfs_full_is_permutation() {
        let (batch, g) = path_batch(8);
        let sub = dfs_subsample(&batch, &g, 8, 3).unwrap();
        assert_eq!(sub.view_set(), batch.view_set());
        assert!(sub.provenance.iter().all(|p| p.phase == Phase::Dfs));
    }

    #[test]
    fn dfs_pair_is_adjacent() {
        let (batch, g) = path_batch(8);
        for seed in 0..20 {
            let sub = dfs_subsample(&batch, &g, 2, seed).unwrap();
            assert!(g.weight(sub.views[0], sub.views[1]).is_some());
        }
    }

    #[test]
    fn dfs_rejects_bad_k() {
        let (batch, g) = path_batch(4);
        assert!(matches!(
            dfs_subsample(&batch, &g, 1, 0),
            Err(SamplerError::InvalidK { .. })
        ));
        assert!(matches!(
            dfs_subsample(&batch, &g, 5, 0),
            Err(SamplerError::InvalidK { .. })
        ));
    }
}
