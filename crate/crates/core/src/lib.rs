//! Sparsity-aware view sampling for structure-from-motion scenes and
//! monocular-prior filtering of multi-view depth maps.
//!
//! Geometric code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the common choices.

pub mod cli;
pub mod community;
pub mod depth_filter;
pub mod geometry;
pub mod metrics;
pub mod partition;
pub mod real;
pub mod recon_io;
pub mod sampler;
pub mod steiner;
pub mod synth;
pub mod view_graph;

pub use community::{louvain, louvain_with, modularity, CommunityAssignment, LouvainParams};
pub use depth_filter::{filter_depth, median_scale, DepthMap, FilterConfig, FilterReport};
pub use partition::{partition_round_robin, Partitioning};
pub use real::Real;
pub use recon_io::{MatchEdge, PosedView, SceneReconstruction};
pub use sampler::{
    dfs_subsample, sample_batch, Phase, Preset, SampledBatch, SamplingConfig, SceneSampler,
};
pub use steiner::{approximate_steiner_tree, SteinerResult, WeightMode};
pub use view_graph::{build_graph, prune_edges, ViewGraph};

pub type Scene = SceneReconstruction<f64>;
pub type SceneF32 = SceneReconstruction<f32>;
pub type View = PosedView<f64>;
pub type DepthMapF32 = DepthMap<f32>;
pub type DepthMapF64 = DepthMap<f64>;
pub type Sampler = SceneSampler<f64>;
