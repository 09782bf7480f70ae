//! Command-line driver. Exit codes: 0 success, 1 input or usage error,
//! 2 internal invariant violation.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::{ContextKind, ContextValue, ErrorKind};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, LevelFilter};

use crate::community::{louvain_with, modularity, LouvainParams};
use crate::depth_filter::{
    filter_depth, read_pfm, write_pfm, FilterConfig, DEFAULT_TAU_DEPTH, DEFAULT_TAU_GRAD,
};
use crate::metrics::{coverage_report, mean_report, pose_pair_errors};
use crate::partition::partition_round_robin;
use crate::recon_io::{
    load_scene_dir, parse_images, read_batches, render_batches, render_match_graph, save_scene_dir,
    write_match_graph, SceneReconstruction,
};
use crate::sampler::{dfs_subsample, Preset, SamplerError, SamplingConfig, SceneSampler};
use crate::steiner::WeightMode;
use crate::synth::{gen_depth_fixture, gen_grid_scene, gen_ring_scene, SynthKind, SynthSpec};
use crate::view_graph::{build_graph, compute_stats, prune_edges, DEFAULT_PRUNE_THRESHOLD};

const MATCHES_FILE: &str = "matches.txt";

#[derive(Parser, Debug)]
#[command(
    name = "tailview",
    version,
    about = "Sparse view sampling and depth-map filtering for SfM scenes",
    after_help = "Scenes are COLMAP text directories (cameras.txt, images.txt, optional points3D.txt) \
with matches given as `VIEW_A VIEW_B MATCH_COUNT` lines."
)]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Upper bound on worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Only log warnings and errors.
    #[arg(long, global = true)]
    quiet: bool,
    /// Output path; stdout when omitted for text outputs.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct SceneArgs {
    /// Scene directory with cameras.txt and images.txt.
    #[arg(long)]
    scene: PathBuf,
    /// Match-count file; defaults to <scene>/matches.txt when present.
    #[arg(long)]
    matches: Option<PathBuf>,
    /// Edges with fewer matches are dropped.
    #[arg(long, default_value_t = DEFAULT_PRUNE_THRESHOLD)]
    prune: u32,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PresetArg {
    Dense,
    Sparse,
    Mixed,
    Random,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Dense => Preset::Dense,
            PresetArg::Sparse => Preset::Sparse,
            PresetArg::Mixed => Preset::Mixed,
            PresetArg::Random => Preset::Random,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum WeightArg {
    UnitHop,
    InverseMatch,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SynthKindArg {
    Ring,
    Grid,
    Depth,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load a scene and write it back in canonical form.
    Parse {
        #[command(flatten)]
        scene: SceneArgs,
    },
    /// View-graph statistics as a key/value report.
    Stats {
        #[command(flatten)]
        scene: SceneArgs,
    },
    /// Louvain communities as `VIEW_ID COMMUNITY_ID` lines.
    Communities {
        #[command(flatten)]
        scene: SceneArgs,
    },
    /// Round-robin BFS partition as `VIEW_ID PARTITION_ID` lines.
    Partition {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long)]
        ncc: usize,
    },
    /// Sample batches, one JSON record per line.
    Sample {
        #[command(flatten)]
        scene: SceneArgs,
        /// Views per batch.
        #[arg(long, default_value_t = 24)]
        n: usize,
        /// Maximum connected components per batch.
        #[arg(long)]
        ncc: Option<usize>,
        /// Greedy search depth.
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long, value_enum)]
        preset: Option<PresetArg>,
        #[arg(long, default_value_t = 1)]
        batches: usize,
        /// Additionally subsample each batch to K views by DFS.
        #[arg(long)]
        dfs_k: Option<usize>,
        #[arg(long, value_enum, default_value = "unit-hop")]
        weight_mode: WeightArg,
    },
    /// Coverage statistics of sampled batches, one JSON record per batch
    /// followed by the mean.
    Coverage {
        #[command(flatten)]
        scene: SceneArgs,
        /// Batch file produced by `sample`.
        #[arg(long)]
        batches: PathBuf,
        /// Hop radii for k-hop coverage.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        k: Vec<usize>,
    },
    /// Remove geometric depths that disagree with a monocular prior
    /// (single-channel PFM, rows bottom to top).
    FilterDepth {
        #[arg(long)]
        geom: PathBuf,
        #[arg(long)]
        mono: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TAU_DEPTH)]
        tau_depth: f64,
        #[arg(long, default_value_t = DEFAULT_TAU_GRAD)]
        tau_grad: f64,
        /// JSON report path.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Relative pose errors between two COLMAP images.txt files.
    PoseEval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Thresholds in whole degrees.
        #[arg(long, value_delimiter = ',', default_value = "5,15,30")]
        thresholds: Vec<u32>,
    },
    /// Write a synthetic scene directory or depth fixture.
    Synth {
        #[arg(long, value_enum, default_value = "ring")]
        kind: SynthKindArg,
        /// Clusters (ring) or rows (grid).
        #[arg(long, default_value_t = 6)]
        clusters: usize,
        /// Cameras per cluster (ring) or columns (grid).
        #[arg(long, default_value_t = 5)]
        cluster_size: usize,
        #[arg(long, default_value_t = 200)]
        intra: u32,
        #[arg(long, default_value_t = 60)]
        inter: u32,
        #[arg(long, default_value_t = 10.0)]
        radius: f64,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        /// Blob side in pixels for depth fixtures.
        #[arg(long, default_value_t = 12)]
        blob: usize,
    },
}

enum Failure {
    Input(String),
    Internal(String),
}

fn input(e: impl std::fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

impl From<SamplerError> for Failure {
    fn from(e: SamplerError) -> Self {
        if e.is_internal() {
            Failure::Internal(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

/// One-line description of a clap error naming the offending flag.
fn usage_line(err: &clap::Error) -> String {
    let arg = match err.get(ContextKind::InvalidArg) {
        Some(ContextValue::String(s)) => Some(s.clone()),
        Some(ContextValue::Strings(v)) => Some(v.join(", ")),
        _ => None,
    };
    match (err.kind(), arg) {
        (ErrorKind::MissingRequiredArgument, Some(a)) => format!("missing required flag {a}"),
        (_, Some(a)) => {
            let value = match err.get(ContextKind::InvalidValue) {
                Some(ContextValue::String(v)) => format!(" `{v}`"),
                _ => String::new(),
            };
            format!("invalid value{value} for {a}")
        }
        _ => err
            .to_string()
            .lines()
            .next()
            .unwrap_or("usage error")
            .trim_start_matches("error: ")
            .to_string(),
    }
}

/// Runs the command line `argv` (program name first) and returns the exit
/// code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return 0;
        }
        Err(e) if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            eprint!("{e}");
            return 1;
        }
        Err(e) => {
            eprintln!("error: {}", usage_line(&e));
            return 1;
        }
    };
    let level = if cli.quiet {
        LevelFilter::Warn
    } else {
        LevelFilter::Info
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            1
        }
        Err(Failure::Internal(m)) => {
            eprintln!("internal error: {m}");
            2
        }
    }
}

fn load_scene(args: &SceneArgs) -> Result<SceneReconstruction<f64>, Failure> {
    let default_matches = args.scene.join(MATCHES_FILE);
    let matches = args
        .matches
        .clone()
        .or_else(|| default_matches.is_file().then_some(default_matches));
    let scene = load_scene_dir(&args.scene, matches.as_deref()).map_err(input)?;
    info!(
        "scene {}: {} views, {} edges, {} points",
        scene.scene_id,
        scene.views.len(),
        scene.edges.len(),
        scene.points.len()
    );
    Ok(scene)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn require_out(out: Option<&Path>, command: &str) -> Result<PathBuf, Failure> {
    out.map(Path::to_path_buf)
        .ok_or_else(|| Failure::Input(format!("{command} requires --out")))
}

fn to_json<V: serde::Serialize>(value: &V) -> String {
    serde_json::to_string(value).expect("report serializes")
}

fn louvain_params(seed: u64) -> LouvainParams {
    LouvainParams {
        seed,
        ..LouvainParams::default()
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    if cli.threads == 0 {
        return Err(Failure::Input("--threads must be at least 1".into()));
    }
    let out = cli.out.as_deref();
    let seed = cli.seed;
    match &cli.command {
        Command::Parse { scene } => {
            let s = load_scene(scene)?;
            match out {
                Some(dir) => {
                    save_scene_dir(&s, dir).map_err(input)?;
                    if !s.edges.is_empty() {
                        write_match_graph(&s.edges, &dir.join(MATCHES_FILE)).map_err(input)?;
                    }
                }
                None => {
                    println!("scene_id {}", s.scene_id);
                    println!("cameras {}", s.intrinsics.len());
                    println!("views {}", s.views.len());
                    println!("points {}", s.points.len());
                    println!("edges {}", s.edges.len());
                }
            }
        }
        Command::Stats { scene } => {
            let s = load_scene(scene)?;
            let g = prune_edges(&build_graph(&s), scene.prune);
            emit(out, &compute_stats(&g).render())?;
        }
        Command::Communities { scene } => {
            let s = load_scene(scene)?;
            let g = prune_edges(&build_graph(&s), scene.prune);
            info!("louvain seed {seed}");
            let c = louvain_with(&g, &louvain_params(seed));
            let q = modularity(&g, &c).map_err(|e| Failure::Internal(e.to_string()))?;
            info!("{} communities, modularity {q:.6}", c.community_count());
            emit(out, &c.render())?;
        }
        Command::Partition { scene, ncc } => {
            let s = load_scene(scene)?;
            let g = prune_edges(&build_graph(&s), scene.prune);
            info!("partition seed {seed}");
            let c = louvain_with(&g, &louvain_params(seed));
            let p = partition_round_robin(&g, *ncc, seed, &c).map_err(input)?;
            let mut text = String::from("# seeds:");
            for v in &p.seed_nodes {
                let _ = write!(text, " {v}");
            }
            text.push('\n');
            for (v, part) in &p.assignment {
                let _ = writeln!(text, "{v} {part}");
            }
            emit(out, &text)?;
        }
        Command::Sample {
            scene,
            n,
            ncc,
            depth,
            preset,
            batches,
            dfs_k,
            weight_mode,
        } => {
            let s = load_scene(scene)?;
            let mut config = match preset {
                Some(p) => SamplingConfig::from_preset((*p).into(), *n, seed),
                None => SamplingConfig {
                    n_views: *n,
                    seed,
                    ..SamplingConfig::default()
                },
            };
            if let Some(c) = ncc {
                config.n_cc = *c;
            }
            if let Some(d) = depth {
                config.depth = *d;
            }
            config.prune_threshold = scene.prune;
            config.weight_mode = match weight_mode {
                WeightArg::UnitHop => WeightMode::UnitHop,
                WeightArg::InverseMatch => WeightMode::InverseMatch,
            };
            config.validate()?;
            info!("sampling seed {seed}");
            let sampler = SceneSampler::new(&s, scene.prune, &louvain_params(seed));
            let mut sampled = sampler.sample_many(&config, *batches)?;
            if let Some(k) = dfs_k {
                sampled = sampled
                    .iter()
                    .map(|b| dfs_subsample(b, sampler.graph(), *k, b.config.seed))
                    .collect::<Result<_, _>>()?;
            }
            emit(out, &render_batches(&sampled))?;
        }
        Command::Coverage { scene, batches, k } => {
            let s = load_scene(scene)?;
            let g = prune_edges(&build_graph(&s), scene.prune);
            let positions = s.positions();
            let records = read_batches(batches).map_err(input)?;
            let mut text = String::new();
            let mut reports = Vec::with_capacity(records.len());
            for (i, b) in records.iter().enumerate() {
                let set: BTreeSet<u32> = b.views.iter().copied().collect();
                let r = coverage_report(&g, &positions, &set, k).map_err(input)?;
                let _ = writeln!(
                    text,
                    "{}",
                    serde_json::json!({ "batch": i, "scene_id": b.scene_id, "report": r })
                );
                reports.push(r);
            }
            if let Some(mean) = mean_report(&reports) {
                let _ = writeln!(
                    text,
                    "{}",
                    serde_json::json!({ "aggregate": mean, "batches": reports.len() })
                );
            }
            emit(out, &text)?;
        }
        Command::FilterDepth {
            geom,
            mono,
            tau_depth,
            tau_grad,
            report,
        } => {
            let out = require_out(out, "filter-depth")?;
            let g = read_pfm::<f64>(geom).map_err(input)?;
            let m = read_pfm::<f64>(mono).map_err(input)?;
            let config = FilterConfig {
                tau_depth: *tau_depth,
                tau_grad: *tau_grad,
                ..FilterConfig::default()
            };
            let (filtered, rep) = filter_depth(&g, &m, &config).map_err(input)?;
            info!(
                "scale {:.6}, removed {} of {} valid pixels",
                rep.scale_s,
                rep.removed_total,
                rep.removed_total + rep.kept
            );
            write_pfm(&filtered, &out).map_err(input)?;
            if let Some(p) = report {
                emit(Some(p), &format!("{}\n", to_json(&rep)))?;
            }
        }
        Command::PoseEval {
            pred,
            gt,
            thresholds,
        } => {
            let read = |p: &Path| -> Result<Vec<_>, Failure> {
                let text =
                    fs::read_to_string(p).map_err(|e| input(format!("{}: {e}", p.display())))?;
                let views = parse_images::<f64>(&text, None)
                    .map_err(|e| input(format!("{}: {e}", p.display())))?;
                Ok(views.into_values().collect())
            };
            let errors = pose_pair_errors(&read(pred)?, &read(gt)?, thresholds).map_err(input)?;
            emit(out, &format!("{}\n", to_json(&errors)))?;
        }
        Command::Synth {
            kind,
            clusters,
            cluster_size,
            intra,
            inter,
            radius,
            noise,
            blob,
        } => {
            let dir = require_out(out, "synth")?;
            let spec = SynthSpec {
                kind: match kind {
                    SynthKindArg::Ring => SynthKind::RingOfClusters,
                    SynthKindArg::Grid => SynthKind::GridScene,
                    SynthKindArg::Depth => SynthKind::DepthFixture,
                },
                cluster_count: *clusters,
                cluster_size: *cluster_size,
                intra_weight: *intra,
                inter_weight: *inter,
                radius: *radius,
                noise_sigma: *noise,
                seed,
                blob_size: *blob,
                ..SynthSpec::default()
            };
            info!("synth seed {seed}");
            fs::create_dir_all(&dir).map_err(|e| input(format!("{}: {e}", dir.display())))?;
            match spec.kind {
                SynthKind::RingOfClusters | SynthKind::GridScene => {
                    let s = if spec.kind == SynthKind::GridScene {
                        gen_grid_scene::<f64>(&spec)
                    } else {
                        gen_ring_scene::<f64>(&spec)
                    }
                    .map_err(input)?;
                    save_scene_dir(&s.scene, &dir).map_err(input)?;
                    emit(
                        Some(&dir.join(MATCHES_FILE)),
                        &render_match_graph(&s.scene.edges),
                    )?;
                    let mut labels = String::new();
                    for (v, c) in &s.cluster_of {
                        let _ = writeln!(labels, "{v} {c}");
                    }
                    emit(Some(&dir.join("clusters.txt")), &labels)?;
                }
                SynthKind::DepthFixture => {
                    let f = gen_depth_fixture::<f64>(&spec).map_err(input)?;
                    write_pfm(&f.geom, &dir.join("geom.pfm")).map_err(input)?;
                    write_pfm(&f.mono, &dir.join("mono.pfm")).map_err(input)?;
                    let mut text = String::new();
                    for i in &f.blob {
                        let _ = writeln!(text, "{i}");
                    }
                    emit(Some(&dir.join("blob.txt")), &text)?;
                }
            }
        }
    }
    Ok(())
}
