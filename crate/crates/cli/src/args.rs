//! Flag definitions and their translation into a [`RunManifest`].

use std::path::PathBuf;

use asrel::core_builder::GrowStrategy;
use asrel::engine::{AnchorMode, InferenceConfig};
use asrel::heuristics::{HeuristicConfig, Tiebreak};
use asrel::pipeline::PipelineConfig;
use asrel::topogen::{GenConfig, NoiseConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;
use crate::manifest::{CoreSpec, Inputs, PathFiles, RunManifest, Task};

#[derive(Debug, Parser)]
#[command(name = "asrel", version, about = "Infer AS relationships from AS paths")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify every edge of the path graph.
    Infer(InferArgs),
    /// Build a core and write it in core file format.
    BuildCore(BuildCoreArgs),
    /// Run a parameter sweep.
    Experiment(ExperimentArgs),
    /// Generate a synthetic topology, its labels and sampled paths.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CoreMethod {
    Clique,
    Kcore,
    External,
    Grow,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GrowArg {
    Degree,
    Kshell,
}

impl From<GrowArg> for GrowStrategy {
    fn from(g: GrowArg) -> Self {
        match g {
            GrowArg::Degree => GrowStrategy::Degree,
            GrowArg::Kshell => GrowStrategy::Kshell,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TiebreakArg {
    Degree,
    Kshell,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AnchorArg {
    Threshold,
    Plurality,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    #[arg(long = "paths-bgp", value_name = "FILE", num_args = 1..)]
    pub paths_bgp: Vec<PathBuf>,
    #[arg(long = "paths-trace", value_name = "FILE", num_args = 1..)]
    pub paths_trace: Vec<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub siblings: Option<PathBuf>,
}

impl InputArgs {
    fn files(&self) -> PathFiles {
        PathFiles {
            bgp: self.paths_bgp.clone(),
            trace: self.paths_trace.clone(),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CoreArgs {
    #[arg(long, value_name = "FILE", conflicts_with = "core_method")]
    pub core: Option<PathBuf>,
    #[arg(long = "core-method", value_enum)]
    pub core_method: Option<CoreMethod>,
    #[arg(long = "core-size", value_name = "N")]
    pub core_size: Option<usize>,
    #[arg(long = "peer-edges", value_name = "FILE")]
    pub peer_edges: Option<PathBuf>,
    /// Vertex order for the grow method.
    #[arg(long, value_enum, default_value = "degree")]
    pub grow: GrowArg,
}

impl CoreArgs {
    pub fn spec(&self) -> Result<Option<CoreSpec>, CliError> {
        if let Some(path) = &self.core {
            return Ok(Some(CoreSpec::File { path: path.clone() }));
        }
        let Some(method) = self.core_method else {
            return Ok(None);
        };
        Ok(Some(match method {
            CoreMethod::Clique => CoreSpec::Clique,
            CoreMethod::Kcore => CoreSpec::Kcore,
            CoreMethod::External => CoreSpec::External {
                peer_edges: self
                    .peer_edges
                    .clone()
                    .ok_or_else(|| CliError::Config("--core-method external needs --peer-edges".into()))?,
            },
            CoreMethod::Grow => CoreSpec::Grow {
                size: self
                    .core_size
                    .ok_or_else(|| CliError::Config("--core-method grow needs --core-size".into()))?,
                strategy: self.grow.into(),
            },
        }))
    }
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    #[arg(long, default_value_t = 0.8)]
    pub threshold: f64,
    #[arg(long = "max-core-hops", default_value_t = 3)]
    pub max_core_hops: usize,
    #[arg(long, value_enum, default_value = "degree")]
    pub tiebreak: TiebreakArg,
    #[arg(long = "phase2-anchor", value_enum, default_value = "threshold")]
    pub phase2_anchor: AnchorArg,
    #[arg(long = "degree-ratio-low", default_value_t = 0.8)]
    pub degree_ratio_low: f64,
    #[arg(long = "degree-ratio-high", default_value_t = 1.2)]
    pub degree_ratio_high: f64,
}

impl ConfigArgs {
    pub fn config(&self) -> PipelineConfig {
        PipelineConfig {
            inference: InferenceConfig {
                threshold: self.threshold,
                max_core_hops: self.max_core_hops,
                anchor: match self.phase2_anchor {
                    AnchorArg::Threshold => AnchorMode::Threshold,
                    AnchorArg::Plurality => AnchorMode::Plurality,
                },
            },
            heuristics: HeuristicConfig {
                degree_ratio_low: self.degree_ratio_low,
                degree_ratio_high: self.degree_ratio_high,
                tiebreak: match self.tiebreak {
                    TiebreakArg::Degree => Tiebreak::Degree,
                    TiebreakArg::Kshell => Tiebreak::Kshell,
                },
            },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Replay a manifest; other run flags are ignored except --out.
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub inputs: InputArgs,
    #[command(flatten)]
    pub core: CoreArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, value_name = "FILE")]
    pub reference: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    /// The manifest to run: loaded from `--manifest`, or assembled from flags.
    pub fn manifest(&self, task: Task, windows: Vec<PathFiles>) -> Result<RunManifest, CliError> {
        if let Some(path) = &self.manifest {
            let mut m = RunManifest::load(path)?;
            if let Some(out) = &self.out {
                m.out = out.clone();
            }
            return Ok(m);
        }
        let out = self
            .out
            .clone()
            .ok_or_else(|| CliError::Config("--out DIR is required".into()))?;
        Ok(RunManifest {
            task,
            inputs: Inputs {
                paths: self.inputs.files(),
                siblings: self.inputs.siblings.clone(),
                reference: self.reference.clone(),
                windows,
            },
            core: self.core.spec()?,
            config: self.config.config(),
            seed: self.seed,
            out,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct InferArgs {
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BuildCoreArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    #[command(flatten)]
    pub core: CoreArgs,
    /// Core file to write.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ExperimentKind {
    CoreSweep,
    Corruption,
    WindowStability,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    pub kind: Option<ExperimentKind>,
    #[command(flatten)]
    pub run: RunArgs,
    /// Core sizes: `A..B` (inclusive) or a comma-separated list.
    #[arg(long, default_value = "4..30")]
    pub sizes: String,
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
    pub fractions: Vec<f64>,
    /// Number of corruption seeds, derived from --seed.
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,
    /// One window: `bgp:FILE,trace:FILE,...`. Repeat per window.
    #[arg(long = "window", value_name = "SPEC")]
    pub windows: Vec<String>,
}

pub fn parse_sizes(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Config(format!("bad size list {s:?}"));
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| bad()))
        .collect()
}

pub fn parse_window(s: &str) -> Result<PathFiles, CliError> {
    let mut files = PathFiles::default();
    for part in s.split(',').filter(|p| !p.is_empty()) {
        match part.split_once(':') {
            Some(("bgp", f)) => files.bgp.push(f.into()),
            Some(("trace", f)) => files.trace.push(f.into()),
            _ => {
                return Err(CliError::Config(format!(
                    "window part {part:?} is not bgp:FILE or trace:FILE"
                )))
            }
        }
    }
    if files.is_empty() {
        return Err(CliError::Config(format!("empty window {s:?}")));
    }
    Ok(files)
}

impl ExperimentArgs {
    pub fn manifest(&self) -> Result<RunManifest, CliError> {
        if self.run.manifest.is_some() {
            return self.run.manifest(Task::Infer, vec![]);
        }
        let kind = self
            .kind
            .ok_or_else(|| CliError::Config("experiment kind is required without --manifest".into()))?;
        let task = match kind {
            ExperimentKind::CoreSweep => Task::CoreSweep {
                sizes: parse_sizes(&self.sizes)?,
                strategy: self.run.core.grow.into(),
            },
            ExperimentKind::Corruption => Task::Corruption {
                fractions: self.fractions.clone(),
                seeds: self.seeds,
            },
            ExperimentKind::WindowStability => Task::WindowStability,
        };
        let windows = self
            .windows
            .iter()
            .map(|w| parse_window(w))
            .collect::<Result<Vec<_>, _>>()?;
        let m = self.run.manifest(task, windows)?;
        if matches!(m.task, Task::CoreSweep { .. }) {
            return Ok(RunManifest { core: None, ..m });
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    /// AS count per tier, top tier first.
    #[arg(long, value_delimiter = ',', default_value = "10,50,300,1000")]
    pub tiers: Vec<usize>,
    #[arg(long = "peer-prob", default_value_t = 0.3)]
    pub peer_prob: f64,
    #[arg(long, default_value_t = 2.0)]
    pub multihome: f64,
    #[arg(long, default_value_t = 50_000)]
    pub paths: usize,
    #[arg(long = "loop-prob", default_value_t = 0.0)]
    pub loop_prob: f64,
    #[arg(long = "valley-prob", default_value_t = 0.0)]
    pub valley_prob: f64,
    #[arg(long = "prepend-prob", default_value_t = 0.0)]
    pub prepend_prob: f64,
    #[arg(long, default_value_t = 10)]
    pub agents: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write BGP-format paths (no agent) instead of trace format.
    #[arg(long)]
    pub bgp: bool,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

impl GenerateArgs {
    pub fn config(&self) -> GenConfig {
        GenConfig {
            tier_sizes: self.tiers.clone(),
            peer_prob: self.peer_prob,
            multihome: self.multihome,
            paths: self.paths,
            noise: NoiseConfig {
                loop_prob: self.loop_prob,
                valley_prob: self.valley_prob,
                prepend_prob: self.prepend_prob,
            },
            seed: self.seed,
            agents: self.agents,
            ..GenConfig::default()
        }
    }
}
