//! End-to-end inference over an ingested path set.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core_builder::{k_shell_decompose, CoreGraph};
use crate::engine::{run_deterministic, DeterministicRun, EngineError, InferenceConfig, InvalidReason};
use crate::graph::{AsGraph, Classification, EdgeKey, Method, RelType};
use crate::heuristics::{apply_heuristics, HeuristicConfig, HeuristicError, Tiebreak};
use crate::ingest::{AsPath, SiblingSet};
use crate::metrics::{compare, Comparison, PathCounts, ReferenceSet, RunMetrics};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Heuristic(#[from] HeuristicError),
    #[error("no paths to infer from")]
    NoPaths,
    #[error("core has no vertex in the path graph")]
    EmptyCore,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub inference: InferenceConfig,
    pub heuristics: HeuristicConfig,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// One entry per graph edge, sorted by edge.
    pub classifications: Vec<Classification>,
    /// Graph with accumulated votes.
    pub graph: AsGraph,
    /// The core after restriction to the graph.
    pub core: CoreGraph,
    pub deterministic: DeterministicRun,
    pub path_counts: PathCounts,
}

impl RunOutput {
    pub fn metrics(&self, comparison: Option<&Comparison>) -> RunMetrics {
        RunMetrics::new(
            &self.classifications,
            self.path_counts,
            (self.core.vertex_count(), self.core.edge_count()),
            self.deterministic.phase2.rounds,
            comparison,
        )
    }

    pub fn compare(&self, reference: &ReferenceSet) -> Comparison {
        compare(&self.classifications, reference, &self.graph)
    }
}

/// Runs both deterministic phases and the heuristics. `graph` must be the
/// graph spanned by `paths`; its votes are ignored.
pub fn run_inference(
    graph: &AsGraph,
    paths: &[AsPath],
    core: &CoreGraph,
    config: &PipelineConfig,
) -> Result<RunOutput, PipelineError> {
    config.inference.validate()?;
    config.heuristics.validate()?;
    if paths.is_empty() {
        return Err(PipelineError::NoPaths);
    }
    let mut core = core.clone();
    core.restrict_to(graph);
    if core.vertex_count() == 0 {
        return Err(PipelineError::EmptyCore);
    }
    let mut g = graph.clone();
    g.clear_votes();
    let det = run_deterministic(&mut g, paths, &core, &config.inference)?;

    let kshell = (config.heuristics.tiebreak == Tiebreak::Kshell).then(|| k_shell_decompose(&g));
    let periphery: Vec<&AsPath> = det.partition.periphery.iter().map(|&i| &paths[i]).collect();
    let mut classifications = det.classifications.clone();
    apply_heuristics(&mut classifications, &periphery, &g, kshell.as_ref(), &config.heuristics)?;

    let weight = |idx: &mut dyn Iterator<Item = usize>| idx.map(|i| paths[i].weight).sum::<u64>();
    let path_counts = PathCounts {
        total: paths.iter().map(|p| p.weight).sum(),
        through_core: weight(&mut det.partition.through_core.iter().copied()),
        periphery: weight(&mut det.partition.periphery.iter().copied()),
        core_hop_limit: weight(
            &mut det
                .partition
                .invalid
                .iter()
                .filter(|(_, r)| *r == InvalidReason::CoreHopLimit)
                .map(|(i, _)| *i),
        ),
        valley: weight(&mut det.phase1.valley_paths.iter().copied()),
    };

    Ok(RunOutput {
        classifications,
        graph: g,
        core,
        deterministic: det,
        path_counts,
    })
}

/// S2S rows for the declared sibling pairs, which never reach the graph.
pub fn sibling_classifications(siblings: &SiblingSet) -> Vec<Classification> {
    let mut keys: Vec<EdgeKey> = siblings
        .pairs()
        .iter()
        .filter_map(|&(a, b)| EdgeKey::new(a, b).ok())
        .collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|edge| Classification {
            edge,
            rel: RelType::S2S,
            method: Method::SiblingDb,
            shares: None,
            votes_invalid: 0,
        })
        .collect()
}
