//! Parameter sweeps over full inference runs: core corruption, core size and
//! measurement windows. Cells run in parallel; rows come back in input order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core_builder::{corrupt_core, grow_core, CoreError, CoreGraph, GrowStrategy};
use crate::graph::{AsGraph, Classification};
use crate::ingest::AsPath;
use crate::metrics::{stability, ReferenceSet, RunMetrics};
use crate::pipeline::{run_inference, PipelineConfig, PipelineError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("replace fraction {0} outside [0, 1]")]
    Fraction(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionRow {
    pub fraction: f64,
    pub seed: u64,
    pub replaced: usize,
    pub metrics: RunMetrics,
}

/// Number of core vertices replaced for `fraction`, rounded to nearest.
pub fn replace_count(core_size: usize, fraction: f64) -> usize {
    ((core_size as f64 * fraction).round() as usize).min(core_size)
}

/// One row per (fraction, seed), fractions outermost.
pub fn corruption_sweep(
    graph: &AsGraph,
    paths: &[AsPath],
    core: &CoreGraph,
    fractions: &[f64],
    seeds: &[u64],
    config: &PipelineConfig,
    reference: Option<&ReferenceSet>,
) -> Result<Vec<CorruptionRow>, ExperimentError> {
    if let Some(f) = fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(ExperimentError::Fraction(*f));
    }
    let mut base = core.clone();
    base.restrict_to(graph);
    let cells: Vec<(f64, u64)> = fractions
        .iter()
        .flat_map(|f| seeds.iter().map(move |s| (*f, *s)))
        .collect();
    cells
        .par_iter()
        .map(|&(fraction, seed)| {
            let replaced = replace_count(base.vertex_count(), fraction);
            let corrupted = corrupt_core(&base, graph, replaced, seed)?;
            let out = run_inference(graph, paths, &corrupted, config)?;
            let cmp = reference.map(|r| out.compare(r));
            Ok(CorruptionRow {
                fraction,
                seed,
                replaced,
                metrics: out.metrics(cmp.as_ref()),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreSizeRow {
    pub size: usize,
    pub metrics: RunMetrics,
}

/// One row per requested core size, growing the core by `strategy`.
pub fn core_size_sweep(
    graph: &AsGraph,
    paths: &[AsPath],
    strategy: GrowStrategy,
    sizes: &[usize],
    config: &PipelineConfig,
    reference: Option<&ReferenceSet>,
) -> Result<Vec<CoreSizeRow>, ExperimentError> {
    sizes
        .par_iter()
        .map(|&size| {
            let core = grow_core(graph, strategy, size)?;
            let out = run_inference(graph, paths, &core, config)?;
            let cmp = reference.map(|r| out.compare(r));
            Ok(CoreSizeRow {
                size,
                metrics: out.metrics(cmp.as_ref()),
            })
        })
        .collect()
}

/// Stability of each window against the next one.
pub fn window_stability(windows: &[Vec<Classification>]) -> Vec<Option<f64>> {
    windows.windows(2).map(|w| stability(&w[0], &w[1])).collect()
}
