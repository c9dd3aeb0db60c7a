//! Command implementations. Each takes fully resolved parameters; flag
//! parsing lives in [`crate::args`].

use std::path::Path;

use asrel::core_builder::CoreGraph;
use asrel::experiments::{core_size_sweep, corruption_sweep, window_stability};
use asrel::graph::Classification;
use asrel::ingest::SiblingSet;
use asrel::metrics::{ReferenceSet, RunMetrics};
use asrel::pipeline::{run_inference, sibling_classifications, RunOutput};
use asrel::sub_seed;
use asrel::topogen::{generate, sample_paths, write_trace_paths, GenConfig};

use crate::error::CliError;
use crate::io::{
    build_core, ensure_dir, load_corpus, load_reference, load_siblings, with_file, write_classifications,
    write_csv_rows, write_histogram, write_json, write_metrics, write_text, Corpus,
};
use crate::manifest::{CoreSpec, RunManifest, Task};

/// Executes a manifest, writing it verbatim next to the outputs.
pub fn run_manifest(m: &RunManifest) -> Result<(), CliError> {
    m.config.inference.validate().map_err(|e| CliError::Config(e.to_string()))?;
    m.config.heuristics.validate().map_err(|e| CliError::Config(e.to_string()))?;
    ensure_dir(&m.out)?;
    write_text(&m.out.join("manifest.json"), &m.to_json())?;
    let siblings = load_siblings(m.inputs.siblings.as_deref())?;
    match &m.task {
        Task::Infer => infer(m, &siblings),
        Task::CoreSweep { sizes, strategy } => {
            let corpus = load_corpus(&m.inputs.paths, &siblings)?;
            let reference = reference(m, &siblings)?;
            let rows = core_size_sweep(&corpus.graph, &corpus.paths, *strategy, sizes, &m.config, reference.as_ref())?;
            let cells: Vec<(Vec<String>, &RunMetrics)> =
                rows.iter().map(|r| (vec![r.size.to_string()], &r.metrics)).collect();
            write_metrics(&m.out.join("core_sweep.csv"), &["size"], &cells)
        }
        Task::Corruption { fractions, seeds } => {
            let corpus = load_corpus(&m.inputs.paths, &siblings)?;
            let core = build_core(core_spec(m)?, &corpus.graph, &siblings)?;
            let reference = reference(m, &siblings)?;
            let seeds = corruption_seeds(m.seed, *seeds);
            let rows = corruption_sweep(
                &corpus.graph,
                &corpus.paths,
                &core,
                fractions,
                &seeds,
                &m.config,
                reference.as_ref(),
            )?;
            let cells: Vec<(Vec<String>, &RunMetrics)> = rows
                .iter()
                .map(|r| {
                    (
                        vec![r.fraction.to_string(), r.seed.to_string(), r.replaced.to_string()],
                        &r.metrics,
                    )
                })
                .collect();
            write_metrics(&m.out.join("corruption.csv"), &["fraction", "seed", "replaced"], &cells)
        }
        Task::WindowStability => windows(m, &siblings),
    }
}

/// Seeds for corruption cells, derived from the run seed.
pub fn corruption_seeds(seed: u64, n: usize) -> Vec<u64> {
    (0..n).map(|i| sub_seed(seed, &format!("corruption-{i}"))).collect()
}

fn core_spec(m: &RunManifest) -> Result<&CoreSpec, CliError> {
    m.core
        .as_ref()
        .ok_or_else(|| CliError::Config("a core is required: --core FILE or --core-method".into()))
}

fn reference(m: &RunManifest, siblings: &SiblingSet) -> Result<Option<ReferenceSet>, CliError> {
    m.inputs
        .reference
        .as_deref()
        .map(|p| load_reference(p, siblings))
        .transpose()
}

fn run_on(corpus: &Corpus, core: &CoreGraph, m: &RunManifest) -> Result<RunOutput, CliError> {
    Ok(run_inference(&corpus.graph, &corpus.paths, core, &m.config)?)
}

fn infer(m: &RunManifest, siblings: &SiblingSet) -> Result<(), CliError> {
    let corpus = load_corpus(&m.inputs.paths, siblings)?;
    let core = build_core(core_spec(m)?, &corpus.graph, siblings)?;
    let reference = reference(m, siblings)?;
    let out = run_on(&corpus, &core, m)?;
    let cmp = reference.as_ref().map(|r| out.compare(r));
    let metrics = out.metrics(cmp.as_ref());

    let mut rows: Vec<Classification> = out.classifications.clone();
    rows.extend(sibling_classifications(siblings));
    rows.sort_by_key(|c| c.edge);
    write_classifications(&m.out.join("classifications.csv"), &rows)?;
    write_metrics(&m.out.join("metrics.csv"), &[], &[(vec![], &metrics)])?;
    write_histogram(&m.out.join("histogram.csv"), &metrics)?;
    write_json(&m.out.join("ingest_report.json"), &corpus.report)?;
    if let Some(c) = cmp {
        write_json(&m.out.join("comparison.json"), &c)?;
    }
    Ok(())
}

fn windows(m: &RunManifest, siblings: &SiblingSet) -> Result<(), CliError> {
    if m.inputs.windows.len() < 2 {
        return Err(CliError::Config("window-stability needs at least two windows".into()));
    }
    let spec = core_spec(m)?;
    let mut runs = Vec::new();
    let mut metrics = Vec::new();
    for (i, w) in m.inputs.windows.iter().enumerate() {
        let corpus = load_corpus(w, siblings)?;
        let core = build_core(spec, &corpus.graph, siblings)?;
        let out = run_on(&corpus, &core, m)?;
        write_classifications(&m.out.join(format!("window_{i}_classifications.csv")), &out.classifications)?;
        metrics.push(out.metrics(None));
        runs.push(out.classifications);
    }
    let cells: Vec<(Vec<String>, &RunMetrics)> =
        metrics.iter().enumerate().map(|(i, r)| (vec![i.to_string()], r)).collect();
    write_metrics(&m.out.join("windows.csv"), &["window"], &cells)?;
    let rows: Vec<Vec<String>> = window_stability(&runs)
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            vec![
                i.to_string(),
                (i + 1).to_string(),
                s.map(|s| format!("{s:.6}")).unwrap_or_default(),
            ]
        })
        .collect();
    write_csv_rows(&m.out.join("window_stability.csv"), &["window_a", "window_b", "stability"], &rows)
}

/// Builds a core from the path files and writes it; returns the stats line.
pub fn cmd_build_core(
    paths: &crate::manifest::PathFiles,
    siblings: Option<&Path>,
    spec: &CoreSpec,
    out: &Path,
) -> Result<String, CliError> {
    let siblings = load_siblings(siblings)?;
    let corpus = load_corpus(paths, &siblings)?;
    let core = build_core(spec, &corpus.graph, &siblings)?;
    with_file(out, |w| core.write(w))?;
    Ok(format!(
        "vertices {} edges {} density {:.4}",
        core.vertex_count(),
        core.edge_count(),
        core.density()
    ))
}

/// Writes `truth.txt`, `paths.txt`, `core.txt` and `generate.json` into `out`.
pub fn cmd_generate(config: &GenConfig, out: &Path, bgp: bool) -> Result<String, CliError> {
    let truth = generate(config).map_err(|e| CliError::Config(e.to_string()))?;
    let mut paths = sample_paths(&truth, config);
    ensure_dir(out)?;
    write_json(&out.join("generate.json"), config)?;
    with_file(&out.join("truth.txt"), |w| truth.write_labels(w))?;
    with_file(&out.join("core.txt"), |w| truth.tier1_core().write(w))?;
    if bgp {
        for p in &mut paths {
            p.agent.clear();
        }
        with_file(&out.join("paths.txt"), |w| {
            use std::io::Write;
            for p in &paths {
                let hops: Vec<String> = p.hops.iter().map(|h| h.to_string()).collect();
                writeln!(w, "{}", hops.join(" "))?;
            }
            Ok(())
        })?;
    } else {
        with_file(&out.join("paths.txt"), |w| write_trace_paths(&paths, w))?;
    }
    Ok(format!(
        "ases {} edges {} paths {}",
        truth.graph.vertex_count(),
        truth.graph.edge_count(),
        paths.len()
    ))
}
