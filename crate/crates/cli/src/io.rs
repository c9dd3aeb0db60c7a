//! Input loading and output writing for the commands.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use asrel::core_builder::{
    external_core, greedy_max_clique, grow_core, k_max_core, parse_peer_edges, CoreGraph,
};
use asrel::graph::{AsGraph, Classification};
use asrel::ingest::{
    aggregate_paths, build_graph, ingest, load_sibling_pairs, read_paths, AsPath, IngestError,
    IngestReport, RawPath, SiblingSet, Source,
};
use asrel::metrics::{ReferenceSet, RunMetrics};
use serde::Serialize;

use crate::error::CliError;
use crate::manifest::{CoreSpec, PathFiles};

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn located(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}:{e}", path.display()))
}

pub fn load_siblings(path: Option<&Path>) -> Result<SiblingSet, CliError> {
    match path {
        None => Ok(SiblingSet::new()),
        Some(p) => load_sibling_pairs(open(p)?).map_err(|e| located(p, e)),
    }
}

pub fn read_raw_paths(files: &PathFiles) -> Result<Vec<RawPath>, CliError> {
    let mut raw = Vec::new();
    let sources = files
        .bgp
        .iter()
        .map(|p| (p, Source::Bgp))
        .chain(files.trace.iter().map(|p| (p, Source::Trace)));
    for (p, source) in sources {
        let parsed = read_paths(open(p)?, source).map_err(|e| match e {
            IngestError::Parse { line, message } => {
                CliError::Input(format!("{}:{line}: {message}", p.display()))
            }
            IngestError::Io(e) => CliError::io(p, e),
        })?;
        raw.extend(parsed);
    }
    Ok(raw)
}

/// Ingested, aggregated paths and the graph they span.
pub struct Corpus {
    pub paths: Vec<AsPath>,
    pub graph: AsGraph,
    pub report: IngestReport,
}

pub fn load_corpus(files: &PathFiles, siblings: &SiblingSet) -> Result<Corpus, CliError> {
    if files.is_empty() {
        return Err(CliError::Config("no path files given".into()));
    }
    let raw = read_raw_paths(files)?;
    if raw.is_empty() {
        return Err(CliError::Input("no paths in the input files".into()));
    }
    let ing = ingest(raw, siblings);
    let paths = aggregate_paths(&ing.paths);
    if paths.is_empty() {
        return Err(CliError::Input("no paths left after ingestion".into()));
    }
    let graph = build_graph(&paths);
    Ok(Corpus {
        paths,
        graph,
        report: ing.report,
    })
}

/// Builds or loads the core, in the sibling-merged ASN space.
pub fn build_core(spec: &CoreSpec, graph: &AsGraph, siblings: &SiblingSet) -> Result<CoreGraph, CliError> {
    let core = match spec {
        CoreSpec::File { path } => {
            let c = CoreGraph::read(open(path)?).map_err(|e| located(path, e))?;
            c.map_asns(|a| siblings.representative(a))
        }
        CoreSpec::Clique => greedy_max_clique(graph)?,
        CoreSpec::Kcore => k_max_core(graph)?,
        CoreSpec::External { peer_edges } => {
            let edges = parse_peer_edges(open(peer_edges)?).map_err(|e| located(peer_edges, e))?;
            let merged: Vec<_> = edges
                .into_iter()
                .map(|(a, b)| (siblings.representative(a), siblings.representative(b)))
                .filter(|(a, b)| a != b)
                .collect();
            external_core(&merged, graph)?
        }
        CoreSpec::Grow { size, strategy } => grow_core(graph, *strategy, *size)?,
    };
    if core.vertex_count() == 0 {
        return Err(CliError::Core("core is empty".into()));
    }
    Ok(core)
}

/// Loads the reference and rewrites it into the sibling-merged ASN space.
pub fn load_reference(path: &Path, siblings: &SiblingSet) -> Result<ReferenceSet, CliError> {
    let r = ReferenceSet::read(open(path)?).map_err(|e| located(path, e))?;
    let (merged, stats) = r.merge_siblings(siblings);
    if stats.collapsed_non_sibling > 0 || stats.conflicts > 0 {
        eprintln!(
            "warning: {}: {} non-sibling records collapsed by sibling merging, {} merged edges dropped as conflicting",
            path.display(),
            stats.collapsed_non_sibling,
            stats.conflicts
        );
    }
    Ok(merged)
}

pub const CLASSIFICATION_HEADER: [&str; 8] = [
    "low",
    "high",
    "rel",
    "method",
    "share_c2p",
    "share_p2c",
    "share_p2p",
    "votes_invalid",
];

pub fn write_classifications(path: &Path, rows: &[Classification]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let err = |e: csv::Error| CliError::io(path, e);
    w.write_record(CLASSIFICATION_HEADER).map_err(err)?;
    for c in rows {
        let share = |f: fn(&asrel::graph::Shares) -> f64| c.shares.as_ref().map(|s| format!("{:.6}", f(s))).unwrap_or_default();
        w.write_record([
            c.edge.low.to_string(),
            c.edge.high.to_string(),
            c.rel.as_str().to_string(),
            c.method.as_str().to_string(),
            share(|s| s.c2p),
            share(|s| s.p2c),
            share(|s| s.p2p),
            c.votes_invalid.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// One metrics row per cell, with `keys` columns in front.
pub fn write_metrics(path: &Path, key_names: &[&str], rows: &[(Vec<String>, &RunMetrics)]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let err = |e: csv::Error| CliError::io(path, e);
    let mut header: Vec<String> = key_names.iter().map(|s| s.to_string()).collect();
    header.extend(RunMetrics::csv_header());
    w.write_record(&header).map_err(err)?;
    for (keys, m) in rows {
        let mut rec = keys.clone();
        rec.extend(m.csv_row());
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_histogram(path: &Path, m: &RunMetrics) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let err = |e: csv::Error| CliError::io(path, e);
    w.write_record(["bin_lo", "bin_hi", "count"]).map_err(err)?;
    for (lo, hi, n) in m.histogram_rows() {
        w.write_record([format!("{lo:.2}"), format!("{hi:.2}"), n.to_string()])
            .map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_csv_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let err = |e: csv::Error| CliError::io(path, e);
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::io(path, e))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

pub fn with_file<F>(path: &Path, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let mut w = create(path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}
