//! Path corpus and sibling list ingestion.
//!
//! Path files hold one AS path per line as space-separated decimal ASNs.
//! Trace corpora prefix each line with `agent_id|`. Any line may carry a
//! trailing `weight=k` token (default 1). `#` starts a comment line.
//!
//! Ingestion maps every hop to its sibling representative, collapses
//! consecutive duplicates (prepending and merged siblings), trims loops,
//! and removes trace edges observed by fewer than two distinct agents unless
//! a BGP path corroborates them.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{AsGraph, Asn, EdgeKey};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse_err(line: usize, message: impl Into<String>) -> IngestError {
    IngestError::Parse {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Source {
    Bgp,
    Trace,
}

/// A path line as read from disk, before normalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPath {
    pub hops: Vec<Asn>,
    pub source: Source,
    pub agent: String,
    pub weight: u64,
}

/// A normalized path: at least two hops, no consecutive duplicates, no loops.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AsPath {
    pub hops: Vec<Asn>,
    pub source: Source,
    /// Observing agent; empty for BGP paths.
    pub agent: String,
    pub weight: u64,
}

impl AsPath {
    pub fn edges(&self) -> impl Iterator<Item = (Asn, Asn)> + '_ {
        self.hops.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn edge_count(&self) -> usize {
        self.hops.len().saturating_sub(1)
    }
}

/// Union-find over ASNs whose representative is the smallest member.
#[derive(Debug, Clone, Default)]
pub struct SiblingSet {
    parent: HashMap<Asn, Asn>,
    pairs: Vec<(Asn, Asn)>,
}

impl SiblingSet {
    pub fn new() -> Self {
        Self::default()
    }

    fn find(&self, x: Asn) -> Asn {
        let mut cur = x;
        while let Some(&p) = self.parent.get(&cur) {
            if p == cur {
                break;
            }
            cur = p;
        }
        cur
    }

    pub fn representative(&self, x: Asn) -> Asn {
        self.find(x)
    }

    /// Merges the groups of `a` and `b`.
    pub fn union(&mut self, a: Asn, b: Asn) {
        let ra = self.find(a);
        let rb = self.find(b);
        self.parent.entry(a).or_insert(a);
        self.parent.entry(b).or_insert(b);
        if ra == rb {
            return;
        }
        let (root, child) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent.insert(root, root);
        self.parent.insert(child, root);
        // Flatten so lookups stay short.
        let members: Vec<Asn> = self.parent.keys().copied().collect();
        for m in members {
            let r = self.find(m);
            self.parent.insert(m, r);
        }
    }

    /// Adds a sibling pair and remembers it for S2S output.
    pub fn add_pair(&mut self, a: Asn, b: Asn) {
        self.union(a, b);
        self.pairs.push((a, b));
    }

    /// The pairs as given, for emitting sibling-db classifications.
    pub fn pairs(&self) -> &[(Asn, Asn)] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Reads `ASN ASN` sibling pairs.
pub fn load_sibling_pairs<R: BufRead>(reader: R) -> Result<SiblingSet, IngestError> {
    let mut set = SiblingSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == '|' || c == ',')
            .filter(|s| !s.is_empty())
            .collect();
        if fields.len() < 2 {
            return Err(parse_err(lineno, "expected two ASNs"));
        }
        let a: Asn = fields[0]
            .parse()
            .map_err(|e| parse_err(lineno, format!("{e}")))?;
        let b: Asn = fields[1]
            .parse()
            .map_err(|e| parse_err(lineno, format!("{e}")))?;
        if a == b {
            return Err(parse_err(lineno, format!("AS{a} listed as its own sibling")));
        }
        set.add_pair(a, b);
    }
    Ok(set)
}

/// Parses one path line. Returns `Ok(None)` for blank and comment lines.
pub fn parse_path_line(line: &str, source: Source, lineno: usize) -> Result<Option<RawPath>, IngestError> {
    let line = line.trim();
    if line.is_empty() || line.starts_with('#') {
        return Ok(None);
    }
    let (agent, body) = match source {
        Source::Trace => {
            let (agent, rest) = line
                .split_once('|')
                .ok_or_else(|| parse_err(lineno, "trace line missing `agent|` prefix"))?;
            let agent = agent.trim();
            if agent.is_empty() {
                return Err(parse_err(lineno, "empty agent identifier"));
            }
            (agent.to_string(), rest)
        }
        Source::Bgp => {
            if line.contains('|') {
                return Err(parse_err(lineno, "unexpected `|` in BGP path line"));
            }
            (String::new(), line)
        }
    };
    let mut hops = Vec::new();
    let mut weight = 1u64;
    for tok in body.split_whitespace() {
        if let Some(w) = tok.strip_prefix("weight=") {
            weight = w
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad weight {w:?}")))?;
            if weight == 0 {
                return Err(parse_err(lineno, "weight must be at least 1"));
            }
            continue;
        }
        let asn: Asn = tok
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad ASN {tok:?}")))?;
        hops.push(asn);
    }
    if hops.is_empty() {
        return Err(parse_err(lineno, "no hops"));
    }
    Ok(Some(RawPath {
        hops,
        source,
        agent,
        weight,
    }))
}

pub fn read_paths<R: BufRead>(reader: R, source: Source) -> Result<Vec<RawPath>, IngestError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        if let Some(p) = parse_path_line(&line?, source, idx + 1)? {
            out.push(p);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    /// Fewer than two hops after merging and collapsing.
    Short,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalized {
    pub hops: Vec<Asn>,
    /// The path contained a loop and was cut before the repeated hop.
    pub loop_trimmed: bool,
}

/// Sibling merge, duplicate collapse and loop trimming.
pub fn normalize_path(raw_hops: &[Asn], siblings: &SiblingSet) -> Result<Normalized, DropReason> {
    let mut hops: Vec<Asn> = Vec::with_capacity(raw_hops.len());
    for &h in raw_hops {
        let r = siblings.representative(h);
        if hops.last() != Some(&r) {
            hops.push(r);
        }
    }
    let mut seen = BTreeSet::new();
    let mut loop_trimmed = false;
    if let Some(cut) = hops.iter().position(|h| !seen.insert(*h)) {
        hops.truncate(cut);
        loop_trimmed = true;
    }
    if hops.len() < 2 {
        return Err(DropReason::Short);
    }
    Ok(Normalized { hops, loop_trimmed })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub edges_filtered_single_agent: usize,
    pub paths_split: usize,
}

/// Removes trace-only edges seen by fewer than two distinct agents and splits
/// the trace paths that used them. BGP paths are returned untouched.
pub fn filter_single_agent_edges(paths: Vec<AsPath>) -> (Vec<AsPath>, FilterReport) {
    let mut bgp_edges: BTreeSet<EdgeKey> = BTreeSet::new();
    let mut agents: BTreeMap<EdgeKey, BTreeSet<&str>> = BTreeMap::new();
    for p in &paths {
        for (a, b) in p.edges() {
            let Ok(k) = EdgeKey::new(a, b) else { continue };
            match p.source {
                Source::Bgp => {
                    bgp_edges.insert(k);
                }
                Source::Trace => {
                    agents.entry(k).or_default().insert(p.agent.as_str());
                }
            }
        }
    }
    let removed: BTreeSet<EdgeKey> = agents
        .iter()
        .filter(|(k, ag)| ag.len() < 2 && !bgp_edges.contains(k))
        .map(|(k, _)| *k)
        .collect();
    let mut report = FilterReport {
        edges_filtered_single_agent: removed.len(),
        paths_split: 0,
    };
    if removed.is_empty() {
        return (paths, report);
    }

    let mut out = Vec::with_capacity(paths.len());
    for p in paths {
        if p.source == Source::Bgp {
            out.push(p);
            continue;
        }
        let hits = p
            .edges()
            .any(|(a, b)| EdgeKey::new(a, b).is_ok_and(|k| removed.contains(&k)));
        if !hits {
            out.push(p);
            continue;
        }
        report.paths_split += 1;
        let mut segment = vec![p.hops[0]];
        for (a, b) in p.edges() {
            let k = EdgeKey::new(a, b).expect("normalized path has no self loops");
            if removed.contains(&k) {
                if segment.len() >= 2 {
                    out.push(AsPath {
                        hops: std::mem::take(&mut segment),
                        ..p.clone()
                    });
                }
                segment = vec![b];
            } else {
                segment.push(b);
            }
        }
        if segment.len() >= 2 {
            out.push(AsPath { hops: segment, ..p });
        }
    }
    (out, report)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub paths_read: usize,
    pub paths_dropped_short: usize,
    /// Paths cut before the first hop that closes a loop.
    pub paths_trimmed_loop: usize,
    pub edges_filtered_single_agent: usize,
    pub paths_split: usize,
    /// Paths handed to inference (after splitting).
    pub paths_kept: usize,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub paths: Vec<AsPath>,
    pub report: IngestReport,
}

/// Full ingestion: normalize every raw path, then apply the two-agent filter.
pub fn ingest(raw: Vec<RawPath>, siblings: &SiblingSet) -> Ingested {
    let mut report = IngestReport {
        paths_read: raw.len(),
        ..Default::default()
    };
    let mut paths = Vec::with_capacity(raw.len());
    for r in raw {
        match normalize_path(&r.hops, siblings) {
            Ok(n) => {
                if n.loop_trimmed {
                    report.paths_trimmed_loop += 1;
                }
                paths.push(AsPath {
                    hops: n.hops,
                    source: r.source,
                    agent: r.agent,
                    weight: r.weight,
                });
            }
            Err(DropReason::Short) => report.paths_dropped_short += 1,
        }
    }
    let (paths, fr) = filter_single_agent_edges(paths);
    report.edges_filtered_single_agent = fr.edges_filtered_single_agent;
    report.paths_split = fr.paths_split;
    report.paths_kept = paths.len();
    Ingested { paths, report }
}

/// Merges paths with identical hop sequences, summing weights. Output is
/// sorted, so downstream results do not depend on input order.
pub fn aggregate_paths(paths: &[AsPath]) -> Vec<AsPath> {
    let mut merged: BTreeMap<&[Asn], (u64, Source)> = BTreeMap::new();
    for p in paths {
        let e = merged.entry(p.hops.as_slice()).or_insert((0, Source::Trace));
        e.0 += p.weight;
        if p.source == Source::Bgp {
            e.1 = Source::Bgp;
        }
    }
    merged
        .into_iter()
        .map(|(hops, (weight, source))| AsPath {
            hops: hops.to_vec(),
            source,
            agent: String::new(),
            weight,
        })
        .collect()
}

/// The undirected graph G spanned by the path set.
pub fn build_graph(paths: &[AsPath]) -> AsGraph {
    let mut g = AsGraph::new();
    for p in paths {
        g.add_path_edges(&p.hops)
            .expect("normalized paths contain no self loops");
    }
    g
}
