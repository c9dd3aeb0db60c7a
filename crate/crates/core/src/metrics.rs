//! Scoring of a run: coverage, agreement with a reference labelling, vote
//! share distribution and stability between runs.
//!
//! Every percentage names its denominator. Edge percentages are over
//! `|E_G|`; path percentages are over total path weight.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{AsGraph, Asn, Classification, EdgeKey, Method, RelType};
use crate::ingest::SiblingSet;

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("reference line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Reference labels, relative to low->high.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReferenceSet {
    pub labels: BTreeMap<EdgeKey, RelType>,
}

impl ReferenceSet {
    /// Reads `A|B|code` lines: -1 A is provider of B, 0 peers, 1 siblings.
    /// `#` comments and blank lines are skipped.
    pub fn read<R: BufRead>(reader: R) -> Result<Self, MetricsError> {
        let mut labels = BTreeMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let err = |message: String| MetricsError::Parse { line: lineno, message };
            let fields: Vec<&str> = t.split('|').map(str::trim).collect();
            if fields.len() < 3 {
                return Err(err(format!("expected A|B|code, got {t:?}")));
            }
            let a: Asn = fields[0].parse().map_err(|e| err(format!("{e}")))?;
            let b: Asn = fields[1].parse().map_err(|e| err(format!("{e}")))?;
            let rel_ab = match fields[2] {
                "-1" => RelType::P2C,
                "0" => RelType::P2P,
                "1" => RelType::S2S,
                other => return Err(err(format!("unknown relationship code {other:?}"))),
            };
            let key = EdgeKey::new(a, b).map_err(|e| err(e.to_string()))?;
            let rel = rel_ab.canonical(&key, a);
            if let Some(prev) = labels.insert(key, rel) {
                if prev != rel {
                    return Err(err(format!("conflicting duplicate record for {key}")));
                }
            }
        }
        Ok(ReferenceSet { labels })
    }

    /// Rewrites ASNs to sibling representatives. Records collapsing to a
    /// single AS and conflicting collapsed records are dropped and counted.
    pub fn merge_siblings(&self, siblings: &SiblingSet) -> (ReferenceSet, MergeStats) {
        let mut stats = MergeStats::default();
        let mut labels: BTreeMap<EdgeKey, RelType> = BTreeMap::new();
        let mut conflicted = std::collections::BTreeSet::new();
        for (k, r) in &self.labels {
            let (a, b) = (siblings.representative(k.low), siblings.representative(k.high));
            let Ok(key) = EdgeKey::new(a, b) else {
                stats.collapsed += 1;
                if *r != RelType::S2S {
                    stats.collapsed_non_sibling += 1;
                }
                continue;
            };
            let rel = r.canonical(&key, a);
            match labels.get(&key) {
                Some(prev) if *prev != rel => {
                    conflicted.insert(key);
                }
                _ => {
                    labels.insert(key, rel);
                }
            }
        }
        stats.conflicts = conflicted.len();
        for k in conflicted {
            labels.remove(&k);
        }
        (ReferenceSet { labels }, stats)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeStats {
    /// Records whose endpoints became the same AS.
    pub collapsed: usize,
    /// Of those, records the reference did not label as siblings.
    pub collapsed_non_sibling: usize,
    /// Edges dropped because merged records disagreed.
    pub conflicts: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// `|E_G|`.
    pub edges: usize,
    /// Edges labelled by both sides with the same relationship.
    pub matches: usize,
    /// Edges labelled (non-S2S, non-unclassified) by both sides.
    pub both_classified: usize,
    /// Reference records naming an AS outside the graph.
    pub skipped_unknown_asn: usize,
    /// Reference records between graph ASes with no graph edge.
    pub missing_edge: usize,
    /// Graph edges the reference calls siblings; they should have been merged.
    pub s2s_inconsistent: usize,
}

impl Comparison {
    /// matches / |E_G|.
    pub fn overall(&self) -> f64 {
        if self.edges == 0 {
            0.0
        } else {
            self.matches as f64 / self.edges as f64
        }
    }

    /// matches / edges classified by both; absent when nothing overlaps.
    pub fn both(&self) -> Option<f64> {
        (self.both_classified > 0).then(|| self.matches as f64 / self.both_classified as f64)
    }
}

/// `classifications` must cover exactly the edges of `graph`.
pub fn compare(classifications: &[Classification], reference: &ReferenceSet, graph: &AsGraph) -> Comparison {
    let mut cmp = Comparison {
        edges: classifications.len(),
        ..Default::default()
    };
    for k in reference.labels.keys() {
        if !graph.contains_vertex(k.low) || !graph.contains_vertex(k.high) {
            cmp.skipped_unknown_asn += 1;
        } else if !graph.contains_edge(k.low, k.high) {
            cmp.missing_edge += 1;
        }
    }
    for c in classifications {
        let Some(theirs) = reference.labels.get(&c.edge) else { continue };
        if *theirs == RelType::S2S {
            cmp.s2s_inconsistent += 1;
            continue;
        }
        if !c.rel.is_classified() || c.rel == RelType::S2S {
            continue;
        }
        cmp.both_classified += 1;
        if c.rel == *theirs {
            cmp.matches += 1;
        }
    }
    cmp
}

/// Fraction of edges classified in both runs whose labels agree; absent when
/// no edge is classified in both.
pub fn stability(a: &[Classification], b: &[Classification]) -> Option<f64> {
    stability_where(a, b, |_| true)
}

/// [`stability`] restricted to edges where both classifications pass `keep`.
pub fn stability_where<F>(a: &[Classification], b: &[Classification], keep: F) -> Option<f64>
where
    F: Fn(&Classification) -> bool,
{
    let left: BTreeMap<EdgeKey, &Classification> = a
        .iter()
        .filter(|c| c.rel.is_classified() && keep(c))
        .map(|c| (c.edge, c))
        .collect();
    let mut shared = 0usize;
    let mut agree = 0usize;
    for c in b.iter().filter(|c| c.rel.is_classified() && keep(c)) {
        if let Some(l) = left.get(&c.edge) {
            shared += 1;
            if l.rel == c.rel {
                agree += 1;
            }
        }
    }
    (shared > 0).then(|| agree as f64 / shared as f64)
}

/// Counts of edges by p2c share (high end is customer), over edges with at
/// least one non-invalid vote. Share 1.0 falls in the last bin.
pub fn vote_share_histogram(classifications: &[Classification]) -> [u64; HISTOGRAM_BINS] {
    let mut bins = [0u64; HISTOGRAM_BINS];
    for s in classifications.iter().filter_map(|c| c.shares) {
        let i = ((s.p2c * HISTOGRAM_BINS as f64).floor() as usize).min(HISTOGRAM_BINS - 1);
        bins[i] += 1;
    }
    bins
}

/// Path counts behind the path percentages, by weight.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathCounts {
    pub total: u64,
    pub through_core: u64,
    pub periphery: u64,
    pub core_hop_limit: u64,
    /// Through-core paths cut short by a valley.
    pub valley: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub edges: usize,
    pub paths: PathCounts,
    pub core_vertices: usize,
    pub core_edges: usize,
    pub pct_classified: f64,
    pub pct_deterministic: f64,
    pub pct_heuristic: f64,
    pub pct_unclassified: f64,
    pub pct_match_reference_overall: Option<f64>,
    pub pct_match_reference_both: Option<f64>,
    pub pct_invalid_paths: f64,
    pub pct_through_core: f64,
    pub phase2_rounds: usize,
    pub vote_share_histogram: [u64; HISTOGRAM_BINS],
    pub method_counts: BTreeMap<Method, usize>,
}

fn pct(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        100.0 * num / den
    }
}

impl RunMetrics {
    pub fn new(
        classifications: &[Classification],
        paths: PathCounts,
        core_size: (usize, usize),
        phase2_rounds: usize,
        comparison: Option<&Comparison>,
    ) -> Self {
        let mut method_counts: BTreeMap<Method, usize> = Method::ALL.iter().map(|m| (*m, 0)).collect();
        for c in classifications {
            *method_counts.get_mut(&c.method).expect("all methods present") += 1;
        }
        let n = classifications.len() as f64;
        let count = |f: fn(Method) -> bool| classifications.iter().filter(|c| f(c.method)).count() as f64;
        let classified = classifications.iter().filter(|c| c.rel.is_classified()).count() as f64;
        RunMetrics {
            edges: classifications.len(),
            paths,
            core_vertices: core_size.0,
            core_edges: core_size.1,
            pct_classified: pct(classified, n),
            pct_deterministic: pct(count(Method::is_deterministic), n),
            pct_heuristic: pct(count(Method::is_heuristic), n),
            pct_unclassified: pct(n - classified, n),
            pct_match_reference_overall: comparison.map(|c| 100.0 * c.overall()),
            pct_match_reference_both: comparison.and_then(|c| c.both()).map(|f| 100.0 * f),
            pct_invalid_paths: pct(
                (paths.core_hop_limit + paths.valley) as f64,
                paths.total as f64,
            ),
            pct_through_core: pct(paths.through_core as f64, paths.total as f64),
            phase2_rounds,
            vote_share_histogram: vote_share_histogram(classifications),
            method_counts,
        }
    }

    /// Fixed column order for [`RunMetrics::csv_row`].
    pub fn csv_header() -> Vec<String> {
        let mut h: Vec<String> = [
            "edges",
            "paths",
            "core_vertices",
            "core_edges",
            "pct_classified",
            "pct_deterministic",
            "pct_heuristic",
            "pct_unclassified",
            "pct_match_reference_overall",
            "pct_match_reference_both",
            "pct_invalid_paths",
            "pct_through_core",
            "phase2_rounds",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        h.extend(Method::ALL.iter().map(|m| format!("n_{}", m.as_str().replace('-', "_"))));
        h
    }

    pub fn csv_row(&self) -> Vec<String> {
        let f = |x: f64| format!("{x:.4}");
        let opt = |x: Option<f64>| x.map(f).unwrap_or_default();
        let mut r = vec![
            self.edges.to_string(),
            self.paths.total.to_string(),
            self.core_vertices.to_string(),
            self.core_edges.to_string(),
            f(self.pct_classified),
            f(self.pct_deterministic),
            f(self.pct_heuristic),
            f(self.pct_unclassified),
            opt(self.pct_match_reference_overall),
            opt(self.pct_match_reference_both),
            f(self.pct_invalid_paths),
            f(self.pct_through_core),
            self.phase2_rounds.to_string(),
        ];
        r.extend(Method::ALL.iter().map(|m| self.method_counts[m].to_string()));
        r
    }

    /// `(bin_lo, bin_hi, count)` rows.
    pub fn histogram_rows(&self) -> Vec<(f64, f64, u64)> {
        self.vote_share_histogram
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let w = 1.0 / HISTOGRAM_BINS as f64;
                (i as f64 * w, (i + 1) as f64 * w, *n)
            })
            .collect()
    }
}
