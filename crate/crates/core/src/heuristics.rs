//! Fallback labelling for edges the deterministic stage leaves open.
//!
//! Gap inference runs first: a periphery path whose only unlabelled edge sits
//! between a climbing and a descending edge must peak on that edge, so it is
//! labelled peer-to-peer. Edges whose votes conflict below the threshold are
//! then tie-broken by endpoint degree ratio or k-shell index. Edges with no
//! commercial votes, including valley-only edges, stay unclassified.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core_builder::KShellIndex;
use crate::graph::{AsGraph, Asn, Classification, EdgeKey, Method, RelType};
use crate::ingest::AsPath;

#[derive(Debug, Error, PartialEq)]
pub enum HeuristicError {
    #[error("k-shell tie-breaking requires a k-shell index")]
    MissingKshell,
    #[error("degree band [{0}, {1}] must satisfy 0 < low <= 1 <= high")]
    Band(f64, f64),
    #[error("AS{0} has no degree")]
    UnknownVertex(Asn),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tiebreak {
    #[default]
    Degree,
    Kshell,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeuristicConfig {
    pub degree_ratio_low: f64,
    pub degree_ratio_high: f64,
    pub tiebreak: Tiebreak,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            degree_ratio_low: 0.8,
            degree_ratio_high: 1.2,
            tiebreak: Tiebreak::Degree,
        }
    }
}

impl HeuristicConfig {
    pub fn validate(&self) -> Result<(), HeuristicError> {
        let (lo, hi) = (self.degree_ratio_low, self.degree_ratio_high);
        if !(lo > 0.0 && lo <= 1.0 && hi >= 1.0) {
            return Err(HeuristicError::Band(lo, hi));
        }
        Ok(())
    }
}

/// Edge label seen from one traversal direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Up,
    Down,
    Flat,
    Open,
}

fn step(labels: &BTreeMap<EdgeKey, RelType>, a: Asn, b: Asn) -> Step {
    let Ok(k) = EdgeKey::new(a, b) else {
        return Step::Open;
    };
    match labels.get(&k).map(|r| r.canonical(&k, a)) {
        Some(RelType::C2P) => Step::Up,
        Some(RelType::P2C) => Step::Down,
        Some(RelType::P2P) | Some(RelType::S2S) => Step::Flat,
        _ => Step::Open,
    }
}

/// Edges that should become P2P by gap inference. Reads `classifications`
/// only, so the result does not depend on path order.
pub fn infer_gap_p2p(periphery: &[&AsPath], classifications: &[Classification]) -> Vec<EdgeKey> {
    let labels: BTreeMap<EdgeKey, RelType> = classifications
        .iter()
        .map(|c| (c.edge, c.rel))
        .collect();
    let mut out = std::collections::BTreeSet::new();
    for p in periphery {
        let steps: Vec<Step> = p.edges().map(|(a, b)| step(&labels, a, b)).collect();
        let open: Vec<usize> = steps
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Step::Open)
            .map(|(i, _)| i)
            .collect();
        let [gap] = open.as_slice() else { continue };
        let gap = *gap;
        if gap == 0 || gap + 1 == steps.len() {
            continue;
        }
        let climbs = steps[..gap].iter().all(|s| *s == Step::Up);
        let descends = steps[gap + 1..].iter().all(|s| *s == Step::Down);
        if climbs && descends {
            let (a, b) = (p.hops[gap], p.hops[gap + 1]);
            out.insert(EdgeKey::new(a, b).expect("no self loops"));
        }
    }
    out.into_iter().collect()
}

/// Degree-ratio or k-shell tie-break. The returned label is relative to the
/// key's low->high orientation.
pub fn tiebreak(
    edge: &EdgeKey,
    graph: &AsGraph,
    kshell: Option<&KShellIndex>,
    config: &HeuristicConfig,
) -> Result<(RelType, Method), HeuristicError> {
    match config.tiebreak {
        Tiebreak::Degree => {
            let dl = graph.degree(edge.low);
            let dh = graph.degree(edge.high);
            if dl == 0 {
                return Err(HeuristicError::UnknownVertex(edge.low));
            }
            if dh == 0 {
                return Err(HeuristicError::UnknownVertex(edge.high));
            }
            // Ratio in either orientation, so the label does not depend on
            // which endpoint has the lower ASN.
            let in_band = |r: f64| r >= config.degree_ratio_low && r <= config.degree_ratio_high;
            let r = dl as f64 / dh as f64;
            let rel = if in_band(r) || in_band(1.0 / r) {
                RelType::P2P
            } else if dl > dh {
                RelType::P2C
            } else {
                RelType::C2P
            };
            Ok((rel, Method::DegreeTiebreak))
        }
        Tiebreak::Kshell => {
            let idx = kshell.ok_or(HeuristicError::MissingKshell)?;
            let sl = idx
                .shell(edge.low)
                .ok_or(HeuristicError::UnknownVertex(edge.low))?;
            let sh = idx
                .shell(edge.high)
                .ok_or(HeuristicError::UnknownVertex(edge.high))?;
            let rel = match sl.cmp(&sh) {
                std::cmp::Ordering::Equal => RelType::P2P,
                std::cmp::Ordering::Greater => RelType::P2C,
                std::cmp::Ordering::Less => RelType::C2P,
            };
            Ok((rel, Method::KshellTiebreak))
        }
    }
}

/// Applies gap inference, then tie-breaking to conflicting-vote edges.
pub fn apply_heuristics(
    classifications: &mut [Classification],
    periphery: &[&AsPath],
    graph: &AsGraph,
    kshell: Option<&KShellIndex>,
    config: &HeuristicConfig,
) -> Result<(), HeuristicError> {
    config.validate()?;
    if config.tiebreak == Tiebreak::Kshell && kshell.is_none() {
        return Err(HeuristicError::MissingKshell);
    }
    let gaps: std::collections::BTreeSet<EdgeKey> =
        infer_gap_p2p(periphery, classifications).into_iter().collect();
    for c in classifications.iter_mut() {
        if c.rel.is_classified() {
            continue;
        }
        if gaps.contains(&c.edge) {
            c.rel = RelType::P2P;
            c.method = Method::GapP2p;
        } else if c.shares.is_some() {
            let (rel, method) = tiebreak(&c.edge, graph, kshell, config)?;
            c.rel = rel;
            c.method = method;
        }
    }
    Ok(())
}
