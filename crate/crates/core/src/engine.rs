//! Deterministic core-relative inference.
//!
//! Phase 1 walks every path that touches the core: edges before the core
//! vote customer-to-provider, core edges vote peer-to-peer unless the core
//! already labels them, edges after leaving the core vote provider-to-customer.
//! An edge that climbs back into the core after the descent has started is a
//! valley; it gets one invalid vote and the rest of the path is ignored.
//!
//! Phase 2 repeatedly scans the remaining (periphery) paths. Unvoted edges
//! before a customer-to-provider anchor are voted c2p, unvoted edges after a
//! provider-to-customer anchor are voted p2c. Each round reads the tallies as
//! they stood at the end of the previous round, so a round's result does not
//! depend on path order. Rounds repeat until one casts no vote.
//!
//! [`finalize`] turns tallies into labels: a type wins when its share of the
//! commercial (non-invalid) votes reaches the threshold.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core_builder::CoreGraph;
use crate::graph::{AsGraph, Asn, Classification, EdgeKey, Method, RelType, Vote, VoteBatch, VoteTally};
use crate::ingest::AsPath;

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("threshold {0} outside (0.5, 1.0]")]
    Threshold(f64),
    #[error("max core hops must be at least 1")]
    CoreHops,
}

/// What counts as an already classified anchor edge in phase 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnchorMode {
    /// The anchor's winning share must reach the vote threshold.
    #[default]
    Threshold,
    /// The anchor's type must hold a strict plurality of votes.
    Plurality,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    pub threshold: f64,
    /// Longest run of consecutive core vertices a valid path may contain.
    pub max_core_hops: usize,
    pub anchor: AnchorMode,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            threshold: 0.8,
            max_core_hops: 3,
            anchor: AnchorMode::Threshold,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.threshold > 0.5 && self.threshold <= 1.0) {
            return Err(EngineError::Threshold(self.threshold));
        }
        if self.max_core_hops == 0 {
            return Err(EngineError::CoreHops);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InvalidReason {
    CoreHopLimit,
}

/// Indices into the path slice, split by relation to the core.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathPartition {
    pub through_core: Vec<usize>,
    pub periphery: Vec<usize>,
    pub invalid: Vec<(usize, InvalidReason)>,
}

fn longest_core_run(hops: &[Asn], core: &CoreGraph) -> usize {
    let mut best = 0;
    let mut run = 0;
    for h in hops {
        if core.contains_vertex(*h) {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

pub fn partition_paths(paths: &[AsPath], core: &CoreGraph, config: &InferenceConfig) -> PathPartition {
    let mut part = PathPartition::default();
    for (i, p) in paths.iter().enumerate() {
        let run = longest_core_run(&p.hops, core);
        if run == 0 {
            part.periphery.push(i);
        } else if run > config.max_core_hops {
            part.invalid.push((i, InvalidReason::CoreHopLimit));
        } else {
            part.through_core.push(i);
        }
    }
    part
}

/// Phase-1 votes of a single path, in traversal order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathVotes {
    pub votes: Vec<(Asn, Asn, Vote)>,
    /// The path climbed back towards the core after descending.
    pub valley: bool,
}

pub fn phase1_path_votes(hops: &[Asn], core: &CoreGraph) -> PathVotes {
    let mut out = PathVotes::default();
    let mut uphill = true;
    let mut downhill = false;
    let mut in_core = false;
    // A p2p or p2c core edge has been crossed.
    let mut peaked = false;

    for w in hops.windows(2) {
        let (a, b) = (w[0], w[1]);
        if core.contains_edge(a, b) {
            uphill = false;
            in_core = true;
            match core.preassigned_rel(a, b) {
                None => {
                    peaked = true;
                    out.votes.push((a, b, Vote::P2P));
                }
                Some(RelType::C2P) if peaked => {
                    out.votes.push((a, b, Vote::Invalid));
                    out.valley = true;
                    return out;
                }
                Some(RelType::C2P) => {}
                Some(_) => peaked = true,
            }
            continue;
        }
        if core.contains_vertex(a) && !core.contains_vertex(b) {
            uphill = false;
            in_core = false;
            downhill = true;
        } else if downhill && core.contains_vertex(b) {
            out.votes.push((a, b, Vote::Invalid));
            out.valley = true;
            return out;
        }
        let vote = if uphill {
            Vote::C2P
        } else if in_core {
            Vote::P2P
        } else {
            Vote::P2C
        };
        out.votes.push((a, b, vote));
    }
    out
}

#[derive(Debug, Clone, Default)]
pub struct Phase1Outcome {
    /// Edges that received at least one commercial phase-1 vote.
    pub voted_edges: BTreeSet<EdgeKey>,
    /// Through-core paths that hit a valley.
    pub valley_paths: Vec<usize>,
}

fn batch_from(paths: &[AsPath], idx: usize, votes: &[(Asn, Asn, Vote)]) -> VoteBatch {
    let mut batch = VoteBatch::new();
    for &(a, b, v) in votes {
        batch
            .vote(a, b, v, paths[idx].weight)
            .expect("path edges are never self loops");
    }
    batch
}

pub fn phase1(graph: &mut AsGraph, paths: &[AsPath], through_core: &[usize], core: &CoreGraph) -> Phase1Outcome {
    let per_path: Vec<(usize, PathVotes)> = through_core
        .par_iter()
        .map(|&i| (i, phase1_path_votes(&paths[i].hops, core)))
        .collect();

    let mut outcome = Phase1Outcome::default();
    for (i, pv) in &per_path {
        if pv.valley {
            outcome.valley_paths.push(*i);
        }
        for &(a, b, v) in &pv.votes {
            if v != Vote::Invalid {
                outcome
                    .voted_edges
                    .insert(EdgeKey::new(a, b).expect("no self loops"));
            }
        }
    }
    let batch = per_path
        .par_iter()
        .map(|(i, pv)| batch_from(paths, *i, &pv.votes))
        .reduce(VoteBatch::new, VoteBatch::merge);
    graph
        .apply_batch(&batch)
        .expect("paths were used to build the graph");
    outcome
}

/// Direction of a classified edge relative to a traversal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Anchor {
    Up,
    Down,
}

/// Label of a tally (low->high) under the given anchoring rule.
pub fn anchor_label(tally: &VoteTally, config: &InferenceConfig) -> Option<RelType> {
    match config.anchor {
        AnchorMode::Threshold => winning_type(tally, config.threshold),
        AnchorMode::Plurality => {
            let counts = [
                (RelType::C2P, tally.low_customer),
                (RelType::P2C, tally.high_customer),
                (RelType::P2P, tally.p2p),
            ];
            counts
                .iter()
                .find(|(_, c)| *c > 0 && counts.iter().filter(|(_, o)| o >= c).count() == 1)
                .map(|(r, _)| *r)
        }
    }
}

fn anchor_for(graph: &AsGraph, a: Asn, b: Asn, config: &InferenceConfig) -> Option<Anchor> {
    let key = EdgeKey::new(a, b).ok()?;
    let rel = anchor_label(graph.tally(&key)?, config)?.canonical(&key, a);
    match rel {
        RelType::C2P => Some(Anchor::Up),
        RelType::P2C => Some(Anchor::Down),
        _ => None,
    }
}

fn unvoted(graph: &AsGraph, a: Asn, b: Asn) -> bool {
    EdgeKey::new(a, b)
        .ok()
        .and_then(|k| graph.tally(&k))
        .is_some_and(|t| t.classified_total() == 0)
}

/// Phase-2 votes of one periphery path against a frozen view of the tallies.
pub fn phase2_path_votes(hops: &[Asn], graph: &AsGraph, config: &InferenceConfig) -> Vec<(Asn, Asn, Vote)> {
    let mut votes = Vec::new();
    let mut suspect_up: Vec<(Asn, Asn)> = Vec::new();
    let mut suspect_down: Vec<(Asn, Asn)> = Vec::new();
    let mut passed_down = false;

    for w in hops.windows(2) {
        let (a, b) = (w[0], w[1]);
        match anchor_for(graph, a, b, config) {
            Some(Anchor::Up) if !suspect_up.is_empty() => {
                votes.extend(suspect_up.drain(..).map(|(x, y)| (x, y, Vote::C2P)));
            }
            Some(Anchor::Down) => {
                suspect_up.clear();
                passed_down = true;
            }
            _ => {}
        }
        if unvoted(graph, a, b) {
            if passed_down {
                suspect_down.push((a, b));
            } else {
                suspect_up.push((a, b));
            }
        }
    }
    votes.extend(suspect_down.into_iter().map(|(x, y)| (x, y, Vote::P2C)));
    votes
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Phase2Outcome {
    /// Rounds executed, including the final round that cast nothing.
    pub rounds: usize,
    pub votes_cast: u64,
}

pub fn phase2(graph: &mut AsGraph, paths: &[AsPath], periphery: &[usize], config: &InferenceConfig) -> Phase2Outcome {
    let mut outcome = Phase2Outcome::default();
    loop {
        outcome.rounds += 1;
        let snapshot: &AsGraph = graph;
        let batch = periphery
            .par_iter()
            .map(|&i| batch_from(paths, i, &phase2_path_votes(&paths[i].hops, snapshot, config)))
            .reduce(VoteBatch::new, VoteBatch::merge);
        if batch.is_empty() {
            return outcome;
        }
        outcome.votes_cast += batch.weight();
        graph
            .apply_batch(&batch)
            .expect("paths were used to build the graph");
    }
}

/// The type whose share reaches `threshold`, relative to low->high.
pub fn winning_type(tally: &VoteTally, threshold: f64) -> Option<RelType> {
    let shares = tally.shares()?;
    [RelType::C2P, RelType::P2C, RelType::P2P]
        .into_iter()
        .find(|r| shares.get(*r) >= threshold - 1e-12)
}

/// Per-edge labels from the accumulated votes. Explicit core preassignments
/// win; core edges nobody voted on keep their default peer label.
pub fn finalize(
    graph: &AsGraph,
    config: &InferenceConfig,
    core: &CoreGraph,
    phase1_edges: &BTreeSet<EdgeKey>,
) -> Vec<Classification> {
    graph
        .edges()
        .map(|(key, tally)| {
            let shares = tally.shares();
            let (rel, method) = if let Some(r) = core.preassigned.get(key) {
                (*r, Method::CorePreassigned)
            } else if let Some(r) = winning_type(tally, config.threshold) {
                let m = if phase1_edges.contains(key) {
                    Method::DeterministicP1
                } else {
                    Method::DeterministicP2
                };
                (r, m)
            } else if core.edges.contains(key) && shares.is_none() {
                (RelType::P2P, Method::CorePreassigned)
            } else {
                (RelType::Unclassified, Method::Unclassified)
            };
            Classification {
                edge: *key,
                rel,
                method,
                shares,
                votes_invalid: tally.invalid,
            }
        })
        .collect()
}

/// Everything the deterministic stage produced.
#[derive(Debug, Clone)]
pub struct DeterministicRun {
    pub partition: PathPartition,
    pub phase1: Phase1Outcome,
    pub phase2: Phase2Outcome,
    pub classifications: Vec<Classification>,
}

/// Partition, both phases and finalize. Votes accumulate on `graph`.
pub fn run_deterministic(
    graph: &mut AsGraph,
    paths: &[AsPath],
    core: &CoreGraph,
    config: &InferenceConfig,
) -> Result<DeterministicRun, EngineError> {
    config.validate()?;
    let partition = partition_paths(paths, core, config);
    let p1 = phase1(graph, paths, &partition.through_core, core);
    let p2 = phase2(graph, paths, &partition.periphery, config);
    let classifications = finalize(graph, config, core, &p1.voted_edges);
    Ok(DeterministicRun {
        partition,
        phase1: p1,
        phase2: p2,
        classifications,
    })
}
