//! AS-level graph model: ASNs, canonical undirected edge keys, per-edge vote
//! tallies and final classification records.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("self-loop edge on AS{0}")]
    SelfLoop(Asn),
    #[error("unknown edge {0}-{1}")]
    UnknownEdge(Asn, Asn),
    #[error("invalid AS number {0:?}")]
    InvalidAsn(String),
}

/// An AS number. After sibling merging this is the group's representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Asn(pub u32);

impl fmt::Display for Asn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Asn {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let s = s
            .strip_prefix("AS")
            .or_else(|| s.strip_prefix("as"))
            .unwrap_or(s);
        s.parse::<u32>()
            .map(Asn)
            .map_err(|_| GraphError::InvalidAsn(s.to_string()))
    }
}

impl From<u32> for Asn {
    fn from(v: u32) -> Self {
        Asn(v)
    }
}

/// Canonical undirected edge, `low < high`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeKey {
    pub low: Asn,
    pub high: Asn,
}

impl EdgeKey {
    pub fn new(a: Asn, b: Asn) -> Result<Self, GraphError> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Ok(EdgeKey { low: a, high: b }),
            std::cmp::Ordering::Greater => Ok(EdgeKey { low: b, high: a }),
            std::cmp::Ordering::Equal => Err(GraphError::SelfLoop(a)),
        }
    }

    /// True when `a` is the low endpoint, i.e. traversal `a -> b` follows the
    /// canonical orientation.
    pub fn is_forward(&self, a: Asn) -> bool {
        self.low == a
    }

    pub fn other(&self, v: Asn) -> Asn {
        if v == self.low {
            self.high
        } else {
            self.low
        }
    }
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.low, self.high)
    }
}

/// Convenience constructor for callers that already know `a != b`.
pub fn edge_key(a: Asn, b: Asn) -> Result<EdgeKey, GraphError> {
    EdgeKey::new(a, b)
}

/// A vote cast for one traversed edge, relative to the traversal direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Vote {
    C2P,
    P2C,
    P2P,
    Invalid,
}

impl Vote {
    pub fn flip(self) -> Vote {
        match self {
            Vote::C2P => Vote::P2C,
            Vote::P2C => Vote::C2P,
            v => v,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteTally {
    /// Votes that `low` is a customer of `high`.
    pub low_customer: u64,
    /// Votes that `high` is a customer of `low`.
    pub high_customer: u64,
    pub p2p: u64,
    pub invalid: u64,
}

impl VoteTally {
    /// Sum of commercial (non-invalid) votes.
    pub fn classified_total(&self) -> u64 {
        self.low_customer + self.high_customer + self.p2p
    }

    pub fn total(&self) -> u64 {
        self.classified_total() + self.invalid
    }

    pub fn merge(&mut self, other: &VoteTally) {
        self.low_customer += other.low_customer;
        self.high_customer += other.high_customer;
        self.p2p += other.p2p;
        self.invalid += other.invalid;
    }

    /// Adds a vote already expressed in canonical low->high orientation.
    pub fn add_canonical(&mut self, vote: Vote, weight: u64) {
        match vote {
            Vote::C2P => self.low_customer += weight,
            Vote::P2C => self.high_customer += weight,
            Vote::P2P => self.p2p += weight,
            Vote::Invalid => self.invalid += weight,
        }
    }

    /// Vote shares over commercial votes, relative to low->high. `None` when
    /// there are no commercial votes.
    pub fn shares(&self) -> Option<Shares> {
        let total = self.classified_total();
        if total == 0 {
            return None;
        }
        let t = total as f64;
        Some(Shares {
            c2p: self.low_customer as f64 / t,
            p2c: self.high_customer as f64 / t,
            p2p: self.p2p as f64 / t,
        })
    }

    /// Count of votes for `rel` relative to low->high.
    pub fn count_for(&self, rel: RelType) -> u64 {
        match rel {
            RelType::C2P => self.low_customer,
            RelType::P2C => self.high_customer,
            RelType::P2P => self.p2p,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Shares {
    pub c2p: f64,
    pub p2c: f64,
    pub p2p: f64,
}

impl Shares {
    pub fn get(&self, rel: RelType) -> f64 {
        match rel {
            RelType::C2P => self.c2p,
            RelType::P2C => self.p2c,
            RelType::P2P => self.p2p,
            _ => 0.0,
        }
    }
}

/// Commercial relationship relative to an ordered vertex pair `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RelType {
    /// `a` is a customer of `b`.
    C2P,
    /// `a` is a provider of `b`.
    P2C,
    P2P,
    S2S,
    Unclassified,
}

impl RelType {
    pub fn reversed(self) -> RelType {
        match self {
            RelType::C2P => RelType::P2C,
            RelType::P2C => RelType::C2P,
            r => r,
        }
    }

    /// Expresses a relationship given for `(a, b)` relative to `key`'s
    /// low->high orientation.
    pub fn canonical(self, key: &EdgeKey, a: Asn) -> RelType {
        if key.is_forward(a) {
            self
        } else {
            self.reversed()
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RelType::C2P => "c2p",
            RelType::P2C => "p2c",
            RelType::P2P => "p2p",
            RelType::S2S => "s2s",
            RelType::Unclassified => "unclassified",
        }
    }

    pub fn is_classified(self) -> bool {
        self != RelType::Unclassified
    }
}

impl fmt::Display for RelType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "c2p" => Ok(RelType::C2P),
            "p2c" => Ok(RelType::P2C),
            "p2p" => Ok(RelType::P2P),
            "s2s" => Ok(RelType::S2S),
            "unclassified" => Ok(RelType::Unclassified),
            other => Err(format!("unknown relationship {other:?}")),
        }
    }
}

/// How a classification was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    DeterministicP1,
    DeterministicP2,
    GapP2p,
    DegreeTiebreak,
    KshellTiebreak,
    SiblingDb,
    CorePreassigned,
    Unclassified,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::DeterministicP1,
        Method::DeterministicP2,
        Method::GapP2p,
        Method::DegreeTiebreak,
        Method::KshellTiebreak,
        Method::SiblingDb,
        Method::CorePreassigned,
        Method::Unclassified,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::DeterministicP1 => "deterministic-p1",
            Method::DeterministicP2 => "deterministic-p2",
            Method::GapP2p => "gap-p2p",
            Method::DegreeTiebreak => "degree-tiebreak",
            Method::KshellTiebreak => "kshell-tiebreak",
            Method::SiblingDb => "sibling-db",
            Method::CorePreassigned => "core-preassigned",
            Method::Unclassified => "unclassified",
        }
    }

    /// Vote-derived or core-given labels, as opposed to heuristic guesses.
    pub fn is_deterministic(self) -> bool {
        matches!(
            self,
            Method::DeterministicP1 | Method::DeterministicP2 | Method::CorePreassigned
        )
    }

    pub fn is_heuristic(self) -> bool {
        matches!(
            self,
            Method::GapP2p | Method::DegreeTiebreak | Method::KshellTiebreak
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Final label for one edge. `rel` and `shares` are relative to low->high.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub edge: EdgeKey,
    pub rel: RelType,
    pub method: Method,
    pub shares: Option<Shares>,
    pub votes_invalid: u64,
}

impl Classification {
    /// Edge that only ever received invalid (valley) votes.
    pub fn is_valley_only(&self) -> bool {
        self.shares.is_none() && self.votes_invalid > 0
    }
}

/// Votes accumulated off-graph, e.g. by a worker thread, to be merged with
/// [`AsGraph::apply_batch`]. Merging is commutative.
#[derive(Debug, Clone, Default)]
pub struct VoteBatch {
    votes: BTreeMap<EdgeKey, VoteTally>,
    cast: u64,
}

impl VoteBatch {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a vote for traversal `a -> b`.
    pub fn vote(&mut self, a: Asn, b: Asn, vote: Vote, weight: u64) -> Result<(), GraphError> {
        let key = EdgeKey::new(a, b)?;
        let canon = if key.is_forward(a) { vote } else { vote.flip() };
        self.votes.entry(key).or_default().add_canonical(canon, weight);
        self.cast += weight;
        Ok(())
    }

    pub fn merge(mut self, other: VoteBatch) -> VoteBatch {
        for (k, t) in other.votes {
            self.votes.entry(k).or_default().merge(&t);
        }
        self.cast += other.cast;
        self
    }

    pub fn is_empty(&self) -> bool {
        self.cast == 0
    }

    /// Total weighted votes in the batch.
    pub fn weight(&self) -> u64 {
        self.cast
    }

    pub fn edges(&self) -> impl Iterator<Item = &EdgeKey> {
        self.votes.keys()
    }
}

/// Undirected AS graph with one vote tally per edge.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AsGraph {
    adjacency: BTreeMap<Asn, BTreeSet<Asn>>,
    edges: BTreeMap<EdgeKey, VoteTally>,
}

impl AsGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, v: Asn) {
        self.adjacency.entry(v).or_default();
    }

    /// Inserts the edge with an empty tally if absent. Returns whether it was new.
    pub fn add_edge(&mut self, a: Asn, b: Asn) -> Result<bool, GraphError> {
        let key = EdgeKey::new(a, b)?;
        self.adjacency.entry(a).or_default().insert(b);
        self.adjacency.entry(b).or_default().insert(a);
        if self.edges.contains_key(&key) {
            return Ok(false);
        }
        self.edges.insert(key, VoteTally::default());
        Ok(true)
    }

    /// Materializes every consecutive hop pair of `hops` as an edge.
    pub fn add_path_edges(&mut self, hops: &[Asn]) -> Result<(), GraphError> {
        if let [only] = hops {
            self.add_vertex(*only);
        }
        for w in hops.windows(2) {
            self.add_edge(w[0], w[1])?;
        }
        Ok(())
    }

    /// Adds `weight` votes for traversal `a -> b`, mapped onto the canonical tally.
    pub fn oriented_vote(&mut self, a: Asn, b: Asn, vote: Vote, weight: u64) -> Result<(), GraphError> {
        let key = EdgeKey::new(a, b)?;
        let tally = self
            .edges
            .get_mut(&key)
            .ok_or(GraphError::UnknownEdge(a, b))?;
        let canon = if key.is_forward(a) { vote } else { vote.flip() };
        tally.add_canonical(canon, weight);
        Ok(())
    }

    /// Merges a batch; fails without partial application if any edge is unknown.
    pub fn apply_batch(&mut self, batch: &VoteBatch) -> Result<(), GraphError> {
        if let Some(k) = batch.votes.keys().find(|k| !self.edges.contains_key(k)) {
            return Err(GraphError::UnknownEdge(k.low, k.high));
        }
        for (k, t) in &batch.votes {
            if let Some(tally) = self.edges.get_mut(k) {
                tally.merge(t);
            }
        }
        Ok(())
    }

    pub fn contains_vertex(&self, v: Asn) -> bool {
        self.adjacency.contains_key(&v)
    }

    pub fn contains_edge(&self, a: Asn, b: Asn) -> bool {
        EdgeKey::new(a, b)
            .map(|k| self.edges.contains_key(&k))
            .unwrap_or(false)
    }

    pub fn tally(&self, key: &EdgeKey) -> Option<&VoteTally> {
        self.edges.get(key)
    }

    pub fn degree(&self, v: Asn) -> usize {
        self.adjacency.get(&v).map_or(0, |n| n.len())
    }

    pub fn neighbors(&self, v: Asn) -> impl Iterator<Item = Asn> + '_ {
        self.adjacency.get(&v).into_iter().flatten().copied()
    }

    pub fn vertices(&self) -> impl Iterator<Item = Asn> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&EdgeKey, &VoteTally)> {
        self.edges.iter()
    }

    pub fn edge_keys(&self) -> impl Iterator<Item = EdgeKey> + '_ {
        self.edges.keys().copied()
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    /// Zeroes every tally, keeping the topology.
    pub fn clear_votes(&mut self) {
        for t in self.edges.values_mut() {
            *t = VoteTally::default();
        }
    }

    /// Builds a graph from explicit edges (no votes).
    pub fn from_edges<I>(edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (Asn, Asn)>,
    {
        let mut g = AsGraph::new();
        for (a, b) in edges {
            g.add_edge(a, b)?;
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn a(v: u32) -> Asn {
        Asn(v)
    }

    #[test]
    fn edge_key_orders_endpoints() {
        assert_eq!(
            edge_key(a(7018), a(701)).unwrap(),
            EdgeKey { low: a(701), high: a(7018) }
        );
        assert_eq!(edge_key(a(1), a(2)).unwrap(), EdgeKey { low: a(1), high: a(2) });
        assert_eq!(edge_key(a(5), a(5)), Err(GraphError::SelfLoop(a(5))));
    }

    #[test]
    fn add_path_builds_vertices_and_edges() {
        let mut g = AsGraph::new();
        g.add_path_edges(&[a(1), a(2), a(3)]).unwrap();
        assert_eq!(g.vertices().collect::<Vec<_>>(), vec![a(1), a(2), a(3)]);
        assert_eq!(g.edge_count(), 2);
        assert!(g.contains_edge(a(2), a(1)));

        let before = g.clone();
        g.add_path_edges(&[a(2), a(1)]).unwrap();
        assert_eq!(g, before);
        assert_eq!(g.degree(a(2)), 2);
    }

    #[test]
    fn vote_orientation() {
        let mut g = AsGraph::from_edges([(a(3), a(7))]).unwrap();
        let key = edge_key(a(3), a(7)).unwrap();

        g.oriented_vote(a(7), a(3), Vote::C2P, 1).unwrap();
        assert_eq!(g.tally(&key).unwrap().high_customer, 1);

        g.oriented_vote(a(3), a(7), Vote::P2P, 2).unwrap();
        assert_eq!(g.tally(&key).unwrap().p2p, 2);

        g.clear_votes();
        g.oriented_vote(a(3), a(7), Vote::P2C, 1).unwrap();
        g.oriented_vote(a(7), a(3), Vote::C2P, 1).unwrap();
        let t = g.tally(&key).unwrap();
        assert_eq!(t.high_customer, 2);
        assert_eq!(t.low_customer, 0);
    }

    #[test]
    fn vote_on_missing_edge() {
        let mut g = AsGraph::from_edges([(a(1), a(2))]).unwrap();
        assert_eq!(
            g.oriented_vote(a(1), a(3), Vote::C2P, 1),
            Err(GraphError::UnknownEdge(a(1), a(3)))
        );
    }

    #[test]
    fn rel_reversal() {
        assert_eq!(RelType::C2P.reversed(), RelType::P2C);
        assert_eq!(RelType::P2C.reversed(), RelType::C2P);
        for r in [RelType::P2P, RelType::S2S, RelType::Unclassified] {
            assert_eq!(r.reversed(), r);
        }
    }

    #[test]
    fn batch_merge_matches_direct_votes() {
        let mut direct = AsGraph::from_edges([(a(1), a(2)), (a(2), a(3))]).unwrap();
        let mut batched = direct.clone();
        direct.oriented_vote(a(1), a(2), Vote::C2P, 3).unwrap();
        direct.oriented_vote(a(3), a(2), Vote::P2P, 1).unwrap();

        let mut b1 = VoteBatch::new();
        b1.vote(a(1), a(2), Vote::C2P, 3).unwrap();
        let mut b2 = VoteBatch::new();
        b2.vote(a(3), a(2), Vote::P2P, 1).unwrap();
        batched.apply_batch(&b2.merge(b1)).unwrap();
        assert_eq!(direct, batched);
    }

    fn vote_strategy() -> impl Strategy<Value = Vote> {
        prop_oneof![
            Just(Vote::C2P),
            Just(Vote::P2C),
            Just(Vote::P2P),
            Just(Vote::Invalid)
        ]
    }

    proptest! {
        #[test]
        fn orientation_round_trip(x in 0u32..50, y in 0u32..50, v in vote_strategy(), w in 1u64..10) {
            prop_assume!(x != y);
            let mut g1 = AsGraph::from_edges([(a(x), a(y))]).unwrap();
            let mut g2 = g1.clone();
            g1.oriented_vote(a(x), a(y), v, w).unwrap();
            g2.oriented_vote(a(y), a(x), v.flip(), w).unwrap();
            prop_assert_eq!(g1, g2);
        }

        #[test]
        fn vote_conservation(calls in prop::collection::vec((0u32..6, 0u32..6, vote_strategy(), 1u64..5), 0..40)) {
            let mut g = AsGraph::new();
            for i in 0..6u32 {
                for j in (i + 1)..6 {
                    g.add_edge(a(i), a(j)).unwrap();
                }
            }
            let mut expected = 0;
            for (x, y, v, w) in calls {
                if x == y { continue; }
                g.oriented_vote(a(x), a(y), v, w).unwrap();
                expected += w;
            }
            let total: u64 = g.edges().map(|(_, t)| t.total()).sum();
            prop_assert_eq!(total, expected);
        }

        #[test]
        fn construction_is_order_independent(
            paths in prop::collection::vec(prop::collection::vec(0u32..8, 2..6), 1..8),
            seed in any::<u64>()
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let clean: Vec<Vec<Asn>> = paths
                .into_iter()
                .map(|p| {
                    let mut out: Vec<Asn> = Vec::new();
                    for h in p {
                        if out.last() != Some(&a(h)) { out.push(a(h)); }
                    }
                    out
                })
                .collect();
            let mut shuffled = clean.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let mut g1 = AsGraph::new();
            let mut g2 = AsGraph::new();
            for p in &clean { g1.add_path_edges(p).unwrap(); }
            for p in &shuffled { g2.add_path_edges(p).unwrap(); }
            prop_assert_eq!(g1, g2);
        }
    }
}
