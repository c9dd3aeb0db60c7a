//! Synthetic tiered AS topologies with known relationships, and valley-free
//! path sampling over them.
//!
//! Tier 1 is a full peering clique. Every lower-tier AS buys transit from one
//! or more ASes in higher tiers, so the customer-provider digraph is acyclic
//! by construction. Lower tiers also carry sparse peering, thinning out with
//! depth.
//!
//! A sampled path climbs from a random source, optionally crosses one peer
//! edge, then descends. Noise can add a valley, a routing loop or AS
//! prepending to individual paths.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core_builder::CoreGraph;
use crate::graph::{AsGraph, Asn, EdgeKey, RelType};
use crate::ingest::{RawPath, Source};
use crate::sub_seed;

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("invalid generator parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub loop_prob: f64,
    pub valley_prob: f64,
    pub prepend_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub tier_sizes: Vec<usize>,
    /// Peering probability; scaled by 1/(tier-1) below the top tier.
    pub peer_prob: f64,
    /// Mean number of providers per non-top AS.
    pub multihome: f64,
    pub paths: usize,
    pub noise: NoiseConfig,
    pub seed: u64,
    /// Size of the synthetic measurement agent pool.
    pub agents: usize,
    /// Probability of taking one more step up (resp. down) while sampling.
    pub climb_prob: f64,
    pub descend_prob: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            tier_sizes: vec![10, 50, 300, 1000],
            peer_prob: 0.3,
            multihome: 2.0,
            paths: 50_000,
            noise: NoiseConfig::default(),
            seed: 1,
            agents: 10,
            climb_prob: 0.9,
            descend_prob: 0.9,
        }
    }
}

fn check_prob(name: &str, p: f64) -> Result<(), GenError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(GenError::Parameter(format!("{name} = {p} not in [0, 1]")));
    }
    Ok(())
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        match self.tier_sizes.first() {
            None => return Err(GenError::Parameter("no tiers".into())),
            Some(&n) if n < 4 => {
                return Err(GenError::Parameter(format!("top tier has {n} ASes, need at least 4")))
            }
            _ => {}
        }
        check_prob("peer_prob", self.peer_prob)?;
        check_prob("loop_prob", self.noise.loop_prob)?;
        check_prob("valley_prob", self.noise.valley_prob)?;
        check_prob("prepend_prob", self.noise.prepend_prob)?;
        check_prob("climb_prob", self.climb_prob)?;
        check_prob("descend_prob", self.descend_prob)?;
        if self.multihome.is_nan() || self.multihome < 1.0 {
            return Err(GenError::Parameter(format!("multihome {} < 1", self.multihome)));
        }
        if self.agents == 0 {
            return Err(GenError::Parameter("agent pool is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct GroundTruth {
    pub graph: AsGraph,
    /// True relationship, relative to low->high.
    pub labels: BTreeMap<EdgeKey, RelType>,
    /// Tier per AS, 1 = top.
    pub tiers: BTreeMap<Asn, usize>,
    providers: BTreeMap<Asn, Vec<Asn>>,
    customers: BTreeMap<Asn, Vec<Asn>>,
    peers: BTreeMap<Asn, Vec<Asn>>,
}

impl GroundTruth {
    pub fn providers(&self, v: Asn) -> &[Asn] {
        self.providers.get(&v).map_or(&[], Vec::as_slice)
    }

    pub fn customers(&self, v: Asn) -> &[Asn] {
        self.customers.get(&v).map_or(&[], Vec::as_slice)
    }

    pub fn peers(&self, v: Asn) -> &[Asn] {
        self.peers.get(&v).map_or(&[], Vec::as_slice)
    }

    /// Relationship for traversal `a -> b`.
    pub fn rel(&self, a: Asn, b: Asn) -> Option<RelType> {
        let k = EdgeKey::new(a, b).ok()?;
        self.labels.get(&k).map(|r| r.canonical(&k, a))
    }

    pub fn tier1(&self) -> Vec<Asn> {
        self.tiers
            .iter()
            .filter(|(_, &t)| t == 1)
            .map(|(v, _)| *v)
            .collect()
    }

    /// The top-tier clique as a core.
    pub fn tier1_core(&self) -> CoreGraph {
        CoreGraph::induced(&self.graph, self.tier1())
    }

    fn link(&mut self, a: Asn, b: Asn, rel_ab: RelType) {
        let k = EdgeKey::new(a, b).expect("generator never links an AS to itself");
        self.graph.add_edge(a, b).expect("distinct endpoints");
        self.labels.insert(k, rel_ab.canonical(&k, a));
        match rel_ab {
            RelType::C2P => {
                self.providers.entry(a).or_default().push(b);
                self.customers.entry(b).or_default().push(a);
            }
            RelType::P2P => {
                self.peers.entry(a).or_default().push(b);
                self.peers.entry(b).or_default().push(a);
            }
            _ => unreachable!("generator only emits c2p and p2p links"),
        }
    }

    /// Writes `A|B|code` lines: -1 provider|customer, 0 peer|peer.
    pub fn write_labels<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (k, r) in &self.labels {
            match r {
                RelType::C2P => writeln!(w, "{}|{}|-1", k.high, k.low)?,
                RelType::P2C => writeln!(w, "{}|{}|-1", k.low, k.high)?,
                RelType::S2S => writeln!(w, "{}|{}|1", k.low, k.high)?,
                _ => writeln!(w, "{}|{}|0", k.low, k.high)?,
            }
        }
        Ok(())
    }
}

pub fn generate(config: &GenConfig) -> Result<GroundTruth, GenError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, "topology"));
    let mut truth = GroundTruth::default();

    let mut tiers: Vec<Vec<Asn>> = Vec::new();
    let mut next = 1u32;
    for (t, &n) in config.tier_sizes.iter().enumerate() {
        let members: Vec<Asn> = (0..n)
            .map(|_| {
                let a = Asn(next);
                next += 1;
                a
            })
            .collect();
        for &a in &members {
            truth.tiers.insert(a, t + 1);
            truth.graph.add_vertex(a);
        }
        tiers.push(members);
    }

    let top = tiers[0].clone();
    for (i, &a) in top.iter().enumerate() {
        for &b in &top[i + 1..] {
            truth.link(a, b, RelType::P2P);
        }
    }

    let whole = config.multihome.floor() as usize;
    let frac = config.multihome - whole as f64;
    for t in 1..tiers.len() {
        let above: Vec<Asn> = tiers[..t].iter().flatten().copied().collect();
        let Some(nearest) = tiers[..t].iter().rev().find(|tier| !tier.is_empty()).cloned() else {
            continue;
        };
        for &c in &tiers[t] {
            let mut k = whole + usize::from(rng.gen_bool(frac));
            k = k.clamp(1, above.len());
            let mut chosen: BTreeSet<Asn> = BTreeSet::new();
            chosen.insert(*nearest.choose(&mut rng).expect("nearest tier is non-empty"));
            let mut attempts = 0;
            while chosen.len() < k && attempts < 64 * k {
                attempts += 1;
                let pool = if rng.gen_bool(0.8) && nearest.len() > chosen.len() {
                    &nearest
                } else {
                    &above
                };
                chosen.insert(*pool.choose(&mut rng).expect("non-empty"));
            }
            for p in chosen {
                truth.link(c, p, RelType::C2P);
            }
        }

        let p = config.peer_prob / t as f64;
        let members = &tiers[t];
        if members.len() < 2 || p == 0.0 {
            continue;
        }
        for &a in members {
            if !rng.gen_bool(p) {
                continue;
            }
            let b = *members.choose(&mut rng).expect("non-empty");
            if b != a && !truth.graph.contains_edge(a, b) {
                truth.link(a, b, RelType::P2P);
            }
        }
    }
    for list in truth
        .providers
        .values_mut()
        .chain(truth.customers.values_mut())
        .chain(truth.peers.values_mut())
    {
        list.sort();
    }
    Ok(truth)
}

/// True iff the path matches `c2p* p2p? p2c*` under `rel`. Unknown edges and
/// self loops fail.
pub fn is_valley_free<F>(hops: &[Asn], rel: F) -> bool
where
    F: Fn(Asn, Asn) -> Option<RelType>,
{
    #[derive(PartialEq)]
    enum State {
        Up,
        Peaked,
        Down,
    }
    let mut state = State::Up;
    for w in hops.windows(2) {
        let Some(r) = rel(w[0], w[1]) else {
            return false;
        };
        state = match (state, r) {
            (State::Up, RelType::C2P) => State::Up,
            (State::Up, RelType::P2P) => State::Peaked,
            (_, RelType::P2C) => State::Down,
            _ => return false,
        };
    }
    true
}

fn clean_path(truth: &GroundTruth, all: &[Asn], config: &GenConfig, rng: &mut ChaCha8Rng) -> Vec<Asn> {
    loop {
        let src = *all.choose(rng).expect("topology has vertices");
        let mut path = vec![src];
        let mut seen: BTreeSet<Asn> = BTreeSet::from([src]);
        let mut cur = src;

        while !truth.providers(cur).is_empty() && rng.gen_bool(config.climb_prob) {
            cur = *truth.providers(cur).choose(rng).expect("non-empty");
            path.push(cur);
            seen.insert(cur);
        }

        let cross = if truth.tiers[&cur] == 1 { 0.8 } else { 0.5 };
        let peers: Vec<Asn> = truth
            .peers(cur)
            .iter()
            .copied()
            .filter(|p| !seen.contains(p))
            .collect();
        if !peers.is_empty() && rng.gen_bool(cross) {
            cur = *peers.choose(rng).expect("non-empty");
            path.push(cur);
            seen.insert(cur);
        }

        while rng.gen_bool(config.descend_prob) {
            let options: Vec<Asn> = truth
                .customers(cur)
                .iter()
                .copied()
                .filter(|c| !seen.contains(c))
                .collect();
            let Some(&next) = options.choose(rng) else { break };
            cur = next;
            path.push(cur);
            seen.insert(cur);
        }
        if path.len() >= 2 {
            return path;
        }
    }
}

/// Turns a valley-free path into one that is not, or `None` if no local
/// extension exists.
fn inject_valley(truth: &GroundTruth, path: &[Asn], rng: &mut ChaCha8Rng) -> Option<Vec<Asn>> {
    let on_path: BTreeSet<Asn> = path.iter().copied().collect();
    let fresh = |v: &Asn| !on_path.contains(v);
    let last = *path.last()?;
    let first = path[0];
    let n = path.len();

    let mut options: Vec<Vec<Asn>> = Vec::new();
    // ... p2c/p2p, then c2p/p2p off the end.
    if matches!(truth.rel(path[n - 2], last), Some(RelType::P2C | RelType::P2P)) {
        for &z in truth.providers(last).iter().chain(truth.peers(last)).filter(|z| fresh(z)) {
            let mut p = path.to_vec();
            p.push(z);
            options.push(p);
        }
    }
    // p2c/p2p into the start, then the path's own climb or peer step.
    if matches!(truth.rel(first, path[1]), Some(RelType::C2P | RelType::P2P)) {
        for &z in truth.providers(first).iter().chain(truth.peers(first)).filter(|z| fresh(z)) {
            let mut p = vec![z];
            p.extend_from_slice(path);
            options.push(p);
        }
    }
    // Down to a customer and back up to one of its other providers.
    for &c in truth.customers(last).iter().filter(|c| fresh(c)) {
        for &z in truth.providers(c).iter().filter(|z| fresh(z) && **z != last) {
            let mut p = path.to_vec();
            p.push(c);
            p.push(z);
            options.push(p);
        }
    }
    options.choose(rng).cloned()
}

/// Samples `config.paths` paths with the stream derived from `config.seed`.
pub fn sample_paths(truth: &GroundTruth, config: &GenConfig) -> Vec<RawPath> {
    sample_paths_seeded(truth, config, sub_seed(config.seed, "paths"))
}

/// Samples paths with an explicit seed, e.g. for independent measurement windows.
pub fn sample_paths_seeded(truth: &GroundTruth, config: &GenConfig, seed: u64) -> Vec<RawPath> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all: Vec<Asn> = truth.graph.vertices().collect();
    let mut out = Vec::with_capacity(config.paths);
    for _ in 0..config.paths {
        let mut hops = clean_path(truth, &all, config, &mut rng);

        if config.noise.valley_prob > 0.0 && rng.gen_bool(config.noise.valley_prob) {
            let mut injected = None;
            for _ in 0..1000 {
                injected = inject_valley(truth, &hops, &mut rng);
                if injected.is_some() {
                    break;
                }
                hops = clean_path(truth, &all, config, &mut rng);
            }
            if let Some(v) = injected {
                hops = v;
            }
        }

        if config.noise.loop_prob > 0.0 && hops.len() >= 2 && rng.gen_bool(config.noise.loop_prob) {
            // Revisit an earlier hop, never the immediately preceding one.
            let at = rng.gen_range(2..=hops.len());
            let back = hops[rng.gen_range(0..at - 1)];
            hops.insert(at, back);
        }

        if config.noise.prepend_prob > 0.0 && rng.gen_bool(config.noise.prepend_prob) {
            let at = rng.gen_range(0..hops.len());
            let times = rng.gen_range(1..=3);
            for _ in 0..times {
                hops.insert(at, hops[at]);
            }
        }

        out.push(RawPath {
            hops,
            source: Source::Trace,
            agent: format!("a{}", rng.gen_range(0..config.agents)),
            weight: 1,
        });
    }
    out
}

/// Writes paths in the trace file format.
pub fn write_trace_paths<W: Write>(paths: &[RawPath], mut w: W) -> std::io::Result<()> {
    for p in paths {
        let hops: Vec<String> = p.hops.iter().map(|h| h.to_string()).collect();
        if p.weight == 1 {
            writeln!(w, "{}|{}", p.agent, hops.join(" "))?;
        } else {
            writeln!(w, "{}|{} weight={}", p.agent, hops.join(" "), p.weight)?;
        }
    }
    Ok(())
}
