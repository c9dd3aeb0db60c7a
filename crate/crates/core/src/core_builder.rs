//! Construction of the core sub-graph: greedy degree-ordered clique, the
//! K_max-core nucleus, the largest component of an external peer edge list,
//! degree/shell-ordered growth, and random corruption for robustness runs.
//!
//! Degree ties are broken by ascending ASN throughout.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{AsGraph, Asn, EdgeKey, RelType};

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("core is empty")]
    EmptyCore,
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("corruption infeasible: {0}")]
    Infeasible(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Core vertices and edges with optional preassigned relationships.
/// Edges without a preassignment are peer-to-peer by default.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoreGraph {
    pub vertices: BTreeSet<Asn>,
    pub edges: BTreeSet<EdgeKey>,
    /// Relationship relative to the key's low->high orientation.
    pub preassigned: BTreeMap<EdgeKey, RelType>,
}

impl CoreGraph {
    /// Core over `vertices` with every edge of `graph` induced among them.
    pub fn induced(graph: &AsGraph, vertices: impl IntoIterator<Item = Asn>) -> Self {
        let vertices: BTreeSet<Asn> = vertices.into_iter().collect();
        let mut edges = BTreeSet::new();
        for &v in &vertices {
            for n in graph.neighbors(v) {
                if v < n && vertices.contains(&n) {
                    edges.insert(EdgeKey { low: v, high: n });
                }
            }
        }
        CoreGraph {
            vertices,
            edges,
            preassigned: BTreeMap::new(),
        }
    }

    pub fn contains_vertex(&self, v: Asn) -> bool {
        self.vertices.contains(&v)
    }

    pub fn contains_edge(&self, a: Asn, b: Asn) -> bool {
        EdgeKey::new(a, b).is_ok_and(|k| self.edges.contains(&k))
    }

    /// Explicit preassignment for traversal `a -> b`, if any.
    pub fn preassigned_rel(&self, a: Asn, b: Asn) -> Option<RelType> {
        let k = EdgeKey::new(a, b).ok()?;
        self.preassigned.get(&k).map(|r| r.canonical(&k, a))
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges divided by the full clique size.
    pub fn density(&self) -> f64 {
        let n = self.vertices.len() as f64;
        if n < 2.0 {
            return 0.0;
        }
        self.edges.len() as f64 / (n * (n - 1.0) / 2.0)
    }

    pub fn is_clique(&self) -> bool {
        let n = self.vertices.len();
        self.edges.len() == n * n.saturating_sub(1) / 2
    }

    /// Drops vertices and edges not in `graph`, and preassignments on dropped
    /// edges. Returns the number of edges dropped.
    pub fn restrict_to(&mut self, graph: &AsGraph) -> usize {
        self.vertices.retain(|v| graph.contains_vertex(*v));
        let before = self.edges.len();
        self.edges.retain(|k| graph.contains_edge(k.low, k.high));
        let edges = &self.edges;
        self.preassigned.retain(|k, _| edges.contains(k));
        before - self.edges.len()
    }

    /// Rewrites every ASN through `map` (used for sibling merging). Edges that
    /// collapse onto a single vertex are dropped.
    pub fn map_asns(&self, map: impl Fn(Asn) -> Asn) -> CoreGraph {
        let vertices = self.vertices.iter().map(|&v| map(v)).collect();
        let mut edges = BTreeSet::new();
        let mut preassigned = BTreeMap::new();
        for k in &self.edges {
            let (a, b) = (map(k.low), map(k.high));
            let Ok(nk) = EdgeKey::new(a, b) else { continue };
            edges.insert(nk);
            if let Some(r) = self.preassigned.get(k) {
                preassigned.insert(nk, r.canonical(&nk, a));
            }
        }
        CoreGraph {
            vertices,
            edges,
            preassigned,
        }
    }

    /// Reads `v ASN` and `e ASN ASN [rel]` lines. Edge endpoints are added as
    /// vertices.
    pub fn read<R: BufRead>(reader: R) -> Result<Self, CoreError> {
        let mut core = CoreGraph::default();
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perr = |m: String| CoreError::Parse {
                line: lineno,
                message: m,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let asn = |s: &str| s.parse::<Asn>().map_err(|e| perr(e.to_string()));
            match fields.as_slice() {
                ["v", v] => {
                    core.vertices.insert(asn(v)?);
                }
                ["e", a, b, rest @ ..] => {
                    let (a, b) = (asn(a)?, asn(b)?);
                    let k = EdgeKey::new(a, b).map_err(|e| perr(e.to_string()))?;
                    let rel = match rest {
                        [] => RelType::P2P,
                        [r] => r.parse::<RelType>().map_err(perr)?,
                        _ => return Err(perr("trailing fields".into())),
                    };
                    if !matches!(rel, RelType::P2P | RelType::C2P | RelType::P2C) {
                        return Err(perr(format!("relationship {rel} not allowed on core edge")));
                    }
                    core.vertices.insert(a);
                    core.vertices.insert(b);
                    core.edges.insert(k);
                    if rel != RelType::P2P {
                        core.preassigned.insert(k, rel.canonical(&k, a));
                    }
                }
                _ => return Err(perr(format!("unrecognized core line {line:?}"))),
            }
        }
        Ok(core)
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for v in &self.vertices {
            writeln!(w, "v {v}")?;
        }
        for k in &self.edges {
            match self.preassigned.get(k) {
                Some(r) => writeln!(w, "e {} {} {}", k.low, k.high, r)?,
                None => writeln!(w, "e {} {}", k.low, k.high)?,
            }
        }
        Ok(())
    }
}

/// Vertices sorted by non-increasing degree, ascending ASN on ties.
pub fn degree_order(graph: &AsGraph) -> Vec<Asn> {
    let mut vs: Vec<Asn> = graph.vertices().collect();
    vs.sort_by(|a, b| graph.degree(*b).cmp(&graph.degree(*a)).then(a.cmp(b)));
    vs
}

/// Scans vertices by non-increasing degree and admits each one adjacent to
/// every vertex admitted so far.
pub fn greedy_max_clique(graph: &AsGraph) -> Result<CoreGraph, CoreError> {
    if graph.is_empty() {
        return Err(CoreError::EmptyCore);
    }
    let mut members: Vec<Asn> = Vec::new();
    for v in degree_order(graph) {
        if members.iter().all(|&m| graph.contains_edge(m, v)) {
            members.push(v);
        }
    }
    Ok(CoreGraph::induced(graph, members))
}

/// Shell index per vertex; a vertex's shell is the largest k such that it
/// belongs to the k-core. Isolated vertices have shell 0.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KShellIndex {
    pub shells: BTreeMap<Asn, u32>,
    pub k_max: u32,
}

impl KShellIndex {
    pub fn shell(&self, v: Asn) -> Option<u32> {
        self.shells.get(&v).copied()
    }
}

/// Bucket-based peeling (Batagelj–Zaversnik).
pub fn k_shell_decompose(graph: &AsGraph) -> KShellIndex {
    let verts: Vec<Asn> = graph.vertices().collect();
    let index: BTreeMap<Asn, usize> = verts.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let nbrs: Vec<Vec<usize>> = verts
        .iter()
        .map(|v| graph.neighbors(*v).map(|n| index[&n]).collect())
        .collect();
    let n = verts.len();
    let mut deg: Vec<usize> = nbrs.iter().map(Vec::len).collect();
    let max_deg = deg.iter().copied().max().unwrap_or(0);

    // Vertices sorted by degree with bucket start offsets.
    let mut bin = vec![0usize; max_deg + 1];
    for &d in &deg {
        bin[d] += 1;
    }
    let mut start = 0;
    for b in bin.iter_mut() {
        let c = *b;
        *b = start;
        start += c;
    }
    let mut pos = vec![0usize; n];
    let mut order = vec![0usize; n];
    for v in 0..n {
        pos[v] = bin[deg[v]];
        order[pos[v]] = v;
        bin[deg[v]] += 1;
    }
    for d in (1..=max_deg).rev() {
        bin[d] = bin[d - 1];
    }
    bin[0] = 0;

    for i in 0..n {
        let v = order[i];
        for &u in &nbrs[v] {
            if deg[u] > deg[v] {
                let du = deg[u];
                let pu = pos[u];
                let pw = bin[du];
                let w = order[pw];
                if u != w {
                    order[pu] = w;
                    order[pw] = u;
                    pos[u] = pw;
                    pos[w] = pu;
                }
                bin[du] += 1;
                deg[u] -= 1;
            }
        }
    }

    let shells: BTreeMap<Asn, u32> = verts
        .iter()
        .enumerate()
        .map(|(i, v)| (*v, deg[i] as u32))
        .collect();
    let k_max = shells.values().copied().max().unwrap_or(0);
    KShellIndex { shells, k_max }
}

/// The nucleus: vertices of maximal shell index and their induced edges.
pub fn k_max_core(graph: &AsGraph) -> Result<CoreGraph, CoreError> {
    if graph.is_empty() {
        return Err(CoreError::EmptyCore);
    }
    let idx = k_shell_decompose(graph);
    Ok(k_max_core_from(graph, &idx))
}

pub fn k_max_core_from(graph: &AsGraph, idx: &KShellIndex) -> CoreGraph {
    CoreGraph::induced(
        graph,
        idx.shells
            .iter()
            .filter(|(_, &s)| s == idx.k_max)
            .map(|(v, _)| *v),
    )
}

/// Parses an external peer edge list: `ASN ASN` or `ASN|ASN|code`. Pipe lines
/// with a code other than 0 are not peer edges and are skipped.
pub fn parse_peer_edges<R: BufRead>(reader: R) -> Result<Vec<(Asn, Asn)>, CoreError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let perr = |m: String| CoreError::Parse {
            line: lineno,
            message: m,
        };
        let fields: Vec<&str> = if line.contains('|') {
            line.split('|').map(str::trim).collect()
        } else {
            line.split_whitespace().collect()
        };
        if fields.len() < 2 {
            return Err(perr("expected two ASNs".into()));
        }
        if line.contains('|') && fields.len() >= 3 && fields[2] != "0" {
            continue;
        }
        let a: Asn = fields[0].parse().map_err(|e: crate::graph::GraphError| perr(e.to_string()))?;
        let b: Asn = fields[1].parse().map_err(|e: crate::graph::GraphError| perr(e.to_string()))?;
        if a == b {
            return Err(perr(format!("self-loop on AS{a}")));
        }
        out.push((a, b));
    }
    Ok(out)
}

/// Largest connected component of the peer edges that also exist in `graph`,
/// with every retained edge preassigned P2P. Components are ranked by vertex
/// count, then edge count, then smallest contained ASN.
pub fn external_core(peer_edges: &[(Asn, Asn)], graph: &AsGraph) -> Result<CoreGraph, CoreError> {
    let usable: BTreeSet<EdgeKey> = peer_edges
        .iter()
        .filter(|(a, b)| graph.contains_edge(*a, *b))
        .filter_map(|(a, b)| EdgeKey::new(*a, *b).ok())
        .collect();
    if usable.is_empty() {
        return Err(CoreError::EmptyCore);
    }
    let mut adj: BTreeMap<Asn, Vec<Asn>> = BTreeMap::new();
    for k in &usable {
        adj.entry(k.low).or_default().push(k.high);
        adj.entry(k.high).or_default().push(k.low);
    }
    let mut seen: BTreeSet<Asn> = BTreeSet::new();
    let mut best: Option<(usize, usize, Asn, BTreeSet<Asn>)> = None;
    for &root in adj.keys() {
        if seen.contains(&root) {
            continue;
        }
        let mut comp = BTreeSet::new();
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            if !comp.insert(v) {
                continue;
            }
            seen.insert(v);
            stack.extend(adj[&v].iter().copied().filter(|n| !comp.contains(n)));
        }
        let edges = usable
            .iter()
            .filter(|k| comp.contains(&k.low))
            .count();
        // Roots are visited in ascending order, so `root` is the component minimum.
        let better = match &best {
            None => true,
            Some((bv, be, _, _)) => (comp.len(), edges) > (*bv, *be),
        };
        if better {
            best = Some((comp.len(), edges, root, comp));
        }
    }
    let (_, _, _, vertices) = best.ok_or(CoreError::EmptyCore)?;
    let edges: BTreeSet<EdgeKey> = usable
        .into_iter()
        .filter(|k| vertices.contains(&k.low))
        .collect();
    let preassigned = edges.iter().map(|k| (*k, RelType::P2P)).collect();
    Ok(CoreGraph {
        vertices,
        edges,
        preassigned,
    })
}

pub fn load_external_core<R: BufRead>(reader: R, graph: &AsGraph) -> Result<CoreGraph, CoreError> {
    let edges = parse_peer_edges(reader)?;
    external_core(&edges, graph)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowStrategy {
    Degree,
    Kshell,
}

/// Vertex order used by [`grow_core`].
pub fn growth_order(graph: &AsGraph, strategy: GrowStrategy, kshell: Option<&KShellIndex>) -> Vec<Asn> {
    match strategy {
        GrowStrategy::Degree => degree_order(graph),
        GrowStrategy::Kshell => {
            let owned;
            let idx = match kshell {
                Some(i) => i,
                None => {
                    owned = k_shell_decompose(graph);
                    &owned
                }
            };
            let mut vs: Vec<Asn> = graph.vertices().collect();
            vs.sort_by(|a, b| {
                let sa = idx.shell(*a).unwrap_or(0);
                let sb = idx.shell(*b).unwrap_or(0);
                sb.cmp(&sa)
                    .then(graph.degree(*b).cmp(&graph.degree(*a)))
                    .then(a.cmp(b))
            });
            vs
        }
    }
}

/// The first `size` vertices of the growth order, with induced edges.
pub fn grow_core(graph: &AsGraph, strategy: GrowStrategy, size: usize) -> Result<CoreGraph, CoreError> {
    let n = graph.vertex_count();
    if size < 4 || size > n {
        return Err(CoreError::Parameter(format!(
            "core size {size} outside 4..={n}"
        )));
    }
    let order = growth_order(graph, strategy, None);
    Ok(CoreGraph::induced(graph, order.into_iter().take(size)))
}

/// Replaces `replace` uniformly chosen core vertices with random non-core
/// vertices, each adjacent to at least one vertex of the evolving core.
/// When every original vertex is replaced the first insertion may be any
/// non-isolated non-core vertex.
pub fn corrupt_core(
    core: &CoreGraph,
    graph: &AsGraph,
    replace: usize,
    seed: u64,
) -> Result<CoreGraph, CoreError> {
    if replace > core.vertex_count() {
        return Err(CoreError::Parameter(format!(
            "cannot replace {replace} of {} core vertices",
            core.vertex_count()
        )));
    }
    if replace == 0 {
        return Ok(core.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let originals: Vec<Asn> = core.vertices.iter().copied().collect();
    let removed: BTreeSet<Asn> = originals
        .choose_multiple(&mut rng, replace)
        .copied()
        .collect();
    let mut current: BTreeSet<Asn> = originals
        .iter()
        .copied()
        .filter(|v| !removed.contains(v))
        .collect();

    for _ in 0..replace {
        let candidates: Vec<Asn> = if current.is_empty() {
            graph
                .vertices()
                .filter(|v| !core.vertices.contains(v) && graph.degree(*v) > 0)
                .collect()
        } else {
            let mut set = BTreeSet::new();
            for &c in &current {
                for n in graph.neighbors(c) {
                    if !core.vertices.contains(&n) && !current.contains(&n) {
                        set.insert(n);
                    }
                }
            }
            set.into_iter().collect()
        };
        let pick = *candidates.choose(&mut rng).ok_or_else(|| {
            CoreError::Infeasible(format!(
                "no non-core vertex adjacent to the remaining {} core vertices",
                current.len()
            ))
        })?;
        current.insert(pick);
    }

    let mut out = CoreGraph::induced(graph, current);
    out.preassigned = core
        .preassigned
        .iter()
        .filter(|(k, _)| out.edges.contains(k))
        .map(|(k, r)| (*k, *r))
        .collect();
    Ok(out)
}
