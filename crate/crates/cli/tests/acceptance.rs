//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::{Duration, Instant};

use asrel::core_builder::{greedy_max_clique, k_shell_decompose, GrowStrategy};
use asrel::experiments::{core_size_sweep, corruption_sweep};
use asrel::graph::{AsGraph, Asn, EdgeKey};
use asrel::ingest::{
    aggregate_paths, build_graph, filter_single_agent_edges, ingest, normalize_path, AsPath, SiblingSet, Source,
};
use asrel::metrics::{stability, ReferenceSet};
use asrel::pipeline::{run_inference, PipelineConfig, RunOutput};
use asrel::topogen::{generate, sample_paths_seeded, write_trace_paths, GenConfig, GroundTruth, NoiseConfig};
use asrel_cli::args::Cli;
use asrel_cli::commands::corruption_seeds;
use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

/// Core sizes for the size sweep: from the true clique size to three times it.
const SWEEP_SIZES: std::ops::RangeInclusive<usize> = 10..=30;
const CORRUPTION_FRACTIONS: [f64; 3] = [0.0, 0.5, 1.0];
const SEED: u64 = 2024;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("figure-exact traces", c1_figures),
        ("perfect-core soundness", c2_perfect_core),
        ("oracle equivalence", c3_oracles),
        ("voting distribution shape", c4_vote_shape),
        ("corruption robustness trend", c5_corruption),
        ("core-size robustness", c6_core_size),
        ("window stability", c7_windows),
        ("ingest filters", c8_ingest),
        ("determinism", c9_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!(
            "{} criterion {}: {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn cli(args: &[&str]) -> Result<(), String> {
    let mut full = vec!["asrel"];
    full.extend_from_slice(args);
    let parsed = Cli::try_parse_from(full).map_err(|e| e.to_string())?;
    asrel_cli::run(parsed).map(|_| ()).map_err(|e| e.to_string())
}

fn put(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

/// `(low, high) -> (rel, method)` from a written classifications file.
fn classes(path: &Path) -> Labels {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            ((f[0].parse().unwrap(), f[1].parse().unwrap()), (f[2].into(), f[3].into()))
        })
        .collect()
}

fn run_micro(dir: &Path, name: &str, paths: &str, core: &str) -> Result<Labels, String> {
    let p = put(dir, &format!("{name}.paths"), paths);
    let c = put(dir, &format!("{name}.core"), core);
    let out = dir.join(name);
    cli(&["infer", "--paths-bgp", &p, "--core", &c, "--out", out.to_str().unwrap()])?;
    Ok(classes(&out.join("classifications.csv")))
}

type Labels = BTreeMap<(u32, u32), (String, String)>;

fn check(problems: &mut Vec<String>, name: &str, got: &Labels, want: &[((u32, u32), &str, Option<&str>)]) {
    for (edge, rel, method) in want {
        match got.get(edge) {
            Some((r, m)) if r == rel && method.is_none_or(|x| x == m) => {}
            other => problems.push(format!("{name} {edge:?}: got {other:?}, want {rel}")),
        }
    }
}

fn c1_figures() -> Verdict {
    let dir = TempDir::new().unwrap();
    let start = Instant::now();
    let mut problems = Vec::new();
    match run_micro(dir.path(), "a", "1 2 3 4 5 6 7\n", "e 4 5\n") {
        Ok(a) => check(
            &mut problems,
            "single path",
            &a,
            &[
                ((1, 2), "c2p", None),
                ((2, 3), "c2p", None),
                ((3, 4), "c2p", None),
                ((4, 5), "p2p", None),
                ((5, 6), "p2c", None),
                ((6, 7), "p2c", None),
            ],
        ),
        Err(e) => problems.push(e),
    }
    match run_micro(dir.path(), "b", "2 3 10 11 5 6\n1 2 3 4 5 6 7\n", "e 10 11\n") {
        Ok(b) => check(
            &mut problems,
            "two paths",
            &b,
            &[
                ((1, 2), "c2p", None),
                ((6, 7), "p2c", None),
                ((3, 4), "unclassified", None),
                ((4, 5), "unclassified", None),
            ],
        ),
        Err(e) => problems.push(e),
    }
    match run_micro(dir.path(), "gap", "1 2 3 10 11\n10 11 4 5 6\n1 2 3 4 5 6\n", "e 10 11\n") {
        Ok(g) => {
            let gaps = g.values().filter(|(_, m)| m == "gap-p2p").count();
            if gaps != 1 {
                problems.push(format!("gap corpus has {gaps} gap-p2p edges"));
            }
            check(&mut problems, "gap", &g, &[((3, 4), "p2p", Some("gap-p2p"))]);
        }
        Err(e) => problems.push(e),
    }
    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(1) {
        problems.push(format!("runtime {elapsed:?}"));
    }
    verdict(
        problems.is_empty(),
        if problems.is_empty() {
            format!("all three corpora exact in {elapsed:.2?}")
        } else {
            problems.join("; ")
        },
    )
}

fn base_config(noise: NoiseConfig) -> GenConfig {
    GenConfig {
        tier_sizes: vec![10, 50, 300, 1000],
        multihome: 2.0,
        peer_prob: 0.3,
        paths: 50_000,
        noise,
        seed: SEED,
        ..Default::default()
    }
}

struct Synthetic {
    truth: GroundTruth,
    paths: Vec<AsPath>,
    graph: AsGraph,
    out: RunOutput,
}

fn synthetic(truth: GroundTruth, cfg: &GenConfig, sample_seed: u64) -> Synthetic {
    let raw = sample_paths_seeded(&truth, cfg, sample_seed);
    let ing = ingest(raw, &SiblingSet::new());
    let paths = aggregate_paths(&ing.paths);
    let graph = build_graph(&paths);
    let out = run_inference(&graph, &paths, &truth.tier1_core(), &PipelineConfig::default()).unwrap();
    Synthetic { truth, paths, graph, out }
}

fn clean_corpus() -> Synthetic {
    let cfg = base_config(NoiseConfig::default());
    synthetic(generate(&cfg).unwrap(), &cfg, asrel::sub_seed(SEED, "paths"))
}

fn reference(truth: &GroundTruth) -> ReferenceSet {
    ReferenceSet {
        labels: truth.labels.clone(),
    }
}

fn c2_perfect_core() -> Verdict {
    let start = Instant::now();
    let s = clean_corpus();
    let elapsed = start.elapsed();

    let through: BTreeSet<EdgeKey> = s
        .out
        .deterministic
        .partition
        .through_core
        .iter()
        .flat_map(|&i| s.paths[i].edges().map(|(a, b)| EdgeKey::new(a, b).unwrap()))
        .collect();
    let mut unclassified = 0;
    let mut wrong_core = 0;
    let mut classified = 0;
    let mut agree = 0;
    for c in &s.out.classifications {
        let truth = s.truth.labels[&c.edge];
        if through.contains(&c.edge) {
            if !c.rel.is_classified() {
                unclassified += 1;
            } else if c.rel != truth {
                wrong_core += 1;
            }
        }
        if c.rel.is_classified() {
            classified += 1;
            if c.rel == truth {
                agree += 1;
            }
        }
    }
    let agreement = agree as f64 / classified as f64;
    let invalid = s.out.path_counts.valley + s.out.path_counts.core_hop_limit;
    let pass = unclassified == 0 && wrong_core == 0 && agreement >= 0.99 && invalid == 0 && elapsed < Duration::from_secs(10);
    verdict(
        pass,
        format!(
            "{} core-path edges, {unclassified} unclassified, {wrong_core} wrong; agreement {:.2}% over {classified} classified edges; {invalid} invalid paths; {elapsed:.2?}",
            through.len(),
            100.0 * agreement
        ),
    )
}

fn random_graph(rng: &mut ChaCha8Rng) -> AsGraph {
    let n = rng.gen_range(1..=12u32);
    let p = rng.gen_range(0.1..0.9);
    let mut g = AsGraph::new();
    for v in 1..=n {
        g.add_vertex(Asn(v));
    }
    for a in 1..=n {
        for b in a + 1..=n {
            if rng.gen_bool(p) {
                g.add_edge(Asn(a), Asn(b)).unwrap();
            }
        }
    }
    g
}

/// Shell index by definition: the largest k whose k-core (peeling fixpoint)
/// still holds the vertex.
fn oracle_shells(g: &AsGraph) -> BTreeMap<Asn, u32> {
    let vs: Vec<Asn> = g.vertices().collect();
    let mut shell: BTreeMap<Asn, u32> = vs.iter().map(|v| (*v, 0)).collect();
    for k in 1..=vs.len() {
        let mut alive: BTreeSet<Asn> = vs.iter().copied().collect();
        loop {
            let weak: Vec<Asn> = alive
                .iter()
                .copied()
                .filter(|v| g.neighbors(*v).filter(|n| alive.contains(n)).count() < k)
                .collect();
            if weak.is_empty() {
                break;
            }
            for v in weak {
                alive.remove(&v);
            }
        }
        for v in alive {
            shell.insert(v, k as u32);
        }
    }
    shell
}

fn oracle_clique_size(g: &AsGraph) -> usize {
    let vs: Vec<Asn> = g.vertices().collect();
    (0u32..1 << vs.len())
        .filter_map(|mask| {
            let m: Vec<Asn> = (0..vs.len()).filter(|i| mask >> i & 1 == 1).map(|i| vs[i]).collect();
            let clique = m.iter().enumerate().all(|(i, a)| m[i + 1..].iter().all(|b| g.contains_edge(*a, *b)));
            clique.then_some(m.len())
        })
        .max()
        .unwrap_or(0)
}

fn c3_oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut shell_mismatch = 0;
    let mut bad_clique = 0;
    for _ in 0..1000 {
        let g = random_graph(&mut rng);
        let idx = k_shell_decompose(&g);
        if oracle_shells(&g).iter().any(|(v, s)| idx.shell(*v) != Some(*s)) {
            shell_mismatch += 1;
        }
        let c = greedy_max_clique(&g).unwrap();
        let members: Vec<Asn> = c.vertices.iter().copied().collect();
        let is_clique = members
            .iter()
            .enumerate()
            .all(|(i, a)| members[i + 1..].iter().all(|b| g.contains_edge(*a, *b)));
        if !is_clique || members.is_empty() || members.len() > oracle_clique_size(&g) {
            bad_clique += 1;
        }
    }
    verdict(
        shell_mismatch == 0 && bad_clique == 0,
        format!("1000 graphs: {shell_mismatch} k-shell mismatches, {bad_clique} invalid or oversized cliques"),
    )
}

fn top_share(s: &asrel::graph::Shares) -> f64 {
    s.c2p.max(s.p2c).max(s.p2p)
}

fn c4_vote_shape() -> Verdict {
    let clean = clean_corpus();
    let voted: Vec<f64> = clean.out.classifications.iter().filter_map(|c| c.shares.as_ref().map(top_share)).collect();
    let unanimous = voted.iter().filter(|s| **s == 1.0).count() as f64 / voted.len() as f64;

    let cfg = base_config(NoiseConfig {
        valley_prob: 0.02,
        ..Default::default()
    });
    let noisy = synthetic(clean.truth, &cfg, asrel::sub_seed(SEED, "paths"));
    let voted: Vec<f64> = noisy.out.classifications.iter().filter_map(|c| c.shares.as_ref().map(top_share)).collect();
    let strong = voted.iter().filter(|s| **s >= 0.8 - 1e-12).count() as f64 / voted.len() as f64;
    verdict(
        unanimous >= 0.99 && strong >= 0.95,
        format!(
            "clean: {:.2}% unanimous; 2% valleys: {:.2}% reach 0.8 ({:.2}% invalid paths)",
            100.0 * unanimous,
            100.0 * strong,
            noisy.out.metrics(None).pct_invalid_paths
        ),
    )
}

fn c5_corruption() -> Verdict {
    let s = clean_corpus();
    let seeds = corruption_seeds(SEED, 5);
    let rows = match corruption_sweep(
        &s.graph,
        &s.paths,
        &s.truth.tier1_core(),
        &CORRUPTION_FRACTIONS,
        &seeds,
        &PipelineConfig::default(),
        None,
    ) {
        Ok(r) => r,
        Err(e) => return verdict(false, e.to_string()),
    };
    let mean = |f: f64, g: fn(&asrel::metrics::RunMetrics) -> f64| {
        let v: Vec<f64> = rows.iter().filter(|r| r.fraction == f).map(|r| g(&r.metrics)).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let open: Vec<f64> = CORRUPTION_FRACTIONS
        .iter()
        .map(|f| mean(*f, |m| m.pct_heuristic + m.pct_unclassified))
        .collect();
    let trend = open.windows(2).all(|w| w[1] >= w[0]);
    let classified = mean(1.0, |m| m.pct_classified);
    let deterministic = mean(1.0, |m| m.pct_deterministic);
    verdict(
        trend && classified >= 75.0 && deterministic >= 75.0,
        format!(
            "mean heuristic+unclassified {:.2}% / {:.2}% / {:.2}% at fractions 0 / 0.5 / 1; fully random core: {classified:.2}% classified, {deterministic:.2}% deterministic",
            open[0], open[1], open[2]
        ),
    )
}

fn c6_core_size() -> Verdict {
    let s = clean_corpus();
    let r = reference(&s.truth);
    let sizes: Vec<usize> = SWEEP_SIZES.collect();
    let rows = match core_size_sweep(&s.graph, &s.paths, GrowStrategy::Degree, &sizes, &PipelineConfig::default(), Some(&r)) {
        Ok(r) => r,
        Err(e) => return verdict(false, e.to_string()),
    };
    let spread = |f: fn(&asrel::metrics::RunMetrics) -> Option<f64>| {
        let v: Vec<f64> = rows.iter().filter_map(|r| f(&r.metrics)).collect();
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let (olo, ohi) = spread(|m| m.pct_match_reference_overall);
    let (blo, bhi) = spread(|m| m.pct_match_reference_both);
    verdict(
        ohi - olo <= 2.0 && bhi - blo <= 2.0,
        format!(
            "sizes {}..={}: agreement over all edges {olo:.2}%..{ohi:.2}% (spread {:.2}), over both-classified {blo:.2}%..{bhi:.2}% (spread {:.2})",
            SWEEP_SIZES.start(),
            SWEEP_SIZES.end(),
            ohi - olo,
            bhi - blo
        ),
    )
}

fn c7_windows() -> Verdict {
    let truth = generate(&base_config(NoiseConfig::default())).unwrap();
    let window_pair = |noise: NoiseConfig| {
        let cfg = base_config(noise);
        let a = synthetic(truth.clone(), &cfg, asrel::sub_seed(SEED, "window-a"));
        let b = synthetic(truth.clone(), &cfg, asrel::sub_seed(SEED, "window-b"));
        stability(&a.out.classifications, &b.out.classifications)
    };
    let clean = window_pair(NoiseConfig::default());
    let noisy = window_pair(NoiseConfig {
        loop_prob: 0.05,
        prepend_prob: 0.05,
        valley_prob: 0.0,
    });
    verdict(
        clean == Some(1.0) && noisy.is_some_and(|s| s >= 0.98),
        format!("zero noise {clean:?}; loop and prepend noise 0.05: {noisy:?}"),
    )
}

fn random_hops(rng: &mut ChaCha8Rng) -> Vec<Asn> {
    let n = rng.gen_range(0..12);
    (0..n).map(|_| Asn(rng.gen_range(1..16))).collect()
}

fn c8_ingest() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 8);
    let mut failures: BTreeMap<&str, usize> = BTreeMap::new();
    let mut fail = |what: &'static str| *failures.entry(what).or_default() += 1;
    for _ in 0..10_000 {
        let mut siblings = SiblingSet::new();
        let mut groups: Vec<BTreeSet<Asn>> = Vec::new();
        for _ in 0..rng.gen_range(0..4) {
            let (a, b) = (Asn(rng.gen_range(1..16)), Asn(rng.gen_range(1..16)));
            if a == b {
                continue;
            }
            siblings.add_pair(a, b);
            let hit: Vec<usize> = (0..groups.len()).filter(|i| groups[*i].contains(&a) || groups[*i].contains(&b)).collect();
            let mut merged: BTreeSet<Asn> = [a, b].into();
            for i in hit.into_iter().rev() {
                merged.extend(groups.remove(i));
            }
            groups.push(merged);
        }
        let rep = |x: Asn| groups.iter().find(|g| g.contains(&x)).map_or(x, |g| *g.iter().next().unwrap());

        let raw = random_hops(&mut rng);
        // Oracle: merge, collapse repeats, keep the prefix before the first revisit.
        let mut expect: Vec<Asn> = Vec::new();
        let mut collapsed: Vec<Asn> = raw.iter().map(|h| rep(*h)).collect();
        collapsed.dedup();
        for h in collapsed {
            if expect.contains(&h) {
                break;
            }
            expect.push(h);
        }
        let got = normalize_path(&raw, &siblings).ok();
        match (&got, expect.len() >= 2) {
            (Some(n), true) if n.hops == expect => {}
            (None, false) => {}
            _ => fail("normalization differs from oracle"),
        }
        if let Some(n) = &got {
            if normalize_path(&n.hops, &siblings).map(|m| m.hops) != Ok(n.hops.clone()) {
                fail("normalization not idempotent");
            }
            if n.hops.len() > raw.len() {
                fail("sibling merge lengthened a path");
            }
            if n.hops.iter().any(|h| rep(*h) != *h) {
                fail("non-representative ASN survived");
            }
            if n.hops.iter().collect::<BTreeSet<_>>().len() != n.hops.len() {
                fail("loop survived truncation");
            }
        }

        let mut batch = Vec::new();
        for _ in 0..rng.gen_range(1..8) {
            let hops = random_hops(&mut rng);
            let Ok(n) = normalize_path(&hops, &SiblingSet::new()) else { continue };
            let bgp = rng.gen_bool(0.2);
            batch.push(AsPath {
                hops: n.hops,
                source: if bgp { Source::Bgp } else { Source::Trace },
                agent: if bgp { String::new() } else { format!("a{}", rng.gen_range(0..3)) },
                weight: 1,
            });
        }
        let before: usize = batch.iter().map(|p| p.edge_count()).sum();
        let (kept, _) = filter_single_agent_edges(batch.clone());
        let after: usize = kept.iter().map(|p| p.edge_count()).sum();
        if after > before {
            fail("splitting added edges");
        }
        let mut bgp_edges = BTreeSet::new();
        let mut agents: BTreeMap<EdgeKey, BTreeSet<&str>> = BTreeMap::new();
        for p in &kept {
            for (a, b) in p.edges() {
                let k = EdgeKey::new(a, b).unwrap();
                if p.source == Source::Bgp {
                    bgp_edges.insert(k);
                } else {
                    agents.entry(k).or_default().insert(&p.agent);
                }
            }
        }
        if agents.iter().any(|(k, a)| a.len() < 2 && !bgp_edges.contains(k)) {
            fail("single-agent trace edge survived");
        }
        let pieces_ok = kept.iter().all(|p| {
            p.hops.len() >= 2
                && batch.iter().any(|o| o.agent == p.agent && o.hops.windows(p.hops.len()).any(|w| w == p.hops.as_slice()))
        });
        if !pieces_ok {
            fail("split piece is not a sub-path of its input");
        }
    }
    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            "10000 randomized inputs, all invariants hold".into()
        } else {
            format!("{failures:?}")
        },
    )
}

fn c9_determinism() -> Verdict {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let cfg = base_config(NoiseConfig {
        loop_prob: 0.02,
        valley_prob: 0.01,
        prepend_prob: 0.02,
    });
    let truth = generate(&cfg).unwrap();
    let raw = sample_paths_seeded(&truth, &cfg, asrel::sub_seed(SEED, "paths"));
    let paths = d.join("paths.txt");
    write_trace_paths(&raw, std::fs::File::create(&paths).unwrap()).unwrap();
    let core = d.join("core.txt");
    truth.tier1_core().write(std::fs::File::create(&core).unwrap()).unwrap();
    let p = paths.to_str().unwrap();
    let c = core.to_str().unwrap();

    let mut problems = Vec::new();
    let runs: [(&str, Vec<&str>); 2] = [
        ("core-file", vec!["--core", c]),
        ("grow-kshell", vec!["--core-method", "grow", "--core-size", "15", "--tiebreak", "kshell"]),
    ];
    for (name, extra) in runs {
        let first = d.join(format!("{name}-0"));
        let mut args = vec!["infer", "--paths-trace", p, "--seed", "7", "--out", first.to_str().unwrap()];
        args.extend(extra);
        if let Err(e) = cli(&args) {
            problems.push(format!("{name}: {e}"));
            continue;
        }
        let manifest = first.join("manifest.json");
        let mut outputs = Vec::new();
        for k in 1..=2 {
            let out = d.join(format!("{name}-{k}"));
            if let Err(e) = cli(&["infer", "--manifest", manifest.to_str().unwrap(), "--out", out.to_str().unwrap()]) {
                problems.push(format!("{name} replay: {e}"));
            }
            outputs.push(std::fs::read(out.join("classifications.csv")).unwrap_or_default());
        }
        let original = std::fs::read(first.join("classifications.csv")).unwrap();
        if outputs.iter().any(|o| *o != original) {
            problems.push(format!("{name}: classification CSVs differ"));
        }
    }
    verdict(
        problems.is_empty(),
        if problems.is_empty() {
            "two manifests, each replayed twice, byte-identical classifications".into()
        } else {
            problems.join("; ")
        },
    )
}
