//! Core construction against brute-force oracles on small random graphs.

use std::collections::BTreeSet;

use asrel::core_builder::{greedy_max_clique, k_max_core, k_shell_decompose};
use asrel::graph::{AsGraph, Asn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const GRAPHS: usize = 1000;

fn random_graph(rng: &mut ChaCha8Rng) -> AsGraph {
    let n = rng.gen_range(1..=12u32);
    let p = rng.gen_range(0.1..0.9);
    let mut g = AsGraph::new();
    for v in 1..=n {
        g.add_vertex(Asn(v * 3));
    }
    for a in 1..=n {
        for b in a + 1..=n {
            if rng.gen_bool(p) {
                g.add_edge(Asn(a * 3), Asn(b * 3)).unwrap();
            }
        }
    }
    g
}

/// Shell of every vertex by peeling: the k-core is what survives repeated
/// removal of vertices with fewer than k neighbours.
fn oracle_shells(g: &AsGraph) -> Vec<(Asn, u32)> {
    let vs: Vec<Asn> = g.vertices().collect();
    let core_of = |k: usize| -> BTreeSet<Asn> {
        let mut alive: BTreeSet<Asn> = vs.iter().copied().collect();
        loop {
            let drop: Vec<Asn> = alive
                .iter()
                .copied()
                .filter(|v| g.neighbors(*v).filter(|n| alive.contains(n)).count() < k)
                .collect();
            if drop.is_empty() {
                return alive;
            }
            for v in drop {
                alive.remove(&v);
            }
        }
    };
    let mut shell: Vec<(Asn, u32)> = vs.iter().map(|v| (*v, 0)).collect();
    for k in 1..=vs.len() {
        let c = core_of(k);
        for (v, s) in shell.iter_mut() {
            if c.contains(v) {
                *s = k as u32;
            }
        }
    }
    shell
}

fn oracle_max_clique(g: &AsGraph) -> usize {
    let vs: Vec<Asn> = g.vertices().collect();
    let n = vs.len();
    let mut best = 0;
    for mask in 0u32..(1 << n) {
        let members: Vec<Asn> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| vs[i]).collect();
        if members.len() <= best {
            continue;
        }
        let clique = members
            .iter()
            .enumerate()
            .all(|(i, a)| members[i + 1..].iter().all(|b| g.contains_edge(*a, *b)));
        if clique {
            best = members.len();
        }
    }
    best
}

#[test]
fn kshell_matches_peeling_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for i in 0..GRAPHS {
        let g = random_graph(&mut rng);
        let idx = k_shell_decompose(&g);
        for (v, s) in oracle_shells(&g) {
            assert_eq!(idx.shell(v), Some(s), "graph {i}, vertex {v}");
        }
        let kmax = oracle_shells(&g).iter().map(|(_, s)| *s).max().unwrap();
        assert_eq!(idx.k_max, kmax);
        if g.edge_count() > 0 {
            let core = k_max_core(&g).unwrap();
            let expect: BTreeSet<Asn> = oracle_shells(&g)
                .into_iter()
                .filter(|(_, s)| *s == kmax)
                .map(|(v, _)| v)
                .collect();
            assert_eq!(core.vertices, expect, "graph {i}");
        }
    }
}

#[test]
fn greedy_clique_is_a_clique_within_the_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc11c);
    for i in 0..GRAPHS {
        let g = random_graph(&mut rng);
        let c = greedy_max_clique(&g).unwrap();
        let members: Vec<Asn> = c.vertices.iter().copied().collect();
        for (j, a) in members.iter().enumerate() {
            for b in &members[j + 1..] {
                assert!(g.contains_edge(*a, *b), "graph {i}: {a}-{b} missing");
            }
        }
        assert!(c.is_clique());
        assert!(!members.is_empty());
        assert!(members.len() <= oracle_max_clique(&g), "graph {i}");
    }
}
