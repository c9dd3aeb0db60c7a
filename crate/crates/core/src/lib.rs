//! Inference of AS business relationships (customer-provider, peer-peer,
//! sibling) from AS paths, anchored on a dense core of transit-free ASes.
//!
//! The pipeline is: [`ingest`] raw paths into normalized paths, build the
//! [`graph`], pick a core with [`core_builder`], run the deterministic
//! [`engine`], fill gaps with [`heuristics`], and score the result with
//! [`metrics`]. [`topogen`] produces synthetic topologies with known labels
//! for validation.

pub mod core_builder;
pub mod engine;
pub mod experiments;
pub mod graph;
pub mod heuristics;
pub mod ingest;
pub mod metrics;
pub mod pipeline;
pub mod topogen;

pub use graph::{AsGraph, Asn, Classification, EdgeKey, Method, RelType};

/// Derives an independent seed for a named stage from the run seed.
pub fn sub_seed(seed: u64, stage: &str) -> u64 {
    // FNV-1a over the stage name, then a splitmix64 finalizer.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stage.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
