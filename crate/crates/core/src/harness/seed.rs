//! Seed derivation.
//!
//! Every random stream in a run is seeded from the master seed with
//! `splitmix64(master ^ index)`, where `splitmix64` is the finalizer of
//! Steele, Lea and Flood's SplitMix64 generator:
//!
//! ```text
//! z = x + 0x9E3779B97F4A7C15
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z ^ (z >> 31)
//! ```
//!
//! All arithmetic wraps modulo 2^64. Streams for sweep points therefore do not
//! depend on evaluation order, so points can run in parallel.

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ index)
}
