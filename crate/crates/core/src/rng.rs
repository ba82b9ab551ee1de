//! Seeded random streams.
//!
//! Every stochastic component takes an explicit generator. Independent
//! streams are derived from a master seed by hashing `(master, index, tag)`,
//! so adding trials or rounds never perturbs the streams of earlier ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used throughout the crate.
pub type StdRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(tag: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Derives a child seed from a master seed, an index and a stage tag.
pub fn derive_seed(master: u64, index: u64, tag: &str) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(index)) ^ fnv1a(tag))
}

/// A generator seeded from [`derive_seed`].
pub fn stream(master: u64, index: u64, tag: &str) -> StdRng {
    StdRng::seed_from_u64(derive_seed(master, index, tag))
}
