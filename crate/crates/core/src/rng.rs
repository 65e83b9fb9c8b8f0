//! Seed derivation.
//!
//! Every stochastic operation takes an explicit `u64` seed. Independent
//! streams are split off a master seed by hashing a tag into it, so adding a
//! new consumer never perturbs the streams of existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Child seed for the stream named `tag`.
pub fn derive(seed: u64, tag: &str) -> u64 {
    splitmix64(splitmix64(seed) ^ fnv1a(tag))
}

/// Child seed for the `index`-th member of the stream named `tag`.
pub fn derive_indexed(seed: u64, tag: &str, index: u64) -> u64 {
    splitmix64(derive(seed, tag) ^ splitmix64(index.wrapping_add(1)))
}
