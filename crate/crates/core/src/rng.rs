//! Seeded RNG construction and stream derivation.
//!
//! Every stochastic operation in the crate takes an explicit generator so
//! runs are replayable. Sub-streams (per epoch, per shape, per purpose) are
//! derived by mixing the master seed with stream labels, so the sequence a
//! consumer sees does not depend on batching or worker scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Deterministic generator from a bare seed.
pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// splitmix64 finalizer; decorrelates nearby seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for an independent sub-stream of `seed` labelled by `tags`.
pub fn stream(seed: u64, tags: &[u64]) -> Rng {
    let mut s = mix(seed);
    for &t in tags {
        s = mix(s ^ t);
    }
    ChaCha8Rng::seed_from_u64(s)
}
