//! Reproducible random substreams.
//!
//! Every random draw in a run comes from a ChaCha8 generator keyed by the run
//! seed plus a short tag path such as `(trial, slot, CHANNEL)`. Two callers
//! that build the same key get bit-identical streams no matter which thread
//! they run on or in what order, which is what makes common random numbers
//! across schemes and sweep values possible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Tag for per-slot channel draws.
pub const CHANNEL: u64 = 0x43_48_41_4e;
/// Tag for RIS phase-noise draws.
pub const PHASE_NOISE: u64 = 0x50_48_4e_5a;
/// Tag for the random-phase scheme.
pub const RANDOM_PHASE: u64 = 0x52_41_4e_44;
/// Tag for position prediction noise.
pub const PREDICTION: u64 = 0x50_52_45_44;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn mix(tags: &[u64]) -> u64 {
    tags.iter()
        .fold(0x6a09_e667_f3bc_c908, |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

/// Generator for the stream identified by `seed` and `tags`.
pub fn substream(seed: u64, tags: &[u64]) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(mix(tags));
    rng
}
