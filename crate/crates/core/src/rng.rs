//! Seed derivation for reproducible, order-independent replications.
//!
//! Every replication draws from its own ChaCha8 stream whose seed is a
//! SplitMix64 mix of `(master_seed, replication, stream)`. Results therefore
//! do not depend on which worker ran which replication. Normal variates come
//! from `rand_distr::StandardNormal` (ziggurat method).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream used for training-data draws.
pub const STREAM_TRAINING: u64 = 0;
/// Stream used for deployment group draws.
pub const STREAM_DEPLOYMENT: u64 = 1;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable 64-bit seed for one `(replication, stream)` substream.
pub fn substream_seed(master_seed: u64, replication: u64, stream: u64) -> u64 {
    let a = splitmix64(master_seed);
    let b = splitmix64(a ^ replication.wrapping_mul(GOLDEN_GAMMA));
    splitmix64(b ^ stream.rotate_left(32))
}

pub fn substream_rng(master_seed: u64, replication: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream_seed(master_seed, replication, stream))
}
