//! Seed derivation and stream layout.
//!
//! Every random object is drawn from a ChaCha8 generator keyed by a 64-bit
//! seed and addressed by a stream id. ChaCha is counter based, so distinct
//! stream ids under one key never overlap. The stream ids used across the
//! crate are fixed here so an experiment can be reproduced from its seeds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Weyl increment used by SplitMix64 (the 64-bit golden ratio).
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stream of the first fBm component.
pub const FBM_STREAM: u64 = 0x0100;
/// Offset between the streams of component 1 and component 2.
pub const COMPONENT_STREAM_OFFSET: u64 = 0x0001;
/// Stream of the skeleton random walk.
pub const SKELETON_STREAM: u64 = 0x0200;
/// Streams of the Brownian increments B^1..B^4 are `BROWNIAN_STREAM + i - 1`.
pub const BROWNIAN_STREAM: u64 = 0x0300;
/// Streams of the Brownian endpoints B^i at the integration horizon.
pub const BROWNIAN_ENDPOINT_STREAM: u64 = 0x0310;
/// Stream of the Brownian clock value Y_t.
pub const CLOCK_STREAM: u64 = 0x0400;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `index` under `master_seed`:
/// `splitmix64(master_seed ^ GOLDEN_GAMMA * index)`.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(master_seed ^ GOLDEN_GAMMA.wrapping_mul(index))
}

/// Generator for `stream` under the key derived from `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
