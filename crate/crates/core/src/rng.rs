//! Seeded, counter-split random streams.
//!
//! `substream(seed, i)` is a ChaCha8 generator keyed by `seed` on stream `i`.
//! Parallel callers hand out work by stream index, so the draws belonging to
//! task `i` never depend on scheduling.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as SimRng;

pub fn substream(seed: u64, stream: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives an independent seed for a named sub-task, e.g. one restart or one
/// grid point. SplitMix64 finaliser over `(seed, tag)`.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed
        ^ tag
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
