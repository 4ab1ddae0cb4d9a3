//! Seeded random streams.
//!
//! Every stochastic step in the crate draws from a `ChaCha8Rng` derived from
//! a user seed and a stream number, so a run is fully determined by its seed
//! and a resumed run can recreate the generator for any epoch.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator keyed by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
