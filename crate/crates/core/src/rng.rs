//! Seeded random streams.
//!
//! All randomness derives from a single `u64` seed. Independent consumers
//! take distinct stream ids so adding a draw in one place never shifts the
//! numbers seen elsewhere.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub(crate) const STREAM_SPLIT: u64 = 1;
pub(crate) const STREAM_KMEANS: u64 = 2;
pub(crate) const STREAM_SYNTH: u64 = 3;
pub(crate) const STREAM_PCA: u64 = 4;

/// Generator for one named stream under `seed`.
pub fn stream(seed: u64, stream_id: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}
