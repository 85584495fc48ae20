//! Reproducible random streams.
//!
//! Every consumer of randomness draws from its own ChaCha8 stream derived
//! from `(seed, stream id)`, so results do not depend on how work is
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream used for drawing trial points.
pub const TRIAL_POINT_STREAM: u64 = u64::MAX;
/// Stream used for the single long series.
pub const SERIES_STREAM: u64 = u64::MAX - 1;

/// Independent stream `id` of the generator seeded by `seed`.
pub fn stream(seed: u64, id: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Stream id of ensemble member `member` started from trial point `trial`.
pub fn ensemble_stream_id(trial: usize, member: usize) -> u64 {
    ((trial as u64) << 32) | (member as u64 & 0xffff_ffff)
}
