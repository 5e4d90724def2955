//! Seeded random streams. Every random decision in a trial comes from a
//! ChaCha stream keyed by `(seed, purpose)`, so results do not depend on the
//! order in which trials or methods run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SPLIT: u64 = 1;
pub const CLEAN_TRAIN: u64 = 2;
pub const CLEAN_TEST: u64 = 3;
pub const NOISE_MODEL: u64 = 4;
pub const CORRUPT: u64 = 5;
pub const ACTIVE: u64 = 6;
pub const PROBES: u64 = 7;

pub fn stream(seed: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose);
    rng
}
