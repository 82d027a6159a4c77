//! Seeded random streams.
//!
//! Every consumer draws from its own ChaCha stream so that adding draws in
//! one place never shifts the sequence seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Split = 1,
    Forget = 2,
    SensitiveKnown = 3,
    Synthetic = 4,
    Classifier = 10,
    Estimator = 11,
    Adversary = 12,
    Shadow = 20,
    ShadowModel = 21,
}

pub fn stream(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
