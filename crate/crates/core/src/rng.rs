//! Seedable, splittable random streams.
//!
//! Every stochastic routine in the crate draws from ChaCha8 (`rand_chacha`).
//! A run is identified by a 64-bit `seed`; the seed is expanded to a 256-bit
//! key with `SeedableRng::seed_from_u64`, and independent work units select
//! disjoint ChaCha streams with `set_stream(unit)`. Work is always split into
//! fixed-size units, so outputs never depend on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator for work unit `stream` of run `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
