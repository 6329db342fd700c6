//! Reproducible random streams.
//!
//! Every generator is a ChaCha8 keyed by the user's 64-bit seed. ChaCha is a
//! counter-based cipher, so the 64-bit stream id selects an independent
//! substream without any sequential state shared between workers:
//!
//! * trajectory `i` of a simulation batch draws from stream `i`;
//! * thinning of the record with stream `i` draws from stream `i | 2^63`.
//!
//! A record can therefore be regenerated from `(params, stop, seed, stream)`
//! alone, regardless of how many workers produced the batch.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const THINNING_TAG: u64 = 1 << 63;

pub fn trajectory_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream & !THINNING_TAG);
    rng
}

pub fn thinning_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream | THINNING_TAG);
    rng
}
