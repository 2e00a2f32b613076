//! Random streams.
//!
//! Every replicate owns a private ChaCha8 stream. Replicate `i` of a run with
//! master seed `seed` uses the generator seeded by `seed` and positioned on
//! stream number `i`; ChaCha provides 2^64 non-overlapping streams per seed,
//! so replicate streams never share key material positions and a run is
//! reproducible regardless of how replicates are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random stream handed to laws and models.
pub type Stream = ChaCha8Rng;

/// Stream for replicate `index` under master seed `seed`.
pub fn replicate_stream(seed: u64, index: u64) -> Stream {
    let mut stream = ChaCha8Rng::seed_from_u64(seed);
    stream.set_stream(index);
    stream
}
