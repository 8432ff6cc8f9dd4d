//! Random number streams.
//!
//! Every chain is driven by ChaCha20 keyed with the 64-bit master seed;
//! replication `r` reads stream `r` of that key, so streams never overlap and
//! can be generated in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type ChainRng = ChaCha20Rng;

/// Stream reserved for long-run pseudo-truth runs.
pub const TRUTH_STREAM: u64 = u64::MAX;

pub fn stream(master_seed: u64, index: u64) -> ChainRng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

pub fn seeded(seed: u64) -> ChainRng {
    stream(seed, 0)
}
