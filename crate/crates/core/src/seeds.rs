//! Deterministic seed derivation.
//!
//! Every random stream is keyed by `(master, stream, index)` so that trial
//! `i` draws the same numbers no matter which thread runs it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named streams so that, for example, adversary coin flips never shift the
/// realization draws of the same trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Realization = 1,
    Entry = 2,
    Adversary = 3,
    Arrivals = 4,
    Generator = 5,
    Sampling = 6,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(master: u64, stream: Stream, index: u64) -> u64 {
    splitmix(splitmix(splitmix(master) ^ stream as u64) ^ index)
}

pub fn rng(master: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, stream, index))
}
