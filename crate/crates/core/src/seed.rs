//! Seed derivation.
//!
//! Every random stream in the crate comes from one master seed mixed with
//! a path of integers (edge indices, replicate numbers, ...). Streams never
//! depend on the order in which other streams were consumed, so work can be
//! split across threads without changing results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `path` into `master`.
pub fn derive(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng(master: u64, path: &[u64]) -> Rng {
    Rng::seed_from_u64(derive(master, path))
}

// Stream labels keep derived seeds of different subsystems apart.
pub(crate) const STREAM_SAMPLE: u64 = 0x5A4D;
pub(crate) const STREAM_SKEW: u64 = 0x5E37;
pub(crate) const STREAM_CYCLE: u64 = 0xC1C1;
pub(crate) const STREAM_POOL: u64 = 0x9001;
pub(crate) const STREAM_PERM: u64 = 0x9E27;
pub(crate) const STREAM_GRAPH: u64 = 0x6A9F;
pub(crate) const STREAM_OPT: u64 = 0x0971;
