//! Counter-based seed derivation.
//!
//! Every random stream in a simulation is addressed by a root seed plus a
//! path of integer tags (trial index, active-user count, stream purpose).
//! Derivation is a pure function of that path, so parallel trials never
//! share a stream and results do not depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// Stream purposes inside a single Monte-Carlo trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    /// Message draws, preamble and slot choices.
    Users = 1,
    /// Fading gains.
    Fading = 2,
    /// Receiver noise.
    Noise = 3,
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `root` and an ordered list of tags.
pub fn derive_seed(root: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(root), |acc, &t| splitmix64(acc ^ splitmix64(t.wrapping_add(GOLDEN))))
}

/// Opens the generator for `stream` of the trial identified by `trial_seed`.
pub fn stream_rng(trial_seed: u64, stream: Stream) -> SimRng {
    let mut rng = SimRng::seed_from_u64(trial_seed);
    rng.set_stream(stream as u64);
    rng
}

/// Generator for a fixed seed, stream 0.
pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
