//! Reproducible random streams.
//!
//! Every random draw is addressed by `(seed, domain, stream, position)`:
//! the ChaCha key is built from `seed` and `domain`, the stream id selects
//! one of 2⁶⁴ independent ChaCha streams, and draws within a trial are read
//! sequentially. A trial's values therefore depend only on its index, never
//! on which worker ran it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Separates the main run from auxiliary runs (pilot centering, test data,
/// random graph and region layouts).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Main = 0,
    Pilot = 1,
    Training = 2,
    Testing = 3,
    Probe = 4,
    Layout = 5,
}

pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    key[16..24].copy_from_slice(b"forestcc");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
