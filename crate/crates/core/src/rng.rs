//! Reproducible random streams.
//!
//! Every experiment is driven by one master seed. Independent streams for
//! trials, operator blocks, channel noise and Monte Carlo pools are derived
//! from the master seed and a short path of counters, so results do not
//! depend on the order in which work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the toolkit.
pub type Rng = ChaCha8Rng;

/// Stream labels, used as the first path element when deriving streams.
pub mod purpose {
    pub const MESSAGE: u64 = 1;
    pub const OPERATOR: u64 = 2;
    pub const CHANNEL: u64 = 3;
    pub const SE_POOL: u64 = 4;
    pub const POTENTIAL_POOL: u64 = 5;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a 64-bit sub-seed from a master seed and a counter path.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    let mut state = seed;
    let mut acc = splitmix64(&mut state);
    for &p in path {
        state ^= p.wrapping_mul(0xD6E8_FEB8_6659_FD93).rotate_left(17) ^ acc;
        acc = splitmix64(&mut state);
    }
    acc
}

/// A generator for the stream identified by `(seed, path)`.
pub fn stream(seed: u64, path: &[u64]) -> Rng {
    let mut state = derive_seed(seed, path);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    Rng::from_seed(key)
}
