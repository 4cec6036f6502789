//! Per-trajectory seed derivation.
//!
//! The mixing function is fixed and documented so external tooling can
//! reproduce trajectory streams (see `docs/seed_derivation.py`):
//!
//! ```text
//! state    = master_seed XOR ((index + 1) * 0x9E3779B97F4A7C15)   (mod 2^64)
//! words[i] = splitmix64(state), i = 0..3    (chained)
//! seed     = 32 bytes: words[0..4] little-endian
//! ```
//!
//! `(index + 1) * GOLDEN` is a bijection of the index (the multiplier is
//! odd), XOR with the master is a bijection, and the first splitmix64
//! output is a bijective finalizer, so the derivation is injective in the
//! index for any fixed master seed.

use cns_core::noise::TrajectoryRng;
use rand::SeedableRng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the 32-byte ChaCha seed for trajectory `index`.
pub fn derive_seed(master_seed: u64, index: u32) -> [u8; 32] {
    let mut state = master_seed ^ (u64::from(index).wrapping_add(1)).wrapping_mul(GOLDEN);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    seed
}

/// RNG for trajectory `index` of an experiment.
pub fn trajectory_rng(master_seed: u64, index: u32) -> TrajectoryRng {
    TrajectoryRng::from_seed(derive_seed(master_seed, index))
}
