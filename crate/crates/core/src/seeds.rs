//! Deterministic seed derivation.
//!
//! Every random choice in the crate draws from a [`ChaCha8Rng`] seeded
//! through this module, so a single master seed pins the whole run. Derived
//! seeds mix the master seed with a domain string and an index through
//! splitmix64 steps, which keeps independent uses (partition shuffles, SGD
//! trials, poisoning draws, ...) from colliding even when the raw indices
//! coincide.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `master` for the given domain and index.
pub fn derive(master: u64, domain: &str, index: u64) -> u64 {
    // FNV-1a over the domain string, folded into the splitmix stream.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in domain.bytes() {
        h ^= u64::from(byte);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut state = master;
    let a = splitmix64(&mut state);
    state ^= h;
    let b = splitmix64(&mut state);
    state ^= index;
    let c = splitmix64(&mut state);
    a ^ b.rotate_left(17) ^ c
}

/// RNG for a derived seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
