//! Seed derivation.
//!
//! Every random stream in the crate comes from one root seed. A stream is
//! identified by a `domain` (which subsystem draws from it) and an `index`
//! (trial or sample number). The ChaCha key is the root seed mixed with the
//! domain through SplitMix64; the index selects the ChaCha stream. Streams are
//! therefore independent of the order in which they are consumed, so serial
//! and parallel ensembles produce identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DOMAIN_PREDECOHERENCE: u64 = 0x7072_6564_6563_6f68;
pub const DOMAIN_COLLAPSE: u64 = 0x636f_6c6c_6170_7365;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// RNG for stream `index` of `domain` under `root`.
pub fn stream(root: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut state = root ^ domain;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
