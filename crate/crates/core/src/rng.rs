//! Reproducible random streams.
//!
//! Every random draw in the crate comes from a stream keyed by
//! `(seed, purpose, index)`. The seed and purpose select a ChaCha key and the
//! index selects the ChaCha stream, so draws for different purposes or
//! different Monte Carlo indices never overlap and can be generated in any
//! order (or on any worker) with identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Distinct purposes give independent streams
/// under the same user seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Init,
    Training,
    Perturbation,
    Redundancy,
    Shuffle,
    RandomExplainer,
    Sampling,
    Data,
    Custom(u64),
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Init => 0x01,
            Purpose::Training => 0x02,
            Purpose::Perturbation => 0x03,
            Purpose::Redundancy => 0x04,
            Purpose::Shuffle => 0x05,
            Purpose::RandomExplainer => 0x06,
            Purpose::Sampling => 0x07,
            Purpose::Data => 0x08,
            Purpose::Custom(t) => 0x100 ^ t.rotate_left(17),
        }
    }
}

#[inline]
pub(crate) fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix two 64-bit values into one; used to derive child seeds.
pub fn mix(a: u64, b: u64) -> u64 {
    let mut s = a ^ b.rotate_left(32) ^ 0xD6E8_FEB8_6659_FD93;
    splitmix64(&mut s)
}

/// Independent generator for `(seed, purpose, index)`.
pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut state = seed ^ purpose.tag().wrapping_mul(0xA076_1D64_78BD_642F);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Stable 64-bit fingerprint of a real vector (bit patterns, FNV-1a).
pub fn fingerprint(values: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for b in v.to_bits().to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01B3);
        }
    }
    h
}
