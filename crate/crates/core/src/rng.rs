//! Counter-based seeding.
//!
//! Everything random in the crate is addressed by a tuple of integers mixed
//! through [`mix64`]; no generator state is shared between replicas, sites
//! or instruction indices.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: a bijective avalanche mix of a 64-bit word.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a key into a seed. Order matters: `derive(derive(s, a), b)` and
/// `derive(derive(s, b), a)` differ.
#[inline]
pub fn derive(seed: u64, key: u64) -> u64 {
    mix64(mix64(seed) ^ key.wrapping_mul(GOLDEN).rotate_left(17))
}

/// Multiply-shift reduction of a uniform 64-bit word onto `0..bound`.
#[inline]
pub fn reduce(word: u64, bound: u64) -> u64 {
    ((word as u128 * bound as u128) >> 64) as u64
}

/// Uniform double in `[0, 1)` from the top 53 bits of a word.
#[inline]
pub fn unit_f64(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Threshold `t` such that a uniform word `u` satisfies `u < t` with
/// probability `p` (up to 2^-64).
pub fn threshold(p: f64) -> u64 {
    if p <= 0.0 {
        0
    } else if p >= 1.0 {
        u64::MAX
    } else {
        // 2^64 * p is exact in f64 for the purposes of a 64-bit comparison.
        let t = p * 18_446_744_073_709_551_616.0;
        if t >= u64::MAX as f64 {
            u64::MAX
        } else {
            t as u64
        }
    }
}

/// A stream generator for the quantities that do not need random access
/// (initial configurations, clocks, policy choices).
pub fn stream(seed: u64, stream_id: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, stream_id))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix_is_deterministic_and_spreads() {
        assert_eq!(mix64(0), mix64(0));
        assert_ne!(mix64(0), mix64(1));
        assert_ne!(derive(1, 2), derive(2, 1));
    }

    #[test]
    fn threshold_edges() {
        assert_eq!(threshold(0.0), 0);
        assert_eq!(threshold(1.0), u64::MAX);
        assert_eq!(threshold(0.5), 1u64 << 63);
    }

    #[test]
    fn reduce_stays_in_range() {
        for w in [0u64, 1, u64::MAX, 1 << 63] {
            assert!(reduce(w, 6) < 6);
        }
        assert_eq!(reduce(u64::MAX, 4), 3);
    }
}
