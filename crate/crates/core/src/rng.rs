//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by a
//! 64-bit seed, with a separate stream per `(label, index)` pair. Two draws
//! that use different labels never share keystream, so adding a new random
//! component does not perturb the existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub const SIGNS: &str = "signs";
pub const SAMPLING: &str = "sampling";
pub const PROJECTION: &str = "projection";
pub const COLUMNS: &str = "columns";
pub const POWER: &str = "power-iteration";
pub const TRIAL: &str = "trial";

/// 64-bit FNV-1a. Stable across platforms and releases, unlike `DefaultHasher`.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn stream_id(label: &str, index: u64) -> u64 {
    fnv1a(label.as_bytes()) ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Generator for stream `(label, index)` under `seed`.
pub fn stream(seed: u64, label: &str, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(label, index));
    rng
}

/// Derives a child seed, used when one seed has to fan out into independent
/// trials (best-of-m, ensembles).
pub fn derive_seed(seed: u64, label: &str, index: u64) -> u64 {
    use rand::RngCore;
    stream(seed, label, index).next_u64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn streams_are_reproducible() {
        let draw = || {
            let mut r = stream(7, SIGNS, 0);
            (0..8).map(|_| r.next_u64()).collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn labels_and_indices_separate_streams() {
        let x = stream(7, SIGNS, 0).next_u64();
        assert_ne!(x, stream(7, SAMPLING, 0).next_u64());
        assert_ne!(x, stream(7, SIGNS, 1).next_u64());
        assert_ne!(x, stream(8, SIGNS, 0).next_u64());
    }
}
