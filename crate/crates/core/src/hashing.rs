//! Fixed 64-bit hash functions and seed derivation.
//!
//! Every constant here is frozen: embeddings, cohort samples and splits are
//! only reproducible across runs and platforms as long as these values stay
//! the same.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a 64-bit offset basis.
pub const FNV_OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
/// FNV-1a 64-bit prime.
pub const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
/// Alternate offset basis used by the sign hash.
pub const SIGN_OFFSET_BASIS: u64 = 0x6c62_272e_07bb_0142;

/// FNV-1a over `bytes` starting from `basis`.
pub fn fnv1a64_with_basis(bytes: &[u8], basis: u64) -> u64 {
    bytes
        .iter()
        .fold(basis, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Plain FNV-1a 64.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    fnv1a64_with_basis(bytes, FNV_OFFSET_BASIS)
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Bucket hash for feature hashing: `fnv1a64(feature)`.
pub fn bucket_hash(feature: &str) -> u64 {
    fnv1a64(feature.as_bytes())
}

/// Sign hash for feature hashing: `mix64(fnv1a64 with SIGN_OFFSET_BASIS)`.
/// The feature contributes `-1` when the top bit is set, `+1` otherwise.
pub fn sign_hash(feature: &str) -> u64 {
    mix64(fnv1a64_with_basis(feature.as_bytes(), SIGN_OFFSET_BASIS))
}

/// Derive a sub-seed from a global seed and a path of labels, e.g.
/// `derive_seed(seed, &["cohort", "vegan", "thinking"])`.
///
/// Labels are length-prefixed so `["ab", "c"]` and `["a", "bc"]` differ.
pub fn derive_seed(global: u64, labels: &[&str]) -> u64 {
    labels
        .iter()
        .fold(mix64(global ^ 0x9e37_79b9_7f4a_7c15), |state, label| {
            let len = (label.len() as u64).to_le_bytes();
            let h = fnv1a64_with_basis(label.as_bytes(), fnv1a64(&len));
            mix64(state ^ h)
        })
}

/// RNG used everywhere randomness is needed.
pub fn rng_for(global: u64, labels: &[&str]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(global, labels))
}
