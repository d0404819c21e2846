//! Deterministic seed derivation.
//!
//! All randomness in the engine flows from explicit `u64` seeds. Derived
//! seeds are computed by hashing, so any (campaign seed, context, index)
//! triple maps to the same child seed on every platform and for any
//! evaluation order.

use sha2::{Digest, Sha256};

/// Derive a child seed from a parent seed, a context tag and an index.
pub fn derive(seed: u64, tag: &str, index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(tag.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// Derive a child seed from a parent seed and two string contexts.
///
/// Used for per-(mutant, sample) evaluation seeds where the mutant is
/// identified by name rather than by position.
pub fn derive2(seed: u64, tag: &str, sub: &str, index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(tag.as_bytes());
    hasher.update([0u8]);
    hasher.update(sub.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}
