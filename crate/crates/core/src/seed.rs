//! Stage-specific seed derivation.

use sha2::{Digest, Sha256};

/// Derives a seed for `stage` from the run seed. Stable across platforms and
/// releases, so artifacts stay reproducible.
pub fn derive_seed(seed: u64, stage: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(stage.as_bytes());
    hasher.update([0u8]);
    hasher.update(seed.to_le_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}
