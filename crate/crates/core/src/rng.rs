//! Seeded sub-stream derivation.
//!
//! Every random quantity in a run is drawn from a stream keyed by
//! `(seed, epoch, label)`. Toggling one consumer never shifts the draws seen
//! by another, which keeps paired comparisons and ablations clean.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// Derive an independent stream for `(seed, epoch, label)`.
pub fn stream(seed: u64, epoch: u64, label: &str) -> StreamRng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(epoch.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}
