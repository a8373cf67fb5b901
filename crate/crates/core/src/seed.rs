//! Deterministic seed derivation.
//!
//! Every random decision in a run draws from its own stream, derived from the
//! master seed plus a list of labels (agent name, round, purpose). Streams are
//! stable across processes and platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derives a 64-bit seed from `master` and an ordered list of labels.
pub fn derive(master: u64, labels: &[&str]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    for label in labels {
        // length prefix keeps ("ab","c") distinct from ("a","bc")
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label.as_bytes());
    }
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Seeded RNG used throughout the workspace.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shorthand for `rng(derive(master, labels))`.
pub fn stream(master: u64, labels: &[&str]) -> ChaCha8Rng {
    rng(derive(master, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derivation_is_stable_and_label_sensitive() {
        assert_eq!(derive(42, &["kim_s", "3"]), derive(42, &["kim_s", "3"]));
        assert_ne!(derive(42, &["kim_s", "3"]), derive(43, &["kim_s", "3"]));
        assert_ne!(derive(42, &["ab", "c"]), derive(42, &["a", "bc"]));
    }

    #[test]
    fn streams_replay() {
        let a: Vec<u32> = (0..8)
            .map(|_| 0)
            .scan(stream(7, &["x"]), |r, _: u32| Some(r.random()))
            .collect();
        let b: Vec<u32> = (0..8)
            .map(|_| 0)
            .scan(stream(7, &["x"]), |r, _: u32| Some(r.random()))
            .collect();
        assert_eq!(a, b);
    }
}
