//! Stable seed derivation for independent random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Hashes a master seed, a tag and a list of indices into a 64-bit seed.
///
/// The result only depends on its inputs, so adding streams elsewhere never
/// perturbs existing ones.
pub fn derive_seed(master: u64, tag: &str, indices: &[u64]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update((tag.len() as u64).to_le_bytes());
    hasher.update(tag.as_bytes());
    for i in indices {
        hasher.update(i.to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn stream(master: u64, tag: &str, indices: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tag, indices))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinct_inputs_give_distinct_seeds() {
        let a = derive_seed(1, "ris", &[0, 1]);
        assert_eq!(a, derive_seed(1, "ris", &[0, 1]));
        assert_ne!(a, derive_seed(2, "ris", &[0, 1]));
        assert_ne!(a, derive_seed(1, "bs", &[0, 1]));
        assert_ne!(a, derive_seed(1, "ris", &[1, 0]));
        // tag/index boundaries do not alias
        assert_ne!(derive_seed(0, "a", &[]), derive_seed(0, "", &[0x61]));
    }
}
