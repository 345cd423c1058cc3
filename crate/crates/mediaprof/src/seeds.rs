//! Module seeds: the first eight bytes, little-endian, of
//! `SHA-256(master_seed as u64 LE || module name as UTF-8)`.

use sha2::{Digest, Sha256};

pub fn module_seed(master: u64, module: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(module.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}
