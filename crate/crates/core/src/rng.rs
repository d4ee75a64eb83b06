//! Deterministic per-task random streams.
//!
//! Every stream is a ChaCha8 generator keyed by SHA-256 of the master seed and
//! a list of labels, so a stream depends only on its own key and not on how
//! many other streams were drawn or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

pub fn stream(master_seed: u64, labels: &[&[u8]]) -> StreamRng {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    for l in labels {
        // length prefix keeps ("ab","c") distinct from ("a","bc")
        h.update((l.len() as u64).to_le_bytes());
        h.update(l);
    }
    let digest = h.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}

/// Stream for imputing one establishment-occupation panel.
pub fn panel_stream(master_seed: u64, estab_id: &str, soc: &str) -> StreamRng {
    stream(master_seed, &[b"panel", estab_id.as_bytes(), soc.as_bytes()])
}

/// Stream for one simulation replicate.
pub fn replicate_stream(master_seed: u64, replicate: usize) -> StreamRng {
    stream(master_seed, &[b"replicate", &(replicate as u64).to_le_bytes()])
}
