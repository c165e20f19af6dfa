//! Per-iteration random substreams.
//!
//! Iteration `i` of lane `l` always reads ChaCha8 stream `i` keyed by
//! `(base_seed, l)`, so results do not depend on how iterations are spread
//! over workers. Lane 0 carries the shared stream; lane `k + 1` is used by
//! policy `k` when streams are not shared.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn substream(base_seed: u64, lane: u64, iteration: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&base_seed.to_le_bytes());
    key[8..16].copy_from_slice(&lane.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(iteration);
    rng
}
