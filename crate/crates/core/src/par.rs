//! Deterministic chunked parallelism.
//!
//! Work over `n` items is cut into fixed-size chunks. Chunk `i` gets its own
//! ChaCha8 stream `i` under the master seed, and per-chunk results come back
//! in chunk order, so the output does not depend on how many rayon workers
//! picked the chunks up.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub(crate) const CHUNK_SIZE: usize = 1 << 16;

pub(crate) fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Runs `f(rng, len)` for each chunk and returns the results in chunk order.
pub(crate) fn map_chunks<T, F>(n: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    let chunks = n.div_ceil(CHUNK_SIZE);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK_SIZE.min(n - c * CHUNK_SIZE);
            let mut rng = chunk_rng(seed, c);
            f(&mut rng, len)
        })
        .collect()
}
