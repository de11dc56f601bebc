//! Deterministic parallel random streams.
//!
//! Work is cut into fixed-size chunks whose boundaries depend only on the
//! sample count. Chunk `k` draws from ChaCha8 stream `k` of the run seed, and
//! results are reassembled in chunk order, so output is independent of the
//! number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Draws per chunk.
pub(crate) const CHUNK_SIZE: usize = 4096;

pub(crate) fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Runs `work(rng, len)` for every chunk of `total` draws and returns the
/// per-chunk results in chunk order.
pub(crate) fn map_chunks<T, F>(total: usize, seed: u64, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    let chunks = total.div_ceil(CHUNK_SIZE);
    (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let len = CHUNK_SIZE.min(total - chunk * CHUNK_SIZE);
            let mut rng = chunk_rng(seed, chunk);
            work(&mut rng, len)
        })
        .collect()
}
