//! Seeded, chunked Monte Carlo.
//!
//! Sample indices are split into fixed chunks of [`CHUNK`] samples. Chunk `c`
//! draws from a ChaCha8 generator seeded with `seed` on stream `c`, and chunk
//! results are merged in chunk order. The output therefore depends on
//! `(seed, samples)` only; the worker count just sets how many threads
//! process chunks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Thread count used when the caller does not pick one.
pub const DEFAULT_WORKERS: usize = 8;

/// Samples per independently seeded chunk.
pub const CHUNK: u64 = 4096;

/// Reproducibility parameters of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedPlan {
    pub seed: u64,
    pub workers: usize,
}

impl SeedPlan {
    pub fn new(seed: u64, workers: usize) -> Self {
        SeedPlan {
            seed,
            workers: workers.max(1),
        }
    }

    pub fn single(seed: u64) -> Self {
        SeedPlan::new(seed, 1)
    }
}

/// Generator for chunk `chunk` of a run seeded with `seed`.
pub fn worker_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Sizes of the chunks covering `samples` samples.
pub fn chunk_sizes(samples: u64) -> Vec<u64> {
    let full = samples / CHUNK;
    let rest = samples % CHUNK;
    let mut sizes = vec![CHUNK; full as usize];
    if rest > 0 || sizes.is_empty() {
        sizes.push(rest);
    }
    sizes
}

/// Runs `work(rng, count)` on every chunk using `plan.workers` threads and
/// folds the chunk results left to right with `merge`.
pub fn run_sharded<T, W, M>(samples: u64, plan: SeedPlan, work: W, merge: M) -> T
where
    T: Send,
    W: Fn(&mut ChaCha8Rng, u64) -> T + Sync,
    M: Fn(T, T) -> T,
{
    let sizes = chunk_sizes(samples);
    let run = || -> Vec<T> {
        sizes
            .par_iter()
            .enumerate()
            .map(|(c, &count)| {
                let mut rng = worker_rng(plan.seed, c);
                work(&mut rng, count)
            })
            .collect()
    };
    let mut parts = match rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
    {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    };
    let first = parts.remove(0);
    parts.into_iter().fold(first, merge)
}
