//! Seed-deterministic Monte-Carlo plumbing.
//!
//! Work is cut into fixed-size chunks. Chunk `k` draws from a ChaCha8 stream
//! seeded with the top-level seed and stream id `k`, so a run depends only on
//! `(seed, n_samples)` and never on how many worker threads execute it.
//! Partial results come back in chunk order and are reduced serially.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Samples per chunk.
pub const CHUNK: usize = 8192;

/// Independent generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Sub-seed `counter` of a top-level seed; used when one run needs several
/// independent Monte-Carlo passes.
pub fn derive_seed(seed: u64, counter: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = seed ^ counter.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `work(rng, count)` over `n` samples split into chunks, in parallel,
/// returning the per-chunk results in chunk order.
pub fn chunked<T, F>(n: usize, seed: u64, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|k| {
            let count = CHUNK.min(n - k * CHUNK);
            let mut rng = stream_rng(seed, k as u64);
            work(&mut rng, count)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn chunk_results_do_not_depend_on_thread_count() {
        let sum = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                chunked(50_000, 9, |rng, count| (0..count).map(|_| rng.random::<f64>()).sum::<f64>())
                    .into_iter()
                    .sum::<f64>()
            })
        };
        assert_eq!(sum(1).to_bits(), sum(4).to_bits());
    }

    #[test]
    fn chunk_sizes_cover_all_samples() {
        let counts = chunked(CHUNK * 2 + 5, 0, |_, count| count);
        assert_eq!(counts, vec![CHUNK, CHUNK, 5]);
        assert!(chunked(0, 0, |_, c| c).is_empty());
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
        assert_eq!(derive_seed(5, 3), derive_seed(5, 3));
    }
}
