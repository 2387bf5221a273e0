//! Seed plumbing. Every random stage draws from a named substream of the run
//! seed, and every parallel loop draws from per-chunk streams so results do
//! not depend on the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Points are processed in fixed chunks of this size; each chunk owns one stream.
pub const CHUNK: usize = 4096;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the seed of a named substream (`"packing-cert"`, `"sampling"`, ...).
pub fn substream(seed: u64, name: &str) -> u64 {
    // FNV-1a over the name, then mixed with the seed
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix64(seed ^ splitmix64(h))
}

/// Generator for chunk `chunk` of a stream.
pub fn chunk_rng(stream_seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed);
    rng.set_stream(chunk);
    rng
}

/// Number of chunks needed for `n` items.
pub fn chunk_count(n: usize) -> usize {
    n.div_ceil(CHUNK)
}

/// Items handled by chunk `c` out of `n`.
pub fn chunk_len(n: usize, c: usize) -> usize {
    CHUNK.min(n - c * CHUNK)
}

/// Runs `f(rng, len)` on every chunk of `n` items in parallel and returns the
/// per-chunk results in chunk order, so reductions over them are
/// deterministic.
pub fn par_chunks<T, F>(n: usize, stream_seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    use rayon::prelude::*;
    (0..chunk_count(n))
        .into_par_iter()
        .map(|c| f(&mut chunk_rng(stream_seed, c as u64), chunk_len(n, c)))
        .collect()
}
