use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

/// ChaCha20 keyed by a 64-bit seed with a 64-bit stream index; the word
/// position is the counter.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, stream, inner }
    }

    /// Stream for shard `shard` of a run tagged `purpose`.
    pub fn for_shard(seed: u64, purpose: u32, shard: u32) -> Self {
        Self::new(seed, ((purpose as u64) << 32) | shard as u64)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Number of 32-bit words consumed so far.
    pub fn counter(&self) -> u128 {
        self.inner.get_word_pos()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Fixed shard count: results depend on the seed only, never on the
/// number of worker threads.
pub const SHARDS: usize = 64;

/// Sample counts per shard; the first `n % SHARDS` shards take one extra.
pub fn shard_sizes(n: usize) -> Vec<usize> {
    (0..SHARDS).map(|s| n / SHARDS + usize::from(s < n % SHARDS)).collect()
}

/// Runs `work(rng, shard, count)` on every shard in parallel and returns
/// the results in shard order.
pub fn run_sharded<T, F>(seed: u64, purpose: u32, n: usize, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut RngStream, usize, usize) -> T + Sync,
{
    let sizes = shard_sizes(n);
    (0..SHARDS)
        .into_par_iter()
        .map(|s| {
            let mut rng = RngStream::for_shard(seed, purpose, s as u32);
            work(&mut rng, s, sizes[s])
        })
        .collect()
}
