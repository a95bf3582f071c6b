//! Seeded substreams, Gaussian increments and order-fixed reductions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Paths per accumulation block. Fixed so reductions do not depend on worker count.
pub const BLOCK: usize = 128;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A random substream identified by (master seed, stream id, word offset).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub id: u64,
    pub counter: u64,
}

impl RngStream {
    pub fn new(seed: u64, id: u64) -> Self {
        Self { seed, id, counter: 0 }
    }

    /// Generator positioned at this stream's counter.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut state = self.seed ^ splitmix64(&mut self.id.clone());
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.id);
        rng.set_word_pos(self.counter as u128);
        rng
    }
}

/// `n` i.i.d. N(0, dt) variates drawn from `stream`.
pub fn gaussian_increments(stream: RngStream, n: usize, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Grid(format!("dt must be > 0, got {dt}")));
    }
    let sd = dt.sqrt();
    let mut rng = stream.rng();
    Ok((0..n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect())
}

/// Sum in a fixed binary tree; identical bits for identical input order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().fold(0.0, |a, &b| a + b);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample mean and standard error of the mean.
pub fn reduce_mean_se(xs: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::InsufficientSamples(n));
    }
    let mean = pairwise_sum(xs) / n as f64;
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    Ok((mean, (var / n as f64).sqrt()))
}

/// Mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub se: f64,
    pub n: u64,
}

/// Streaming mean/variance (Welford), mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&self, other: &Moments) -> Moments {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let (na, nb) = (self.n as f64, other.n as f64);
        Moments {
            n,
            mean: self.mean + d * nb / n as f64,
            m2: self.m2 + other.m2 + d * d * na * nb / n as f64,
        }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn stat(&self) -> Stat {
        let se = if self.n >= 2 {
            (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
        } else {
            f64::NAN
        };
        let mean = if self.n == 0 { f64::NAN } else { self.mean };
        Stat { mean, se, n: self.n }
    }
}

/// Element-wise moment accumulators with a fixed-order merge.
pub trait Mergeable: Send + Sized {
    fn merge(self, other: Self) -> Self;
}

impl Mergeable for Vec<Moments> {
    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.iter_mut().zip(other.iter()) {
            *a = a.merge(b);
        }
        self
    }
}

fn tree_merge<A: Mergeable>(mut parts: Vec<A>) -> Option<A> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a.merge(b)),
                None => next.push(a),
            }
        }
        parts = next;
    }
    parts.into_iter().next()
}

/// Accumulate over `n_paths` in blocks of [`BLOCK`] paths, in parallel,
/// then merge the blocks pairwise in block order.
pub fn block_reduce<A, F>(n_paths: usize, init: impl Fn() -> A + Sync, visit: F) -> Option<A>
where
    A: Mergeable,
    F: Fn(&mut A, usize) + Sync,
{
    let n_blocks = n_paths.div_ceil(BLOCK);
    let parts: Vec<A> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = init();
            for p in b * BLOCK..((b + 1) * BLOCK).min(n_paths) {
                visit(&mut acc, p);
            }
            acc
        })
        .collect();
    tree_merge(parts)
}

/// Ordered parallel map over path indices.
pub fn par_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}

/// Run `f` on a pool with `threads` workers (all cores when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    match builder.build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
