//! Counter-derived seeds and order-independent parallel reductions.
//!
//! Every replication gets its own 64-bit seed computed by hashing
//! `(master, task, index)`; no generator state is shared between workers.
//! Parallel work is split into fixed-size chunks whose partial results are
//! merged sequentially in chunk order, so results do not depend on the
//! number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type LabRng = ChaCha8Rng;

/// Replications per parallel chunk. Fixed so that reductions are reproducible.
pub const CHUNK: u64 = 256;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replication `index` of task `task` under `master`.
pub fn derive_seed(master: u64, task: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ task) ^ index)
}

pub fn rng_from_seed(seed: u64) -> LabRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Task tags, so that different experiments driven by one master seed draw
/// from unrelated streams.
pub mod task {
    pub const AX_MONTE_CARLO: u64 = 0x4158_4D43;
    pub const BLOCK_VARIANCE: u64 = 0x424C_4B56;
    pub const CLT: u64 = 0x434C_5400;
    pub const TRAJECTORY: u64 = 0x5452_414A;
    pub const MOMENT4: u64 = 0x4D4F_4D34;
    pub const BROWNIAN: u64 = 0x4252_4F57;
    pub const KS_SELFCHECK: u64 = 0x4B53_4348;
}

/// Run `fold` over replications `0..reps` in fixed-size chunks and merge the
/// chunk accumulators in order.
pub fn chunked_reduce<A, Init, Fold, Merge>(reps: u64, init: Init, fold: Fold, merge: Merge) -> A
where
    A: Send,
    Init: Fn() -> A + Sync,
    Fold: Fn(&mut A, u64) + Sync,
    Merge: Fn(&mut A, A),
{
    let chunks = reps.div_ceil(CHUNK);
    let partials: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            let end = ((c + 1) * CHUNK).min(reps);
            for r in c * CHUNK..end {
                fold(&mut acc, r);
            }
            acc
        })
        .collect();
    let mut total = init();
    for p in partials {
        merge(&mut total, p);
    }
    total
}

/// Ordered parallel map over replications.
pub fn replicate<T, F>(reps: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..reps).into_par_iter().map(f).collect()
}

/// Running sum and sum of squares.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, v: f64) {
        self.count += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn merge(&mut self, other: Moments) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    pub fn std_err(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}
