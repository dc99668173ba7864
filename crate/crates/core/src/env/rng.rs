//! Seedable random source.
//!
//! Every stream is a ChaCha8 generator. A root seed plus a stream label
//! (an arbitrary `u64`) selects an independent ChaCha stream, so parallel
//! runs, or the environment and exploration halves of one run, never share
//! draws: `RandomSource::derive(seed, label)` is the splitting rule.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Well-known stream labels used by the training loops.
pub mod stream {
    pub const POLICY: u64 = 1;
    pub const ENVIRONMENT: u64 = 2;
    pub const INIT: u64 = 3;
    pub const REPLAY: u64 = 4;
    pub const INSTANCE: u64 = 5;
    pub const ORACLE: u64 = 6;
}

#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self::derive(seed, 0)
    }

    /// Independent stream `label` of root `seed`.
    pub fn derive(seed: u64, label: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(label);
        Self { seed, rng }
    }

    /// Child stream keyed by this source's root seed and two labels, used for
    /// per-episode or per-run sub-streams. Does not advance `self`.
    pub fn child(&self, label: u64, index: u64) -> Self {
        // splitmix-style mixing keeps (label, index) pairs apart
        let mut z = self.seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = z.wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
        z = (z ^ (z >> 30)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        Self::derive(z, label)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Index drawn from a discrete distribution given as `(outcome, prob)`
    /// pairs. The last outcome absorbs rounding slack.
    pub fn categorical(&mut self, row: &[(usize, f64)]) -> usize {
        let u = self.uniform();
        let mut acc = 0.0;
        for &(j, p) in row {
            acc += p;
            if u < acc {
                return j;
            }
        }
        row.last().map(|&(j, _)| j).unwrap_or(0)
    }

    pub(crate) fn inner(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}
