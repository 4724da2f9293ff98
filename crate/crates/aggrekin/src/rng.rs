//! Small deterministic generator for reproducible sampling.
//!
//! Sampled tests and the transform-agreement batches must produce identical
//! results on every run and platform, so we use a fixed SplitMix64 stream
//! instead of an external RNG whose output may change between versions.

use crate::model::{ModelParams, State};

/// SplitMix64: passes standard statistical tests, one u64 of state.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Log-uniform in [lo, hi], lo > 0.
    pub fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        (self.uniform(lo.ln(), hi.ln())).exp()
    }
}

/// Draw an admissible state with `r` in `(0.2, scale]`, `q` in `[r, n r / 2]`
/// and `p` in `[0, n r - 2 q]`, so both constraints hold with margin drawn
/// uniformly at random.
pub fn random_admissible(params: &ModelParams, rng: &mut SplitMix64, scale: f64) -> State {
    let n = params.n() as f64;
    let r = rng.uniform(0.2, scale.max(0.4));
    let q = rng.uniform(r, n * r / 2.0);
    let p = rng.uniform(0.0, (n * r - 2.0 * q).max(0.0));
    State { p, q, r }
}
