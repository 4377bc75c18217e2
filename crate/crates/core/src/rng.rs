//! Deterministic pseudorandom streams for every sampling routine in the crate.
//!
//! All randomness is produced by SplitMix64: the state advances by a fixed
//! odd constant (a counter) and each output is a finalizing hash of the
//! counter value. The generator is seeded per run, and independent
//! substreams are derived from (seed, stream index) so batches and episodes
//! can be evaluated in any order — or concurrently — without changing the
//! numbers they produce.

/// SplitMix64 generator (Steele, Lea & Flood 2014).
#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { state: seed }
    }

    /// Substream `index` of a run seeded with `seed`.
    ///
    /// The substream seed is itself a SplitMix64 hash of the pair, so
    /// substreams with nearby indices are statistically unrelated.
    pub fn substream(seed: u64, index: u64) -> Self {
        let base = mix(seed.wrapping_add(GOLDEN_GAMMA));
        Rng::new(mix(base ^ index.wrapping_mul(GOLDEN_GAMMA)))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix(self.state)
    }

    /// Uniform draw in [0, 1) with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in [lo, hi).
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal draw via the Marsaglia polar method.
    ///
    /// Rejection-based, so it costs a variable number of uniforms; it avoids
    /// trigonometric calls whose last-bit behavior differs across libms.
    pub fn normal(&mut self) -> f64 {
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                return u * (-2.0 * s.ln() / s).sqrt();
            }
        }
    }

    /// Bernoulli draw with success probability `p`.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Index draw from a probability vector (assumed to sum to 1).
    pub fn categorical(&mut self, probs: &[f64]) -> usize {
        let u = self.uniform();
        let mut acc = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        probs.len() - 1
    }
}
