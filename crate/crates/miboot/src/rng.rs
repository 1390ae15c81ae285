//! Deterministic, splittable random number streams.
//!
//! A [`RngStream`] is a counter-based generator: every output is a pure
//! function of `(key, counter)`, so results never depend on thread
//! scheduling or call order across streams. New statistically independent
//! streams are derived by absorbing a lane label into the key with
//! [`RngStream::lane`]; nested resampling code keys its lanes as
//! `(run, bootstrap, imputation)` or `(run, imputation, bootstrap)` so any
//! single cell of a simulation can be replayed in isolation.

/// Weyl increment shared by the counter sequence (SplitMix64's constant).
const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
/// Salt absorbed with each lane label so `lane(0)` differs from the parent.
const LANE_SALT: u64 = 0xA076_1D64_78BD_642F;
/// Salt for the master seed so small seeds map to well-spread keys.
const SEED_SALT: u64 = 0x5851_F42D_4C95_7F2D;

/// SplitMix64 finalizer; full-avalanche 64-bit mixer.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A splittable random stream identified by a derived 64-bit key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RngStream {
    key: u64,
    counter: u64,
}

impl RngStream {
    /// Root stream for a master seed.
    pub fn from_seed(master_seed: u64) -> Self {
        RngStream { key: mix(master_seed ^ SEED_SALT), counter: 0 }
    }

    /// Derive the child stream for `label`.
    ///
    /// Children of the same parent with distinct labels, and children of
    /// distinct parents, carry independent keys. Deriving a lane never
    /// consumes randomness from the parent.
    #[must_use]
    pub fn lane(&self, label: u64) -> Self {
        let key = mix(self.key.wrapping_add(GOLDEN).wrapping_add(mix(label ^ LANE_SALT)));
        RngStream { key, counter: 0 }
    }

    /// Next raw 64-bit output.
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let c = self.counter;
        self.counter = self.counter.wrapping_add(1);
        mix(self.key.wrapping_add(c.wrapping_mul(GOLDEN)))
    }

    /// Uniform draw on the open interval (0, 1).
    ///
    /// 53-bit resolution, offset by half an ulp so 0 and 1 are excluded;
    /// safe under `ln(u)` without further guards.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform integer in `[0, n)` by rejection from the top of the range.
    #[inline]
    pub fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n >= 1);
        let n = n as u64;
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let v = self.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }
}
