//! Small numeric utilities shared across modules.

/// Compensated (Kahan–Neumaier) accumulator.
///
/// Weighted level sums mix terms whose magnitudes differ by many orders of
/// magnitude; naive summation loses the small terms. This accumulator keeps
/// a running compensation term so the result is accurate to a few ulps of
/// the true sum regardless of ordering.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    /// A fresh accumulator holding 0.
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one term.
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    /// The compensated total.
    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// SplitMix64 step: maps a seed to a well-mixed 64-bit value.
///
/// Used to derive independent sub-seeds (per point, per worker) from one
/// master seed without overlapping streams.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the `index`-th sub-seed from a master seed.
pub fn subseed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(1)))
}
