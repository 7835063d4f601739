//! Compensated (Kahan) summation.

/// Kahan summation accumulator.
///
/// Keeps a running compensation term so that long series sums lose far less
/// precision than naive accumulation.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    err: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        KahanSum::default()
    }

    pub fn add(&mut self, value: f64) {
        let y = value - self.err;
        let t = self.sum + y;
        self.err = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}
