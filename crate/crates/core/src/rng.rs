//! Deterministic seeded randomness.
//!
//! SplitMix64 with the published constants; the same seed yields the same
//! stream on every platform, which is what makes experiment reports
//! byte-reproducible. The generator is splittable: [`SplitMix64::split`]
//! derives an independent child stream.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX2: u64 = 0x94D0_49BB_1331_11EB;

/// SplitMix64 pseudo-random generator.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix(self.state)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[-1, 1)`.
    pub fn next_symmetric(&mut self) -> f64 {
        2.0 * self.next_f64() - 1.0
    }

    /// Derive an independent child stream.
    pub fn split(&mut self) -> SplitMix64 {
        SplitMix64 {
            state: mix(self.next_u64()),
        }
    }
}

/// The SplitMix64 finalizer.
fn mix(z: u64) -> u64 {
    let z = (z ^ (z >> 30)).wrapping_mul(MIX1);
    let z = (z ^ (z >> 27)).wrapping_mul(MIX2);
    z ^ (z >> 31)
}

/// Fold a value into a running hash using the same mixing function.
///
/// Used to derive probe-direction seeds from `(seed, quantized ray)` keys.
pub fn fold(hash: u64, value: u64) -> u64 {
    mix(hash.wrapping_add(GAMMA) ^ value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_stream() {
        // First outputs for seed 1234567, cross-checked against the
        // published SplitMix64 reference implementation.
        let mut rng = SplitMix64::new(1234567);
        let got: Vec<u64> = (0..3).map(|_| rng.next_u64()).collect();
        assert_eq!(
            got,
            vec![
                6457827717110365317,
                3203168211198807973,
                9817491932198370423
            ]
        );
    }

    #[test]
    fn same_seed_same_stream() {
        let mut a = SplitMix64::new(42);
        let mut b = SplitMix64::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn f64_range() {
        let mut rng = SplitMix64::new(7);
        for _ in 0..1000 {
            let v = rng.next_f64();
            assert!((0.0..1.0).contains(&v));
            let s = rng.next_symmetric();
            assert!((-1.0..1.0).contains(&s));
        }
    }

    #[test]
    fn split_streams_differ() {
        let mut parent = SplitMix64::new(9);
        let mut child = parent.split();
        let a: Vec<u64> = (0..8).map(|_| parent.next_u64()).collect();
        let b: Vec<u64> = (0..8).map(|_| child.next_u64()).collect();
        assert_ne!(a, b);
    }

    #[test]
    fn fold_is_deterministic_and_sensitive() {
        let h1 = fold(fold(0, 1), 2);
        let h2 = fold(fold(0, 1), 2);
        let h3 = fold(fold(0, 2), 1);
        assert_eq!(h1, h2);
        assert_ne!(h1, h3);
    }
}
