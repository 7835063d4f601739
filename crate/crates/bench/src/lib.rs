//! Shared fixtures for the criterion benchmarks.

use hyerslab_core::*;

pub fn matrix_fixture(dim: usize, seed: u64) -> (AlgebraContext, Vec<Element>) {
    let ctx = AlgebraContext::matrix_trivial(dim).expect("dim >= 1");
    let mut rng = SplitMix64::new(seed);
    let elements = (0..64).map(|_| random_element(&ctx, &mut rng)).collect();
    (ctx, elements)
}

pub fn poly_fixture(seed: u64) -> (AlgebraContext, Vec<Element>) {
    let ctx = AlgebraContext::odd_polynomial();
    let mut rng = SplitMix64::new(seed);
    let elements = (0..64).map(|_| random_element(&ctx, &mut rng)).collect();
    (ctx, elements)
}

/// A calibrated noisy probe over the dim-2 matrix algebra.
pub fn probe_fixture() -> (AlgebraContext, JensenParams, ProbeFunction, ControlFunction) {
    let ctx = AlgebraContext::matrix_trivial(2).expect("dim >= 1");
    let params = JensenParams::forward(2, 1, 1).expect("valid ratio");
    let core = AdditiveCore::random_matrix_linear(2, 5);
    let probe =
        make_probe(core, Some(PerturbationSpec::power(0.1, 0.5, 6)), &ctx).expect("valid probe");
    let phi = ControlFunction::power_pair(0.3, 0.5).expect("valid control");
    (ctx, params, probe, phi)
}
