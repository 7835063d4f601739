//! Numerical verification laboratory for the stability of ternary
//! homomorphisms under the generalized Jensen equation
//! `r f((sx + ty)/r) = s f(x) + t f(y)`.
//!
//! The crate builds near-additive and near-homomorphic maps on concrete
//! ternary Banach algebras, recovers their exact cores by the direct-method
//! iteration with certified geometric-series error bounds, and verifies the
//! structural conclusions (additivity, ratio scaling, ternary homomorphism
//! defect, complex linearity) at desk scale.
//!
//! Module map:
//!
//! * [`algebra`] — matrix and odd-polynomial ternary Banach algebras.
//! * [`control`] — control functions, series transforms, certified tails.
//! * [`hyers`] — the direct-method iteration and its verifiers.
//! * [`homstab`] — five-variable homomorphism stability and linearity.
//! * [`perturb`] — deterministic probe generators and calibration.
//! * [`report`] — byte-reproducible CSV/JSON reports.
//!
//! # Example
//!
//! Recover the additive core of a perturbed map on the 2x2 matrix algebra:
//!
//! ```
//! use hyerslab_core::*;
//!
//! let ctx = AlgebraContext::matrix_trivial(2)?;
//! let params = JensenParams::forward(2, 1, 1)?;
//! // f(x) = x + 0.1 ||x||^0.5 u(x), with u a seeded unit direction.
//! let probe = make_probe(
//!     AdditiveCore::Identity,
//!     Some(PerturbationSpec::power(0.1, 0.5, 42)),
//!     &ctx,
//! )?;
//! let phi = ControlFunction::power_pair(0.3, 0.5)?;
//! let mut rng = SplitMix64::new(1);
//! let x = random_element(&ctx, &mut rng);
//!
//! let point = hyers_limit(&probe, &params, &ctx, &phi, &x, 1e-8)?;
//! assert!(point.certified);
//! // The limit strips the perturbation and returns the identity core.
//! assert!(ctx.norm(&ctx.sub(&point.limit, &x)?)? <= 1e-8);
//! # Ok::<(), hyerslab_core::Error>(())
//! ```

pub mod algebra;
pub mod control;
pub mod error;
pub mod homstab;
pub mod hyers;
pub mod kahan;
pub mod parallel;
pub mod perturb;
pub mod report;
pub mod rng;
pub mod scalar;

pub use algebra::{AlgebraContext, AlgebraKind, Element, NormKind};
pub use control::{
    derivation_bound, derivation_bound_backward, phi_tilde_backward, phi_tilde_forward,
    power_bound_closed_form, ControlFunction, DecayHint, Direction, SeriesValue,
};
pub use error::{Error, Result};
pub use homstab::{
    cube_idempotent_generators, hom_residual, hom_residual_with_sign, recover_hom,
    smallest_admissible_m, unimodular_three_split, verify_complex_linearity, verify_generated_hom,
    verify_hom_defect, verify_scaling, HomReport, LinearityMode, ResidualSign, UnimodularTriple,
};
pub use hyers::{
    hyers_iterate, hyers_limit, hyers_limit_samples, jensen_residual, recovered_map,
    verify_additivity, verify_stability_bound, verify_uniqueness, HyersResult, JensenParams, Pivot,
    PointLimit, ProbeFunction,
};
pub use kahan::KahanSum;
pub use perturb::{
    calibrate_epsilon, make_exact_hom, make_probe, random_element, random_scaled_element,
    random_unitary, unit_direction, AdditiveCore, CalibrationShape, ExactHomSpec, PerturbationKind,
    PerturbationSpec,
};
pub use report::{CheckRow, Report, StabilityReport, StabilityRow};
pub use rng::SplitMix64;
pub use scalar::Scalar;
