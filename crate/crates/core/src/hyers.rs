//! The direct-method machinery for the generalized Jensen equation
//! `r f((sx + ty)/r) = s f(x) + t f(y)`.
//!
//! A map whose Jensen residual is dominated by a summable control function
//! has an additive core, recovered as the limit of the rescaled iterates
//! `rho^-n f(rho^n x)` (forward) or `rho^n f(rho^-n x)` (backward), where
//! `rho` is the ratio of `r` to the pivot coefficient. Convergence is
//! certified by the telescoping Cauchy tail computed from the control
//! function, never by observed successive differences; the observed step is
//! recorded only as a sanity cross-check.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::algebra::{AlgebraContext, Element};
use crate::control::{
    self, derivation_bound, derivation_bound_backward, phi_tilde_backward, phi_tilde_forward,
    ControlFunction, Direction,
};
use crate::error::{Error, Result};
use crate::report::{Report, StabilityReport, StabilityRow};

/// Default iteration cap keeping `rho^n` comfortably inside f64 range.
pub const DEFAULT_N_CAP: u32 = 64;

/// Which coefficient the iteration contracts with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pivot {
    /// Iterate with ratio `r/s`, substituting `y = 0`.
    PivotS,
    /// Iterate with ratio `r/t`, substituting `x = 0`.
    PivotT,
}

/// The constants of the generalized Jensen equation plus iteration choices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JensenParams {
    pub r: u32,
    pub s: u32,
    pub t: u32,
    pub direction: Direction,
    pub pivot: Pivot,
    pub n_cap: u32,
}

impl JensenParams {
    pub fn new(r: u32, s: u32, t: u32, direction: Direction, pivot: Pivot) -> Result<Self> {
        if r < 1 || s < 1 || t < 1 {
            return Err(Error::InvalidParameter(
                "jensen constants must be positive integers".into(),
            ));
        }
        let contraction = match pivot {
            Pivot::PivotS => s,
            Pivot::PivotT => t,
        };
        if contraction == r {
            return Err(Error::InvalidParameter(format!(
                "pivot coefficient {contraction} equals r; the iteration ratio must differ from 1"
            )));
        }
        Ok(JensenParams {
            r,
            s,
            t,
            direction,
            pivot,
            n_cap: DEFAULT_N_CAP,
        })
    }

    /// Forward iteration pivoting on `s`.
    pub fn forward(r: u32, s: u32, t: u32) -> Result<Self> {
        JensenParams::new(r, s, t, Direction::Forward, Pivot::PivotS)
    }

    /// Backward iteration pivoting on `s`.
    pub fn backward(r: u32, s: u32, t: u32) -> Result<Self> {
        JensenParams::new(r, s, t, Direction::Backward, Pivot::PivotS)
    }

    pub fn with_n_cap(mut self, n_cap: u32) -> Self {
        self.n_cap = n_cap.max(1);
        self
    }

    /// The pivot coefficient the ratio contracts with.
    pub fn contraction(&self) -> u32 {
        match self.pivot {
            Pivot::PivotS => self.s,
            Pivot::PivotT => self.t,
        }
    }

    pub fn ratio(&self) -> f64 {
        self.r as f64 / self.contraction() as f64
    }

    /// `(r/c)^n` via exact integer powers divided once in double precision.
    ///
    /// Falls back to `powi` only when the integer power overflows `u128`.
    pub fn ratio_pow(&self, n: i32) -> f64 {
        let (num, den) = if n >= 0 {
            (self.r as u128, self.contraction() as u128)
        } else {
            (self.contraction() as u128, self.r as u128)
        };
        let k = n.unsigned_abs();
        match (num.checked_pow(k), den.checked_pow(k)) {
            (Some(a), Some(b)) => a as f64 / b as f64,
            _ => (num as f64 / den as f64).powi(k as i32),
        }
    }

    /// Restrict a control function to its `(x, y)` pair and orient it so
    /// the contracted slot is first, matching the pivot choice.
    pub fn oriented_pair(&self, phi: &ControlFunction) -> ControlFunction {
        let pair = phi.restrict_to_pair();
        match self.pivot {
            Pivot::PivotS => pair,
            Pivot::PivotT => pair.swap_xy(),
        }
    }
}

/// Evaluation contract of a map under test.
pub type ProbeHandle = Arc<dyn Fn(&Element) -> Result<Element> + Send + Sync>;

/// The map under test. Construction enforces `f(0) = 0` exactly.
#[derive(Clone)]
pub struct ProbeFunction {
    handle: ProbeHandle,
    label: String,
}

impl std::fmt::Debug for ProbeFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ProbeFunction({})", self.label)
    }
}

impl ProbeFunction {
    pub fn new<F>(ctx: &AlgebraContext, label: impl Into<String>, handle: F) -> Result<Self>
    where
        F: Fn(&Element) -> Result<Element> + Send + Sync + 'static,
    {
        let probe = ProbeFunction {
            handle: Arc::new(handle),
            label: label.into(),
        };
        let at_zero = probe.eval(&ctx.zero())?;
        if ctx.norm(&at_zero)? != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "probe '{}' violates f(0) = 0",
                probe.label
            )));
        }
        Ok(probe)
    }

    /// Build a probe without the `f(0) = 0` check. Meant for synthetic
    /// negative controls that deliberately violate the hypotheses.
    pub fn new_unchecked<F>(label: impl Into<String>, handle: F) -> Self
    where
        F: Fn(&Element) -> Result<Element> + Send + Sync + 'static,
    {
        ProbeFunction {
            handle: Arc::new(handle),
            label: label.into(),
        }
    }

    pub fn eval(&self, x: &Element) -> Result<Element> {
        (self.handle)(x)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// The recovered limit at a single point, with its certification data.
#[derive(Clone, Debug)]
pub struct PointLimit {
    pub limit: Element,
    pub n_used: u32,
    pub tail_bound: f64,
    pub certified: bool,
    /// Norm of the last observed iterate step (sanity cross-check only).
    pub observed_step: f64,
}

/// Recovered limits over a set of sample points.
#[derive(Clone, Debug, Default)]
pub struct HyersResult {
    pub limits: BTreeMap<u64, PointLimit>,
}

impl HyersResult {
    pub fn certified(&self) -> bool {
        self.limits.values().all(|p| p.certified)
    }

    pub fn max_n_used(&self) -> u32 {
        self.limits.values().map(|p| p.n_used).max().unwrap_or(0)
    }

    pub fn get(&self, id: u64) -> Option<&PointLimit> {
        self.limits.get(&id)
    }
}

/// Jensen residual `||r f((sx + ty)/r) - s f(x) - t f(y)||`.
pub fn jensen_residual(
    f: &ProbeFunction,
    params: &JensenParams,
    ctx: &AlgebraContext,
    x: &Element,
    y: &Element,
) -> Result<f64> {
    let sx = ctx.scale(params.s as f64, x)?;
    let ty = ctx.scale(params.t as f64, y)?;
    let arg = ctx.scale(1.0 / params.r as f64, &ctx.add(&sx, &ty)?)?;
    let lhs = ctx.scale(params.r as f64, &f.eval(&arg)?)?;
    let fx = ctx.scale(params.s as f64, &f.eval(x)?)?;
    let fy = ctx.scale(params.t as f64, &f.eval(y)?)?;
    ctx.norm(&ctx.sub(&ctx.sub(&lhs, &fx)?, &fy)?)
}

/// The `n`-th rescaled iterate: `rho^-n f(rho^n x)` forward,
/// `rho^n f(rho^-n x)` backward.
pub fn hyers_iterate(
    f: &ProbeFunction,
    params: &JensenParams,
    ctx: &AlgebraContext,
    x: &Element,
    n: u32,
) -> Result<Element> {
    if n > params.n_cap {
        return Err(Error::CapExceeded(n));
    }
    let exp = n as i32;
    let (arg_scale, val_scale) = match params.direction {
        Direction::Forward => (params.ratio_pow(exp), params.ratio_pow(-exp)),
        Direction::Backward => (params.ratio_pow(-exp), params.ratio_pow(exp)),
    };
    let scaled = ctx.scale(arg_scale, x)?;
    ctx.scale(val_scale, &f.eval(&scaled)?)
}

/// Iterate at `x` until the control-function Cauchy tail certifies the
/// distance to the limit is below `tol`, or the cap is reached (in which
/// case the best estimate is returned uncertified).
pub fn hyers_limit(
    f: &ProbeFunction,
    params: &JensenParams,
    ctx: &AlgebraContext,
    phi: &ControlFunction,
    x: &Element,
    tol: f64,
) -> Result<PointLimit> {
    if tol <= 0.0 {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let pair = params.oriented_pair(phi);
    let x_norm = ctx.norm(x)?;
    let mut chosen: Option<(u32, f64, bool)> = None;
    for n in 0..=params.n_cap {
        let (tail, tail_certified) = control::derivation_tail(
            &pair,
            params.r,
            params.contraction(),
            x_norm,
            n,
            params.direction,
            tol,
        )?;
        if tail <= tol {
            chosen = Some((n, tail, tail_certified));
            break;
        }
    }
    let (n_used, tail_bound, certified) = match chosen {
        Some((n, tail, tail_certified)) => (n, tail, tail_certified),
        None => {
            let (tail, _) = control::derivation_tail(
                &pair,
                params.r,
                params.contraction(),
                x_norm,
                params.n_cap,
                params.direction,
                tol,
            )?;
            (params.n_cap, tail, false)
        }
    };
    let limit = hyers_iterate(f, params, ctx, x, n_used)?;
    let observed_step = if n_used == 0 {
        0.0
    } else {
        let prev = hyers_iterate(f, params, ctx, x, n_used - 1)?;
        ctx.norm(&ctx.sub(&limit, &prev)?)?
    };
    Ok(PointLimit {
        limit,
        n_used,
        tail_bound,
        certified,
        observed_step,
    })
}

/// [`hyers_limit`] over a set of identified sample points.
pub fn hyers_limit_samples(
    f: &ProbeFunction,
    params: &JensenParams,
    ctx: &AlgebraContext,
    phi: &ControlFunction,
    samples: &[(u64, Element)],
    tol: f64,
) -> Result<HyersResult> {
    let mut limits = BTreeMap::new();
    for (id, x) in samples {
        limits.insert(*id, hyers_limit(f, params, ctx, phi, x, tol)?);
    }
    Ok(HyersResult { limits })
}

/// Wrap the recovered limit as a probe function evaluating `T(x)` on demand.
pub fn recovered_map(
    f: &ProbeFunction,
    params: &JensenParams,
    ctx: &AlgebraContext,
    phi: &ControlFunction,
    tol: f64,
) -> Result<ProbeFunction> {
    let f = f.clone();
    let params = *params;
    let inner_ctx = ctx.clone();
    let phi = phi.clone();
    let label = format!("limit[{}]", f.label());
    ProbeFunction::new(ctx, label, move |x| {
        hyers_limit(&f, &params, &inner_ctx, &phi, x, tol).map(|p| p.limit)
    })
}

/// Check `||f(x) - T(x)||` against the telescoping bound and report the
/// stated series bound alongside.
pub fn verify_stability_bound(
    f: &ProbeFunction,
    t: &HyersResult,
    phi: &ControlFunction,
    params: &JensenParams,
    ctx: &AlgebraContext,
    samples: &[(u64, Element)],
) -> Result<StabilityReport> {
    if !t.certified() {
        return Err(Error::NotCertified);
    }
    let pair = params.oriented_pair(phi);
    let (r, c) = (params.r, params.contraction());
    let mut report = StabilityReport::default();
    for (id, x) in samples {
        let point = t.get(*id).ok_or_else(|| {
            Error::InvalidParameter(format!("sample {id} missing from the recovered limit"))
        })?;
        let x_norm = ctx.norm(x)?;
        let residual = ctx.norm(&ctx.sub(&f.eval(x)?, &point.limit)?)?;
        let app = match params.direction {
            Direction::Forward => derivation_bound(&pair, r, c, x_norm, None, 1e-12)?,
            Direction::Backward => derivation_bound_backward(&pair, r, c, x_norm, None, 1e-12)?,
        };
        let tilde = match params.direction {
            Direction::Forward => phi_tilde_forward(&pair, r, c, &[x_norm, x_norm], 1e-12)?,
            Direction::Backward => phi_tilde_backward(&pair, r, c, &[x_norm, x_norm], 1e-12)?,
        };
        let bound_app = app.upper();
        let pass = residual <= bound_app + point.tail_bound + 1e-9;
        report.rows.push(StabilityRow {
            sample_id: *id,
            x_norm,
            residual,
            bound_app,
            bound_phitilde: tilde.upper(),
            n_used: point.n_used,
            certified: point.certified,
            pass,
        });
    }
    Ok(report)
}

/// Compare two recovered limits against the uniqueness tail
/// `2 sum_{k>=j} rho^-k phi(rho^k x, rho^k x) / r` for `j = 0..=j_max`.
pub fn verify_uniqueness(
    t: &HyersResult,
    t_prime: &HyersResult,
    phi: &ControlFunction,
    params: &JensenParams,
    ctx: &AlgebraContext,
    samples: &[(u64, Element)],
    j_max: u32,
) -> Result<Report> {
    let pair = params.oriented_pair(phi);
    let (r, c) = (params.r, params.contraction());
    let mut report = Report::new();
    for (id, x) in samples {
        let (a, b) = match (t.get(*id), t_prime.get(*id)) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "sample {id} missing from one of the recovered limits"
                )))
            }
        };
        let diff = ctx.norm(&ctx.sub(&a.limit, &b.limit)?)?;
        let x_norm = ctx.norm(x)?;
        let mut prev_tail = f64::INFINITY;
        for j in 0..=j_max {
            let (tail, _) = control::phi_tilde_tail(
                &pair,
                r,
                c,
                &[x_norm, x_norm],
                j,
                params.direction,
                1e-12,
            )?;
            let bound = 2.0 * tail + a.tail_bound + b.tail_bound;
            report.push(&format!("uniqueness_j{j}"), *id, diff, bound);
            if j > 0 && x_norm > 0.0 {
                // Tails must shrink strictly from one index to the next.
                report.push(&format!("uniqueness_tail_decay_j{j}"), *id, tail, prev_tail);
            }
            prev_tail = tail;
        }
    }
    Ok(report)
}

/// Check additivity of a map: `||T(x+y) - T(x) - T(y)|| <= tol (1 + ||x|| + ||y||)`
/// over sampled pairs, plus `T(0) = 0`.
pub fn verify_additivity(
    t: &ProbeFunction,
    ctx: &AlgebraContext,
    pairs: &[(Element, Element)],
    tol: f64,
) -> Result<Report> {
    let mut report = Report::new();
    let at_zero = ctx.norm(&t.eval(&ctx.zero())?)?;
    report.push("additivity_zero", 0, at_zero, tol);
    for (i, (x, y)) in pairs.iter().enumerate() {
        let lhs = t.eval(&ctx.add(x, y)?)?;
        let rhs = ctx.add(&t.eval(x)?, &t.eval(y)?)?;
        let violation = ctx.norm(&ctx.sub(&lhs, &rhs)?)?;
        let bound = tol * (1.0 + ctx.norm(x)? + ctx.norm(y)?);
        report.push("additivity_pair", i as u64, violation, bound);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Scalar;

    fn scalar_ctx() -> AlgebraContext {
        AlgebraContext::matrix_trivial(1).unwrap()
    }

    fn scalar_el(v: f64) -> Element {
        Element::matrix(1, vec![Scalar::real(v)]).unwrap()
    }

    /// f(x) = x + 0.1 |x|^0.5 on the 1-dimensional matrix algebra, with the
    /// perturbation direction fixed at +1.
    fn noisy_scalar_probe(ctx: &AlgebraContext) -> ProbeFunction {
        ProbeFunction::new(ctx, "x + 0.1 |x|^0.5", |x| {
            let v = x.entry(0, 0).unwrap();
            let noise = 0.1 * v.modulus().sqrt();
            Element::matrix(1, vec![Scalar::new(v.re + noise, v.im)])
        })
        .unwrap()
    }

    fn linear_probe(ctx: &AlgebraContext) -> ProbeFunction {
        ProbeFunction::new(ctx, "2x", |x| {
            let v = x.entry(0, 0).unwrap();
            Element::matrix(1, vec![v.scale(2.0)])
        })
        .unwrap()
    }

    #[test]
    fn params_reject_unit_ratio() {
        assert!(JensenParams::forward(2, 2, 1).is_err());
        assert!(JensenParams::new(2, 2, 1, Direction::Forward, Pivot::PivotT).is_ok());
        assert!(JensenParams::new(2, 1, 2, Direction::Forward, Pivot::PivotT).is_err());
        assert!(JensenParams::forward(2, 0, 1).is_err());
    }

    #[test]
    fn ratio_pow_is_exact_for_powers_of_two() {
        let params = JensenParams::forward(2, 1, 1).unwrap();
        assert_eq!(params.ratio_pow(10), 1024.0);
        assert_eq!(params.ratio_pow(-10), 1.0 / 1024.0);
        assert_eq!(params.ratio_pow(0), 1.0);
        let p32 = JensenParams::forward(3, 2, 2).unwrap();
        assert_eq!(p32.ratio_pow(2), 2.25);
    }

    #[test]
    fn probe_rejects_nonzero_at_origin() {
        let ctx = scalar_ctx();
        let err = ProbeFunction::new(&ctx, "x + 1", |x| {
            let v = x.entry(0, 0).unwrap();
            Element::matrix(1, vec![Scalar::new(v.re + 1.0, v.im)])
        });
        assert!(err.is_err());
    }

    #[test]
    fn residual_of_additive_map_vanishes() {
        let ctx = scalar_ctx();
        let f = linear_probe(&ctx);
        let params = JensenParams::forward(2, 1, 1).unwrap();
        let r = jensen_residual(&f, &params, &ctx, &scalar_el(0.7), &scalar_el(-2.3)).unwrap();
        assert!(r <= 1e-10);
        let r0 = jensen_residual(&f, &params, &ctx, &scalar_el(0.0), &scalar_el(0.0)).unwrap();
        assert_eq!(r0, 0.0);
    }

    #[test]
    fn residual_oracle_for_noisy_probe() {
        // r=2, s=t=1, x=1, y=0: |2 f(1/2) - f(1)| = 2*0.1*(1/2)^0.5 - 0.1.
        let ctx = scalar_ctx();
        let f = noisy_scalar_probe(&ctx);
        let params = JensenParams::forward(2, 1, 1).unwrap();
        let r = jensen_residual(&f, &params, &ctx, &scalar_el(1.0), &scalar_el(0.0)).unwrap();
        let expected = 0.2 * 0.5_f64.sqrt() - 0.1;
        assert!(
            (r - expected).abs() < 1e-12,
            "residual {r}, expected {expected}"
        );
    }

    #[test]
    fn iterate_examples() {
        let ctx = scalar_ctx();
        let params = JensenParams::forward(2, 1, 1).unwrap();
        let f = noisy_scalar_probe(&ctx);
        // n = 0 is f itself.
        let it0 = hyers_iterate(&f, &params, &ctx, &scalar_el(1.0), 0).unwrap();
        assert_eq!(it0.entry(0, 0).unwrap().re, 1.1);
        // n = 10: 1 + 0.1 * 2^{-5} = 1.003125 exactly.
        let it10 = hyers_iterate(&f, &params, &ctx, &scalar_el(1.0), 10).unwrap();
        assert_eq!(it10.entry(0, 0).unwrap().re, 1.003125);
        // Additive maps are fixed points of the iteration.
        let lin = linear_probe(&ctx);
        for n in [0, 1, 5, 20] {
            let it = hyers_iterate(&lin, &params, &ctx, &scalar_el(0.3), n).unwrap();
            assert_eq!(it.entry(0, 0).unwrap().re, 0.6);
        }
        assert!(matches!(
            hyers_iterate(&f, &params, &ctx, &scalar_el(1.0), 65),
            Err(Error::CapExceeded(65))
        ));
    }

    #[test]
    fn limit_recovers_identity_core() {
        let ctx = scalar_ctx();
        let params = JensenParams::forward(2, 1, 1).unwrap();
        let f = noisy_scalar_probe(&ctx);
        // The residual envelope for this probe is within eps = 0.25.
        let phi = ControlFunction::power_pair(0.25, 0.5).unwrap();
        let point = hyers_limit(&f, &params, &ctx, &phi, &scalar_el(1.0), 1e-6).unwrap();
        assert!(point.certified);
        assert!((point.limit.entry(0, 0).unwrap().re - 1.0).abs() <= 1e-6);
        // Certification kicks in around n = 38 for eps = 0.25 at x = 1.
        assert!(
            point.n_used >= 30 && point.n_used <= 45,
            "n_used = {}",
            point.n_used
        );
    }

    #[test]
    fn limit_of_additive_map_is_immediate_for_zero_control() {
        let ctx = scalar_ctx();
        let params = JensenParams::forward(2, 1, 1).unwrap();
        let f = linear_probe(&ctx);
        let phi = ControlFunction::power_pair(0.0, 0.5).unwrap();
        let point = hyers_limit(&f, &params, &ctx, &phi, &scalar_el(3.0), 1e-9).unwrap();
        assert_eq!(point.n_used, 0);
        assert_eq!(point.tail_bound, 0.0);
        assert!(point.certified);
        assert_eq!(point.limit.entry(0, 0).unwrap().re, 6.0);
    }

    #[test]
    fn forward_limit_rejects_divergent_control() {
        let ctx = scalar_ctx();
        let params = JensenParams::forward(2, 1, 1).unwrap();
        let f = noisy_scalar_probe(&ctx);
        let phi = ControlFunction::power_pair(1.0, 2.0).unwrap();
        assert!(matches!(
            hyers_limit(&f, &params, &ctx, &phi, &scalar_el(1.0), 1e-6),
            Err(Error::Divergent { .. })
        ));
    }

    #[test]
    fn uncertified_when_cap_too_small() {
        let ctx = scalar_ctx();
        let params = JensenParams::forward(2, 1, 1).unwrap().with_n_cap(5);
        let f = noisy_scalar_probe(&ctx);
        let phi = ControlFunction::power_pair(0.25, 0.5).unwrap();
        let point = hyers_limit(&f, &params, &ctx, &phi, &scalar_el(1.0), 1e-6).unwrap();
        assert!(!point.certified);
        assert_eq!(point.n_used, 5);
    }

    #[test]
    fn backward_direction_converges_for_p_above_one() {
        let ctx = scalar_ctx();
        let params = JensenParams::backward(2, 1, 1).unwrap();
        let f = ProbeFunction::new(&ctx, "x + 0.1 x^2", |x| {
            let v = x.entry(0, 0).unwrap();
            let noise = 0.1 * v.norm_sq();
            Element::matrix(1, vec![Scalar::new(v.re + noise, v.im)])
        })
        .unwrap();
        let phi = ControlFunction::power_pair(0.5, 2.0).unwrap();
        let point = hyers_limit(&f, &params, &ctx, &phi, &scalar_el(1.0), 1e-8).unwrap();
        assert!(point.certified);
        assert!((point.limit.entry(0, 0).unwrap().re - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn direction_duality_on_iterates() {
        // Backward with (r, s) equals forward with the roles exchanged.
        let ctx = scalar_ctx();
        let f = noisy_scalar_probe(&ctx);
        let backward = JensenParams::backward(2, 1, 1).unwrap();
        let forward_swapped = JensenParams::forward(1, 2, 2).unwrap();
        for n in 0..=12 {
            let b = hyers_iterate(&f, &backward, &ctx, &scalar_el(1.7), n).unwrap();
            let fw = hyers_iterate(&f, &forward_swapped, &ctx, &scalar_el(1.7), n).unwrap();
            assert_eq!(b, fw);
        }
    }

    #[test]
    fn pivot_on_t_uses_the_r_over_t_ratio() {
        // With s = r the s-pivot is rejected, but pivoting on t gives the
        // ratio r/t and the recovery works unchanged.
        let ctx = scalar_ctx();
        let f = noisy_scalar_probe(&ctx);
        let params = JensenParams::new(2, 2, 1, Direction::Forward, Pivot::PivotT).unwrap();
        assert_eq!(params.contraction(), 1);
        assert_eq!(params.ratio(), 2.0);
        // The residual itself is pivot-independent.
        let via_s = JensenParams::new(2, 2, 1, Direction::Forward, Pivot::PivotS);
        assert!(via_s.is_err());
        let r = jensen_residual(&f, &params, &ctx, &scalar_el(1.0), &scalar_el(0.5)).unwrap();
        assert!(r.is_finite());
        let phi = ControlFunction::power_pair(0.3, 0.5).unwrap();
        let point = hyers_limit(&f, &params, &ctx, &phi, &scalar_el(1.0), 1e-6).unwrap();
        assert!(point.certified);
        assert!((point.limit.entry(0, 0).unwrap().re - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn stability_bound_holds_for_noisy_probe() {
        let ctx = scalar_ctx();
        let params = JensenParams::forward(2, 1, 1).unwrap();
        let f = noisy_scalar_probe(&ctx);
        let phi = ControlFunction::power_pair(0.25, 0.5).unwrap();
        let samples = vec![
            (0, scalar_el(1.0)),
            (1, scalar_el(0.25)),
            (2, scalar_el(4.0)),
        ];
        let t = hyers_limit_samples(&f, &params, &ctx, &phi, &samples, 1e-8).unwrap();
        let rep = verify_stability_bound(&f, &t, &phi, &params, &ctx, &samples).unwrap();
        assert!(rep.passed());
        // At x = 1 the distance is the perturbation itself, 0.1, and the
        // telescoping bound with eps = 0.25 evaluates to 0.25 * 2.41421356.
        let row = &rep.rows[0];
        assert!((row.residual - 0.1).abs() < 1e-7);
        assert!((row.bound_app - 0.25 * 2.414213562).abs() < 1e-8);
        assert!(row.bound_phitilde > row.residual);
    }

    #[test]
    fn stability_bound_trivial_for_additive_map_and_zero_control() {
        let ctx = scalar_ctx();
        let params = JensenParams::forward(2, 1, 1).unwrap();
        let f = linear_probe(&ctx);
        let phi = ControlFunction::power_pair(0.0, 0.5).unwrap();
        let samples = vec![(0, scalar_el(1.5)), (1, scalar_el(-0.25))];
        let t = hyers_limit_samples(&f, &params, &ctx, &phi, &samples, 1e-9).unwrap();
        let rep = verify_stability_bound(&f, &t, &phi, &params, &ctx, &samples).unwrap();
        assert!(rep.passed());
        for row in &rep.rows {
            assert_eq!(row.residual, 0.0);
            assert_eq!(row.bound_app, 0.0);
            assert_eq!(row.bound_phitilde, 0.0);
        }
    }

    #[test]
    fn evaluation_failure_propagates() {
        let ctx = scalar_ctx();
        let params = JensenParams::forward(2, 1, 1).unwrap();
        let broken = ProbeFunction::new_unchecked("broken", |x: &Element| {
            if x.is_zero() {
                Ok(x.clone())
            } else {
                Err(Error::EvaluationFailure("probe declined".into()))
            }
        });
        let err =
            jensen_residual(&broken, &params, &ctx, &scalar_el(1.0), &scalar_el(0.0)).unwrap_err();
        assert!(matches!(err, Error::EvaluationFailure(_)));
    }

    #[test]
    fn stability_bound_requires_certified_input() {
        let ctx = scalar_ctx();
        let params = JensenParams::forward(2, 1, 1).unwrap().with_n_cap(3);
        let f = noisy_scalar_probe(&ctx);
        let phi = ControlFunction::power_pair(0.25, 0.5).unwrap();
        let samples = vec![(0, scalar_el(1.0))];
        let t = hyers_limit_samples(&f, &params, &ctx, &phi, &samples, 1e-8).unwrap();
        assert!(matches!(
            verify_stability_bound(&f, &t, &phi, &params, &ctx, &samples),
            Err(Error::NotCertified)
        ));
    }

    #[test]
    fn uniqueness_tail_example() {
        // Constant control, r=2, s=1: the j = 0 uniqueness tail is
        // 2 * (1/2) * sum (1/2)^k = 2.
        let ctx = scalar_ctx();
        let params = JensenParams::forward(2, 1, 1).unwrap();
        let f = linear_probe(&ctx);
        let phi = ControlFunction::constant(1.0).unwrap();
        let samples = vec![(0, scalar_el(1.0))];
        let t = hyers_limit_samples(&f, &params, &ctx, &phi, &samples, 1e-10).unwrap();
        let rep = verify_uniqueness(&t, &t, &phi, &params, &ctx, &samples, 0).unwrap();
        assert!(rep.passed());
        let row = &rep.rows[0];
        assert!(row.check.starts_with("uniqueness_j0"));
        assert!((row.bound - (2.0 + 2.0 * t.get(0).unwrap().tail_bound)).abs() < 1e-9);
    }

    #[test]
    fn additivity_negative_control_is_flagged() {
        let ctx = scalar_ctx();
        // T(x) = x + 1 is not additive and does not fix 0.
        let shifted = ProbeFunction::new_unchecked("x + 1", |x: &Element| {
            let v = x.entry(0, 0).unwrap();
            Element::matrix(1, vec![Scalar::new(v.re + 1.0, v.im)])
        });
        let pairs = vec![(scalar_el(1.0), scalar_el(2.0))];
        let rep = verify_additivity(&shifted, &ctx, &pairs, 1e-9).unwrap();
        assert!(!rep.passed());
        // The pair violation has magnitude exactly 1.
        let row = rep
            .rows
            .iter()
            .find(|r| r.check == "additivity_pair")
            .unwrap();
        assert!((row.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn recovered_map_behaves_like_core() {
        let ctx = scalar_ctx();
        let params = JensenParams::forward(2, 1, 1).unwrap();
        let f = noisy_scalar_probe(&ctx);
        let phi = ControlFunction::power_pair(0.25, 0.5).unwrap();
        let t = recovered_map(&f, &params, &ctx, &phi, 1e-9).unwrap();
        let tx = t.eval(&scalar_el(2.0)).unwrap();
        assert!((tx.entry(0, 0).unwrap().re - 2.0).abs() <= 1e-8);
        let pairs = vec![
            (scalar_el(1.0), scalar_el(2.5)),
            (scalar_el(-0.5), scalar_el(0.125)),
        ];
        let rep = verify_additivity(&t, &ctx, &pairs, 1e-6).unwrap();
        assert!(rep.passed());
    }
}
