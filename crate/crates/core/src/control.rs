//! Control functions and their weighted geometric series transforms.
//!
//! A control function `phi` dominates the residual of the functional
//! equation under test. The series transform accumulates
//! `(1/r) * sum_n rho^-n * phi(rho^n x, ...)` (forward scaling) or
//! `(1/s) * sum_n rho^n * phi(rho^-n x, ...)` (backward scaling), where
//! `rho = r/s`. For the power-type and constant families the terms form an
//! exact geometric progression, so summation stops with a certified
//! truncation tail; sampled controls only get a last-term-ratio heuristic
//! tail and are flagged non-certified. Verifiers must not PASS on a
//! non-certified bound.
//!
//! Convention for zero arguments: a zero-norm slot contributes `0` to a
//! power-type evaluation for `p != 0` (the maps under test fix the origin,
//! so no deviation accumulates there) and `1` for `p == 0`, which makes the
//! `p = 0` power control coincide with a constant bound per slot.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kahan::KahanSum;

/// Scaling direction of the iteration and of the series transforms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Expand the argument, contract the value: `rho^-n f(rho^n x)`.
    Forward,
    /// Contract the argument, expand the value: `rho^n f(rho^-n x)`.
    Backward,
}

/// Declared decay behaviour of a sampled control function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecayHint {
    ForwardSummable,
    BackwardSummable,
    Unknown,
}

/// Evaluation contract for sampled control functions.
pub type SampledEval = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// The bound `phi` dominating the equation residual.
#[derive(Clone)]
pub enum ControlFunction {
    /// `eps * sum_i ||arg_i||^p` over `arity` slots.
    PowerType { eps: f64, p: f64, arity: usize },
    /// The constant `eps`, independent of the arguments.
    Constant { eps: f64 },
    /// An arbitrary nonnegative sampled bound.
    Sampled {
        eval: SampledEval,
        arity: usize,
        decay_hint: DecayHint,
    },
}

impl fmt::Debug for ControlFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControlFunction::PowerType { eps, p, arity } => {
                write!(f, "PowerType {{ eps: {eps}, p: {p}, arity: {arity} }}")
            }
            ControlFunction::Constant { eps } => write!(f, "Constant {{ eps: {eps} }}"),
            ControlFunction::Sampled {
                arity, decay_hint, ..
            } => {
                write!(
                    f,
                    "Sampled {{ arity: {arity}, decay_hint: {decay_hint:?} }}"
                )
            }
        }
    }
}

/// A certified partial sum of an infinite series.
///
/// `value + truncation_tail` is an upper bound on the exact series whenever
/// `certified` is true; for sampled controls the tail is a heuristic
/// estimate only.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub truncation_tail: f64,
    pub terms_used: u32,
    pub certified: bool,
}

impl SeriesValue {
    fn zero() -> Self {
        SeriesValue {
            value: 0.0,
            truncation_tail: 0.0,
            terms_used: 0,
            certified: true,
        }
    }

    /// Upper bound including the truncation tail.
    pub fn upper(&self) -> f64 {
        self.value + self.truncation_tail
    }
}

/// Per-slot power evaluation with the zero-argument convention above.
pub(crate) fn pow_norm(norm: f64, p: f64) -> f64 {
    if norm == 0.0 {
        if p == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        norm.powf(p)
    }
}

impl ControlFunction {
    pub fn power(eps: f64, p: f64, arity: usize) -> Result<Self> {
        if eps < 0.0 || !eps.is_finite() || !p.is_finite() {
            return Err(Error::InvalidParameter(
                "power control wants finite eps >= 0".into(),
            ));
        }
        if arity != 2 && arity != 5 {
            return Err(Error::InvalidParameter(format!(
                "power control arity must be 2 or 5, got {arity}"
            )));
        }
        Ok(ControlFunction::PowerType { eps, p, arity })
    }

    /// Two-slot power control, the Jensen-equation shape.
    pub fn power_pair(eps: f64, p: f64) -> Result<Self> {
        ControlFunction::power(eps, p, 2)
    }

    /// Five-slot power control, the homomorphism-inequality shape.
    pub fn power_five(eps: f64, p: f64) -> Result<Self> {
        ControlFunction::power(eps, p, 5)
    }

    pub fn constant(eps: f64) -> Result<Self> {
        if eps < 0.0 || !eps.is_finite() {
            return Err(Error::InvalidParameter(
                "constant control wants finite eps >= 0".into(),
            ));
        }
        Ok(ControlFunction::Constant { eps })
    }

    pub fn sampled<F>(eval: F, arity: usize, decay_hint: DecayHint) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        ControlFunction::Sampled {
            eval: Arc::new(eval),
            arity,
            decay_hint,
        }
    }

    /// Expected argument count; `None` means any count is accepted.
    pub fn arity(&self) -> Option<usize> {
        match self {
            ControlFunction::PowerType { arity, .. } => Some(*arity),
            ControlFunction::Constant { .. } => None,
            ControlFunction::Sampled { arity, .. } => Some(*arity),
        }
    }

    /// Evaluate `phi` at the given argument norms.
    pub fn eval(&self, args: &[f64]) -> Result<f64> {
        if let Some(expected) = self.arity() {
            if args.len() != expected {
                return Err(Error::ArityMismatch {
                    expected,
                    got: args.len(),
                });
            }
        }
        Ok(match self {
            ControlFunction::PowerType { eps, p, .. } => {
                *eps * args.iter().map(|&a| pow_norm(a, *p)).sum::<f64>()
            }
            ControlFunction::Constant { eps } => *eps,
            ControlFunction::Sampled { eval, .. } => eval(args),
        })
    }

    /// Restrict a five-slot control to its `(x, y)` pair, zeroing the
    /// product slots. Two-slot controls pass through unchanged.
    pub fn restrict_to_pair(&self) -> ControlFunction {
        match self {
            ControlFunction::PowerType { eps, p, .. } => ControlFunction::PowerType {
                eps: *eps,
                p: *p,
                arity: 2,
            },
            ControlFunction::Constant { eps } => ControlFunction::Constant { eps: *eps },
            ControlFunction::Sampled {
                eval,
                arity,
                decay_hint,
            } => {
                if *arity == 2 {
                    self.clone()
                } else {
                    let inner = Arc::clone(eval);
                    ControlFunction::Sampled {
                        eval: Arc::new(move |args: &[f64]| {
                            inner(&[args[0], args[1], 0.0, 0.0, 0.0])
                        }),
                        arity: 2,
                        decay_hint: *decay_hint,
                    }
                }
            }
        }
    }

    /// Swap the first two slots; used when the iteration pivots on `t`
    /// instead of `s`. Symmetric controls are returned unchanged.
    pub fn swap_xy(&self) -> ControlFunction {
        match self {
            ControlFunction::Sampled {
                eval,
                arity,
                decay_hint,
            } => {
                let inner = Arc::clone(eval);
                ControlFunction::Sampled {
                    eval: Arc::new(move |args: &[f64]| {
                        let mut swapped = args.to_vec();
                        if swapped.len() >= 2 {
                            swapped.swap(0, 1);
                        }
                        inner(&swapped)
                    }),
                    arity: *arity,
                    decay_hint: *decay_hint,
                }
            }
            _ => self.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ControlFunction::PowerType { eps, .. } | ControlFunction::Constant { eps } => {
                *eps == 0.0
            }
            ControlFunction::Sampled { .. } => false,
        }
    }

    /// Exact term ratio of the series transform, when one exists.
    pub fn term_ratio(&self, rho: f64, direction: Direction) -> Option<f64> {
        match self {
            ControlFunction::PowerType { p, .. } => Some(match direction {
                Direction::Forward => rho.powf(p - 1.0),
                Direction::Backward => rho.powf(1.0 - p),
            }),
            ControlFunction::Constant { .. } => Some(match direction {
                Direction::Forward => 1.0 / rho,
                Direction::Backward => rho,
            }),
            ControlFunction::Sampled { .. } => None,
        }
    }

    fn decay_hint(&self) -> Option<DecayHint> {
        match self {
            ControlFunction::Sampled { decay_hint, .. } => Some(*decay_hint),
            _ => None,
        }
    }
}

/// Which series family is being summed.
#[derive(Clone, Copy)]
enum Family<'a> {
    /// `phi` evaluated at all slots scaled: the stated distance bound.
    PhiTilde { x_norms: &'a [f64] },
    /// `phi` evaluated at a single scaled slot with the rest zero: the
    /// telescoping bound the iteration proof actually supports. In the
    /// forward direction the slot argument carries one extra scaling step.
    Derivation { x_norm: f64 },
}

fn check_params(r: u32, s: u32) -> Result<f64> {
    if r < 1 || s < 1 {
        return Err(Error::InvalidParameter(
            "series parameters want r, s >= 1".into(),
        ));
    }
    if r == s {
        return Err(Error::Divergent { ratio: 1.0 });
    }
    Ok(r as f64 / s as f64)
}

/// First term of the geometric progression, or `None` for sampled controls.
fn first_term(
    phi: &ControlFunction,
    r: u32,
    s: u32,
    family: Family<'_>,
    direction: Direction,
) -> Option<f64> {
    let rho = r as f64 / s as f64;
    let pref = match direction {
        Direction::Forward => 1.0 / r as f64,
        Direction::Backward => 1.0 / s as f64,
    };
    match (phi, family) {
        (ControlFunction::PowerType { eps, p, .. }, Family::PhiTilde { x_norms }) => {
            Some(pref * eps * x_norms.iter().map(|&a| pow_norm(a, *p)).sum::<f64>())
        }
        (ControlFunction::PowerType { eps, p, arity }, Family::Derivation { x_norm }) => {
            let lead = match direction {
                Direction::Forward => pow_norm(rho * x_norm, *p),
                Direction::Backward => pow_norm(x_norm, *p),
            };
            let zeros = (*arity as f64 - 1.0) * pow_norm(0.0, *p);
            Some(pref * eps * (lead + zeros))
        }
        (ControlFunction::Constant { eps }, _) => Some(pref * eps),
        (ControlFunction::Sampled { .. }, _) => None,
    }
}

/// Evaluate one sampled-series term directly.
fn sampled_term(
    phi: &ControlFunction,
    r: u32,
    s: u32,
    family: Family<'_>,
    direction: Direction,
    n: u32,
) -> Result<f64> {
    let rho = r as f64 / s as f64;
    let (pref, weight, arg_scale) = match direction {
        Direction::Forward => (1.0 / r as f64, rho.powi(-(n as i32)), rho.powi(n as i32)),
        Direction::Backward => (1.0 / s as f64, rho.powi(n as i32), rho.powi(-(n as i32))),
    };
    let args: Vec<f64> = match family {
        Family::PhiTilde { x_norms } => x_norms.iter().map(|&a| a * arg_scale).collect(),
        Family::Derivation { x_norm } => {
            let lead = match direction {
                Direction::Forward => rho * arg_scale * x_norm,
                Direction::Backward => arg_scale * x_norm,
            };
            let arity = phi.arity().unwrap_or(2);
            let mut v = vec![0.0; arity];
            v[0] = lead;
            v
        }
    };
    Ok(pref * weight * phi.eval(&args)?)
}

const MAX_GEOMETRIC_TERMS: u32 = 1_000_000;
const MAX_SAMPLED_TERMS: u32 = 10_000;

/// Sum a certified geometric series `t0 * q^n` until the exact tail
/// `t_n * q / (1 - q)` drops below `tol` relative to the running value.
fn sum_geometric(t0: f64, q: f64, tol: f64, horizon: Option<u32>) -> Result<SeriesValue> {
    if t0 == 0.0 {
        return Ok(SeriesValue::zero());
    }
    if horizon.is_none() && (q >= 1.0 || !q.is_finite()) {
        return Err(Error::Divergent { ratio: q });
    }
    let mut acc = KahanSum::new();
    let mut term = t0;
    let mut n = 0u32;
    loop {
        acc.add(term);
        n += 1;
        if let Some(cap) = horizon {
            if n >= cap {
                return Ok(SeriesValue {
                    value: acc.value(),
                    truncation_tail: 0.0,
                    terms_used: n,
                    certified: true,
                });
            }
        } else {
            let tail = term * q / (1.0 - q);
            if tail <= tol * acc.value() || n >= MAX_GEOMETRIC_TERMS {
                return Ok(SeriesValue {
                    value: acc.value(),
                    truncation_tail: tail,
                    terms_used: n,
                    certified: true,
                });
            }
        }
        term *= q;
    }
}

/// Sum a sampled series with the last-term-ratio heuristic tail.
fn sum_sampled(
    phi: &ControlFunction,
    r: u32,
    s: u32,
    family: Family<'_>,
    direction: Direction,
    tol: f64,
    horizon: Option<u32>,
) -> Result<SeriesValue> {
    match (phi.decay_hint(), direction) {
        (Some(DecayHint::ForwardSummable), Direction::Forward) => {}
        (Some(DecayHint::BackwardSummable), Direction::Backward) => {}
        (Some(_), _) if horizon.is_some() => {} // finite sums need no decay
        _ => return Err(Error::TailNotCertifiable),
    }
    let mut acc = KahanSum::new();
    let mut prev = f64::NAN;
    let mut growth_streak = 0u32;
    let cap = horizon.unwrap_or(MAX_SAMPLED_TERMS);
    let mut tail = 0.0;
    let mut n = 0u32;
    while n < cap {
        let term = sampled_term(phi, r, s, family, direction, n)?;
        if !term.is_finite() {
            return Err(Error::Divergent {
                ratio: f64::INFINITY,
            });
        }
        acc.add(term);
        n += 1;
        if horizon.is_none() {
            if term == 0.0 {
                tail = 0.0;
                break;
            }
            if prev.is_finite() && prev > 0.0 {
                let ratio = term / prev;
                if ratio >= 1.0 {
                    growth_streak += 1;
                    if growth_streak >= 4 {
                        return Err(Error::Divergent { ratio });
                    }
                } else {
                    growth_streak = 0;
                    tail = term * ratio / (1.0 - ratio);
                    if tail <= tol * acc.value().max(f64::MIN_POSITIVE) {
                        break;
                    }
                }
            }
            prev = term;
        }
    }
    Ok(SeriesValue {
        value: acc.value(),
        truncation_tail: if horizon.is_some() { 0.0 } else { tail },
        terms_used: n,
        certified: false,
    })
}

fn sum_series(
    phi: &ControlFunction,
    r: u32,
    s: u32,
    family: Family<'_>,
    direction: Direction,
    tol: f64,
    horizon: Option<u32>,
) -> Result<SeriesValue> {
    check_params(r, s)?;
    let rho = r as f64 / s as f64;
    match first_term(phi, r, s, family, direction) {
        Some(t0) => {
            let q = phi
                .term_ratio(rho, direction)
                .expect("certified variants have a ratio");
            sum_geometric(t0, q, tol, horizon)
        }
        None => sum_sampled(phi, r, s, family, direction, tol, horizon),
    }
}

/// Forward series transform `(1/r) * sum_n rho^-n phi(rho^n x...)`.
pub fn phi_tilde_forward(
    phi: &ControlFunction,
    r: u32,
    s: u32,
    x_norms: &[f64],
    tol: f64,
) -> Result<SeriesValue> {
    if let Some(expected) = phi.arity() {
        if x_norms.len() != expected {
            return Err(Error::ArityMismatch {
                expected,
                got: x_norms.len(),
            });
        }
    }
    sum_series(
        phi,
        r,
        s,
        Family::PhiTilde { x_norms },
        Direction::Forward,
        tol,
        None,
    )
}

/// Backward series transform `(1/s) * sum_n rho^n phi(rho^-n x...)`.
pub fn phi_tilde_backward(
    phi: &ControlFunction,
    r: u32,
    s: u32,
    x_norms: &[f64],
    tol: f64,
) -> Result<SeriesValue> {
    if let Some(expected) = phi.arity() {
        if x_norms.len() != expected {
            return Err(Error::ArityMismatch {
                expected,
                got: x_norms.len(),
            });
        }
    }
    sum_series(
        phi,
        r,
        s,
        Family::PhiTilde { x_norms },
        Direction::Backward,
        tol,
        None,
    )
}

/// Remaining tail of the series transform from index `from` on, plus whether
/// the bound is certified. Used by the uniqueness verifier.
pub fn phi_tilde_tail(
    phi: &ControlFunction,
    r: u32,
    s: u32,
    x_norms: &[f64],
    from: u32,
    direction: Direction,
    tol: f64,
) -> Result<(f64, bool)> {
    series_tail(
        phi,
        r,
        s,
        Family::PhiTilde { x_norms },
        direction,
        from,
        tol,
    )
}

/// The telescoping partial-sum bound on `||f(x) - rho^-n f(rho^n x)||`:
/// `(1/r) * sum_{k=0}^{n-1} rho^-k phi(rho^{k+1} x, 0, ...)`.
///
/// `n = None` sums to infinity, which also upper-bounds the distance to the
/// recovered limit.
pub fn derivation_bound(
    phi: &ControlFunction,
    r: u32,
    s: u32,
    x_norm: f64,
    n: Option<u32>,
    tol: f64,
) -> Result<SeriesValue> {
    if n == Some(0) {
        return Ok(SeriesValue::zero());
    }
    sum_series(
        phi,
        r,
        s,
        Family::Derivation { x_norm },
        Direction::Forward,
        tol,
        n,
    )
}

/// Backward counterpart of [`derivation_bound`]:
/// `(1/s) * sum_{k=0}^{n-1} rho^k phi(rho^-k x, 0, ...)`.
pub fn derivation_bound_backward(
    phi: &ControlFunction,
    r: u32,
    s: u32,
    x_norm: f64,
    n: Option<u32>,
    tol: f64,
) -> Result<SeriesValue> {
    if n == Some(0) {
        return Ok(SeriesValue::zero());
    }
    sum_series(
        phi,
        r,
        s,
        Family::Derivation { x_norm },
        Direction::Backward,
        tol,
        n,
    )
}

/// Remaining telescoping tail from step `from` on; this is the Cauchy
/// estimate that certifies the iteration's convergence.
pub fn derivation_tail(
    phi: &ControlFunction,
    r: u32,
    s: u32,
    x_norm: f64,
    from: u32,
    direction: Direction,
    tol: f64,
) -> Result<(f64, bool)> {
    series_tail(
        phi,
        r,
        s,
        Family::Derivation { x_norm },
        direction,
        from,
        tol,
    )
}

fn series_tail(
    phi: &ControlFunction,
    r: u32,
    s: u32,
    family: Family<'_>,
    direction: Direction,
    from: u32,
    tol: f64,
) -> Result<(f64, bool)> {
    check_params(r, s)?;
    let rho = r as f64 / s as f64;
    match first_term(phi, r, s, family, direction) {
        Some(t0) => {
            if t0 == 0.0 {
                return Ok((0.0, true));
            }
            let q = phi
                .term_ratio(rho, direction)
                .expect("certified variants have a ratio");
            if q >= 1.0 || !q.is_finite() {
                return Err(Error::Divergent { ratio: q });
            }
            Ok((t0 * q.powi(from as i32) / (1.0 - q), true))
        }
        None => {
            match phi.decay_hint() {
                Some(DecayHint::ForwardSummable) if direction == Direction::Forward => {}
                Some(DecayHint::BackwardSummable) if direction == Direction::Backward => {}
                _ => return Err(Error::TailNotCertifiable),
            }
            // Heuristic: sum a window of terms beyond `from` and extrapolate.
            let mut acc = KahanSum::new();
            let mut prev = f64::NAN;
            let mut tail = 0.0;
            for k in 0..256u32 {
                let term = sampled_term(phi, r, s, family, direction, from + k)?;
                acc.add(term);
                if prev.is_finite() && prev > 0.0 && term < prev {
                    let ratio = term / prev;
                    tail = term * ratio / (1.0 - ratio);
                    if tail <= tol * acc.value().max(f64::MIN_POSITIVE) {
                        break;
                    }
                }
                prev = term;
            }
            Ok((acc.value() + tail, false))
        }
    }
}

/// Closed-form power-type distance bound `2 r^-p eps ||x||^p / (r^{1-p} - s^{1-p})`.
///
/// Valid for `p < 1` and `r > s >= 1`; agrees with the forward series
/// transform of the two-slot power control evaluated at `(x, x)`.
///
/// ```
/// use hyerslab_core::power_bound_closed_form;
///
/// let bound = power_bound_closed_form(1.0, 0.5, 2, 1, 1.0)?;
/// assert!((bound - 3.414213562).abs() <= 1e-9);
/// # Ok::<(), hyerslab_core::Error>(())
/// ```
pub fn power_bound_closed_form(eps: f64, p: f64, r: u32, s: u32, x_norm: f64) -> Result<f64> {
    if eps < 0.0 || !eps.is_finite() {
        return Err(Error::InvalidParameter(
            "closed-form bound wants eps >= 0".into(),
        ));
    }
    if r < 1 || s < 1 {
        return Err(Error::InvalidParameter(
            "closed-form bound wants r, s >= 1".into(),
        ));
    }
    if p >= 1.0 || r <= s {
        return Err(Error::InvalidRegime(format!(
            "closed-form bound wants p < 1 and r > s, got p = {p}, r = {r}, s = {s}"
        )));
    }
    let rf = r as f64;
    let sf = s as f64;
    let denom = rf.powf(1.0 - p) - sf.powf(1.0 - p);
    Ok(2.0 * rf.powf(-p) * eps * pow_norm(x_norm, p) / denom)
}
