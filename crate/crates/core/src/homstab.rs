//! Five-variable homomorphism stability.
//!
//! The residual under test couples the Jensen terms with a ternary product:
//! `|| r f((mu s x + mu t y + [uvw]) / r) - mu s f(x) - mu t f(y) - [f(u)f(v)f(w)] ||`.
//! A map dominated by a summable five-slot control recovers a ternary
//! homomorphism; this module verifies the recovered map's homomorphism
//! defect, its ratio scaling, its complex linearity (through the full unit
//! circle or just `mu = 1, i`), and the generated-algebra upgrade chain.
//!
//! Complex linearity uses the three-split: any `w` with `|w| < 1` close
//! enough to the origin (here `|w| < 3/4`) is a sum of three unimodular
//! scalars. No construction is given in the source material for the split;
//! the one used here picks `mu3 = w/|w|` and closes the remainder `v` with
//! the conjugate pair `e^{i(theta +- alpha)}`, `theta = arg v`,
//! `alpha = arccos(|v|/2)`.

use crate::algebra::{AlgebraContext, Element};
use crate::control::{ControlFunction, Direction};
use crate::error::{Error, Result};
use crate::hyers::{hyers_limit_samples, HyersResult, JensenParams, ProbeFunction};
use crate::report::Report;
use crate::scalar::Scalar;

/// Sign convention for the Jensen terms of the residual.
///
/// The default subtracts both terms, consistent with the two-variable
/// equation; `PlusT` reproduces the variant with `+ mu t f(y)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ResidualSign {
    #[default]
    BothMinus,
    PlusT,
}

/// Hom-stability residual with the default sign convention.
#[allow(clippy::too_many_arguments)]
pub fn hom_residual(
    f: &ProbeFunction,
    params: &JensenParams,
    ctx: &AlgebraContext,
    mu: Scalar,
    x: &Element,
    y: &Element,
    u: &Element,
    v: &Element,
    w: &Element,
) -> Result<f64> {
    hom_residual_with_sign(f, params, ctx, mu, x, y, u, v, w, ResidualSign::BothMinus)
}

/// Hom-stability residual with an explicit sign convention.
#[allow(clippy::too_many_arguments)]
pub fn hom_residual_with_sign(
    f: &ProbeFunction,
    params: &JensenParams,
    ctx: &AlgebraContext,
    mu: Scalar,
    x: &Element,
    y: &Element,
    u: &Element,
    v: &Element,
    w: &Element,
    sign: ResidualSign,
) -> Result<f64> {
    let mus = mu.scale(params.s as f64);
    let mut_ = mu.scale(params.t as f64);
    let uvw = ctx.ternary_product(u, v, w)?;
    let arg = ctx.scale(
        1.0 / params.r as f64,
        &ctx.add(
            &ctx.add(&ctx.scalar_mul(mus, x)?, &ctx.scalar_mul(mut_, y)?)?,
            &uvw,
        )?,
    )?;
    let lhs = ctx.scale(params.r as f64, &f.eval(&arg)?)?;
    let fx = ctx.scalar_mul(mus, &f.eval(x)?)?;
    let fy = ctx.scalar_mul(mut_, &f.eval(y)?)?;
    let fp = ctx.ternary_product(&f.eval(u)?, &f.eval(v)?, &f.eval(w)?)?;
    let jensen_part = match sign {
        ResidualSign::BothMinus => ctx.sub(&ctx.sub(&lhs, &fx)?, &fy)?,
        ResidualSign::PlusT => ctx.add(&ctx.sub(&lhs, &fx)?, &fy)?,
    };
    ctx.norm(&ctx.sub(&jensen_part, &fp)?)
}

/// Recover the homomorphism candidate: the two-variable restriction of the
/// five-slot control is handed to the direct-method iteration, so the
/// certification bound is the restricted series transform at `(x, x, 0, 0, 0)`.
pub fn recover_hom(
    f: &ProbeFunction,
    params: &JensenParams,
    ctx: &AlgebraContext,
    phi5: &ControlFunction,
    samples: &[(u64, Element)],
    tol: f64,
) -> Result<HyersResult> {
    hyers_limit_samples(f, params, ctx, phi5, samples, tol)
}

/// Check the ratio scaling `T(rho x) = rho T(x)` over samples.
pub fn verify_scaling(
    t: &ProbeFunction,
    params: &JensenParams,
    ctx: &AlgebraContext,
    samples: &[Element],
    tol: f64,
) -> Result<Report> {
    let rho = params.ratio();
    let mut report = Report::new();
    for (i, x) in samples.iter().enumerate() {
        let lhs = t.eval(&ctx.scale(rho, x)?)?;
        let rhs = ctx.scale(rho, &t.eval(x)?)?;
        let defect = ctx.norm(&ctx.sub(&lhs, &rhs)?)?;
        report.push("scaling", i as u64, defect, tol * (1.0 + ctx.norm(x)?));
    }
    Ok(report)
}

/// Ternary homomorphism defect of `T` over sampled triples, plus the decay
/// chain of the scaled control bound.
///
/// Preconditions: `T` must satisfy the ratio scaling to within
/// `scaling_tol`, checked on the triple components first.
#[allow(clippy::too_many_arguments)]
pub fn verify_hom_defect(
    t: &ProbeFunction,
    ctx: &AlgebraContext,
    triples: &[(Element, Element, Element)],
    params: &JensenParams,
    phi5: &ControlFunction,
    n_probe: u32,
    scaling_tol: f64,
    defect_tol: f64,
) -> Result<Report> {
    // Scaling hypothesis first.
    let components: Vec<Element> = triples
        .iter()
        .take(8)
        .flat_map(|(u, v, w)| [u.clone(), v.clone(), w.clone()])
        .collect();
    let scaling = verify_scaling(t, params, ctx, &components, scaling_tol)?;
    if !scaling.passed() {
        return Err(Error::ScalingHypothesisViolated(
            scaling.max_value("scaling"),
        ));
    }

    let mut report = Report::new();
    for (i, (u, v, w)) in triples.iter().enumerate() {
        let lhs = t.eval(&ctx.ternary_product(u, v, w)?)?;
        let rhs = ctx.ternary_product(&t.eval(u)?, &t.eval(v)?, &t.eval(w)?)?;
        let defect = ctx.norm(&ctx.sub(&lhs, &rhs)?)?;
        let scale = ctx.norm(u)? * ctx.norm(v)? * ctx.norm(w)?;
        report.push("hom_defect", i as u64, defect, defect_tol * (1.0 + scale));
    }

    // Decay chain of the scaled control bound, evaluated on the first
    // triple's norms: b_n = rho^-n phi5(0, 0, rho^n u, rho^n v, rho^n w)
    // must vanish monotonically, as must the stronger rho^-3n weighting.
    if let Some((u, v, w)) = triples.first() {
        let rho = params.ratio();
        let (nu, nv, nw) = (ctx.norm(u)?, ctx.norm(v)?, ctx.norm(w)?);
        let expected_ratio = phi5.term_ratio(rho, Direction::Forward);
        let mut prev: Option<(f64, f64)> = None;
        for n in 0..=n_probe {
            let scale = params.ratio_pow(n as i32);
            let phi_val = phi5.eval(&[0.0, 0.0, nu * scale, nv * scale, nw * scale])?;
            let weak = params.ratio_pow(-(n as i32)) * phi_val;
            let strong = params.ratio_pow(-(3 * n as i32)) * phi_val;
            if let Some((prev_weak, prev_strong)) = prev {
                report.push(
                    &format!("defect_decay_monotone_n{n}"),
                    u64::from(n),
                    weak,
                    prev_weak,
                );
                report.push(
                    &format!("defect_decay_strong_n{n}"),
                    u64::from(n),
                    strong,
                    prev_strong,
                );
                if let Some(q) = expected_ratio {
                    let measured = if prev_weak > 0.0 { weak / prev_weak } else { q };
                    report.push(
                        &format!("defect_decay_ratio_n{n}"),
                        u64::from(n),
                        (measured - q).abs(),
                        1e-3,
                    );
                }
            }
            prev = Some((weak, strong));
        }
    }
    Ok(report)
}

/// Three unimodular scalars summing to a prescribed small value.
#[derive(Clone, Copy, Debug)]
pub struct UnimodularTriple {
    pub mu1: Scalar,
    pub mu2: Scalar,
    pub mu3: Scalar,
}

impl UnimodularTriple {
    pub fn new(mu1: Scalar, mu2: Scalar, mu3: Scalar) -> Result<Self> {
        for (i, m) in [mu1, mu2, mu3].iter().enumerate() {
            if (m.modulus() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "triple component {} has modulus {:.17} != 1",
                    i + 1,
                    m.modulus()
                )));
            }
        }
        Ok(UnimodularTriple { mu1, mu2, mu3 })
    }

    pub fn sum(&self) -> Scalar {
        self.mu1 + self.mu2 + self.mu3
    }
}

/// Smallest admitted scaling integer for the three-split: `ceil(4|lambda|) + 1`.
pub fn smallest_admissible_m(lambda: Scalar) -> u32 {
    (4.0 * lambda.modulus()).ceil() as u32 + 1
}

/// Split `3 lambda / m` into three unimodular scalars.
///
/// Requires `m > 4 |lambda|`, which keeps the target modulus below `3/4`.
/// With `w = 3 lambda / m`: take `mu3 = w/|w|` (or `1` at `w = 0`), then the
/// remainder `v = w - mu3` has `|v| <= 2` and is closed by the conjugate
/// pair at angles `arg v +- arccos(|v|/2)`.
///
/// ```
/// use hyerslab_core::{unimodular_three_split, Scalar};
///
/// let triple = unimodular_three_split(Scalar::ONE, 5)?;
/// assert!((triple.sum() - Scalar::real(0.6)).modulus() <= 1e-12);
/// # Ok::<(), hyerslab_core::Error>(())
/// ```
pub fn unimodular_three_split(lambda: Scalar, m: u32) -> Result<UnimodularTriple> {
    if m == 0 || (m as f64) <= 4.0 * lambda.modulus() {
        return Err(Error::PreconditionViolated(format!(
            "m = {m} must exceed 4 |lambda| = {}",
            4.0 * lambda.modulus()
        )));
    }
    let w = lambda.scale(3.0 / m as f64);
    let mu3 = if w.is_zero() {
        Scalar::ONE
    } else {
        w.scale(1.0 / w.modulus())
    };
    let v = w - mu3;
    let v_mod = v.modulus();
    let theta = v.arg();
    let alpha = (v_mod / 2.0).clamp(-1.0, 1.0).acos();
    let mu1 = Scalar::from_angle(theta + alpha);
    let mu2 = Scalar::from_angle(theta - alpha);
    UnimodularTriple::new(mu1, mu2, mu3)
}

/// Which linearity verification to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinearityMode {
    /// Check `T(lambda x) = lambda T(x)` directly and through the
    /// three-split reconstruction, for every scalar in the grid.
    FullCircle,
    /// Check `mu = i` plus real homogeneity, then recombine
    /// `lambda = a + i b`.
    OneAndI,
}

/// Verify complex linearity of an additive map over sampled points and a
/// scalar grid. Report-only.
pub fn verify_complex_linearity(
    t: &ProbeFunction,
    ctx: &AlgebraContext,
    samples: &[Element],
    scalars: &[Scalar],
    mode: LinearityMode,
    tol: f64,
) -> Result<Report> {
    let mut report = Report::new();
    match mode {
        LinearityMode::FullCircle => {
            for lambda in scalars {
                let m = smallest_admissible_m(*lambda);
                let split = unimodular_three_split(*lambda, m)?;
                for (i, x) in samples.iter().enumerate() {
                    let bound = tol * (1.0 + lambda.modulus()) * (1.0 + ctx.norm(x)?);
                    let tx = t.eval(x)?;
                    let direct = ctx.norm(&ctx.sub(
                        &t.eval(&ctx.scalar_mul(*lambda, x)?)?,
                        &ctx.scalar_mul(*lambda, &tx)?,
                    )?)?;
                    report.push_with_mu("fullcircle_direct", *lambda, i as u64, direct, bound);

                    let parts = ctx.add(
                        &ctx.add(
                            &t.eval(&ctx.scalar_mul(split.mu1, x)?)?,
                            &t.eval(&ctx.scalar_mul(split.mu2, x)?)?,
                        )?,
                        &t.eval(&ctx.scalar_mul(split.mu3, x)?)?,
                    )?;
                    let recon = ctx.scale(m as f64 / 3.0, &parts)?;
                    let defect = ctx.norm(&ctx.sub(&recon, &ctx.scalar_mul(*lambda, &tx)?)?)?;
                    let recon_bound = tol * (1.0 + m as f64) * (1.0 + ctx.norm(x)?);
                    report.push_with_mu("fullcircle_split", *lambda, i as u64, defect, recon_bound);
                }
            }
        }
        LinearityMode::OneAndI => {
            for (i, x) in samples.iter().enumerate() {
                let tx = t.eval(x)?;
                let bound = tol * (1.0 + ctx.norm(x)?);
                let imag = ctx.norm(&ctx.sub(
                    &t.eval(&ctx.scalar_mul(Scalar::I, x)?)?,
                    &ctx.scalar_mul(Scalar::I, &tx)?,
                )?)?;
                report.push_with_mu("one_and_i_imag", Scalar::I, i as u64, imag, bound);
                for lambda in scalars {
                    let (a, b) = (lambda.re, lambda.im);
                    let lam_bound = tol * (1.0 + lambda.modulus()) * (1.0 + ctx.norm(x)?);
                    let real_defect =
                        ctx.norm(&ctx.sub(&t.eval(&ctx.scale(a, x)?)?, &ctx.scale(a, &tx)?)?)?;
                    report.push_with_mu(
                        "one_and_i_real",
                        Scalar::real(a),
                        i as u64,
                        real_defect,
                        lam_bound,
                    );
                    // T(lambda x) recombined from the real and imaginary parts.
                    let t_ix = t.eval(&ctx.scalar_mul(Scalar::I, x)?)?;
                    let recon = ctx.add(&ctx.scale(a, &tx)?, &ctx.scale(b, &t_ix)?)?;
                    let combine =
                        ctx.norm(&ctx.sub(&t.eval(&ctx.scalar_mul(*lambda, x)?)?, &recon)?)?;
                    report.push_with_mu("one_and_i_combine", *lambda, i as u64, combine, lam_bound);
                }
            }
        }
    }
    Ok(report)
}

/// Generators of the matrix algebra that satisfy `g^3 = g`: the diagonal
/// units plus, for each off-diagonal pair, the symmetric and antisymmetric
/// combinations. The set spans the full matrix space over `C`.
pub fn cube_idempotent_generators(dim: usize) -> Vec<Element> {
    let mut gens = Vec::new();
    let unit = |i: usize, j: usize, v: Scalar| {
        let mut entries = vec![Scalar::ZERO; dim * dim];
        entries[i * dim + j] = v;
        entries
    };
    for i in 0..dim {
        gens.push(Element::matrix(dim, unit(i, i, Scalar::ONE)).expect("square shape"));
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            let mut sym = unit(i, j, Scalar::ONE);
            sym[j * dim + i] = Scalar::ONE;
            gens.push(Element::matrix(dim, sym).expect("square shape"));
            let mut asym = unit(i, j, Scalar::I);
            asym[j * dim + i] = -Scalar::I;
            gens.push(Element::matrix(dim, asym).expect("square shape"));
        }
    }
    gens
}

/// Verify the generated-algebra upgrade chain.
///
/// The hypothesis `f(rho^{2n} [s1 s2 z]) = [f(rho^n s1) f(rho^n s2) f(z)]`
/// is checked for `n` in `[n_lo, n_hi]` first; if it fails the verification
/// is inapplicable. Then the chain is checked numerically: the recovered map
/// satisfies `T([s1 s2 z]) = [T(s1) T(s2) f(z)]` on generators, and the
/// scaled-argument limit upgrades the last slot to `T`.
#[allow(clippy::too_many_arguments)]
pub fn verify_generated_hom(
    f: &ProbeFunction,
    t: &ProbeFunction,
    ctx: &AlgebraContext,
    generators: &[Element],
    samples_z: &[Element],
    params: &JensenParams,
    n_lo: u32,
    n_hi: u32,
    tol: f64,
) -> Result<Report> {
    if generators.is_empty() || samples_z.is_empty() {
        return Err(Error::InvalidParameter(
            "generators and z samples must be nonempty".into(),
        ));
    }
    if n_lo > n_hi {
        return Err(Error::InvalidParameter("n_lo must not exceed n_hi".into()));
    }

    // Hypothesis check on f.
    for n in n_lo..=n_hi {
        let up2n = params.ratio_pow(2 * n as i32);
        let up_n = params.ratio_pow(n as i32);
        for (a, s1) in generators.iter().enumerate() {
            for (b, s2) in generators.iter().enumerate() {
                for z in samples_z.iter().take(2) {
                    let lhs = f.eval(&ctx.scale(up2n, &ctx.ternary_product(s1, s2, z)?)?)?;
                    let rhs = ctx.ternary_product(
                        &f.eval(&ctx.scale(up_n, s1)?)?,
                        &f.eval(&ctx.scale(up_n, s2)?)?,
                        &f.eval(z)?,
                    )?;
                    let defect = ctx.norm(&ctx.sub(&lhs, &rhs)?)?;
                    let scale = up2n * ctx.norm(s1)? * ctx.norm(s2)? * ctx.norm(z)?;
                    let bound = tol * (1.0 + scale);
                    if defect > bound {
                        let _ = (a, b);
                        return Err(Error::InapplicableHypothesis(defect, bound));
                    }
                }
            }
        }
    }

    let mut report = Report::new();
    let up2n = params.ratio_pow(2 * n_hi as i32);
    let down2n = params.ratio_pow(-2 * (n_hi as i32));

    // Stage one: T([s1 s2 z]) against [T(s1) T(s2) f(z)].
    let mut row = 0u64;
    for s1 in generators {
        for s2 in generators {
            for z in samples_z {
                let prod = ctx.ternary_product(s1, s2, z)?;
                let lhs = t.eval(&prod)?;
                let rhs = ctx.ternary_product(&t.eval(s1)?, &t.eval(s2)?, &f.eval(z)?)?;
                let scale = ctx.norm(s1)? * ctx.norm(s2)? * ctx.norm(z)?;
                let defect = ctx.norm(&ctx.sub(&lhs, &rhs)?)?;
                report.push("generated_core", row, defect, tol * (1.0 + scale));
                // Finite-stage limit consistency at n_hi.
                let staged = ctx.scale(down2n, &f.eval(&ctx.scale(up2n, &prod)?)?)?;
                let stage_defect = ctx.norm(&ctx.sub(&staged, &lhs)?)?;
                report.push("generated_limit", row, stage_defect, tol * (1.0 + scale));
                row += 1;
            }
        }
    }

    // Stage two: the full upgrade T([xyz]) = [T(x) T(y) T(z)] on generator
    // combinations, with the scaled-z limit as the connecting object.
    let up_n = params.ratio_pow(n_hi as i32);
    let down_n = params.ratio_pow(-(n_hi as i32));
    let mut row = 0u64;
    for (i, x) in generators.iter().enumerate() {
        let y = &generators[(i + 1) % generators.len()];
        for z in samples_z {
            let tx = t.eval(x)?;
            let ty = t.eval(y)?;
            let lhs = t.eval(&ctx.ternary_product(x, y, z)?)?;
            let rhs = ctx.ternary_product(&tx, &ty, &t.eval(z)?)?;
            let scale = ctx.norm(x)? * ctx.norm(y)? * ctx.norm(z)?;
            let defect = ctx.norm(&ctx.sub(&lhs, &rhs)?)?;
            report.push("generated_upgrade", row, defect, tol * (1.0 + scale));
            let staged = ctx.scale(
                down_n,
                &ctx.ternary_product(&tx, &ty, &f.eval(&ctx.scale(up_n, z)?)?)?,
            )?;
            let staged_defect = ctx.norm(&ctx.sub(&staged, &lhs)?)?;
            let staged_bound =
                tol * (1.0 + ctx.norm(&tx)? * ctx.norm(&ty)? * (1.0 + ctx.norm(z)?));
            report.push("generated_scaled_z", row, staged_defect, staged_bound);
            row += 1;
        }
    }
    Ok(report)
}

/// Aggregated homomorphism verification summary.
#[derive(Clone, Debug)]
pub struct HomReport {
    pub max_hom_defect: f64,
    pub max_linearity_defect: f64,
    pub report: Report,
}

impl HomReport {
    pub fn new(report: Report) -> Self {
        let max_hom_defect = report
            .max_value("hom_defect")
            .max(report.max_value("generated"));
        let max_linearity_defect = report
            .max_value("fullcircle")
            .max(report.max_value("one_and_i"));
        HomReport {
            max_hom_defect,
            max_linearity_defect,
            report,
        }
    }

    pub fn passed(&self) -> bool {
        self.report.passed()
    }
}
