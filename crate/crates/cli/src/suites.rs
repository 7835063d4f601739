//! Named verification suites assembled from the core verifiers.
//!
//! Every suite returns ordered check rows; the runner writes them to
//! `report.csv` / `report.json` plus a human summary, and derives the exit
//! status from the pass column. All sampling is seeded through the config,
//! so identical configs produce byte-identical reports.

use hyerslab_core::parallel::par_map;
use hyerslab_core::*;

use crate::config::{ConfigError, ConfigResult, ExperimentConfig, Suite};

/// Worker-thread budget: available parallelism, capped by HYERSLAB_THREADS.
pub fn thread_budget() -> usize {
    let available = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    match std::env::var("HYERSLAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        Some(n) if n >= 1 => n.min(available),
        _ => available,
    }
}

/// Everything a suite run produces.
pub struct SuiteOutput {
    pub report: Report,
    pub stability: Option<StabilityReport>,
}

pub fn run_suite(cfg: &ExperimentConfig) -> ConfigResult<SuiteOutput> {
    let mut report = Report::new();
    let mut stability = None;
    let suites: Vec<Suite> = match cfg.suite {
        Suite::Full => vec![
            Suite::Algebra,
            Suite::Series,
            Suite::Jensen,
            Suite::Homstab,
            Suite::Linearity,
            Suite::Generated,
        ],
        single => vec![single],
    };
    for suite in suites {
        match suite {
            Suite::Algebra => report.extend(algebra_suite(cfg)?),
            Suite::Series => report.extend(series_suite(cfg)?),
            Suite::Jensen => {
                let (rows, stab) = jensen_suite(cfg)?;
                report.extend(rows);
                stability = Some(stab);
            }
            Suite::Homstab => report.extend(homstab_suite(cfg)?),
            Suite::Linearity => report.extend(linearity_suite(cfg)?),
            Suite::Generated => report.extend(generated_suite(cfg)?),
            Suite::Full => unreachable!("full is expanded above"),
        }
    }
    report.sort_rows();
    Ok(SuiteOutput { report, stability })
}

fn sample_stream(cfg: &ExperimentConfig, ctx: &AlgebraContext, salt: u64) -> SplitMix64 {
    let _ = ctx;
    let mut root = SplitMix64::new(cfg.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    root.split()
}

/// Algebra axiom suite: submultiplicativity, ternary associativity, slot
/// linearity, degree closure, and the unital bridge where an identity exists.
fn algebra_suite(cfg: &ExperimentConfig) -> ConfigResult<Report> {
    let ctx = cfg.context()?;
    let mut rng = sample_stream(cfg, &ctx, 1);
    let tuples: Vec<Vec<Element>> = (0..cfg.samples)
        .map(|_| (0..5).map(|_| random_element(&ctx, &mut rng)).collect())
        .collect();

    let threads = thread_budget();
    let ctx_ref = &ctx;
    let row_chunks: Vec<Vec<(String, f64, f64)>> = par_map(&tuples, threads, |tuple| {
        let mut rows = Vec::new();
        let norms: Vec<f64> = tuple
            .iter()
            .map(|e| ctx_ref.norm(e).expect("member"))
            .collect();
        let prod = ctx_ref
            .ternary_product(&tuple[0], &tuple[1], &tuple[2])
            .expect("same context");
        rows.push((
            "algebra_submultiplicative".to_string(),
            ctx_ref.norm(&prod).expect("member"),
            norms[0] * norms[1] * norms[2] * (1.0 + 1e-12),
        ));
        let assoc = ctx_ref
            .check_ternary_associativity(&tuple[0], &tuple[1], &tuple[2], &tuple[3], &tuple[4])
            .expect("same context");
        rows.push((
            "algebra_associativity".to_string(),
            assoc,
            1e-10 * norms.iter().product::<f64>(),
        ));
        for slot in 1..=3usize {
            let defect = ctx_ref
                .check_slot_linearity(slot, &tuple[0], &tuple[1], &tuple[2], &tuple[3])
                .expect("same context");
            let scale = (norms[0] + norms[1]) * norms[2] * norms[3] + 1.0;
            rows.push((format!("algebra_slot{slot}_linear"), defect, 1e-10 * scale));
        }
        if matches!(ctx_ref.kind(), AlgebraKind::OddPolynomial) {
            let evens = prod.degrees().iter().filter(|d| *d % 2 == 0).count();
            rows.push(("algebra_odd_closure".to_string(), evens as f64, 0.0));
        }
        rows
    });

    let mut report = Report::new();
    for (i, rows) in row_chunks.into_iter().enumerate() {
        for (check, value, bound) in rows {
            report.push(&check, i as u64, value, bound);
        }
    }

    // Unital bridge: the identity must act as one and the induced binary
    // product must associate.
    if let Ok(e) = ctx.identity() {
        let mut rng = sample_stream(cfg, &ctx, 2);
        for i in 0..cfg.samples.min(200) {
            let a = random_element(&ctx, &mut rng);
            let b = random_element(&ctx, &mut rng);
            let c = random_element(&ctx, &mut rng);
            let id_defect = ctx.check_identity(&e, &a)?;
            report.push(
                "bridge_identity",
                i as u64,
                id_defect,
                1e-14 * (1.0 + ctx.norm(&a)?),
            );
            let ab = ctx.binary_from_identity(&e, &a, &b)?;
            let bc = ctx.binary_from_identity(&e, &b, &c)?;
            let left = ctx.binary_from_identity(&e, &ab, &c)?;
            let right = ctx.binary_from_identity(&e, &a, &bc)?;
            let assoc = ctx.norm(&ctx.sub(&left, &right)?)?;
            let scale = ctx.norm(&a)? * ctx.norm(&b)? * ctx.norm(&c)? + 1.0;
            report.push("bridge_associative", i as u64, assoc, 1e-10 * scale);
        }
    }
    Ok(report)
}

/// Series suite: closed-form agreement on the standard grid, the anchor
/// value, and truncation monotonicity of the configured control.
fn series_suite(cfg: &ExperimentConfig) -> ConfigResult<Report> {
    let ctx = cfg.context()?;
    let params = cfg.jensen_params()?;
    let f = cfg.probe(&ctx)?;
    let phi = cfg.control(&ctx, &params, &f, 2)?;
    let mut report = Report::new();

    let ps = [-0.5, 0.0, 0.25, 0.5, 0.75, 0.9];
    let rs = [(2u32, 1u32), (3, 1), (3, 2), (5, 2)];
    let xs = [0.1, 1.0, 10.0];
    let mut idx = 0u64;
    for &p in &ps {
        for &(r, s) in &rs {
            for &x in &xs {
                let closed = power_bound_closed_form(1.0, p, r, s, x).map_err(ConfigError::from)?;
                let grid_phi = ControlFunction::power_pair(1.0, p).map_err(ConfigError::from)?;
                let series = phi_tilde_forward(&grid_phi, r, s, &[x, x], 1e-13)
                    .map_err(ConfigError::from)?;
                report.push(
                    "series_closed_form_gap",
                    idx,
                    (closed - series.value).abs(),
                    1e-10 * closed + series.truncation_tail,
                );
                idx += 1;
            }
        }
    }

    // Anchor point: eps=1, p=0.5, r=2, s=1, |x|=1.
    let anchor = phi_tilde_forward(
        &ControlFunction::power_pair(1.0, 0.5).map_err(ConfigError::from)?,
        2,
        1,
        &[1.0, 1.0],
        1e-12,
    )
    .map_err(ConfigError::from)?;
    report.push("series_anchor", 0, (anchor.value - 3.414213562).abs(), 1e-9);

    // Truncation behaviour of the configured control in the configured
    // direction, evaluated at the first few sample norms.
    let mut rng = sample_stream(cfg, &ctx, 3);
    let (r, c) = (params.r, params.contraction());
    for i in 0..cfg.samples.min(16) {
        let x = random_scaled_element(&ctx, &mut rng);
        let n = ctx.norm(&x)?;
        let run = |tol: f64| -> ConfigResult<SeriesValue> {
            Ok(match params.direction {
                Direction::Forward => {
                    phi_tilde_forward(&params.oriented_pair(&phi), r, c, &[n, n], tol)
                        .map_err(ConfigError::from)?
                }
                Direction::Backward => {
                    phi_tilde_backward(&params.oriented_pair(&phi), r, c, &[n, n], tol)
                        .map_err(ConfigError::from)?
                }
            })
        };
        let loose = run(1e-6)?;
        let tight = run(1e-12)?;
        report.push(
            "series_monotone",
            i as u64,
            loose.value,
            tight.value + 1e-15,
        );
        report.push(
            "series_upper_consistent",
            i as u64,
            tight.value,
            loose.value + loose.truncation_tail + 1e-15,
        );
        report.push(
            "series_tail_certified",
            i as u64,
            if tight.certified { 0.0 } else { 1.0 },
            0.0,
        );
    }
    Ok(report)
}

/// Jensen suite: certified limit recovery, the stability bound, additivity
/// of the limit, uniqueness across perturbation seeds, and residual
/// dominance of the control on fresh samples.
fn jensen_suite(cfg: &ExperimentConfig) -> ConfigResult<(Report, StabilityReport)> {
    let ctx = cfg.context()?;
    let params = cfg.jensen_params()?;
    let f = cfg.probe(&ctx)?;
    let phi = cfg.control(&ctx, &params, &f, 2)?;

    let mut rng = sample_stream(cfg, &ctx, 4);
    let samples: Vec<(u64, Element)> = (0..cfg.samples)
        .map(|i| (i as u64, random_scaled_element(&ctx, &mut rng)))
        .collect();

    // Limits in parallel, reassembled in sample order.
    let threads = thread_budget();
    let (ctx_ref, f_ref, phi_ref) = (&ctx, &f, &phi);
    let limits: Vec<PointLimit> = {
        let computed: Vec<ConfigResult<PointLimit>> = par_map(&samples, threads, |(_, x)| {
            hyers_limit(f_ref, &params, ctx_ref, phi_ref, x, cfg.tol).map_err(ConfigError::from)
        });
        let mut out = Vec::with_capacity(computed.len());
        for item in computed {
            out.push(item?);
        }
        out
    };
    let t = HyersResult {
        limits: samples.iter().map(|(id, _)| *id).zip(limits).collect(),
    };

    let mut report = Report::new();
    for (id, point) in &t.limits {
        report.push(
            "jensen_certified",
            *id,
            if point.certified { 0.0 } else { 1.0 },
            0.0,
        );
        report.push("jensen_tail", *id, point.tail_bound, cfg.tol);
    }

    let stab =
        verify_stability_bound(&f, &t, &phi, &params, &ctx, &samples).map_err(ConfigError::from)?;
    report.extend(stab.to_check_rows("jensen_stability"));

    // The limit as an on-demand map, certified two orders tighter than the
    // reported tolerance so downstream checks keep headroom.
    let t_map =
        recovered_map(&f, &params, &ctx, &phi, cfg.tol * 1e-2).map_err(ConfigError::from)?;
    let mut pair_rng = sample_stream(cfg, &ctx, 5);
    let pairs: Vec<(Element, Element)> = (0..cfg.samples.min(32))
        .map(|_| {
            (
                random_scaled_element(&ctx, &mut pair_rng),
                random_scaled_element(&ctx, &mut pair_rng),
            )
        })
        .collect();
    report.extend(verify_additivity(&t_map, &ctx, &pairs, cfg.tol).map_err(ConfigError::from)?);

    // Uniqueness: a sibling probe with a shifted perturbation seed shares
    // the additive core, so both limits must coincide.
    if let Some(spec) = cfg.probe.perturbation {
        let sibling = PerturbationSpec {
            seed: spec.seed.wrapping_add(1),
            ..spec
        };
        let core = cfg.additive_core(&ctx)?;
        let f_prime = make_probe(core, Some(sibling), &ctx).map_err(ConfigError::from)?;
        let phi_prime = cfg.control(&ctx, &params, &f_prime, 2)?;
        let t_prime = hyers_limit_samples(&f_prime, &params, &ctx, &phi_prime, &samples, cfg.tol)
            .map_err(ConfigError::from)?;
        report.extend(
            verify_uniqueness(&t, &t_prime, &phi, &params, &ctx, &samples, 6)
                .map_err(ConfigError::from)?,
        );
    }

    // Residual dominance on a fresh stream.
    let mut fresh = sample_stream(cfg, &ctx, 6);
    for i in 0..cfg.samples {
        let x = random_scaled_element(&ctx, &mut fresh);
        let y = if i % 8 == 3 {
            ctx.zero()
        } else {
            random_scaled_element(&ctx, &mut fresh)
        };
        let residual = jensen_residual(&f, &params, &ctx, &x, &y).map_err(ConfigError::from)?;
        let bound = phi
            .eval(&[
                ctx.norm(&x).map_err(ConfigError::from)?,
                ctx.norm(&y).map_err(ConfigError::from)?,
            ])
            .map_err(ConfigError::from)?;
        report.push("jensen_dominance", i as u64, residual, bound);
    }
    Ok((report, stab))
}

/// Homomorphism suite: recovery under the five-slot control, ratio scaling,
/// ternary defect with the decay chain, and five-variable dominance.
fn homstab_suite(cfg: &ExperimentConfig) -> ConfigResult<Report> {
    let ctx = cfg.context()?;
    let params = cfg.jensen_params()?;
    let f = cfg.probe(&ctx)?;
    let phi5 = cfg.control(&ctx, &params, &f, 5)?;

    let mut rng = sample_stream(cfg, &ctx, 7);
    let samples: Vec<(u64, Element)> = (0..cfg.samples)
        .map(|i| (i as u64, random_scaled_element(&ctx, &mut rng)))
        .collect();
    let recovered =
        recover_hom(&f, &params, &ctx, &phi5, &samples, cfg.tol).map_err(ConfigError::from)?;
    let mut report = Report::new();
    for (id, point) in &recovered.limits {
        report.push(
            "homstab_certified",
            *id,
            if point.certified { 0.0 } else { 1.0 },
            0.0,
        );
    }

    let t_map =
        recovered_map(&f, &params, &ctx, &phi5, cfg.tol * 1e-2).map_err(ConfigError::from)?;
    let elements: Vec<Element> = samples.iter().map(|(_, x)| x.clone()).take(16).collect();
    report.extend(
        verify_scaling(&t_map, &params, &ctx, &elements, cfg.tol).map_err(ConfigError::from)?,
    );

    let mut triple_rng = sample_stream(cfg, &ctx, 8);
    let triples: Vec<(Element, Element, Element)> = (0..cfg.samples.min(64))
        .map(|_| {
            (
                random_element(&ctx, &mut triple_rng),
                random_element(&ctx, &mut triple_rng),
                random_element(&ctx, &mut triple_rng),
            )
        })
        .collect();
    report.extend(
        verify_hom_defect(
            &t_map,
            &ctx,
            &triples,
            &params,
            &phi5,
            cfg.n_probe,
            cfg.tol,
            cfg.tol,
        )
        .map_err(ConfigError::from)?,
    );

    // Five-variable residual dominance with the configured sign convention.
    let mut fresh = sample_stream(cfg, &ctx, 9);
    let sign: ResidualSign = cfg.residual_sign.into();
    for i in 0..cfg.samples {
        let mu = match i % 4 {
            0 => Scalar::ONE,
            1 => Scalar::I,
            _ => Scalar::from_angle(2.0 * std::f64::consts::PI * fresh.next_f64()),
        };
        let tuple: Vec<Element> = (0..5)
            .map(|_| random_scaled_element(&ctx, &mut fresh))
            .collect();
        let residual = hom_residual_with_sign(
            &f, &params, &ctx, mu, &tuple[0], &tuple[1], &tuple[2], &tuple[3], &tuple[4], sign,
        )
        .map_err(ConfigError::from)?;
        let norms: Vec<f64> = tuple
            .iter()
            .map(|e| ctx.norm(e).map_err(ConfigError::from))
            .collect::<ConfigResult<_>>()?;
        let bound = phi5.eval(&norms).map_err(ConfigError::from)?;
        report.rows.push(CheckRow {
            check: "homstab_dominance".into(),
            mu: hyerslab_core::report::fmt_scalar(mu),
            sample_id: i as u64,
            value: residual,
            bound,
            pass: residual <= bound,
        });
    }
    Ok(report)
}

/// Linearity suite: full-circle and one-and-i checks of the recovered map.
fn linearity_suite(cfg: &ExperimentConfig) -> ConfigResult<Report> {
    let ctx = cfg.context()?;
    let params = cfg.jensen_params()?;
    let f = cfg.probe(&ctx)?;
    let phi = cfg.control(&ctx, &params, &f, 2)?;
    let t_map =
        recovered_map(&f, &params, &ctx, &phi, cfg.tol * 1e-2).map_err(ConfigError::from)?;

    let mut rng = sample_stream(cfg, &ctx, 10);
    let samples: Vec<Element> = (0..cfg.samples.min(16))
        .map(|_| random_scaled_element(&ctx, &mut rng))
        .collect();
    let scalars = cfg.scalar_grid();
    let mut report = Report::new();
    report.extend(
        verify_complex_linearity(
            &t_map,
            &ctx,
            &samples,
            &scalars,
            LinearityMode::FullCircle,
            cfg.tol,
        )
        .map_err(ConfigError::from)?,
    );
    report.extend(
        verify_complex_linearity(
            &t_map,
            &ctx,
            &samples,
            &scalars,
            LinearityMode::OneAndI,
            cfg.tol,
        )
        .map_err(ConfigError::from)?,
    );
    Ok(report)
}

/// Generated-algebra suite: the two-stage upgrade chain over cube-idempotent
/// generators (matrices) or low-degree monomials (polynomials).
fn generated_suite(cfg: &ExperimentConfig) -> ConfigResult<Report> {
    let ctx = cfg.context()?;
    let params = cfg.jensen_params()?;
    let f = cfg.probe(&ctx)?;
    let phi = cfg.control(&ctx, &params, &f, 2)?;
    let t_map =
        recovered_map(&f, &params, &ctx, &phi, cfg.tol * 1e-2).map_err(ConfigError::from)?;

    let generators = match ctx.kind() {
        AlgebraKind::MatrixTrivial { dim } => cube_idempotent_generators(dim),
        AlgebraKind::OddPolynomial => vec![
            Element::monomial(1, Scalar::ONE).expect("odd degree"),
            Element::monomial(3, Scalar::ONE).expect("odd degree"),
        ],
    };
    let mut rng = sample_stream(cfg, &ctx, 11);
    let zs: Vec<Element> = (0..cfg.samples.min(8))
        .map(|_| random_element(&ctx, &mut rng))
        .collect();

    let mut report = Report::new();
    match verify_generated_hom(&f, &t_map, &ctx, &generators, &zs, &params, 1, 4, cfg.tol) {
        Ok(rows) => {
            report.push("generated_hypothesis", 0, 0.0, 0.0);
            report.extend(rows);
        }
        Err(Error::InapplicableHypothesis(defect, bound)) => {
            report.push("generated_hypothesis", 0, defect, bound);
        }
        Err(e) => return Err(ConfigError::from(e)),
    }
    Ok(report)
}

/// One row of the closed-form versus series bound table.
pub struct BoundTableRow {
    pub r: u32,
    pub s: u32,
    pub p: f64,
    pub eps: f64,
    pub x_norm: f64,
    pub closed_form: f64,
    pub series: f64,
    pub rel_gap: f64,
    pub status: &'static str,
}

/// Evaluate the bound table over a parameter grid. Rows whose parameters
/// fall outside the convergent regime are emitted with `status = invalid`.
pub fn bound_table(
    rs_grid: &[(u32, u32)],
    p_grid: &[f64],
    eps: f64,
    x_norm: f64,
) -> Vec<BoundTableRow> {
    let mut rows = Vec::new();
    for &(r, s) in rs_grid {
        for &p in p_grid {
            let closed = power_bound_closed_form(eps, p, r, s, x_norm);
            let series = ControlFunction::power_pair(eps, p)
                .and_then(|phi| phi_tilde_forward(&phi, r, s, &[x_norm, x_norm], 1e-12));
            match (closed, series) {
                (Ok(c), Ok(sv)) => {
                    let rel_gap = if c > 0.0 {
                        (c - sv.value).abs() / c
                    } else {
                        (c - sv.value).abs()
                    };
                    rows.push(BoundTableRow {
                        r,
                        s,
                        p,
                        eps,
                        x_norm,
                        closed_form: c,
                        series: sv.value,
                        rel_gap,
                        status: "ok",
                    });
                }
                _ => rows.push(BoundTableRow {
                    r,
                    s,
                    p,
                    eps,
                    x_norm,
                    closed_form: f64::NAN,
                    series: f64::NAN,
                    rel_gap: f64::NAN,
                    status: "invalid",
                }),
            }
        }
    }
    rows
}

pub fn bound_table_csv(rows: &[BoundTableRow]) -> String {
    use hyerslab_core::report::fmt_f64;
    let mut out = String::from("r,s,p,eps,x_norm,closed_form,series,rel_gap,status\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            row.r,
            row.s,
            fmt_f64(row.p),
            fmt_f64(row.eps),
            fmt_f64(row.x_norm),
            fmt_f64(row.closed_form),
            fmt_f64(row.series),
            fmt_f64(row.rel_gap),
            row.status
        ));
    }
    out
}
