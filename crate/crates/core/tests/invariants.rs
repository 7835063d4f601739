//! Property suites for the algebra axioms, the series transforms, the
//! iteration, and the probe generators, at the tolerances the lab commits to.

use hyerslab_core::*;
use proptest::prelude::*;

fn matrix_ctx(dim: usize) -> AlgebraContext {
    AlgebraContext::matrix_trivial(dim).unwrap()
}

fn poly_ctx() -> AlgebraContext {
    AlgebraContext::odd_polynomial()
}

fn both_contexts() -> Vec<AlgebraContext> {
    vec![matrix_ctx(3), poly_ctx()]
}

#[test]
fn submultiplicativity_ten_thousand_triples() {
    for (c, ctx) in both_contexts().into_iter().enumerate() {
        let mut rng = SplitMix64::new(1000 + c as u64);
        for i in 0..10_000 {
            let a = random_element(&ctx, &mut rng);
            let b = random_element(&ctx, &mut rng);
            let cc = random_element(&ctx, &mut rng);
            let prod = ctx.ternary_product(&a, &b, &cc).unwrap();
            let lhs = ctx.norm(&prod).unwrap();
            let rhs = ctx.norm(&a).unwrap() * ctx.norm(&b).unwrap() * ctx.norm(&cc).unwrap();
            assert!(
                lhs <= rhs * (1.0 + 1e-12),
                "submultiplicativity fails in context {c} at sample {i}: {lhs} > {rhs}"
            );
        }
    }
}

#[test]
fn ternary_associativity_ten_thousand_tuples() {
    for (c, ctx) in both_contexts().into_iter().enumerate() {
        let mut rng = SplitMix64::new(2000 + c as u64);
        for i in 0..10_000 {
            let e: Vec<Element> = (0..5).map(|_| random_element(&ctx, &mut rng)).collect();
            let defect = ctx
                .check_ternary_associativity(&e[0], &e[1], &e[2], &e[3], &e[4])
                .unwrap();
            let norms: f64 = e.iter().map(|x| ctx.norm(x).unwrap()).product();
            assert!(
                defect <= 1e-10 * norms,
                "associativity fails in context {c} at sample {i}: {defect} > 1e-10 * {norms}"
            );
        }
    }
}

#[test]
fn poly_products_stay_odd() {
    let ctx = poly_ctx();
    let mut rng = SplitMix64::new(3000);
    for _ in 0..2_000 {
        let a = random_element(&ctx, &mut rng);
        let b = random_element(&ctx, &mut rng);
        let c = random_element(&ctx, &mut rng);
        let prod = ctx.ternary_product(&a, &b, &c).unwrap();
        for d in prod.degrees() {
            assert_eq!(d % 2, 1, "even degree {d} in a ternary product");
        }
    }
}

#[test]
fn unital_bridge_matches_matrix_product() {
    let ctx = matrix_ctx(3);
    let e = ctx.identity().unwrap();
    let mut rng = SplitMix64::new(4000);
    // Independent oracle: plain row-by-column multiplication.
    let matmul = |a: &Element, b: &Element| -> Vec<Scalar> {
        let mut out = vec![Scalar::ZERO; 9];
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = Scalar::ZERO;
                for k in 0..3 {
                    acc += a.entry(i, k).unwrap() * b.entry(k, j).unwrap();
                }
                out[i * 3 + j] = acc;
            }
        }
        out
    };
    for _ in 0..2_000 {
        let a = random_element(&ctx, &mut rng);
        let b = random_element(&ctx, &mut rng);
        let bridged = ctx.binary_from_identity(&e, &a, &b).unwrap();
        let plain = matmul(&a, &b);
        for i in 0..3 {
            for j in 0..3 {
                let lhs = bridged.entry(i, j).unwrap();
                let rhs = plain[i * 3 + j];
                let scale = lhs.modulus().max(rhs.modulus()).max(1.0);
                assert!(
                    (lhs - rhs).modulus() <= 1e-14 * scale,
                    "bridge mismatch at ({i},{j})"
                );
            }
        }
    }
}

#[test]
fn product_linear_in_each_slot() {
    for (c, ctx) in both_contexts().into_iter().enumerate() {
        let mut rng = SplitMix64::new(5000 + c as u64);
        for _ in 0..2_000 {
            let a = random_element(&ctx, &mut rng);
            let a2 = random_element(&ctx, &mut rng);
            let b = random_element(&ctx, &mut rng);
            let d = random_element(&ctx, &mut rng);
            for slot in 1..=3 {
                let defect = ctx.check_slot_linearity(slot, &a, &a2, &b, &d).unwrap();
                let scale = (ctx.norm(&a).unwrap() + ctx.norm(&a2).unwrap())
                    * ctx.norm(&b).unwrap()
                    * ctx.norm(&d).unwrap()
                    + 1.0;
                assert!(
                    defect <= 1e-10 * scale,
                    "slot {slot} linearity defect {defect}"
                );
            }
        }
    }
}

#[test]
fn closed_form_agrees_with_series_on_grid() {
    let ps = [-0.5, 0.0, 0.25, 0.5, 0.75, 0.9];
    let rs = [(2u32, 1u32), (3, 1), (3, 2), (5, 2)];
    let xs = [0.1, 1.0, 10.0];
    for &p in &ps {
        for &(r, s) in &rs {
            for &x in &xs {
                let closed = power_bound_closed_form(1.0, p, r, s, x).unwrap();
                let phi = ControlFunction::power_pair(1.0, p).unwrap();
                let series = phi_tilde_forward(&phi, r, s, &[x, x], 1e-13).unwrap();
                assert!(series.certified);
                let gap = (closed - series.value).abs();
                assert!(
                    gap <= 1e-10 * closed + series.truncation_tail,
                    "closed form gap {gap} at p={p}, r={r}, s={s}, x={x}"
                );
            }
        }
    }
}

#[test]
fn series_value_monotone_and_upper_bound_consistent() {
    let phi = ControlFunction::power_pair(1.0, 0.75).unwrap();
    let tolerances = [1e-3, 1e-6, 1e-9, 1e-12];
    let mut prev: Option<SeriesValue> = None;
    for &tol in &tolerances {
        let sv = phi_tilde_forward(&phi, 2, 1, &[1.0, 1.0], tol).unwrap();
        if let Some(p) = prev {
            assert!(sv.terms_used >= p.terms_used);
            assert!(sv.value >= p.value);
            // A looser run's upper bound covers every tighter run.
            assert!(p.value + p.truncation_tail + 1e-15 >= sv.value);
            assert!(p.value + p.truncation_tail + 1e-15 >= sv.value + sv.truncation_tail);
        }
        prev = Some(sv);
    }
}

#[test]
fn geometric_error_decay_of_iterates() {
    // Power(delta, p) perturbations decay like (r/s)^{n(p-1)} under the
    // forward iteration, with constant at most 1.01.
    let ctx = matrix_ctx(2);
    let params = JensenParams::forward(2, 1, 1).unwrap();
    let (delta, p) = (0.1, 0.5);
    let core = AdditiveCore::random_matrix_linear(2, 77);
    let f = make_probe(
        core.clone(),
        Some(PerturbationSpec::power(delta, p, 13)),
        &ctx,
    )
    .unwrap();
    let mut rng = SplitMix64::new(6000);
    for _ in 0..100 {
        let x = random_scaled_element(&ctx, &mut rng);
        let x_norm = ctx.norm(&x).unwrap();
        if x_norm == 0.0 {
            continue;
        }
        let core_x = core.apply(&ctx, &x).unwrap();
        for n in 0..=40u32 {
            let it = hyers_iterate(&f, &params, &ctx, &x, n).unwrap();
            let err = ctx.norm(&ctx.sub(&it, &core_x).unwrap()).unwrap();
            let bound = 1.01 * delta * x_norm.powf(p) * params.ratio_pow(n as i32).powf(p - 1.0);
            assert!(err <= bound, "decay violated at n={n}: {err} > {bound}");
        }
    }
}

#[test]
fn telescoping_cauchy_estimate_dominates_iterate_gaps() {
    let ctx = matrix_ctx(2);
    let params = JensenParams::forward(2, 1, 1).unwrap();
    let f = make_probe(
        AdditiveCore::Identity,
        Some(PerturbationSpec::power(0.1, 0.5, 23)),
        &ctx,
    )
    .unwrap();
    let eps = calibrate_epsilon(
        &f,
        &params,
        &ctx,
        CalibrationShape::TwoSlotPower { p: 0.5 },
        2000,
        31,
    )
    .unwrap();
    let phi = ControlFunction::power_pair(eps, 0.5).unwrap();
    let mut rng = SplitMix64::new(7000);
    for _ in 0..20 {
        let x = random_scaled_element(&ctx, &mut rng);
        let x_norm = ctx.norm(&x).unwrap();
        for m in 0..20u32 {
            let it_m = hyers_iterate(&f, &params, &ctx, &x, m).unwrap();
            for n in (m + 1)..=20 {
                let it_n = hyers_iterate(&f, &params, &ctx, &x, n).unwrap();
                let gap = ctx.norm(&ctx.sub(&it_n, &it_m).unwrap()).unwrap();
                let (tail_m, cert) =
                    control_tail(&phi, &params, x_norm, m).expect("convergent regime");
                let (tail_n, _) = control_tail(&phi, &params, x_norm, n).unwrap();
                assert!(cert);
                let partial = tail_m - tail_n;
                assert!(
                    gap <= partial + 1e-12 * (1.0 + x_norm),
                    "cauchy estimate violated at m={m}, n={n}: {gap} > {partial}"
                );
            }
        }
    }
}

fn control_tail(
    phi: &ControlFunction,
    params: &JensenParams,
    x_norm: f64,
    from: u32,
) -> Result<(f64, bool)> {
    hyerslab_core::control::derivation_tail(
        phi,
        params.r,
        params.contraction(),
        x_norm,
        from,
        params.direction,
        1e-12,
    )
}

#[test]
fn recovered_limit_commutes_with_ratio_scaling() {
    let ctx = matrix_ctx(2);
    let params = JensenParams::forward(2, 1, 1).unwrap();
    let f = make_probe(
        AdditiveCore::random_matrix_linear(2, 3),
        Some(PerturbationSpec::power(0.1, 0.5, 5)),
        &ctx,
    )
    .unwrap();
    let phi = ControlFunction::power_pair(0.3, 0.5).unwrap();
    let t = recovered_map(&f, &params, &ctx, &phi, 1e-10).unwrap();
    let mut rng = SplitMix64::new(8000);
    for _ in 0..20 {
        let x = random_scaled_element(&ctx, &mut rng);
        let lhs = t.eval(&ctx.scale(2.0, &x).unwrap()).unwrap();
        let rhs = ctx.scale(2.0, &t.eval(&x).unwrap()).unwrap();
        let diff = ctx.norm(&ctx.sub(&lhs, &rhs).unwrap()).unwrap();
        let scale = 1.0 + ctx.norm(&lhs).unwrap();
        assert!(diff <= 1e-8 * scale, "limit scaling defect {diff}");
    }
}

#[test]
fn calibrated_control_dominates_fresh_jensen_residuals() {
    let ctx = matrix_ctx(2);
    let params = JensenParams::forward(2, 1, 1).unwrap();
    let f = make_probe(
        AdditiveCore::random_matrix_linear(2, 17),
        Some(PerturbationSpec::power(0.1, 0.5, 19)),
        &ctx,
    )
    .unwrap();
    let eps = calibrate_epsilon(
        &f,
        &params,
        &ctx,
        CalibrationShape::TwoSlotPower { p: 0.5 },
        10_000,
        111,
    )
    .unwrap();
    let phi = ControlFunction::power_pair(eps, 0.5).unwrap();
    // Fresh sample stream, disjoint seed.
    let mut rng = SplitMix64::new(222);
    let mut failures = 0;
    for i in 0..10_000 {
        let x = random_scaled_element(&ctx, &mut rng);
        let y = if i % 8 == 3 {
            ctx.zero()
        } else {
            random_scaled_element(&ctx, &mut rng)
        };
        let residual = jensen_residual(&f, &params, &ctx, &x, &y).unwrap();
        let bound = phi
            .eval(&[ctx.norm(&x).unwrap(), ctx.norm(&y).unwrap()])
            .unwrap();
        if residual > bound {
            failures += 1;
        }
    }
    assert_eq!(failures, 0, "calibrated control violated on fresh samples");
}

#[test]
fn calibrated_five_slot_control_dominates_hom_residuals() {
    let ctx = matrix_ctx(2);
    let params = JensenParams::forward(2, 1, 1).unwrap();
    let u = random_unitary(2, 555).unwrap();
    let u_star = u.conj_transpose().unwrap();
    let f = make_probe(
        AdditiveCore::Similarity {
            s: u,
            s_inv: u_star,
        },
        Some(PerturbationSpec::power(0.05, 0.5, 29)),
        &ctx,
    )
    .unwrap();
    let eps = calibrate_epsilon(
        &f,
        &params,
        &ctx,
        CalibrationShape::FiveSlotPower { p: 0.5 },
        10_000,
        333,
    )
    .unwrap();
    let phi5 = ControlFunction::power_five(eps, 0.5).unwrap();
    let mut rng = SplitMix64::new(444);
    let mut failures = 0;
    for i in 0..10_000 {
        let mu = match i % 4 {
            0 => Scalar::ONE,
            1 => Scalar::I,
            _ => Scalar::from_angle(2.0 * std::f64::consts::PI * rng.next_f64()),
        };
        let tuple: Vec<Element> = (0..5)
            .map(|_| random_scaled_element(&ctx, &mut rng))
            .collect();
        let residual = hom_residual(
            &f, &params, &ctx, mu, &tuple[0], &tuple[1], &tuple[2], &tuple[3], &tuple[4],
        )
        .unwrap();
        let norms: Vec<f64> = tuple.iter().map(|e| ctx.norm(e).unwrap()).collect();
        if residual > phi5.eval(&norms).unwrap() {
            failures += 1;
        }
    }
    assert_eq!(failures, 0, "five-slot control violated on fresh samples");
}

#[test]
fn recovered_hom_has_small_ternary_defect() {
    let ctx = matrix_ctx(2);
    let params = JensenParams::forward(2, 1, 1).unwrap();
    let u = random_unitary(2, 999).unwrap();
    let u_star = u.conj_transpose().unwrap();
    let f = make_probe(
        AdditiveCore::Similarity {
            s: u,
            s_inv: u_star,
        },
        Some(PerturbationSpec::power(0.05, 0.5, 41)),
        &ctx,
    )
    .unwrap();
    let phi5 = ControlFunction::power_five(0.25, 0.5).unwrap();
    let t = recovered_map(&f, &params, &ctx, &phi5, 1e-8).unwrap();
    let mut rng = SplitMix64::new(1234);
    for _ in 0..200 {
        let (u, v, w) = (
            random_element(&ctx, &mut rng),
            random_element(&ctx, &mut rng),
            random_element(&ctx, &mut rng),
        );
        let lhs = t.eval(&ctx.ternary_product(&u, &v, &w).unwrap()).unwrap();
        let rhs = ctx
            .ternary_product(
                &t.eval(&u).unwrap(),
                &t.eval(&v).unwrap(),
                &t.eval(&w).unwrap(),
            )
            .unwrap();
        let defect = ctx.norm(&ctx.sub(&lhs, &rhs).unwrap()).unwrap();
        let scale = 1.0 + ctx.norm(&u).unwrap() * ctx.norm(&v).unwrap() * ctx.norm(&w).unwrap();
        assert!(
            defect <= 1e-6 * scale,
            "ternary defect {defect} exceeds 1e-6 * {scale}"
        );
    }
}

#[test]
fn three_split_soundness_ten_thousand() {
    let mut rng = SplitMix64::new(31337);
    for i in 0..10_000 {
        let lambda = Scalar::new(20.0 * rng.next_symmetric(), 20.0 * rng.next_symmetric());
        let m = smallest_admissible_m(lambda);
        let triple = unimodular_three_split(lambda, m).unwrap();
        for mu in [triple.mu1, triple.mu2, triple.mu3] {
            assert!(
                (mu.modulus() - 1.0).abs() <= 1e-12,
                "modulus drift at sample {i}"
            );
        }
        let target = lambda.scale(3.0 / m as f64);
        assert!(
            (triple.sum() - target).modulus() <= 1e-12,
            "split sum misses target at sample {i}"
        );
    }
}

#[test]
fn perturbation_envelope_ten_thousand() {
    let ctx = matrix_ctx(2);
    let core = AdditiveCore::random_matrix_linear(2, 5);
    let (delta, p) = (0.3, 0.5);
    let f = make_probe(
        core.clone(),
        Some(PerturbationSpec::power(delta, p, 7)),
        &ctx,
    )
    .unwrap();
    let mut rng = SplitMix64::new(515);
    for _ in 0..10_000 {
        let x = random_scaled_element(&ctx, &mut rng);
        let dev = ctx
            .norm(
                &ctx.sub(&f.eval(&x).unwrap(), &core.apply(&ctx, &x).unwrap())
                    .unwrap(),
            )
            .unwrap();
        let envelope = delta * ctx.norm(&x).unwrap().powf(p) * (1.0 + 1e-12);
        assert!(dev <= envelope, "envelope violated: {dev} > {envelope}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn prop_three_split_defining_property(
        re in -50.0..50.0f64,
        im in -50.0..50.0f64,
        extra in 0u32..16,
    ) {
        let lambda = Scalar::new(re, im);
        let m = smallest_admissible_m(lambda) + extra;
        let triple = unimodular_three_split(lambda, m).unwrap();
        let target = lambda.scale(3.0 / m as f64);
        prop_assert!((triple.sum() - target).modulus() <= 1e-12);
        for mu in [triple.mu1, triple.mu2, triple.mu3] {
            prop_assert!((mu.modulus() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn prop_poly_ternary_product_is_odd_and_bounded(
        a in proptest::collection::vec((0u64..12, -1.0..1.0f64, -1.0..1.0f64), 1..5),
        b in proptest::collection::vec((0u64..12, -1.0..1.0f64, -1.0..1.0f64), 1..5),
        c in proptest::collection::vec((0u64..12, -1.0..1.0f64, -1.0..1.0f64), 1..5),
    ) {
        let ctx = poly_ctx();
        let build = |v: &[(u64, f64, f64)]| {
            Element::poly(v.iter().map(|&(d, re, im)| (2 * d + 1, Scalar::new(re, im)))).unwrap()
        };
        let (pa, pb, pc) = (build(&a), build(&b), build(&c));
        let prod = ctx.ternary_product(&pa, &pb, &pc).unwrap();
        for d in prod.degrees() {
            prop_assert_eq!(d % 2, 1);
        }
        let lhs = ctx.norm(&prod).unwrap();
        let rhs = ctx.norm(&pa).unwrap() * ctx.norm(&pb).unwrap() * ctx.norm(&pc).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn prop_phi_tilde_scales_like_a_power(
        p in -0.9..0.95f64,
        x in 0.01..10.0f64,
        c in 0.1..8.0f64,
    ) {
        let phi = ControlFunction::power_pair(1.0, p).unwrap();
        let base = phi_tilde_forward(&phi, 2, 1, &[x, x], 1e-14).unwrap();
        let scaled = phi_tilde_forward(&phi, 2, 1, &[c * x, c * x], 1e-14).unwrap();
        let expected = c.powf(p) * base.value;
        prop_assert!(
            (scaled.value - expected).abs() <= 1e-12 * expected.abs(),
            "scaling identity violated: {} vs {}", scaled.value, expected
        );
    }
}
