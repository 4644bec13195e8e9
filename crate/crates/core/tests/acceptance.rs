//! Acceptance criteria 1 to 10. Each criterion prints one line; the test
//! fails if any criterion fails.

use std::f64::consts::FRAC_1_SQRT_2;

use pencil_dilate_core::factorization::{bauer_factorize, gram_coefficients, verify_factorization};
use pencil_dilate_core::isodil::{
    build_canonical, builtin_example, check_dilation, check_minimality, check_uniform,
    span_analysis,
};
use pencil_dilate_core::linalg::{c64, identity, op_norm, real_matrix, CMatrix, CVector};
use pencil_dilate_core::pencil::unit_circle_grid;
use pencil_dilate_core::unidil::{
    build_unitary, check_biinner, check_compression_tower, check_dilation_unitary,
    check_minimality_unitary, check_uniform_unitary, check_unitarity, disk_samples,
    span_analysis_unitary, theta_unitarity_residual, verify_q_identities,
};
use pencil_dilate_core::verify::{
    classical_corpus, construct, default_corpus, equivalence_falsifier,
    non_uniform_formula_residual, pattern_residual, run_padded_pipeline, shift_pattern,
    CORPUS_SEED,
};
use pencil_dilate_core::{
    BuiltinIsometric, Construction, Dilation, KPlusVector, LinearPencil, PipelineOptions,
    ToleranceProfile, Verdict,
};

struct Outcome(Vec<String>);

impl Outcome {
    fn new() -> Self {
        Outcome(Vec::new())
    }

    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.0.push(what());
        }
    }

    fn at_most(&mut self, label: &str, value: f64, bound: f64) {
        self.require(value <= bound, || {
            format!("{label}: {value:.3e} > {bound:.1e}")
        });
    }
}

fn profile() -> ToleranceProfile {
    ToleranceProfile::default()
}

fn corpus() -> Vec<Construction> {
    default_corpus()
        .iter()
        .map(|t| construct(t, &profile()).expect("corpus pencils are contractive"))
        .collect()
}

fn scalar(a: f64, b: f64) -> LinearPencil {
    LinearPencil::new(real_matrix(1, 1, &[a]), real_matrix(1, 1, &[b])).unwrap()
}

fn zero() -> LinearPencil {
    LinearPencil::zero(1, 1)
}

fn criterion_1(cs: &[Construction]) -> Outcome {
    let mut o = Outcome::new();
    for (k, c) in cs.iter().enumerate() {
        let r = verify_factorization(&c.pencil, &c.factor, 256).unwrap();
        o.at_most(&format!("pencil {k} factorization"), r, 1e-8);
    }
    // 1 - |a + bλ|² = |f0 + f1λ|² with real a, b gives
    // f0 + f1 = √(1 - (a+b)²), f0 - f1 = √(1 - (a-b)²).
    let (a, b) = (0.5, 0.3);
    let (plus, minus) = (
        (1.0f64 - (a + b) * (a + b)).sqrt(),
        (1.0f64 - (a - b) * (a - b)).sqrt(),
    );
    let (f0, f1) = ((plus + minus) / 2.0, (plus - minus) / 2.0);
    let p = profile();
    let f = bauer_factorize(&gram_coefficients(&scalar(a, b), &p).unwrap(), &p).unwrap();
    let gauge = f.f0[(0, 0)].conj() / f.f0[(0, 0)].norm();
    o.at_most("scalar F0", (f.f0[(0, 0)] * gauge - f0).norm(), 1e-10);
    o.at_most("scalar F1", (f.f1[(0, 0)] * gauge - f1).norm(), 1e-10);
    o.at_most("scalar F0 value", (f0 - 0.789898).abs(), 1e-6);
    o.at_most("scalar F1 value", (f1 + 0.189898).abs(), 1e-6);
    o
}

fn criterion_2(cs: &[Construction]) -> Outcome {
    let mut o = Outcome::new();
    let p = profile();
    for (k, c) in cs.iter().enumerate() {
        let d = check_dilation(&c.isometric, &c.pencil, 6, &p).unwrap();
        o.at_most(&format!("pencil {k} dilation"), d.worst_residual, 1e-9);
        let u = check_uniform(&c.isometric, &c.pencil, 6, &p).unwrap();
        o.at_most(&format!("pencil {k} uniform"), u.worst_residual, 1e-9);
        let s = span_analysis(&c.isometric, c.pencil.cols(), 5, 1e-8);
        let want = 5 * c.factor.dim_y() + c.pencil.cols();
        o.require(s.span_rank == want && s.deficiency == 0, || {
            format!(
                "pencil {k} span rank {} (deficiency {}), expected {want}",
                s.span_rank, s.deficiency
            )
        });
    }
    o
}

fn criterion_3() -> Outcome {
    let mut o = Outcome::new();
    let p = profile();
    let v = builtin_example(BuiltinIsometric::NonUniformV);
    let h = KPlusVector::from_head(CVector::from_element(1, c64(1.0, 0.0)));
    for l in unit_circle_grid(16) {
        let y = v.apply(l, &h).unwrap();
        let want = [c64(0.0, 0.0), l * FRAC_1_SQRT_2, c64(FRAC_1_SQRT_2, 0.0)];
        let got = [
            y.slot(3).map_or(c64(0.0, 0.0), |s| s[0]),
            y.slot(2).map_or(c64(0.0, 0.0), |s| s[0]),
            y.slot(1).map_or(c64(0.0, 0.0), |s| s[0]),
        ];
        let err = want
            .iter()
            .zip(&got)
            .map(|(a, b)| (a - b).norm())
            .fold(y.head()[0].norm(), f64::max);
        o.at_most("Ṽ(λ)h", err + (y.norm_sqr() - 1.0).abs(), 1e-12);
    }
    o.at_most(
        "Ṽ(λ)^n h",
        non_uniform_formula_residual(&v, 10).unwrap(),
        1e-12,
    );
    let y = v
        .apply(c64(-1.0, 0.0), &v.apply(c64(1.0, 0.0), &h).unwrap())
        .unwrap();
    o.at_most("P_H Ṽ(-1)Ṽ(1)h + h", (y.head()[0] + 1.0).norm(), 1e-12);
    o.require(!check_uniform(&v, &zero(), 6, &p).unwrap().pass, || {
        "Ṽ reported uniform".into()
    });
    let s = builtin_example(BuiltinIsometric::Shift);
    o.require(check_uniform(&s, &zero(), 6, &p).unwrap().pass, || {
        "S reported not uniform".into()
    });
    o
}

fn criterion_4(cs: &[Construction]) -> Outcome {
    let mut o = Outcome::new();
    for (k, c) in cs.iter().enumerate() {
        let q = verify_q_identities(&c.isometric, c.unitary.q(), 256, 1e-9).unwrap();
        o.at_most(&format!("pencil {k} Q identities"), q.worst_residual, 1e-9);
        let u = check_unitarity(&c.unitary, 50, CORPUS_SEED, 1e-10).unwrap();
        o.at_most(&format!("pencil {k} unitarity"), u.worst_residual, 1e-10);
    }
    o
}

fn criterion_5(cs: &[Construction]) -> Outcome {
    let mut o = Outcome::new();
    let p = profile();
    for (k, c) in cs.iter().enumerate() {
        let t = check_compression_tower(&c.unitary, &c.pencil, 6, 64, 1e-9).unwrap();
        o.at_most(&format!("pencil {k} tower"), t.worst_residual, 1e-9);
        let u = check_uniform_unitary(&c.unitary, &c.pencil, 6, &p).unwrap();
        o.at_most(&format!("pencil {k} unitary words"), u.worst_residual, 1e-9);
    }
    o
}

fn criterion_6(cs: &[Construction]) -> Outcome {
    let mut o = Outcome::new();
    for (k, c) in cs.iter().enumerate() {
        let s = span_analysis_unitary(&c.unitary, c.pencil.cols(), 4, 1e-8);
        let want = 4 * c.factor.dim_y() + c.pencil.cols() + 4 * c.unitary.dim_u();
        o.require(s.span_rank == want && s.deficiency == 0, || {
            format!(
                "pencil {k} span rank {} (deficiency {}), expected {want}",
                s.span_rank, s.deficiency
            )
        });
    }
    let opts = PipelineOptions::default();
    for t in [&cs[0].pencil, &cs[3].pencil] {
        let padded = run_padded_pipeline(t, &opts, &profile()).unwrap();
        for name in ["minimality", "unitary minimality"] {
            let r = padded.iter().find(|r| r.check == name).unwrap();
            o.require(!r.pass, || format!("padded {name} passed"));
        }
        for r in padded.iter().filter(|r| !r.check.ends_with("minimality")) {
            o.require(r.pass, || format!("padded {} failed", r.check));
        }
    }
    o
}

fn criterion_7(cs: &[Construction]) -> Outcome {
    let mut o = Outcome::new();
    for (k, c) in cs.iter().enumerate() {
        let (du, dy) = (c.unitary.dim_u(), c.factor.dim_y());
        o.require(du == dy, || format!("pencil {k}: dim U {du} vs dim Y {dy}"));
    }
    o
}

fn criterion_8() -> Outcome {
    let mut o = Outcome::new();
    let p = profile();
    for (k, t) in classical_corpus(CORPUS_SEED, 20).iter().enumerate() {
        let c = construct(t, &p).unwrap();
        o.at_most(&format!("classical {k} F1"), op_norm(&c.factor.f1), 1e-12);
        let t0 = t.a0();
        let gram =
            c.factor.f0.adjoint() * &c.factor.f0 - (identity(t0.ncols()) - t0.adjoint() * t0);
        o.at_most(&format!("classical {k} F0*F0"), op_norm(&gram), 1e-10);
        o.at_most(
            &format!("classical {k} V1"),
            op_norm(c.isometric.core().a1()),
            1e-12,
        );
        o.at_most(
            &format!("classical {k} Q1"),
            op_norm(&c.unitary.q().q1),
            1e-12,
        );
        o.at_most(
            &format!("classical {k} U1 core"),
            op_norm(&c.unitary.core_block(1)),
            1e-12,
        );
    }
    let c = construct(&zero(), &p).unwrap();
    let r = pattern_residual(&c.unitary, -8, 8, shift_pattern(false, false)).unwrap();
    o.at_most("T = 0 bilateral shift", r, 1e-12);
    o
}

fn criterion_9() -> Outcome {
    let mut o = Outcome::new();
    let p = profile();
    let t = zero();
    let s = builtin_example(BuiltinIsometric::Shift);
    let u = build_unitary(&s, &p).unwrap();
    let u_prime = u.with_lambda_future().unwrap();
    o.at_most(
        "U' pattern (λ on the future side)",
        pattern_residual(&u_prime, -8, 8, shift_pattern(false, true)).unwrap(),
        1e-12,
    );
    // Unitary extension of λS: the mirror image of U', λ on the past side.
    let ul = build_unitary(&builtin_example(BuiltinIsometric::LambdaShift), &p).unwrap();
    o.at_most(
        "extension of λS (λ on the past side)",
        pattern_residual(&ul, -8, 8, shift_pattern(true, false)).unwrap(),
        1e-12,
    );
    for (name, d) in [("U'", &u_prime), ("λS extension", &ul)] {
        o.require(check_unitarity(d, 50, 7, 1e-10).unwrap().pass, || {
            format!("{name} not unitary")
        });
        o.require(check_dilation_unitary(d, &t, 6, &p).unwrap().pass, || {
            format!("{name} not a dilation")
        });
        o.require(check_minimality_unitary(d, &t, 4, &p).unwrap().pass, || {
            format!("{name} not minimal")
        });
    }

    let e = equivalence_falsifier(
        &Dilation::Unitary(u.clone()),
        &Dilation::Unitary(u_prime),
        &t,
        6,
        &p,
    )
    .unwrap();
    o.require(e.verdict == Verdict::NotEquivalent, || {
        format!("(U, U') gave {e}")
    });
    o.require(
        e.witness
            .as_ref()
            .is_some_and(|w| w.name.starts_with("norm of coefficient")),
        || format!("(U, U') witness {e}"),
    );

    let v = builtin_example(BuiltinIsometric::NonUniformV);
    let e = equivalence_falsifier(
        &Dilation::Isometric(s),
        &Dilation::Isometric(v.clone()),
        &t,
        6,
        &p,
    )
    .unwrap();
    o.require(e.verdict == Verdict::NotEquivalent, || {
        format!("(S, Ṽ) gave {e}")
    });
    o.require(
        e.witness.as_ref().is_some_and(|w| w.name == "uniform"),
        || format!("(S, Ṽ) witness {e}"),
    );

    let ut = build_unitary(&v, &p).unwrap();
    let e = equivalence_falsifier(
        &Dilation::Unitary(u),
        &Dilation::Unitary(ut.clone()),
        &t,
        6,
        &p,
    )
    .unwrap();
    o.require(e.verdict == Verdict::NotEquivalent, || {
        format!("(U, Ũ) gave {e}")
    });
    o.require(
        e.witness.as_ref().is_some_and(|w| w.name == "uniform"),
        || format!("(U, Ũ) witness {e}"),
    );

    o.require(check_dilation_unitary(&ut, &t, 6, &p).unwrap().pass, || {
        "Ũ not a dilation".into()
    });
    o.require(
        check_minimality_unitary(&ut, &t, 4, &p).unwrap().pass,
        || "Ũ not minimal".into(),
    );
    o.require(!check_uniform_unitary(&ut, &t, 6, &p).unwrap().pass, || {
        "Ũ reported uniform".into()
    });
    o.require(check_minimality(&v, &t, 5, &p).unwrap().pass, || {
        "Ṽ not minimal".into()
    });
    o
}

fn criterion_10(cs: &[Construction]) -> Outcome {
    let mut o = Outcome::new();
    for (k, c) in cs.iter().enumerate() {
        let boundary = unit_circle_grid(64)
            .into_iter()
            .map(|l| theta_unitarity_residual(&c.theta, l))
            .fold(0.0f64, f64::max);
        o.at_most(&format!("pencil {k} θ boundary"), boundary, 1e-9);
        let interior = disk_samples(32)
            .into_iter()
            .map(|z| op_norm(&c.theta.eval(z)))
            .fold(0.0f64, f64::max);
        o.at_most(&format!("pencil {k} θ interior"), interior, 1.0 + 1e-9);
        let r = check_biinner(&c.theta, 64, 32, 1e-9, 1e-8);
        o.require(r.pass, || format!("pencil {k} biinner: {r}"));
        // θ(λ) is the first block column of the unitary core, so it must
        // equal [F(λ) P_Y Q(λ); T(λ) P_H Q(λ)] read off independently.
        for l in unit_circle_grid(8) {
            let dy = c.factor.dim_y();
            let q = c.unitary.q().eval(l);
            let top = c.factor.eval(l);
            let mut want =
                CMatrix::zeros(dy + c.pencil.rows(), c.pencil.cols() + c.unitary.dim_u());
            want.view_mut((0, 0), (dy, c.pencil.cols())).copy_from(&top);
            want.view_mut((dy, 0), (c.pencil.rows(), c.pencil.cols()))
                .copy_from(&c.pencil.eval(l));
            want.view_mut((0, c.pencil.cols()), (q.nrows(), q.ncols()))
                .copy_from(&q);
            o.at_most(
                &format!("pencil {k} θ blocks"),
                op_norm(&(c.theta.eval(l) - want)),
                1e-14,
            );
        }
    }
    o
}

#[test]
fn acceptance_criteria() {
    let cs = corpus();
    let results = [
        criterion_1(&cs),
        criterion_2(&cs),
        criterion_3(),
        criterion_4(&cs),
        criterion_5(&cs),
        criterion_6(&cs),
        criterion_7(&cs),
        criterion_8(),
        criterion_9(),
        criterion_10(&cs),
    ];
    let mut failed = Vec::new();
    for (i, Outcome(errors)) in results.iter().enumerate() {
        if errors.is_empty() {
            println!("criterion {}: pass", i + 1);
        } else {
            println!("criterion {}: FAIL ({})", i + 1, errors.join("; "));
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn canonical_factor_is_outer() {
    for c in corpus() {
        assert!(c.outer.outer, "{:?}", c.outer);
    }
    let c = construct(&scalar(0.5, 0.3), &profile()).unwrap();
    let v = build_canonical(&c.pencil, &c.factor, &profile()).unwrap();
    assert_eq!(v.core(), c.isometric.core());
}
