//! End-to-end pipelines, the equivalence falsifier, the worked examples and
//! the seeded test corpus.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{DilationError, Result};
use crate::factorization::{
    bauer_factorize, gram_coefficients, outer_root_check, outer_surrogate_check,
    verify_factorization, FejerRieszFactor, GramCoefficients, OuterCertificate,
};
use crate::isodil::{
    build_canonical, builtin_example, check_dilation, check_minimality, check_uniform,
    compressed_words, word_string, BuiltinIsometric, KPlusVector, StructuredIsometricPencil,
};
use crate::linalg::{c64, max_abs, op_norm, real_matrix, CMatrix, CVector, C64};
use crate::pencil::{classify, unit_circle_grid, LinearPencil, PencilClass};
use crate::report::{Detail, Report};
use crate::tolerance::ToleranceProfile;
use crate::unidil::{
    assemble_theta, build_unitary, check_biinner, check_compression_tower, check_dilation_unitary,
    check_minimality_unitary, check_uniform_unitary, check_unitarity, compressed_words_unitary,
    verify_q_identities, KVector, Theta, UnitaryDilation,
};

pub const CORPUS_SEED: u64 = 20240601;
pub const CORPUS_SIZE: usize = 20;
const UNITARITY_SEED: u64 = 0x5eed;

/// Knobs of [`run_pipeline`] that are not tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PipelineOptions {
    /// Word depth of both minimality tests.
    pub depth: usize,
    /// Longest word in the dilation and uniformity checks.
    pub word_len: usize,
    pub unitarity_samples: usize,
    pub theta_grid: usize,
    pub disk_samples: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            depth: 4,
            word_len: 6,
            unitarity_samples: 50,
            theta_grid: 64,
            disk_samples: 32,
        }
    }
}

/// Every intermediate object of the construction chain.
#[derive(Debug, Clone)]
pub struct Construction {
    pub pencil: LinearPencil,
    pub class: PencilClass,
    pub gram: GramCoefficients,
    pub factor: FejerRieszFactor,
    pub outer: OuterCertificate,
    pub isometric: StructuredIsometricPencil,
    pub unitary: UnitaryDilation,
    pub theta: Theta,
}

impl Construction {
    /// `T₁ = 0`: every block of the construction is λ-free.
    pub fn is_classical(&self) -> bool {
        max_abs(self.pencil.a1()) == 0.0
    }

    /// Largest λ-coefficient among the `V`, `Q` and `U` core blocks.
    pub fn lambda_dependence(&self) -> f64 {
        op_norm(self.isometric.core().a1())
            .max(op_norm(&self.unitary.q().q1))
            .max(op_norm(&self.unitary.core_block(1)))
    }
}

pub fn construct(t: &LinearPencil, profile: &ToleranceProfile) -> Result<Construction> {
    let class = classify(t, profile.grid, profile.classify)?;
    let gram = gram_coefficients(t, profile)?;
    let factor = bauer_factorize(&gram, profile)?;
    let outer = outer_root_check(&factor);
    let isometric = build_canonical(t, &factor, profile)?;
    let unitary = build_unitary(&isometric, profile)?;
    let theta = assemble_theta(t, &factor, unitary.q())?;
    Ok(Construction {
        pencil: t.clone(),
        class,
        gram,
        factor,
        outer,
        isometric,
        unitary,
        theta,
    })
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    pub construction: Construction,
    pub reports: Vec<Report>,
}

impl Pipeline {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }
}

/// Builds the canonical isometric and unitary dilations of `t` and runs
/// every check on them, in a fixed order.
pub fn run_pipeline(
    t: &LinearPencil,
    opts: &PipelineOptions,
    profile: &ToleranceProfile,
) -> Result<Pipeline> {
    let c = construct(t, profile)?;
    let reports = pipeline_reports(&c, opts, profile)?;
    Ok(Pipeline {
        construction: c,
        reports,
    })
}

pub fn pipeline_reports(
    c: &Construction,
    opts: &PipelineOptions,
    profile: &ToleranceProfile,
) -> Result<Vec<Report>> {
    let t = &c.pencil;
    let mut out = Vec::new();

    out.push(
        Report::new(
            "contractivity",
            (c.class.max_norm_on_grid - 1.0).max(0.0),
            profile.classify,
        )
        .note(
            "max norm on grid",
            c.class.max_norm_on_grid,
            c.class.to_string(),
        ),
    );

    let fres = verify_factorization(t, &c.factor, profile.grid)?;
    out.push(
        Report::new("factorization", fres, profile.factorization)
            .detail("dim Y", c.factor.dim_y() as f64)
            .detail(
                "coefficient residual",
                c.factor.coefficient_residual(&c.gram),
            ),
    );

    let surrogate = outer_surrogate_check(&c.factor, profile.grid, profile.rank);
    let root_gap = match c.outer.min_root_modulus {
        Some(m) if !c.outer.outer => 1.0 - m,
        _ => 0.0,
    };
    let mut outer = Report::new("outer factor", root_gap, 0.0).note(
        "pointwise surjectivity",
        if surrogate { 1.0 } else { 0.0 },
        "surrogate",
    );
    if let Some(m) = c.outer.min_root_modulus {
        outer = outer.note(
            "min root modulus",
            m,
            if c.outer.compressed {
                "square compression"
            } else {
                "companion pencil"
            },
        );
    }
    out.push(outer);

    out.push(Report::new(
        "isometric core",
        c.isometric.core().isometry_residual(),
        profile.isometry,
    ));
    out.push(check_dilation(&c.isometric, t, opts.word_len, profile)?);
    out.push(check_uniform(&c.isometric, t, opts.word_len, profile)?);
    out.push(check_minimality(&c.isometric, t, opts.depth, profile)?);

    out.push(verify_q_identities(
        &c.isometric,
        c.unitary.q(),
        profile.grid,
        profile.check,
    )?);
    out.push(check_unitarity(
        &c.unitary,
        opts.unitarity_samples,
        UNITARITY_SEED,
        profile.unitarity,
    )?);
    out.push(check_compression_tower(
        &c.unitary,
        t,
        opts.word_len,
        profile.grid,
        profile.check,
    )?);
    out.push(check_uniform_unitary(
        &c.unitary,
        t,
        opts.word_len,
        profile,
    )?);
    out.push(check_minimality_unitary(
        &c.unitary, t, opts.depth, profile,
    )?);

    let (du, dy) = (c.unitary.dim_u(), c.factor.dim_y());
    out.push(
        Report::new("dimension law", du.abs_diff(dy) as f64, 0.0)
            .detail("dim U", du as f64)
            .detail("dim Y", dy as f64),
    );
    out.push(check_biinner(
        &c.theta,
        opts.theta_grid,
        opts.disk_samples,
        profile.check,
        profile.minimality_rank,
    ));
    Ok(out)
}

/// Checks a deliberately non-minimal dilation: the canonical `V` with a
/// head line fixed by every `V(λ)`, and its unitary extension. The dilation
/// and unitarity rows pass; both minimality rows fail.
pub fn run_padded_pipeline(
    t: &LinearPencil,
    opts: &PipelineOptions,
    profile: &ToleranceProfile,
) -> Result<Vec<Report>> {
    let c = construct(t, profile)?;
    let v = c.isometric.pad_with_fixed_line();
    let u = build_unitary(&v, profile)?;
    Ok(vec![
        Report::new(
            "isometric core",
            v.core().isometry_residual(),
            profile.isometry,
        ),
        check_dilation(&v, t, opts.word_len, profile)?,
        check_uniform(&v, t, opts.word_len, profile)?,
        check_minimality(&v, t, opts.depth, profile)?,
        verify_q_identities(&v, u.q(), profile.grid, profile.check)?,
        check_unitarity(
            &u,
            opts.unitarity_samples,
            UNITARITY_SEED,
            profile.unitarity,
        )?,
        check_compression_tower(&u, t, opts.word_len, profile.grid, profile.check)?,
        check_minimality_unitary(&u, t, opts.depth, profile)?,
    ])
}

/// A dilation accepted by [`equivalence_falsifier`].
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Dilation {
    Isometric(StructuredIsometricPencil),
    Unitary(UnitaryDilation),
}

impl Dilation {
    fn compressed_words(&self, dim_h: usize, len: usize) -> Vec<(Vec<u8>, CMatrix)> {
        match self {
            Dilation::Isometric(v) => compressed_words(v, dim_h, len),
            Dilation::Unitary(u) => compressed_words_unitary(u, dim_h, len),
        }
    }

    fn coefficient_norm(&self, k: u8) -> f64 {
        match self {
            Dilation::Isometric(v) => v.coefficient_norm(k),
            Dilation::Unitary(u) => u.coefficient_norm(k),
        }
    }

    fn dilation(&self, t: &LinearPencil, len: usize, profile: &ToleranceProfile) -> Result<Report> {
        match self {
            Dilation::Isometric(v) => check_dilation(v, t, len, profile),
            Dilation::Unitary(u) => check_dilation_unitary(u, t, len, profile),
        }
    }

    fn uniform(&self, t: &LinearPencil, len: usize, profile: &ToleranceProfile) -> Result<Report> {
        match self {
            Dilation::Isometric(v) => check_uniform(v, t, len, profile),
            Dilation::Unitary(u) => check_uniform_unitary(u, t, len, profile),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    NotEquivalent,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::NotEquivalent => "NOT_EQUIVALENT",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// One unitary-equivalence invariant evaluated on both dilations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Invariant {
    pub name: String,
    pub left: f64,
    pub right: f64,
    pub differs: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EquivalenceReport {
    pub verdict: Verdict,
    pub witness: Option<Invariant>,
    pub invariants: Vec<Invariant>,
}

impl EquivalenceReport {
    /// As a [`Report`]: the worst residual is the largest invariant gap, so
    /// `pass` means no invariant separates the two dilations.
    pub fn to_report(&self, check: &str, tol: f64) -> Report {
        let gap = self
            .invariants
            .iter()
            .map(|i| (i.left - i.right).abs())
            .fold(0.0f64, f64::max);
        let mut r = Report::new(check, gap, tol);
        r.details = self
            .invariants
            .iter()
            .map(|i| Detail {
                item: i.name.clone(),
                value: (i.left - i.right).abs(),
                note: Some(format!("{} vs {}", fmt_value(i.left), fmt_value(i.right))),
            })
            .collect();
        r
    }
}

impl fmt::Display for EquivalenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.verdict)?;
        if let Some(w) = &self.witness {
            write!(
                f,
                " ({}: {} vs {})",
                w.name,
                fmt_value(w.left),
                fmt_value(w.right)
            )?;
        }
        Ok(())
    }
}

fn fmt_value(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e6 {
        format!("{x}")
    } else {
        format!("{x:.6}")
    }
}

/// Compares invariants of unitary equivalence (`W h = h`, `T″ = W T′ W⁻¹`):
/// compressed coefficient words, the uniformity flag and the coefficient
/// norms. Never certifies equivalence.
pub fn equivalence_falsifier(
    d1: &Dilation,
    d2: &Dilation,
    t: &LinearPencil,
    depth: usize,
    profile: &ToleranceProfile,
) -> Result<EquivalenceReport> {
    for (label, d) in [("first", d1), ("second", d2)] {
        let r = d.dilation(t, depth, profile)?;
        if !r.pass {
            return Err(DilationError::NotADilation(format!(
                "{label} operand misses by {:.3e}",
                r.worst_residual
            )));
        }
    }
    let tol = profile.check;
    let mut invariants = Vec::new();

    let u1 = d1.uniform(t, depth, profile)?.pass;
    let u2 = d2.uniform(t, depth, profile)?.pass;
    invariants.push(Invariant {
        name: "uniform".into(),
        left: u1 as u8 as f64,
        right: u2 as u8 as f64,
        differs: u1 != u2,
    });

    let dim_h = t.cols();
    let w1 = d1.compressed_words(dim_h, depth);
    let w2 = d2.compressed_words(dim_h, depth);
    let (mut gap, mut at) = (0.0f64, 0usize);
    for (i, ((_, a), (_, b))) in w1.iter().zip(&w2).enumerate() {
        let g = op_norm(&(a - b));
        if g > gap {
            gap = g;
            at = i;
        }
    }
    if let (Some((w, a)), Some((_, b))) = (w1.get(at), w2.get(at)) {
        invariants.push(Invariant {
            name: format!("compressed word {}", word_string(w)),
            left: op_norm(a),
            right: op_norm(b),
            differs: gap > tol,
        });
    }

    for k in [1u8, 0] {
        let (a, b) = (d1.coefficient_norm(k), d2.coefficient_norm(k));
        invariants.push(Invariant {
            name: format!("norm of coefficient {k}"),
            left: a,
            right: b,
            differs: (a - b).abs() > tol,
        });
    }

    let witness = invariants.iter().find(|i| i.differs).cloned();
    Ok(EquivalenceReport {
        verdict: if witness.is_some() {
            Verdict::NotEquivalent
        } else {
            Verdict::Inconclusive
        },
        witness,
        invariants,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DemoName {
    SzNagyScalar,
    TwoSidedShift,
    LambdaTwoSidedShift,
    NonUniformIso,
    NonUniformUni,
}

impl DemoName {
    pub const ALL: [DemoName; 5] = [
        DemoName::SzNagyScalar,
        DemoName::TwoSidedShift,
        DemoName::LambdaTwoSidedShift,
        DemoName::NonUniformIso,
        DemoName::NonUniformUni,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DemoName::SzNagyScalar => "sz-nagy-scalar",
            DemoName::TwoSidedShift => "two-sided-shift",
            DemoName::LambdaTwoSidedShift => "lambda-two-sided-shift",
            DemoName::NonUniformIso => "non-uniform-iso",
            DemoName::NonUniformUni => "non-uniform-uni",
        }
    }
}

impl fmt::Display for DemoName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DemoName {
    type Err = DilationError;

    fn from_str(s: &str) -> Result<Self> {
        DemoName::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| DilationError::InvalidArgument(format!("unknown demo '{s}'")))
    }
}

/// A yes/no claim as a report: residual 0 when it holds, 1 otherwise.
fn claim(name: &str, holds: bool) -> Report {
    Report::new(name, if holds { 0.0 } else { 1.0 }, 0.0)
}

fn negated(name: &str, r: Report) -> Report {
    let mut out = claim(name, !r.pass).detail(&r.check, r.worst_residual);
    out.witness = r.witness;
    out
}

fn verdict_claim(name: &str, e: &EquivalenceReport) -> Report {
    let mut r = claim(name, e.verdict == Verdict::NotEquivalent);
    if let Some(w) = &e.witness {
        r = r.note(&w.name, (w.left - w.right).abs(), format!("{e}"));
    }
    r
}

/// Index `n` of `⊕_{n∈ℤ} C`: negative indices are tail slots, 0 is the head,
/// positive indices are future slots. Needs one-dimensional `Y`, `H`, `𝒰`.
pub fn scalar_unit(u: &UnitaryDilation, n: i64) -> KVector {
    let one = CVector::from_element(1, c64(1.0, 0.0));
    let dh = u.isometric().dim_head();
    match n {
        n if n < 0 => KVector::from_kplus(KPlusVector::at_slot(n.unsigned_abs() as usize, one, dh)),
        0 => KVector::from_kplus(KPlusVector::from_head(one)),
        n => {
            let mut f = vec![CVector::zeros(1); n as usize];
            f[n as usize - 1] = one;
            KVector::new(KPlusVector::zero(dh), f)
        }
    }
}

/// Coordinate `n` of a scalar-chain vector.
pub fn scalar_coordinate(x: &KVector, n: i64) -> C64 {
    let pick = |v: Option<&CVector>| v.map_or(c64(0.0, 0.0), |v| v[0]);
    match n {
        n if n < 0 => pick(x.kplus.slot(n.unsigned_abs() as usize)),
        0 => x.kplus.head()[0],
        n => pick(x.future_slot(n as usize)),
    }
}

/// Matrix entries `⟨e_i, U(λ) e_j⟩` for `i, j ∈ [lo, hi]`, row-major by `i`.
pub fn scalar_matrix(u: &UnitaryDilation, lambda: C64, lo: i64, hi: i64) -> Result<CMatrix> {
    let n = (hi - lo + 1) as usize;
    let mut m = CMatrix::zeros(n, n);
    for j in lo..=hi {
        let y = u.apply(lambda, &scalar_unit(u, j))?;
        for i in lo..=hi {
            m[((i - lo) as usize, (j - lo) as usize)] = scalar_coordinate(&y, i);
        }
    }
    Ok(m)
}

/// Largest deviation of `U(λ)` from `expected(λ)` on indices `[lo, hi]` over
/// the 8th roots of unity and `−0.28 + 0.96i`.
pub fn pattern_residual(
    u: &UnitaryDilation,
    lo: i64,
    hi: i64,
    expected: impl Fn(C64, i64, i64) -> C64,
) -> Result<f64> {
    let mut worst = 0.0f64;
    let mut ls = unit_circle_grid(8);
    ls.push(c64(-0.28, 0.96));
    for l in ls {
        let m = scalar_matrix(u, l, lo, hi)?;
        for i in lo..=hi {
            for j in lo..=hi {
                let d = m[((i - lo) as usize, (j - lo) as usize)] - expected(l, i, j);
                worst = worst.max(d.norm());
            }
        }
    }
    Ok(worst)
}

/// Bilateral shift `e_j ↦ φ_j(λ) e_{j−1}` with `φ_j = past` for `j ≤ 0` and
/// `future` for `j ≥ 1`.
pub fn shift_pattern(past_lambda: bool, future_lambda: bool) -> impl Fn(C64, i64, i64) -> C64 {
    move |l, i, j| {
        if i != j - 1 {
            return c64(0.0, 0.0);
        }
        let phased = if j <= 0 { past_lambda } else { future_lambda };
        if phased {
            l
        } else {
            c64(1.0, 0.0)
        }
    }
}

/// The matrix of `Ũ(λ)` on `⊕_{n∈ℤ} C`.
pub fn u_tilde_pattern(l: C64, i: i64, j: i64) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let r = |x: f64| c64(x, 0.0);
    match (i, j) {
        (-3, -2) => r(s),
        (0, -2) => r(-s),
        (-3, -1) | (0, -1) | (-2, 0) | (-2, 1) => l * s,
        (-1, 0) => r(s),
        (-1, 1) => r(-s),
        (i, j) if (j <= -3 || j >= 2) && i == j - 1 => r(1.0),
        _ => r(0.0),
    }
}

fn zero_pencil() -> LinearPencil {
    LinearPencil::zero(1, 1)
}

/// Reproduces one of the worked examples and checks each claim made about it.
pub fn demo(name: DemoName, profile: &ToleranceProfile) -> Result<Vec<Report>> {
    let opts = PipelineOptions::default();
    let t0 = zero_pencil();
    let p = profile;
    let mut out = Vec::new();
    match name {
        DemoName::SzNagyScalar => {
            let pipe = run_pipeline(&t0, &opts, p)?;
            let c = &pipe.construction;
            let shift = builtin_example(BuiltinIsometric::Shift);
            let diff = max_abs(&(c.isometric.core().a0() - shift.core().a0()))
                .max(max_abs(&(c.isometric.core().a1() - shift.core().a1())));
            out.push(Report::new("V equals the forward shift S", diff, p.check));
            out.push(Report::new(
                "lambda-independent",
                c.lambda_dependence(),
                1e-12,
            ));
            out.extend(pipe.reports);

            let a = 0.5;
            let classical = LinearPencil::constant(real_matrix(1, 1, &[a]));
            let cc = construct(&classical, p)?;
            let expected = real_matrix(2, 1, &[(1.0f64 - a * a).sqrt(), a]);
            out.push(Report::new(
                "classical T0 = 0.5: core = col(D_T0; T0)",
                max_abs(&(cc.isometric.core().a0() - expected)),
                p.check,
            ));
            out.push(Report::new(
                "classical T0 = 0.5: lambda-independent",
                cc.lambda_dependence(),
                1e-12,
            ));
        }
        DemoName::TwoSidedShift => {
            let c = construct(&t0, p)?;
            let u = &c.unitary;
            out.push(Report::new(
                "U(λ) is the bilateral shift",
                pattern_residual(u, -6, 6, shift_pattern(false, false))?,
                1e-12,
            ));
            out.push(Report::new("U1 = 0", u.coefficient_norm(1), 1e-12));
            out.push(check_unitarity(
                u,
                opts.unitarity_samples,
                UNITARITY_SEED,
                p.unitarity,
            )?);
            out.push(check_uniform_unitary(u, &t0, opts.word_len, p)?);
            out.push(check_minimality_unitary(u, &t0, opts.depth, p)?);
        }
        DemoName::LambdaTwoSidedShift => {
            let shift = builtin_example(BuiltinIsometric::Shift);
            let u = build_unitary(&shift, p)?;
            let u_prime = u.with_lambda_future()?;
            out.push(Report::new(
                "U'(λ) pattern: λ on the future side",
                pattern_residual(&u_prime, -6, 6, shift_pattern(false, true))?,
                1e-12,
            ));
            out.push(
                check_unitarity(
                    &u_prime,
                    opts.unitarity_samples,
                    UNITARITY_SEED,
                    p.unitarity,
                )?
                .named("U' unitary extension of S"),
            );
            out.push(
                check_dilation_unitary(&u_prime, &t0, opts.word_len, p)?.named("U' dilates T = 0"),
            );
            out.push(check_uniform_unitary(&u_prime, &t0, opts.word_len, p)?.named("U' uniform"));
            out.push(check_minimality_unitary(&u_prime, &t0, opts.depth, p)?.named("U' minimal"));
            let e = equivalence_falsifier(
                &Dilation::Unitary(u.clone()),
                &Dilation::Unitary(u_prime),
                &t0,
                opts.word_len,
                p,
            )?;
            out.push(verdict_claim("U vs U' not equivalent", &e));

            let lambda_shift = builtin_example(BuiltinIsometric::LambdaShift);
            let ul = build_unitary(&lambda_shift, p)?;
            out.push(Report::new(
                "extension of λS: λ on the past side",
                pattern_residual(&ul, -6, 6, shift_pattern(true, false))?,
                1e-12,
            ));
            out.push(
                check_minimality_unitary(&ul, &t0, opts.depth, p)?.named("extension of λS minimal"),
            );
            let e = equivalence_falsifier(
                &Dilation::Isometric(shift),
                &Dilation::Isometric(lambda_shift),
                &t0,
                opts.word_len,
                p,
            )?;
            out.push(verdict_claim("S vs λS not equivalent", &e));
        }
        DemoName::NonUniformIso => {
            let v = builtin_example(BuiltinIsometric::NonUniformV);
            out.push(Report::new(
                "Ṽ(λ)^n h = λh at slot -(n+1)",
                non_uniform_formula_residual(&v, 8)?,
                1e-12,
            ));
            out.push(check_dilation(&v, &t0, opts.word_len, p)?);
            out.push(check_minimality(&v, &t0, 5, p)?);
            out.push(negated(
                "Ṽ is not uniform",
                check_uniform(&v, &t0, opts.word_len, p)?,
            ));
            let h = KPlusVector::from_head(CVector::from_element(1, c64(1.0, 0.0)));
            let y = v.apply(c64(-1.0, 0.0), &v.apply(c64(1.0, 0.0), &h)?)?;
            let target = KPlusVector::from_head(CVector::from_element(1, c64(-1.0, 0.0)));
            out.push(Report::new("Ṽ(-1)Ṽ(1)h = -h", (&y - &target).norm(), 1e-12));
            for (label, other) in [
                ("S", BuiltinIsometric::Shift),
                ("λS", BuiltinIsometric::LambdaShift),
            ] {
                let e = equivalence_falsifier(
                    &Dilation::Isometric(builtin_example(other)),
                    &Dilation::Isometric(v.clone()),
                    &t0,
                    opts.word_len,
                    p,
                )?;
                out.push(verdict_claim(&format!("{label} vs Ṽ not equivalent"), &e));
            }
        }
        DemoName::NonUniformUni => {
            let v = builtin_example(BuiltinIsometric::NonUniformV);
            let ut = build_unitary(&v, p)?;
            out.push(Report::new(
                "Ũ(λ) matches the displayed matrix",
                pattern_residual(&ut, -6, 6, u_tilde_pattern)?,
                1e-12,
            ));
            out.push(check_unitarity(
                &ut,
                opts.unitarity_samples,
                UNITARITY_SEED,
                p.unitarity,
            )?);
            out.push(check_dilation_unitary(&ut, &t0, opts.word_len, p)?);
            out.push(check_minimality_unitary(&ut, &t0, opts.depth, p)?);
            out.push(negated(
                "Ũ is not uniform",
                check_uniform_unitary(&ut, &t0, opts.word_len, p)?,
            ));
            let u = build_unitary(&builtin_example(BuiltinIsometric::Shift), p)?;
            let u_prime = u.with_lambda_future()?;
            for (label, other) in [("U", u), ("U'", u_prime)] {
                let e = equivalence_falsifier(
                    &Dilation::Unitary(other),
                    &Dilation::Unitary(ut.clone()),
                    &t0,
                    opts.word_len,
                    p,
                )?;
                out.push(verdict_claim(&format!("{label} vs Ũ not equivalent"), &e));
            }
        }
    }
    Ok(out)
}

/// Worst deviation from `Ṽ(λ)h = (λh/√2 at −2, h/√2 at −1)` and
/// `Ṽ(λ)ⁿh = λh at slot −(n+1)` for `2 ≤ n ≤ max_n`, over a few λ.
pub fn non_uniform_formula_residual(v: &StructuredIsometricPencil, max_n: usize) -> Result<f64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = KPlusVector::from_head(CVector::from_element(1, c64(1.0, 0.0)));
    let mut ls = unit_circle_grid(8);
    ls.push(c64(-0.28, 0.96));
    let mut worst = 0.0f64;
    for l in ls {
        let one = CVector::from_element(1, c64(s, 0.0));
        let first = KPlusVector::new(
            vec![one, CVector::from_element(1, l * s)],
            CVector::zeros(1),
        );
        let mut y = v.apply(l, &h)?;
        worst = worst.max((&y - &first).norm());
        for n in 2..=max_n {
            y = v.apply(l, &y)?;
            let expected = KPlusVector::at_slot(n + 1, CVector::from_element(1, l), 1);
            worst = worst.max((&y - &expected).norm());
        }
    }
    Ok(worst)
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c64(re * s, im * s)
    })
}

fn grid_max_norm(p: &LinearPencil, grid: usize) -> f64 {
    unit_circle_grid(grid)
        .into_iter()
        .map(|l| op_norm(&p.eval(l)))
        .fold(0.0, f64::max)
}

/// `count` pencils of dimension `1 + (k mod 6)` with complex Gaussian
/// coefficients, scaled so the maximum norm on the 256-point grid is 0.95.
pub fn random_corpus(seed: u64, count: usize) -> Vec<LinearPencil> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let n = 1 + k % 6;
            let a0 = gaussian_matrix(&mut rng, n);
            let a1 = gaussian_matrix(&mut rng, n);
            let raw = LinearPencil::new(a0, a1).expect("same shape");
            let s = 0.95 / grid_max_norm(&raw, 256);
            LinearPencil::new(raw.a0() * c64(s, 0.0), raw.a1() * c64(s, 0.0)).expect("same shape")
        })
        .collect()
}

/// `count` constant pencils (`T₁ = 0`) of dimension `1 + (k mod 6)` with
/// `‖T₀‖ = 0.95`.
pub fn classical_corpus(seed: u64, count: usize) -> Vec<LinearPencil> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc1a5);
    (0..count)
        .map(|k| {
            let a0 = gaussian_matrix(&mut rng, 1 + k % 6);
            let s = 0.95 / op_norm(&a0);
            LinearPencil::constant(a0 * c64(s, 0.0))
        })
        .collect()
}

/// The standard corpus: [`CORPUS_SIZE`] pencils from [`CORPUS_SEED`].
pub fn default_corpus() -> Vec<LinearPencil> {
    random_corpus(CORPUS_SEED, CORPUS_SIZE)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(a: f64, b: f64) -> LinearPencil {
        LinearPencil::new(real_matrix(1, 1, &[a]), real_matrix(1, 1, &[b])).unwrap()
    }

    #[test]
    fn scalar_pipeline_passes() {
        let p = ToleranceProfile::default();
        let pipe = run_pipeline(&scalar(0.5, 0.3), &PipelineOptions::default(), &p).unwrap();
        for r in &pipe.reports {
            assert!(r.pass, "{r}");
        }
    }

    #[test]
    fn zero_pipeline_is_classical() {
        let p = ToleranceProfile::default();
        let pipe = run_pipeline(&zero_pencil(), &PipelineOptions::default(), &p).unwrap();
        assert!(pipe.all_pass());
        assert!(pipe.construction.is_classical());
        assert_eq!(pipe.construction.lambda_dependence(), 0.0);
    }

    #[test]
    fn isometric_input_degenerates() {
        let t = LinearPencil::new(
            real_matrix(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            real_matrix(2, 2, &[0.0, 0.0, 0.0, 1.0]),
        )
        .unwrap();
        let pipe = run_pipeline(
            &t,
            &PipelineOptions::default(),
            &ToleranceProfile::default(),
        )
        .unwrap();
        assert!(pipe.all_pass());
        assert_eq!(pipe.construction.factor.dim_y(), 0);
        assert_eq!(pipe.construction.unitary.dim_u(), 0);
        assert_eq!(pipe.construction.isometric.core(), &t);
    }

    #[test]
    fn not_contractive_is_rejected() {
        let r = run_pipeline(
            &scalar(0.8, 0.5),
            &PipelineOptions::default(),
            &ToleranceProfile::default(),
        );
        assert!(matches!(r, Err(DilationError::NotContractive { .. })));
    }

    #[test]
    fn pipeline_is_idempotent() {
        let p = ToleranceProfile::default();
        let t = &default_corpus()[3];
        let a = run_pipeline(t, &PipelineOptions::default(), &p)
            .unwrap()
            .reports;
        let b = run_pipeline(t, &PipelineOptions::default(), &p)
            .unwrap()
            .reports;
        assert_eq!(a, b);
    }

    #[test]
    fn corpus_is_reproducible_and_scaled() {
        let a = default_corpus();
        let b = default_corpus();
        assert_eq!(a, b);
        assert_eq!(a.len(), 20);
        for (k, t) in a.iter().enumerate() {
            assert_eq!(t.cols(), 1 + k % 6);
            assert!((grid_max_norm(t, 256) - 0.95).abs() < 1e-12);
        }
    }

    #[test]
    fn falsifier_verdicts() {
        let p = ToleranceProfile::default();
        let t = zero_pencil();
        let s = Dilation::Isometric(builtin_example(BuiltinIsometric::Shift));
        let ls = Dilation::Isometric(builtin_example(BuiltinIsometric::LambdaShift));
        let nu = Dilation::Isometric(builtin_example(BuiltinIsometric::NonUniformV));

        let e = equivalence_falsifier(&s, &ls, &t, 6, &p).unwrap();
        assert_eq!(e.verdict, Verdict::NotEquivalent);
        let w = e.witness.unwrap();
        assert_eq!(w.name, "norm of coefficient 1");
        assert_eq!((w.left, w.right), (0.0, 1.0));

        let e = equivalence_falsifier(&s, &nu, &t, 6, &p).unwrap();
        assert_eq!(e.verdict, Verdict::NotEquivalent);
        assert_eq!(e.witness.unwrap().name, "uniform");

        let e = equivalence_falsifier(&s, &s, &t, 6, &p).unwrap();
        assert_eq!(e.verdict, Verdict::Inconclusive);
        assert!(e.to_report("equivalence", p.check).pass);
    }

    #[test]
    fn falsifier_rejects_non_dilation() {
        let p = ToleranceProfile::default();
        let s = Dilation::Isometric(builtin_example(BuiltinIsometric::Shift));
        let r = equivalence_falsifier(&s, &s, &scalar(0.5, 0.0), 4, &p);
        assert!(matches!(r, Err(DilationError::NotADilation(_))));
    }

    #[test]
    fn every_demo_passes() {
        let p = ToleranceProfile::default();
        for name in DemoName::ALL {
            for r in demo(name, &p).unwrap() {
                assert!(r.pass, "{name}: {r}");
            }
        }
    }

    #[test]
    fn padded_pipeline_fails_only_minimality() {
        let p = ToleranceProfile::default();
        let reports =
            run_padded_pipeline(&scalar(0.5, 0.3), &PipelineOptions::default(), &p).unwrap();
        let failed: Vec<&str> = reports
            .iter()
            .filter(|r| !r.pass)
            .map(|r| r.check.as_str())
            .collect();
        assert_eq!(failed, ["minimality", "unitary minimality"]);
    }

    #[test]
    fn demo_names_round_trip() {
        for name in DemoName::ALL {
            assert_eq!(name.as_str().parse::<DemoName>().unwrap(), name);
        }
        assert!("nope".parse::<DemoName>().is_err());
    }
}
