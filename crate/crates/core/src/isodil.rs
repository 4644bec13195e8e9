//! Isometric dilations on `K₊ = (⊕_{n≥1} Y_{−n}) ⊕ H` represented as
//! "eventually shift" operators.
//!
//! A [`StructuredIsometricPencil`] of depth `d` acts on a finitely supported
//! vector as follows: the window `(Y_{−d}, …, Y_{−1}, H)` is mapped by a
//! finite core pencil into `(Y_{−d−1}, …, Y_{−1}, H)`, and every slot
//! `Y_{−n}` with `n ≥ d + 1` moves to `Y_{−n−1}`. The tail shift belongs to
//! one coefficient of the pencil (`TailPhase`), so both `S` and `λS` are
//! representable. Application never truncates.
//!
//! Dense window layouts always run from the deepest slot to the head.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Sub};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DilationError, Result};
use crate::factorization::{verify_factorization, FejerRieszFactor};
use crate::linalg::{
    c64, hstack, numerical_rank, op_norm, real_matrix, vstack, CMatrix, CVector, C64,
};
use crate::pencil::{symmetrized_multipower, word_matrix, LinearPencil};
use crate::report::{format_lambda, lambda_pair, Report, Witness};
use crate::tolerance::ToleranceProfile;

/// Which pencil coefficient carries the tail shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TailPhase {
    /// `Y_{−n} → Y_{−n−1}` in coefficient 0 (λ-independent).
    Constant,
    /// `Y_{−n} → λ·Y_{−n−1}`, i.e. coefficient 1.
    Lambda,
}

impl TailPhase {
    pub fn coefficient(self) -> u8 {
        match self {
            TailPhase::Constant => 0,
            TailPhase::Lambda => 1,
        }
    }

    /// Scalar multiplying the shift at parameter `lambda`.
    pub fn factor(self, lambda: C64) -> C64 {
        match self {
            TailPhase::Constant => c64(1.0, 0.0),
            TailPhase::Lambda => lambda,
        }
    }

    /// Scalar multiplying the shift in coefficient `k`.
    pub fn coefficient_factor(self, k: u8) -> C64 {
        if k == self.coefficient() {
            c64(1.0, 0.0)
        } else {
            c64(0.0, 0.0)
        }
    }
}

/// Finitely supported vector of `K₊`. `tail[k]` is slot `−(k+1)`; trailing
/// all-zero slots are trimmed.
#[derive(Debug, Clone, PartialEq)]
pub struct KPlusVector {
    tail: Vec<CVector>,
    head: CVector,
}

fn is_zero(v: &CVector) -> bool {
    v.iter().all(|z| z.re == 0.0 && z.im == 0.0)
}

fn trim(tail: &mut Vec<CVector>) {
    while tail.last().is_some_and(is_zero) {
        tail.pop();
    }
}

impl KPlusVector {
    pub fn new(mut tail: Vec<CVector>, head: CVector) -> Self {
        trim(&mut tail);
        Self { tail, head }
    }

    pub fn from_head(head: CVector) -> Self {
        Self {
            tail: Vec::new(),
            head,
        }
    }

    pub fn zero(dim_head: usize) -> Self {
        Self::from_head(CVector::zeros(dim_head))
    }

    /// Unit vector `e_j` of `H` (coordinate `j` of the head).
    pub fn head_unit(dim_head: usize, j: usize) -> Self {
        let mut h = CVector::zeros(dim_head);
        h[j] = c64(1.0, 0.0);
        Self::from_head(h)
    }

    /// Vector supported in tail slot `−n` (`n ≥ 1`).
    pub fn at_slot(n: usize, value: CVector, dim_head: usize) -> Self {
        assert!(n >= 1, "tail slots are numbered from 1");
        let dim_y = value.len();
        let mut tail = vec![CVector::zeros(dim_y); n];
        tail[n - 1] = value;
        Self::new(tail, CVector::zeros(dim_head))
    }

    pub fn head(&self) -> &CVector {
        &self.head
    }

    pub fn tail(&self) -> &[CVector] {
        &self.tail
    }

    /// Contents of slot `−n`, `None` beyond the support.
    pub fn slot(&self, n: usize) -> Option<&CVector> {
        n.checked_sub(1).and_then(|k| self.tail.get(k))
    }

    /// Deepest slot in the support (0 if only the head is occupied).
    pub fn depth(&self) -> usize {
        self.tail.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.tail.iter().map(|v| v.norm_squared()).sum::<f64>() + self.head.norm_squared()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨self, other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &KPlusVector) -> C64 {
        let tail: C64 = self
            .tail
            .iter()
            .zip(&other.tail)
            .map(|(a, b)| a.dotc(b))
            .sum();
        tail + self.head.dotc(&other.head)
    }

    pub fn scale(&self, s: C64) -> KPlusVector {
        KPlusVector::new(self.tail.iter().map(|v| v * s).collect(), &self.head * s)
    }

    fn check_dims(&self, dim_y: usize, dim_head: usize) -> Result<()> {
        if self.head.len() != dim_head {
            return Err(DilationError::DimensionMismatch(format!(
                "head has dimension {}, expected {dim_head}",
                self.head.len()
            )));
        }
        if let Some(bad) = self.tail.iter().find(|v| v.len() != dim_y) {
            return Err(DilationError::DimensionMismatch(format!(
                "tail slot has dimension {}, expected {dim_y}",
                bad.len()
            )));
        }
        Ok(())
    }

    /// Dense coordinates `[slot −depth, …, slot −1, head]`; the support must
    /// fit in `depth` slots.
    pub fn to_dense(&self, dim_y: usize, depth: usize) -> CVector {
        assert!(
            self.depth() <= depth,
            "support {} exceeds window depth {depth}",
            self.depth()
        );
        let mut out = CVector::zeros(depth * dim_y + self.head.len());
        for (k, v) in self.tail.iter().enumerate() {
            let at = (depth - 1 - k) * dim_y;
            out.rows_mut(at, dim_y).copy_from(v);
        }
        out.rows_mut(depth * dim_y, self.head.len())
            .copy_from(&self.head);
        out
    }

    pub fn from_dense(dim_y: usize, dim_head: usize, depth: usize, v: &CVector) -> Self {
        assert_eq!(v.len(), depth * dim_y + dim_head);
        let tail = (0..depth)
            .map(|k| v.rows((depth - 1 - k) * dim_y, dim_y).into_owned())
            .collect();
        KPlusVector::new(tail, v.rows(depth * dim_y, dim_head).into_owned())
    }
}

fn combine(a: &KPlusVector, b: &KPlusVector, sign: f64) -> KPlusVector {
    let n = a.tail.len().max(b.tail.len());
    let dim_y = a.tail.first().or(b.tail.first()).map_or(0, |v| v.len());
    let tail = (0..n)
        .map(|k| {
            let x = a
                .tail
                .get(k)
                .cloned()
                .unwrap_or_else(|| CVector::zeros(dim_y));
            match b.tail.get(k) {
                Some(y) => x + y * c64(sign, 0.0),
                None => x,
            }
        })
        .collect();
    KPlusVector::new(tail, &a.head + &b.head * c64(sign, 0.0))
}

impl Add for &KPlusVector {
    type Output = KPlusVector;
    fn add(self, rhs: &KPlusVector) -> KPlusVector {
        combine(self, rhs, 1.0)
    }
}

impl Sub for &KPlusVector {
    type Output = KPlusVector;
    fn sub(self, rhs: &KPlusVector) -> KPlusVector {
        combine(self, rhs, -1.0)
    }
}

impl Mul<C64> for &KPlusVector {
    type Output = KPlusVector;
    fn mul(self, s: C64) -> KPlusVector {
        self.scale(s)
    }
}

/// Isometric pencil on `K₊` given by a finite core and a tail shift.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredIsometricPencil {
    dim_y: usize,
    dim_head: usize,
    depth: usize,
    core: LinearPencil,
    tail_phase: TailPhase,
}

impl StructuredIsometricPencil {
    /// `core` maps the window `Y^depth ⊕ H` into `Y^(depth+1) ⊕ H` and must
    /// be an isometric pencil within `isometry_tol`.
    pub fn new(
        dim_y: usize,
        dim_head: usize,
        depth: usize,
        core: LinearPencil,
        tail_phase: TailPhase,
        isometry_tol: f64,
    ) -> Result<Self> {
        let rows = (depth + 1) * dim_y + dim_head;
        let cols = depth * dim_y + dim_head;
        if core.rows() != rows || core.cols() != cols {
            return Err(DilationError::ShapeMismatch(format!(
                "core must be {rows}x{cols}, got {}x{}",
                core.rows(),
                core.cols()
            )));
        }
        let residual = core.isometry_residual();
        if residual > isometry_tol {
            return Err(DilationError::NotIsometric { residual });
        }
        Ok(Self {
            dim_y,
            dim_head,
            depth,
            core,
            tail_phase,
        })
    }

    /// A finite isometric pencil on `H` viewed as a structured pencil with `Y = {0}`.
    pub fn finite(p: LinearPencil, isometry_tol: f64) -> Result<Self> {
        let n = p.cols();
        Self::new(0, n, 0, p, TailPhase::Constant, isometry_tol)
    }

    pub fn dim_y(&self) -> usize {
        self.dim_y
    }

    pub fn dim_head(&self) -> usize {
        self.dim_head
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn core(&self) -> &LinearPencil {
        &self.core
    }

    pub fn tail_phase(&self) -> TailPhase {
        self.tail_phase
    }

    /// `depth·dim_y + dim_head`.
    pub fn window_dim(&self) -> usize {
        self.depth * self.dim_y + self.dim_head
    }

    /// `(depth+1)·dim_y + dim_head`.
    pub fn window_prime_dim(&self) -> usize {
        (self.depth + 1) * self.dim_y + self.dim_head
    }

    pub fn check_vector(&self, x: &KPlusVector) -> Result<()> {
        x.check_dims(self.dim_y, self.dim_head)
    }

    /// Window coordinates `(slot −depth, …, slot −1, head)` of `x`.
    pub fn gather_window(&self, x: &KPlusVector) -> CVector {
        self.gather(x, self.depth)
    }

    /// Window′ coordinates `(slot −depth−1, …, slot −1, head)` of `x`.
    pub fn gather_window_prime(&self, x: &KPlusVector) -> CVector {
        self.gather(x, self.depth + 1)
    }

    fn gather(&self, x: &KPlusVector, slots: usize) -> CVector {
        let dy = self.dim_y;
        let mut w = CVector::zeros(slots * dy + self.dim_head);
        for n in 1..=slots {
            if let Some(v) = x.slot(n) {
                w.rows_mut((slots - n) * dy, dy).copy_from(v);
            }
        }
        w.rows_mut(slots * dy, self.dim_head).copy_from(&x.head);
        w
    }

    /// Places window′ coordinates into a vector of `K₊`.
    pub fn embed_window_prime(&self, w: &CVector) -> KPlusVector {
        KPlusVector::from_dense(self.dim_y, self.dim_head, self.depth + 1, w)
    }

    fn embed_window(&self, w: &CVector) -> KPlusVector {
        KPlusVector::from_dense(self.dim_y, self.dim_head, self.depth, w)
    }

    fn act(&self, core: &CMatrix, tail_factor: C64, x: &KPlusVector) -> KPlusVector {
        let mut out = self.embed_window_prime(&(core * self.gather_window(x)));
        if tail_factor != c64(0.0, 0.0) && x.depth() > self.depth {
            let d = self.depth;
            let mut tail = out.tail;
            tail.resize(x.depth() + 1, CVector::zeros(self.dim_y));
            for (slot, y) in tail[d + 1..].iter_mut().zip(&x.tail[d..]) {
                *slot = y * tail_factor;
            }
            out = KPlusVector::new(tail, out.head);
        }
        out
    }

    fn act_adjoint(&self, core_adj: &CMatrix, tail_factor: C64, x: &KPlusVector) -> KPlusVector {
        let mut out = self.embed_window(&(core_adj * self.gather_window_prime(x)));
        let d = self.depth;
        if tail_factor != c64(0.0, 0.0) && x.depth() >= d + 2 {
            let mut tail = out.tail;
            tail.resize(x.depth() - 1, CVector::zeros(self.dim_y));
            for m in (d + 2)..=x.depth() {
                tail[m - 2] = &x.tail[m - 1] * tail_factor.conj();
            }
            out = KPlusVector::new(tail, out.head);
        }
        out
    }

    pub fn apply(&self, lambda: C64, x: &KPlusVector) -> Result<KPlusVector> {
        self.check_vector(x)?;
        Ok(self.act(&self.core.eval(lambda), self.tail_phase.factor(lambda), x))
    }

    pub fn apply_adjoint(&self, lambda: C64, x: &KPlusVector) -> Result<KPlusVector> {
        self.check_vector(x)?;
        Ok(self.act_adjoint(
            &self.core.eval(lambda).adjoint(),
            self.tail_phase.factor(lambda),
            x,
        ))
    }

    /// Coefficient operator `V_k`.
    pub fn apply_coeff(&self, k: u8, x: &KPlusVector) -> Result<KPlusVector> {
        self.check_vector(x)?;
        Ok(self.apply_coeff_unchecked(k, x))
    }

    /// Adjoint coefficient operator `V_k*`.
    pub fn apply_coeff_adjoint(&self, k: u8, x: &KPlusVector) -> Result<KPlusVector> {
        self.check_vector(x)?;
        Ok(self.apply_coeff_adjoint_unchecked(k, x))
    }

    pub(crate) fn apply_coeff_unchecked(&self, k: u8, x: &KPlusVector) -> KPlusVector {
        self.act(self.core.coeff(k), self.tail_phase.coefficient_factor(k), x)
    }

    pub(crate) fn apply_coeff_adjoint_unchecked(&self, k: u8, x: &KPlusVector) -> KPlusVector {
        self.act_adjoint(
            &self.core.coeff(k).adjoint(),
            self.tail_phase.coefficient_factor(k),
            x,
        )
    }

    /// Adjoins one head coordinate on which the pencil acts as the identity
    /// (in coefficient 0). The result is still isometric but carries a line
    /// no word starting in the original head ever reaches.
    pub fn pad_with_fixed_line(&self) -> StructuredIsometricPencil {
        let pad = |m: &CMatrix, value: f64| {
            let mut out = CMatrix::zeros(m.nrows() + 1, m.ncols() + 1);
            out.view_mut((0, 0), m.shape()).copy_from(m);
            out[(m.nrows(), m.ncols())] = c64(value, 0.0);
            out
        };
        let core = LinearPencil::new(pad(self.core.a0(), 1.0), pad(self.core.a1(), 0.0))
            .expect("padded blocks share a shape");
        StructuredIsometricPencil {
            dim_y: self.dim_y,
            dim_head: self.dim_head + 1,
            depth: self.depth,
            core,
            tail_phase: self.tail_phase,
        }
    }

    /// Operator norm of coefficient `k` on all of `K₊` (core block and tail shift).
    pub fn coefficient_norm(&self, k: u8) -> f64 {
        let core = op_norm(self.core.coeff(k));
        let tail = if self.dim_y > 0 && self.tail_phase.coefficient() == k {
            1.0
        } else {
            0.0
        };
        core.max(tail)
    }
}

/// Canonical minimal isometric dilation: depth 0, core `col(F(λ); T(λ))`.
pub fn build_canonical(
    t: &LinearPencil,
    f: &FejerRieszFactor,
    profile: &ToleranceProfile,
) -> Result<StructuredIsometricPencil> {
    let residual = verify_factorization(t, f, profile.grid)?;
    if residual > profile.factorization {
        return Err(DilationError::FactorMismatch { residual });
    }
    let core = LinearPencil::new(vstack(&[&f.f0, t.a0()]), vstack(&[&f.f1, t.a1()]))?;
    StructuredIsometricPencil::new(
        f.dim_y(),
        t.cols(),
        0,
        core,
        TailPhase::Constant,
        profile.isometry,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuiltinIsometric {
    /// Forward shift `S` on `⊕_{n≤0} C`.
    Shift,
    /// `λS`.
    LambdaShift,
    /// The non-uniform minimal isometric dilation of `T = 0`.
    NonUniformV,
}

pub fn builtin_example(which: BuiltinIsometric) -> StructuredIsometricPencil {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let col = real_matrix(2, 1, &[1.0, 0.0]);
    let zero = CMatrix::zeros(2, 1);
    let (depth, core, tail_phase) = match which {
        BuiltinIsometric::Shift => (0, LinearPencil::constant(col), TailPhase::Constant),
        BuiltinIsometric::LambdaShift => (
            0,
            LinearPencil::new(zero, col).expect("same shape"),
            TailPhase::Lambda,
        ),
        BuiltinIsometric::NonUniformV => {
            // Columns (slot −2, slot −1, head); rows (slot −3, −2, −1, head).
            #[rustfmt::skip]
            let b0 = real_matrix(4, 3, &[
                s,   0.0, 0.0,
                0.0, 0.0, 0.0,
                0.0, 0.0, s,
                -s,  0.0, 0.0,
            ]);
            #[rustfmt::skip]
            let b1 = real_matrix(4, 3, &[
                0.0, s,   0.0,
                0.0, 0.0, s,
                0.0, 0.0, 0.0,
                0.0, s,   0.0,
            ]);
            (
                2,
                LinearPencil::new(b0, b1).expect("same shape"),
                TailPhase::Constant,
            )
        }
    };
    StructuredIsometricPencil::new(1, 1, depth, core, tail_phase, 1e-12)
        .expect("built-in cores are isometric")
}

/// Expands all words of length `1..=max_len` over `letters` operators,
/// applied to each seed. Entry `(w, vs)` holds `A_{w1}⋯A_{wn}·seed` for every
/// seed; words are listed by length, then lexicographically.
pub(crate) fn expand_words<V, F>(
    seeds: &[V],
    letters: u8,
    max_len: usize,
    apply: F,
) -> Vec<(Vec<u8>, Vec<V>)>
where
    V: Clone + Send + Sync,
    F: Fn(u8, &V) -> V + Sync,
{
    let mut out: Vec<(Vec<u8>, Vec<V>)> = Vec::new();
    let mut layer: Vec<(Vec<u8>, Vec<V>)> = vec![(Vec::new(), seeds.to_vec())];
    for _ in 0..max_len {
        let jobs: Vec<(u8, usize)> = (0..letters)
            .flat_map(|e| (0..layer.len()).map(move |i| (e, i)))
            .collect();
        let next: Vec<(Vec<u8>, Vec<V>)> = jobs
            .par_iter()
            .map(|&(e, i)| {
                let (w, vs) = &layer[i];
                let mut word = Vec::with_capacity(w.len() + 1);
                word.push(e);
                word.extend_from_slice(w);
                (word, vs.iter().map(|v| apply(e, v)).collect())
            })
            .collect();
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

pub fn word_string(word: &[u8]) -> String {
    word.iter().map(|e| char::from(b'0' + e)).collect()
}

/// `dim_h × dim_h` matrix with column `j` equal to the first `dim_h` head
/// coordinates of `vs[j]`.
pub(crate) fn compress_to_h(vs: &[KPlusVector], dim_h: usize) -> CMatrix {
    let cols: Vec<CVector> = vs
        .iter()
        .map(|v| v.head.rows(0, dim_h).into_owned())
        .collect();
    if cols.is_empty() {
        CMatrix::zeros(dim_h, 0)
    } else {
        CMatrix::from_columns(&cols)
    }
}

pub(crate) fn h_basis(dim_head: usize, dim_h: usize) -> Vec<KPlusVector> {
    (0..dim_h)
        .map(|j| KPlusVector::head_unit(dim_head, j))
        .collect()
}

fn check_h(v: &StructuredIsometricPencil, t: &LinearPencil) -> Result<usize> {
    if !t.is_square() || t.cols() > v.dim_head() {
        return Err(DilationError::DimensionMismatch(format!(
            "pencil of shape {}x{} does not fit a head of dimension {}",
            t.rows(),
            t.cols(),
            v.dim_head()
        )));
    }
    Ok(t.cols())
}

/// Compressed coefficient words `P_H·w(V)|H` for all words of length `1..=max_len`.
pub fn compressed_words(
    v: &StructuredIsometricPencil,
    dim_h: usize,
    max_len: usize,
) -> Vec<(Vec<u8>, CMatrix)> {
    expand_words(&h_basis(v.dim_head(), dim_h), 2, max_len, |e, x| {
        v.apply_coeff_unchecked(e, x)
    })
    .into_iter()
    .map(|(w, vs)| (w, compress_to_h(&vs, dim_h)))
    .collect()
}

/// `P_H V(λ)^n|H = T(λ)^n` for all λ and `n ≤ max_len`, tested through the
/// symmetrized multipowers of both coefficient pairs.
pub fn check_dilation(
    v: &StructuredIsometricPencil,
    t: &LinearPencil,
    max_len: usize,
    profile: &ToleranceProfile,
) -> Result<Report> {
    let dim_h = check_h(v, t)?;
    let words = compressed_words(v, dim_h, max_len);
    Ok(dilation_report(&words, t, max_len, profile)?.named("dilation"))
}

pub(crate) fn dilation_report(
    words: &[(Vec<u8>, CMatrix)],
    t: &LinearPencil,
    max_len: usize,
    profile: &ToleranceProfile,
) -> Result<Report> {
    let dim_h = t.cols();
    let mut sums: BTreeMap<(usize, usize), CMatrix> = BTreeMap::new();
    for (w, m) in words {
        let ones = w.iter().filter(|&&e| e == 1).count();
        let key = (w.len() - ones, ones);
        *sums
            .entry(key)
            .or_insert_with(|| CMatrix::zeros(dim_h, dim_h)) += m;
    }
    let mut worst = 0.0f64;
    let mut worst_t = (0, 0);
    let mut per_len = vec![0.0f64; max_len + 1];
    for (&(t0, t1), sum) in &sums {
        let n = t0 + t1;
        let avg = sum.unscale(crate::pencil::binomial(n, t1));
        let expected = symmetrized_multipower(t, (t0, t1), profile.word_cap.max(max_len))?;
        let r = op_norm(&(avg - expected));
        per_len[n] = per_len[n].max(r);
        if r > worst {
            worst = r;
            worst_t = (t0, t1);
        }
    }
    let mut report = Report::new("dilation", worst, profile.check);
    for (n, r) in per_len.iter().enumerate().skip(1) {
        report = report.detail(format!("length {n}"), *r);
    }
    if !report.pass {
        report = report.with_witness(Witness {
            word: None,
            lambdas: Vec::new(),
            description: format!(
                "multipower t = ({}, {}) differs by {worst:.3e}",
                worst_t.0, worst_t.1
            ),
        });
    }
    Ok(report)
}

/// `P_H·w(V)|H = w(T)` for every ordered coefficient word of length `≤ max_len`.
pub fn check_uniform(
    v: &StructuredIsometricPencil,
    t: &LinearPencil,
    max_len: usize,
    profile: &ToleranceProfile,
) -> Result<Report> {
    let dim_h = check_h(v, t)?;
    let words = compressed_words(v, dim_h, max_len);
    Ok(uniform_report(&words, t, profile, "V"))
}

pub(crate) fn uniform_report(
    words: &[(Vec<u8>, CMatrix)],
    t: &LinearPencil,
    profile: &ToleranceProfile,
    symbol: &str,
) -> Report {
    let diffs: Vec<(&Vec<u8>, CMatrix)> = words
        .iter()
        .map(|(w, m)| (w, m - word_matrix(t, w)))
        .collect();
    let mut worst = 0.0f64;
    let mut worst_word: Option<&Vec<u8>> = None;
    let max_len = words.iter().map(|(w, _)| w.len()).max().unwrap_or(0);
    let mut per_len = vec![0.0f64; max_len + 1];
    for (w, d) in &diffs {
        let r = op_norm(d);
        per_len[w.len()] = per_len[w.len()].max(r);
        if r > worst {
            worst = r;
            worst_word = Some(w);
        }
    }
    let mut report = Report::new("uniform", worst, profile.check);
    for (n, r) in per_len.iter().enumerate().skip(1) {
        report = report.detail(format!("length {n}"), *r);
    }
    if !report.pass {
        let n = per_len
            .iter()
            .position(|&r| r > profile.check)
            .expect("a failing length exists");
        let layer: Vec<(&Vec<u8>, &CMatrix)> = diffs
            .iter()
            .filter(|(w, _)| w.len() == n)
            .map(|(w, d)| (*w, d))
            .collect();
        report = report.with_witness(parameter_witness(&layer, words, t, worst_word, symbol));
    }
    report
}

/// Searches parameter tuples in `{1, −1, i, −i}^n` for the largest defect
/// `P_H T̃(λ1)⋯T̃(λn)|H − T(λ1)⋯T(λn)`.
fn parameter_witness(
    layer: &[(&Vec<u8>, &CMatrix)],
    words: &[(Vec<u8>, CMatrix)],
    t: &LinearPencil,
    worst_word: Option<&Vec<u8>>,
    symbol: &str,
) -> Witness {
    let n = layer[0].0.len();
    let cands = [c64(1.0, 0.0), c64(-1.0, 0.0), c64(0.0, 1.0), c64(0.0, -1.0)];
    let dim_h = layer[0].1.nrows();
    let mut best = (f64::NEG_INFINITY, Vec::new(), CMatrix::zeros(dim_h, dim_h));
    for k in 0..4usize.pow(n as u32) {
        let lambdas: Vec<C64> = (0..n)
            .map(|j| cands[(k / 4usize.pow(j as u32)) % 4])
            .collect();
        let mut d = CMatrix::zeros(dim_h, dim_h);
        for (w, m) in layer {
            let weight: C64 = w
                .iter()
                .zip(&lambdas)
                .map(|(&e, &l)| if e == 1 { l } else { c64(1.0, 0.0) })
                .product();
            d += *m * weight;
        }
        let r = op_norm(&d);
        if r > best.0 + 1e-12 {
            best = (r, lambdas, d);
        }
    }
    let (_, lambdas, _) = best;
    // Reassemble both sides at the chosen parameters for the description.
    let mut dil = CMatrix::zeros(dim_h, dim_h);
    for (w, m) in words.iter().filter(|(w, _)| w.len() == n) {
        let weight: C64 = w
            .iter()
            .zip(&lambdas)
            .map(|(&e, &l)| if e == 1 { l } else { c64(1.0, 0.0) })
            .product();
        dil += m * weight;
    }
    let ours: CMatrix = lambdas
        .iter()
        .fold(crate::linalg::identity(dim_h), |acc, &l| acc * t.eval(l));
    let args: String = lambdas
        .iter()
        .map(|&l| format!("{symbol}({})", format_lambda(l)))
        .collect();
    let targs: String = lambdas
        .iter()
        .map(|&l| format!("T({})", format_lambda(l)))
        .collect();
    let description = if dim_h == 1 {
        format!(
            "P_H {args}h = {} but {targs}h = {}",
            times_h(dil[(0, 0)]),
            times_h(ours[(0, 0)])
        )
    } else {
        format!("‖P_H {args}|H − {targs}‖ = {:.6}", op_norm(&(dil - ours)))
    };
    Witness {
        word: worst_word.map(|w| word_string(w)),
        lambdas: lambdas.into_iter().map(lambda_pair).collect(),
        description,
    }
}

/// `z·h` rendered as `h`, `-h`, `0` or `(a+bi)·h`.
fn times_h(z: C64) -> String {
    let clean = |x: f64| if x.abs() < 1e-12 { 0.0 } else { x };
    let (re, im) = (clean(z.re), clean(z.im));
    match (re, im) {
        (0.0, 0.0) => "0".into(),
        (r, 0.0) if (r - 1.0).abs() < 1e-12 => "h".into(),
        (r, 0.0) if (r + 1.0).abs() < 1e-12 => "-h".into(),
        (r, 0.0) => format!("{r:.6}·h"),
        (r, i) => format!("({r:.6}{i:+.6}i)·h"),
    }
}

/// Rank bookkeeping of a word-span minimality test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SpanAnalysis {
    /// Numerical rank of the span of all words applied to `H`.
    pub span_rank: usize,
    /// Dimension of the target window that a minimal dilation must fill.
    pub window_dim: usize,
    /// Number of target-window directions missing from the span.
    pub deficiency: usize,
}

impl SpanAnalysis {
    pub(crate) fn from_columns(span: &CMatrix, target: &CMatrix, tol: f64) -> Self {
        let span_rank = numerical_rank(span, tol);
        let joint = numerical_rank(&hstack(&[span, target]), tol);
        SpanAnalysis {
            span_rank,
            window_dim: target.ncols(),
            deficiency: joint - span_rank,
        }
    }

    pub fn into_report(self, check: &str) -> Report {
        Report::new(check, self.deficiency as f64, 0.0)
            .detail("span rank", self.span_rank as f64)
            .detail("window dim", self.window_dim as f64)
            .detail("deficiency", self.deficiency as f64)
    }
}

/// Span of all coefficient words of length `≤ depth` applied to `H`, compared
/// with the window `(Y_{−depth}, …, Y_{−1}, head)`.
///
/// Products at arbitrary parameters span the same space as the coefficient
/// words, so the test is exact for the chosen depth.
pub fn span_analysis(
    v: &StructuredIsometricPencil,
    dim_h: usize,
    depth: usize,
    rank_tol: f64,
) -> SpanAnalysis {
    let reach = v.depth() + depth;
    let seeds = h_basis(v.dim_head(), dim_h);
    let mut cols: Vec<CVector> = seeds.iter().map(|x| x.to_dense(v.dim_y(), reach)).collect();
    for (_, vs) in expand_words(&seeds, 2, depth, |e, x| v.apply_coeff_unchecked(e, x)) {
        cols.extend(vs.iter().map(|x| x.to_dense(v.dim_y(), reach)));
    }
    let span = CMatrix::from_columns(&cols);
    let dy = v.dim_y();
    let n = reach * dy + v.dim_head();
    let first = (reach - depth) * dy;
    let target = CMatrix::identity(n, n)
        .columns(first, n - first)
        .into_owned();
    SpanAnalysis::from_columns(&span, &target, rank_tol)
}

pub fn check_minimality(
    v: &StructuredIsometricPencil,
    t: &LinearPencil,
    depth: usize,
    profile: &ToleranceProfile,
) -> Result<Report> {
    let dim_h = check_h(v, t)?;
    Ok(span_analysis(v, dim_h, depth, profile.minimality_rank).into_report("minimality"))
}
