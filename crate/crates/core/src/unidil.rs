//! Minimal unitary extension of a structured isometric pencil on
//! `K = K₊ ⊕ (⊕_{n≥1} 𝒰)` and the linear biinner function it induces.
//!
//! All subspaces (`𝒱`, `L`, `K₁`) are computed inside the output window
//! `Y^(d+1) ⊕ H` of the core; the tail shift covers every deeper slot.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{DilationError, Result};
use crate::factorization::FejerRieszFactor;
use crate::isodil::{
    dilation_report, expand_words, uniform_report, KPlusVector, SpanAnalysis,
    StructuredIsometricPencil, TailPhase,
};
use crate::linalg::{
    c64, hstack, identity, numerical_rank, op_norm, orthocomplement_within, orthonormal_range,
    projector, vstack, CMatrix, CVector, SubspaceBasis, C64,
};
use crate::pencil::{unit_circle_grid, LinearPencil};
use crate::report::Report;
use crate::tolerance::ToleranceProfile;

/// Subspace data of an isometric core inside its output window.
#[derive(Debug, Clone)]
pub struct CoreSubspaces {
    pub window_prime_dim: usize,
    pub window_dim: usize,
    pub ran0: SubspaceBasis,
    pub ran1: SubspaceBasis,
    pub l: SubspaceBasis,
    pub k1: SubspaceBasis,
    /// `[K₁ | L]`.
    pub u: SubspaceBasis,
    pub p0: CMatrix,
    pub p1: CMatrix,
    /// `‖ran0* ran1‖`.
    pub range_overlap: f64,
}

impl CoreSubspaces {
    pub fn dim_u(&self) -> usize {
        self.u.dim()
    }
}

pub fn core_subspaces(
    v: &StructuredIsometricPencil,
    profile: &ToleranceProfile,
) -> Result<CoreSubspaces> {
    let b = v.core();
    let residual = b.isometry_residual();
    if residual > profile.isometry {
        return Err(DilationError::NotIsometric { residual });
    }
    let n = v.window_prime_dim();
    let ran0 = orthonormal_range(b.a0(), profile.rank);
    let ran1 = orthonormal_range(b.a1(), profile.rank);
    let range_overlap = op_norm(&(ran0.basis().adjoint() * ran1.basis()));
    let span = ran0.direct_sum(&ran1)?;
    let full = SubspaceBasis::from_orthonormal(identity(n), profile.rank)?;
    let l = orthocomplement_within(&full, &span, profile.containment)?;
    let at_one = orthonormal_range(&(b.a0() + b.a1()), profile.rank);
    let k1 = orthocomplement_within(&span, &at_one, profile.containment)?;
    let u = k1.direct_sum(&l)?;
    Ok(CoreSubspaces {
        window_prime_dim: n,
        window_dim: v.window_dim(),
        p0: projector(&ran0),
        p1: projector(&ran1),
        ran0,
        ran1,
        l,
        k1,
        u,
        range_overlap,
    })
}

/// `Q(λ) = q0 + λq1 : 𝒰 → window′`, columns ordered `K₁` then `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct QPencil {
    pub q0: CMatrix,
    pub q1: CMatrix,
}

impl QPencil {
    pub fn pencil(&self) -> LinearPencil {
        LinearPencil::new(self.q0.clone(), self.q1.clone()).expect("q blocks share a shape")
    }

    pub fn eval(&self, lambda: C64) -> CMatrix {
        &self.q0 + &self.q1 * lambda
    }

    pub fn coeff(&self, k: u8) -> &CMatrix {
        if k == 0 {
            &self.q0
        } else {
            &self.q1
        }
    }

    pub fn dim_u(&self) -> usize {
        self.q0.ncols()
    }
}

pub fn build_q(c: &CoreSubspaces) -> QPencil {
    let k1 = c.k1.basis();
    let l = c.l.basis();
    let n = c.window_prime_dim;
    QPencil {
        q0: hstack(&[&(&c.p0 * k1), l]),
        q1: hstack(&[&(&c.p1 * k1), &CMatrix::zeros(n, l.ncols())]),
    }
}

/// Finitely supported vectors covering window′ and two deeper tail slots.
fn covering_vectors(v: &StructuredIsometricPencil) -> Vec<KPlusVector> {
    let n = v.window_prime_dim();
    let mut out: Vec<KPlusVector> = (0..n)
        .map(|j| {
            let mut e = CVector::zeros(n);
            e[j] = c64(1.0, 0.0);
            v.embed_window_prime(&e)
        })
        .collect();
    for slot in [v.depth() + 2, v.depth() + 3] {
        for j in 0..v.dim_y() {
            let mut e = CVector::zeros(v.dim_y());
            e[j] = c64(1.0, 0.0);
            out.push(KPlusVector::at_slot(slot, e, v.dim_head()));
        }
    }
    out
}

/// `I − V(λ)V(λ)* = Q(λ)Q(λ)*` and `V(λ)*Q(λ) = 0` on the grid.
pub fn verify_q_identities(
    v: &StructuredIsometricPencil,
    q: &QPencil,
    grid_size: usize,
    tol: f64,
) -> Result<Report> {
    if q.q0.nrows() != v.window_prime_dim() {
        return Err(DilationError::DimensionMismatch(format!(
            "Q maps into dimension {}, window has {}",
            q.q0.nrows(),
            v.window_prime_dim()
        )));
    }
    let xs = covering_vectors(v);
    let mut defect = 0.0f64;
    let mut orth = 0.0f64;
    for lambda in unit_circle_grid(grid_size) {
        let ql = q.eval(lambda);
        for x in &xs {
            let vvx = v.apply(lambda, &v.apply_adjoint(lambda, x)?)?;
            let lhs = x - &vvx;
            let rhs = v.embed_window_prime(&(&ql * (ql.adjoint() * v.gather_window_prime(x))));
            defect = defect.max((&lhs - &rhs).norm());
        }
        for j in 0..q.dim_u() {
            let qu = v.embed_window_prime(&ql.column(j).into_owned());
            orth = orth.max(v.apply_adjoint(lambda, &qu)?.norm());
        }
    }
    let qr = q.pencil().isometry_residual();
    Ok(Report::new("q identities", defect.max(orth).max(qr), tol)
        .detail("I - VV* - QQ*", defect)
        .detail("V*Q", orth)
        .detail("Q isometry", qr))
}

/// Finitely supported vector of `K`. `future[k]` is slot `k+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct KVector {
    pub kplus: KPlusVector,
    future: Vec<CVector>,
}

fn trim_future(f: &mut Vec<CVector>) {
    while f
        .last()
        .is_some_and(|v| v.iter().all(|z| z.re == 0.0 && z.im == 0.0))
    {
        f.pop();
    }
}

impl KVector {
    pub fn new(kplus: KPlusVector, mut future: Vec<CVector>) -> Self {
        trim_future(&mut future);
        Self { kplus, future }
    }

    pub fn from_kplus(kplus: KPlusVector) -> Self {
        Self {
            kplus,
            future: Vec::new(),
        }
    }

    pub fn future(&self) -> &[CVector] {
        &self.future
    }

    pub fn future_slot(&self, n: usize) -> Option<&CVector> {
        n.checked_sub(1).and_then(|k| self.future.get(k))
    }

    pub fn future_depth(&self) -> usize {
        self.future.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.kplus.norm_sqr() + self.future.iter().map(|v| v.norm_squared()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn inner(&self, other: &KVector) -> C64 {
        let f: C64 = self
            .future
            .iter()
            .zip(&other.future)
            .map(|(a, b)| a.dotc(b))
            .sum();
        self.kplus.inner(&other.kplus) + f
    }

    pub fn sub(&self, other: &KVector) -> KVector {
        let n = self.future.len().max(other.future.len());
        let dim = self
            .future
            .first()
            .or(other.future.first())
            .map_or(0, |v| v.len());
        let future = (0..n)
            .map(|k| {
                let a = self
                    .future
                    .get(k)
                    .cloned()
                    .unwrap_or_else(|| CVector::zeros(dim));
                match other.future.get(k) {
                    Some(b) => a - b,
                    None => a,
                }
            })
            .collect();
        KVector::new(&self.kplus - &other.kplus, future)
    }

    /// Dense coordinates `[tail (deepest first), head, future 1..=future_slots]`.
    pub fn to_dense(
        &self,
        dim_y: usize,
        tail_slots: usize,
        dim_u: usize,
        future_slots: usize,
    ) -> CVector {
        assert!(self.future.len() <= future_slots);
        let k = self.kplus.to_dense(dim_y, tail_slots);
        let mut out = CVector::zeros(k.len() + future_slots * dim_u);
        out.rows_mut(0, k.len()).copy_from(&k);
        for (i, f) in self.future.iter().enumerate() {
            out.rows_mut(k.len() + i * dim_u, dim_u).copy_from(f);
        }
        out
    }
}

/// `U(λ)` on `K`: `(k₊, u₁, u₂, …) ↦ (V(λ)k₊ + Q(λ)u₁, φ(λ)u₂, φ(λ)u₃, …)`
/// where `φ` is 1 or λ (`future_phase`).
#[derive(Debug, Clone)]
pub struct UnitaryDilation {
    v: StructuredIsometricPencil,
    q: QPencil,
    cores: CoreSubspaces,
    future_phase: TailPhase,
}

pub fn build_unitary(
    v: &StructuredIsometricPencil,
    profile: &ToleranceProfile,
) -> Result<UnitaryDilation> {
    let cores = core_subspaces(v, profile)?;
    let q = build_q(&cores);
    let residual = q.pencil().isometry_residual();
    if residual > profile.isometry {
        return Err(DilationError::NotIsometric { residual });
    }
    Ok(UnitaryDilation {
        v: v.clone(),
        q,
        cores,
        future_phase: TailPhase::Constant,
    })
}

impl UnitaryDilation {
    pub fn isometric(&self) -> &StructuredIsometricPencil {
        &self.v
    }

    pub fn q(&self) -> &QPencil {
        &self.q
    }

    pub fn cores(&self) -> &CoreSubspaces {
        &self.cores
    }

    pub fn future_phase(&self) -> TailPhase {
        self.future_phase
    }

    pub fn dim_u(&self) -> usize {
        self.q.dim_u()
    }

    /// The extension `(k₊, u₁, u₂, …) ↦ (V(λ)k₊ + λQu₁, λu₂, …)`, which is
    /// `U(λ)·diag(I, λI)`. Linear only when `Q` is constant.
    pub fn with_lambda_future(&self) -> Result<UnitaryDilation> {
        if op_norm(&self.q.q1) > 0.0 || self.future_phase != TailPhase::Constant {
            return Err(DilationError::InvalidArgument(
                "a λ-phased future needs a constant Q".into(),
            ));
        }
        Ok(UnitaryDilation {
            v: self.v.clone(),
            q: QPencil {
                q0: CMatrix::zeros(self.q.q0.nrows(), self.q.q0.ncols()),
                q1: self.q.q0.clone(),
            },
            cores: self.cores.clone(),
            future_phase: TailPhase::Lambda,
        })
    }

    pub fn check_vector(&self, x: &KVector) -> Result<()> {
        self.v.check_vector(&x.kplus)?;
        if let Some(bad) = x.future.iter().find(|f| f.len() != self.dim_u()) {
            return Err(DilationError::DimensionMismatch(format!(
                "future slot has dimension {}, expected {}",
                bad.len(),
                self.dim_u()
            )));
        }
        Ok(())
    }

    fn act(&self, v_part: KPlusVector, q: &CMatrix, phi: C64, x: &KVector) -> KVector {
        let kplus = match x.future.first() {
            Some(u1) => &v_part + &self.v.embed_window_prime(&(q * u1)),
            None => v_part,
        };
        let future = x.future.iter().skip(1).map(|u| u * phi).collect();
        KVector::new(kplus, future)
    }

    fn act_adjoint(&self, v_part: KPlusVector, q: &CMatrix, phi: C64, x: &KVector) -> KVector {
        let u1 = q.adjoint() * self.v.gather_window_prime(&x.kplus);
        let mut future = Vec::with_capacity(x.future.len() + 1);
        future.push(u1);
        future.extend(x.future.iter().map(|u| u * phi.conj()));
        KVector::new(v_part, future)
    }

    pub fn apply(&self, lambda: C64, x: &KVector) -> Result<KVector> {
        self.check_vector(x)?;
        let vk = self.v.apply(lambda, &x.kplus)?;
        Ok(self.act(
            vk,
            &self.q.eval(lambda),
            self.future_phase.factor(lambda),
            x,
        ))
    }

    pub fn apply_adjoint(&self, lambda: C64, x: &KVector) -> Result<KVector> {
        self.check_vector(x)?;
        let vk = self.v.apply_adjoint(lambda, &x.kplus)?;
        Ok(self.act_adjoint(
            vk,
            &self.q.eval(lambda),
            self.future_phase.factor(lambda),
            x,
        ))
    }

    /// Letters `0, 1` are `U₀, U₁`; letters `2, 3` are `U₀*, U₁*`.
    pub fn apply_letter(&self, letter: u8, x: &KVector) -> Result<KVector> {
        self.check_vector(x)?;
        Ok(self.letter(letter, x))
    }

    pub(crate) fn letter(&self, letter: u8, x: &KVector) -> KVector {
        let k = letter % 2;
        let phi = self.future_phase.coefficient_factor(k);
        let q = self.q.coeff(k);
        if letter < 2 {
            self.act(self.v.apply_coeff_unchecked(k, &x.kplus), q, phi, x)
        } else {
            self.act_adjoint(self.v.apply_coeff_adjoint_unchecked(k, &x.kplus), q, phi, x)
        }
    }

    /// Operator norm of coefficient `k` on all of `K`.
    pub fn coefficient_norm(&self, k: u8) -> f64 {
        let block = hstack(&[self.v.core().coeff(k), self.q.coeff(k)]);
        let mut n = op_norm(&block);
        if self.v.dim_y() > 0 && self.v.tail_phase().coefficient() == k {
            n = n.max(1.0);
        }
        if self.dim_u() > 0 && self.future_phase.coefficient() == k {
            n = n.max(1.0);
        }
        n
    }

    /// Core block of coefficient `k`: window ⊕ 𝒰₁ → window′.
    pub fn core_block(&self, k: u8) -> CMatrix {
        hstack(&[self.v.core().coeff(k), self.q.coeff(k)])
    }

    /// Dilation obtained by adjoining a head line fixed by every `U(λ)`.
    pub fn pad_with_fixed_line(&self, profile: &ToleranceProfile) -> Result<UnitaryDilation> {
        let padded = build_unitary(&self.v.pad_with_fixed_line(), profile)?;
        Ok(UnitaryDilation {
            future_phase: self.future_phase,
            ..padded
        })
    }

    fn h_seeds(&self, dim_h: usize) -> Vec<KVector> {
        (0..dim_h)
            .map(|j| KVector::from_kplus(KPlusVector::head_unit(self.v.dim_head(), j)))
            .collect()
    }

    fn check_h(&self, t: &LinearPencil) -> Result<usize> {
        if !t.is_square() || t.cols() > self.v.dim_head() {
            return Err(DilationError::DimensionMismatch(format!(
                "pencil of shape {}x{} does not fit a head of dimension {}",
                t.rows(),
                t.cols(),
                self.v.dim_head()
            )));
        }
        Ok(t.cols())
    }
}

fn compress(vs: &[KVector], dim_h: usize) -> CMatrix {
    let cols: Vec<CVector> = vs
        .iter()
        .map(|v| v.kplus.head().rows(0, dim_h).into_owned())
        .collect();
    CMatrix::from_columns(&cols)
}

/// `P_H·w(U)|H` for all words in `U₀, U₁` of length `1..=max_len`.
pub fn compressed_words_unitary(
    u: &UnitaryDilation,
    dim_h: usize,
    max_len: usize,
) -> Vec<(Vec<u8>, CMatrix)> {
    expand_words(&u.h_seeds(dim_h), 2, max_len, |e, x| u.letter(e, x))
        .into_iter()
        .map(|(w, vs)| (w, compress(&vs, dim_h)))
        .collect()
}

pub fn check_dilation_unitary(
    u: &UnitaryDilation,
    t: &LinearPencil,
    max_len: usize,
    profile: &ToleranceProfile,
) -> Result<Report> {
    let dim_h = u.check_h(t)?;
    let words = compressed_words_unitary(u, dim_h, max_len);
    Ok(dilation_report(&words, t, max_len, profile)?.named("unitary dilation"))
}

pub fn check_uniform_unitary(
    u: &UnitaryDilation,
    t: &LinearPencil,
    max_len: usize,
    profile: &ToleranceProfile,
) -> Result<Report> {
    let dim_h = u.check_h(t)?;
    let words = compressed_words_unitary(u, dim_h, max_len);
    Ok(uniform_report(&words, t, profile, "U").named("unitary uniform"))
}

/// `P_H U(λ)ⁿ|H = T(λ)ⁿ` and `P_H U(λ)⁻ⁿ|H = (T(λ)ⁿ)*` on the grid.
pub fn check_compression_tower(
    u: &UnitaryDilation,
    t: &LinearPencil,
    max_n: usize,
    grid_size: usize,
    tol: f64,
) -> Result<Report> {
    let dim_h = u.check_h(t)?;
    let seeds = u.h_seeds(dim_h);
    let mut forward = 0.0f64;
    let mut backward = 0.0f64;
    for lambda in unit_circle_grid(grid_size) {
        let tl = t.eval(lambda);
        let mut xs = seeds.clone();
        let mut ys = seeds.clone();
        let mut tn = identity(dim_h);
        for _ in 0..max_n {
            xs = xs
                .iter()
                .map(|x| u.apply(lambda, x))
                .collect::<Result<_>>()?;
            ys = ys
                .iter()
                .map(|y| u.apply_adjoint(lambda, y))
                .collect::<Result<_>>()?;
            tn = &tl * tn;
            forward = forward.max(op_norm(&(compress(&xs, dim_h) - &tn)));
            backward = backward.max(op_norm(&(compress(&ys, dim_h) - tn.adjoint())));
        }
    }
    Ok(Report::new("compression tower", forward.max(backward), tol)
        .detail("forward powers", forward)
        .detail("inverse powers", backward))
}

/// Random finitely supported vector of `K` with the given support.
pub fn random_kvector(
    u: &UnitaryDilation,
    rng: &mut ChaCha8Rng,
    tail: usize,
    future: usize,
) -> KVector {
    let v = u.isometric();
    let mut rv = |n: usize| {
        CVector::from_iterator(
            n,
            (0..n).map(|_| c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)),
        )
    };
    let t = (0..tail).map(|_| rv(v.dim_y())).collect();
    let h = rv(v.dim_head());
    let f = (0..future).map(|_| rv(u.dim_u())).collect();
    KVector::new(KPlusVector::new(t, h), f)
}

/// Isometry, `U*U = UU* = I` and the extension property on `samples`
/// random finitely supported vectors at grid parameters.
pub fn check_unitarity(u: &UnitaryDilation, samples: usize, seed: u64, tol: f64) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = unit_circle_grid(256);
    let (mut iso, mut left, mut right, mut ext) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let depth = u.isometric().depth();
    for _ in 0..samples {
        let lambda = grid[rng.random_range(0..grid.len())];
        let tail = rng.random_range(0..depth + 5);
        let future = rng.random_range(0..5);
        let x = random_kvector(u, &mut rng, tail, future);
        let ux = u.apply(lambda, &x)?;
        iso = iso.max((ux.norm() - x.norm()).abs());
        left = left.max(u.apply_adjoint(lambda, &ux)?.sub(&x).norm());
        right = right.max(
            u.apply(lambda, &u.apply_adjoint(lambda, &x)?)?
                .sub(&x)
                .norm(),
        );
        let k = KVector::from_kplus(x.kplus.clone());
        let vk = KVector::from_kplus(u.isometric().apply(lambda, &x.kplus)?);
        ext = ext.max(u.apply(lambda, &k)?.sub(&vk).norm());
    }
    let worst = iso.max(left).max(right).max(ext);
    Ok(Report::new("unitarity", worst, tol)
        .detail("norm defect", iso)
        .detail("U*U - I", left)
        .detail("UU* - I", right)
        .detail("extension of V", ext))
}

/// Largest unitarity defect of `U(λ)` over a window-covering basis.
pub fn unitarity_residual_at(u: &UnitaryDilation, lambda: C64) -> Result<f64> {
    let v = u.isometric();
    let mut xs: Vec<KVector> = covering_vectors(v)
        .into_iter()
        .map(KVector::from_kplus)
        .collect();
    for slot in 1..=2 {
        for j in 0..u.dim_u() {
            let mut f = vec![CVector::zeros(u.dim_u()); slot];
            f[slot - 1][j] = c64(1.0, 0.0);
            xs.push(KVector::new(KPlusVector::zero(v.dim_head()), f));
        }
    }
    let mut worst = 0.0f64;
    for x in &xs {
        let a = u.apply_adjoint(lambda, &u.apply(lambda, x)?)?.sub(x).norm();
        let b = u.apply(lambda, &u.apply_adjoint(lambda, x)?)?.sub(x).norm();
        worst = worst.max(a).max(b);
    }
    Ok(worst)
}

/// Word span over `{U₀, U₁, U₀*, U₁*}` applied to `H`, against the window of
/// tail slots `1..=depth`, the head and future slots `1..=depth−d` (`d` the
/// core depth: a deep core needs extra letters before `Q*` sees the head).
pub fn span_analysis_unitary(
    u: &UnitaryDilation,
    dim_h: usize,
    depth: usize,
    rank_tol: f64,
) -> SpanAnalysis {
    let v = u.isometric();
    let reach = v.depth() + depth;
    let du = u.dim_u();
    let seeds = u.h_seeds(dim_h);
    let dense = |x: &KVector| x.to_dense(v.dim_y(), reach, du, depth);
    let mut cols: Vec<CVector> = seeds.iter().map(dense).collect();
    for (_, vs) in expand_words(&seeds, 4, depth, |e, x| u.letter(e, x)) {
        cols.extend(vs.iter().map(dense));
    }
    let span = CMatrix::from_columns(&cols);
    let dy = v.dim_y();
    let first = (reach - depth) * dy;
    let future = depth.saturating_sub(v.depth());
    let width = depth * dy + v.dim_head() + future * du;
    let target = identity(span.nrows()).columns(first, width).into_owned();
    SpanAnalysis::from_columns(&span, &target, rank_tol)
}

pub fn check_minimality_unitary(
    u: &UnitaryDilation,
    t: &LinearPencil,
    depth: usize,
    profile: &ToleranceProfile,
) -> Result<Report> {
    let dim_h = u.check_h(t)?;
    Ok(
        span_analysis_unitary(u, dim_h, depth, profile.minimality_rank)
            .into_report("unitary minimality"),
    )
}

/// The linear function `θ(z) = [F(z), P_Y Q(z); T(z), P_H Q(z)] : H ⊕ 𝒰 → Y ⊕ H`.
#[derive(Debug, Clone, PartialEq)]
pub struct Theta {
    pub pencil: LinearPencil,
    pub dim_y: usize,
    pub dim_h: usize,
    pub dim_u: usize,
}

impl Theta {
    pub fn eval(&self, z: C64) -> CMatrix {
        self.pencil.eval(z)
    }

    pub fn theta11(&self, z: C64) -> CMatrix {
        self.eval(z)
            .view((0, 0), (self.dim_y, self.dim_h))
            .into_owned()
    }

    pub fn theta22(&self, z: C64) -> CMatrix {
        self.eval(z)
            .view((self.dim_y, self.dim_h), (self.dim_h, self.dim_u))
            .into_owned()
    }
}

pub fn assemble_theta(t: &LinearPencil, f: &FejerRieszFactor, q: &QPencil) -> Result<Theta> {
    let (dy, dh, du) = (f.dim_y(), t.cols(), q.dim_u());
    if !t.is_square() || f.dim_h() != dh || q.q0.nrows() != dy + dh {
        return Err(DilationError::DimensionMismatch(format!(
            "θ blocks do not fit: T {}x{}, F {}x{}, Q {}x{}",
            t.rows(),
            t.cols(),
            dy,
            f.dim_h(),
            q.q0.nrows(),
            du
        )));
    }
    let block = |fk: &CMatrix, tk: &CMatrix, qk: &CMatrix| {
        let py = qk.rows(0, dy).into_owned();
        let ph = qk.rows(dy, dh).into_owned();
        vstack(&[&hstack(&[fk, &py]), &hstack(&[tk, &ph])])
    };
    Ok(Theta {
        pencil: LinearPencil::new(block(&f.f0, t.a0(), &q.q0), block(&f.f1, t.a1(), &q.q1))?,
        dim_y: dy,
        dim_h: dh,
        dim_u: du,
    })
}

/// Deterministic interior sample points spread over the disk.
pub fn disk_samples(n: usize) -> Vec<C64> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            C64::from_polar(
                ((k as f64 + 0.5) / n as f64).sqrt() * 0.999,
                golden * k as f64,
            )
        })
        .collect()
}

/// Pointwise unitarity of `θ(λ)`, which bounds `‖θ(z)‖ ≤ 1` inside the disk.
pub fn theta_unitarity_residual(theta: &Theta, lambda: C64) -> f64 {
    let m = theta.eval(lambda);
    let n = m.ncols();
    let a = op_norm(&(m.adjoint() * &m - identity(n)));
    let b = op_norm(&(&m * m.adjoint() - identity(m.nrows())));
    a.max(b)
}

/// Biinner checks: boundary unitarity, interior contractivity, and
/// pointwise rank surrogates for the density conditions on `θ₁₁`, `θ₂₂*`.
pub fn check_biinner(
    theta: &Theta,
    grid_size: usize,
    disk: usize,
    tol: f64,
    rank_tol: f64,
) -> Report {
    let grid = unit_circle_grid(grid_size);
    let boundary = grid
        .iter()
        .map(|&l| theta_unitarity_residual(theta, l))
        .fold(0.0f64, f64::max);
    let interior = disk_samples(disk)
        .into_iter()
        .map(|z| op_norm(&theta.eval(z)))
        .fold(0.0f64, f64::max);
    let rank_ok = |m: &CMatrix, want: usize| want == 0 || numerical_rank(m, rank_tol) == want;
    let r11 = grid
        .iter()
        .filter(|&&l| !rank_ok(&theta.theta11(l), theta.dim_y))
        .count();
    let r22 = grid
        .iter()
        .filter(|&&l| !rank_ok(&theta.theta22(l).adjoint(), theta.dim_u))
        .count();
    let excess = (interior - 1.0).max(0.0);
    let rank_failures = (r11 + r22) as f64;
    let worst = if rank_failures > 0.0 {
        f64::INFINITY
    } else {
        boundary.max(excess)
    };
    let mut report = Report::new("biinner", worst, tol)
        .detail("boundary unitarity", boundary)
        .detail("interior max norm", interior)
        .note("theta11 rank failures", r11 as f64, "pointwise surrogate")
        .note("theta22* rank failures", r22 as f64, "pointwise surrogate");
    if rank_failures > 0.0 {
        report = report.note("rank surrogate", rank_failures, "density surrogate failed");
    }
    report
}
