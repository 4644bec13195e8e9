//! Linear pencils `A0 + λ·A1`, their classification on the unit circle, and
//! expansion of pencil products into ordered coefficient words.
//!
//! A product `T(λ1)⋯T(λn)` is multilinear in `(λ1, …, λn)`, so everything
//! that is quantified over all parameter tuples on the torus can be checked
//! exactly on the `2^n` coefficient words `A_{ε1}⋯A_{εn}`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{DilationError, Result};
use crate::linalg::{c64, ensure_finite, identity, op_norm, CMatrix, CVector, C64};

/// `A0 + λ·A1` with `A0`, `A1` of identical shape.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPencil {
    a0: CMatrix,
    a1: CMatrix,
}

impl LinearPencil {
    pub fn new(a0: CMatrix, a1: CMatrix) -> Result<Self> {
        if a0.shape() != a1.shape() {
            return Err(DilationError::ShapeMismatch(format!(
                "pencil coefficients have shapes {:?} and {:?}",
                a0.shape(),
                a1.shape()
            )));
        }
        ensure_finite(&a0)?;
        ensure_finite(&a1)?;
        Ok(Self { a0, a1 })
    }

    /// The λ-independent pencil `A0 + λ·0`.
    pub fn constant(a0: CMatrix) -> Self {
        let a1 = CMatrix::zeros(a0.nrows(), a0.ncols());
        Self { a0, a1 }
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        Self::constant(CMatrix::zeros(rows, cols))
    }

    pub fn a0(&self) -> &CMatrix {
        &self.a0
    }

    pub fn a1(&self) -> &CMatrix {
        &self.a1
    }

    /// Coefficient `A_k` for `k ∈ {0, 1}`.
    pub fn coeff(&self, k: u8) -> &CMatrix {
        match k {
            0 => &self.a0,
            1 => &self.a1,
            _ => panic!("pencil coefficient index {k} out of range"),
        }
    }

    pub fn rows(&self) -> usize {
        self.a0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.a0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn eval(&self, lambda: C64) -> CMatrix {
        &self.a0 + self.a1.map(|z| z * lambda)
    }

    /// Coefficient pencil of the pointwise adjoint on the circle:
    /// `T(λ)* = A0* + λ̄·A1*`, returned as the pair `(A0*, A1*)`.
    pub fn adjoint_coefficients(&self) -> (CMatrix, CMatrix) {
        (self.a0.adjoint(), self.a1.adjoint())
    }

    /// Algebraic isometry residual `max(‖A0*A0 + A1*A1 − I‖, ‖A1*A0‖)`.
    pub fn isometry_residual(&self) -> f64 {
        let n = self.cols();
        let gram = self.a0.adjoint() * &self.a0 + self.a1.adjoint() * &self.a1 - identity(n);
        let cross = self.a1.adjoint() * &self.a0;
        op_norm(&gram).max(op_norm(&cross))
    }

    /// Algebraic co-isometry residual `max(‖A0A0* + A1A1* − I‖, ‖A1A0*‖)`.
    pub fn coisometry_residual(&self) -> f64 {
        let m = self.rows();
        let gram = &self.a0 * self.a0.adjoint() + &self.a1 * self.a1.adjoint() - identity(m);
        let cross = &self.a1 * self.a0.adjoint();
        op_norm(&gram).max(op_norm(&cross))
    }
}

/// `n` equispaced points `exp(2πik/n)` on the unit circle, starting at 1.
pub fn unit_circle_grid(n: usize) -> Vec<C64> {
    (0..n)
        .map(|k| {
            if k == 0 {
                return c64(1.0, 0.0);
            }
            let s = 2.0 * PI * k as f64 / n as f64;
            c64(s.cos(), s.sin())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum PencilKind {
    Unitary,
    Isometric,
    Contractive { certified: bool, margin: f64 },
    NotContractive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PencilClass {
    pub kind: PencilKind,
    pub max_norm_on_grid: f64,
}

impl PencilClass {
    /// True for every kind except `NotContractive`.
    pub fn is_contractive(&self) -> bool {
        !matches!(self.kind, PencilKind::NotContractive)
    }

    pub fn is_isometric(&self) -> bool {
        matches!(self.kind, PencilKind::Isometric | PencilKind::Unitary)
    }
}

impl fmt::Display for PencilClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            PencilKind::Unitary => write!(f, "unitary"),
            PencilKind::Isometric => write!(f, "isometric"),
            PencilKind::Contractive { certified, .. } => write!(
                f,
                "contractive ({}, max-norm {:.6})",
                if certified {
                    "certified"
                } else {
                    "grid-passed"
                },
                self.max_norm_on_grid
            ),
            PencilKind::NotContractive => {
                write!(f, "not contractive (max-norm {:.6})", self.max_norm_on_grid)
            }
        }
    }
}

/// Classifies a pencil on the unit circle.
///
/// Isometry and unitarity are decided algebraically. Contractivity is a grid
/// test: `min λmin(I − T(λ)*T(λ)) ≥ −tol` over `grid_size` roots of unity.
/// The grid result is certified for the whole circle when the grid maximum
/// leaves room for the Lipschitz bound `‖T(λ) − T(μ)‖ ≤ ‖A1‖·|λ − μ|`.
pub fn classify(p: &LinearPencil, grid_size: usize, tol: f64) -> Result<PencilClass> {
    if grid_size < 8 {
        return Err(DilationError::InvalidArgument(format!(
            "grid size must be at least 8, got {grid_size}"
        )));
    }
    let max_norm = unit_circle_grid(grid_size)
        .into_iter()
        .map(|l| op_norm(&p.eval(l)))
        .fold(0.0, f64::max);

    let isometric = p.isometry_residual() <= tol;
    let kind = if isometric && p.is_square() && p.coisometry_residual() <= tol {
        PencilKind::Unitary
    } else if isometric {
        PencilKind::Isometric
    } else if 1.0 - max_norm * max_norm >= -tol {
        let margin = 1.0 - op_norm(p.a1()) * PI / grid_size as f64 - max_norm;
        PencilKind::Contractive {
            certified: margin >= 0.0,
            margin,
        }
    } else {
        PencilKind::NotContractive
    };
    Ok(PencilClass {
        kind,
        max_norm_on_grid: max_norm,
    })
}

/// All `2^n` binary words of length `n`, lexicographic with position 0 most
/// significant.
pub fn binary_words(n: usize) -> impl Iterator<Item = Vec<u8>> {
    (0..1usize << n).map(move |bits| (0..n).map(|j| ((bits >> (n - 1 - j)) & 1) as u8).collect())
}

/// `A_{ε1}^{(1)} ⋯ A_{εn}^{(n)} · x`, with `A_ε^{(j)}` coefficient `ε` of pencil `j`.
pub fn word_apply(pencils: &[LinearPencil], word: &[u8], x: &CVector) -> Result<CVector> {
    if pencils.len() != word.len() {
        return Err(DilationError::ShapeMismatch(format!(
            "{} pencils for a word of length {}",
            pencils.len(),
            word.len()
        )));
    }
    let mut v = x.clone();
    for (p, &e) in pencils.iter().zip(word).rev() {
        if p.cols() != v.len() {
            return Err(DilationError::ShapeMismatch(format!(
                "pencil with {} columns applied to a vector of length {}",
                p.cols(),
                v.len()
            )));
        }
        v = p.coeff(e) * v;
    }
    Ok(v)
}

/// Coefficient word of a single square pencil; the empty word is the identity.
pub fn word_matrix(p: &LinearPencil, word: &[u8]) -> CMatrix {
    word.iter()
        .fold(identity(p.cols()), |acc, &e| acc * p.coeff(e))
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Average of the distinct ordered products containing `A0` exactly `t.0`
/// times and `A1` exactly `t.1` times.
pub fn symmetrized_multipower(p: &LinearPencil, t: (usize, usize), cap: usize) -> Result<CMatrix> {
    if !p.is_square() {
        return Err(DilationError::ShapeMismatch(
            "symmetrized multipowers need a square pencil".into(),
        ));
    }
    let n = t.0 + t.1;
    if n > cap {
        return Err(DilationError::CapExceeded { len: n, cap });
    }
    let mut sum = CMatrix::zeros(p.rows(), p.cols());
    for w in binary_words(n).filter(|w| w.iter().filter(|&&e| e == 1).count() == t.1) {
        sum += word_matrix(p, &w);
    }
    Ok(sum.unscale(binomial(n, t.1)))
}
