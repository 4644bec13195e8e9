//! Linear outer spectral factor `F(λ) = F0 + λ·F1` of the defect
//! `I − T(λ)*T(λ)`.
//!
//! The defect is the degree-one trigonometric polynomial
//! `R(λ) = R0 + λ·C + λ̄·C*` with `R0 = I − T0*T0 − T1*T1` and `C = −T0*T1`.
//! Matching coefficients of `F(λ)*F(λ) = R(λ)` gives
//!
//! ```text
//! F0*F0 + F1*F1 = R0,    F0*F1 = C.
//! ```
//!
//! With `X = F0*F0` this becomes the fixed point `X = R0 − C*·X⁺·C`, which is
//! the block Cholesky (Bauer) recursion on the tridiagonal block Toeplitz
//! matrix of `R`. Iterating from `X = R0` decreases monotonically to the
//! maximal solution, whose factor is the outer one.

use serde::{Deserialize, Serialize};

use crate::error::{DilationError, Result};
use crate::linalg::{
    c64, hermitian_eigen, hermitian_pinv, identity, lu_solve, max_abs, numerical_rank, op_norm,
    orthonormal_range, CMatrix, CVector,
};
use crate::pencil::{classify, unit_circle_grid, LinearPencil};
use crate::tolerance::ToleranceProfile;

/// Roots closer to the origin than this are treated as lying inside the disk.
pub const OUTER_ROOT_MARGIN: f64 = 1e-8;

/// Coefficients of `R(λ) = r0 + λ·c + λ̄·c*`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramCoefficients {
    pub r0: CMatrix,
    pub c: CMatrix,
}

impl GramCoefficients {
    pub fn dim(&self) -> usize {
        self.r0.nrows()
    }

    pub fn eval(&self, lambda: crate::linalg::C64) -> CMatrix {
        &self.r0 + self.c.map(|z| z * lambda) + self.c.adjoint().map(|z| z * lambda.conj())
    }
}

/// Outer factor with target space `Y = C^dim_y`.
#[derive(Debug, Clone, PartialEq)]
pub struct FejerRieszFactor {
    pub f0: CMatrix,
    pub f1: CMatrix,
}

impl FejerRieszFactor {
    pub fn new(f0: CMatrix, f1: CMatrix) -> Result<Self> {
        // Shape validation only; the pencil type carries the checks.
        let p = LinearPencil::new(f0, f1)?;
        Ok(Self {
            f0: p.a0().clone(),
            f1: p.a1().clone(),
        })
    }

    pub fn dim_y(&self) -> usize {
        self.f0.nrows()
    }

    pub fn dim_h(&self) -> usize {
        self.f0.ncols()
    }

    pub fn pencil(&self) -> LinearPencil {
        LinearPencil::new(self.f0.clone(), self.f1.clone()).expect("factor blocks share a shape")
    }

    pub fn eval(&self, lambda: crate::linalg::C64) -> CMatrix {
        &self.f0 + self.f1.map(|z| z * lambda)
    }

    /// `max(‖f0*f0 + f1*f1 − r0‖, ‖f0*f1 − c‖)`.
    pub fn coefficient_residual(&self, g: &GramCoefficients) -> f64 {
        let diag = self.f0.adjoint() * &self.f0 + self.f1.adjoint() * &self.f1 - &g.r0;
        let off = self.f0.adjoint() * &self.f1 - &g.c;
        op_norm(&diag).max(op_norm(&off))
    }
}

/// Outcome of the root-location test on `det(F0 + z·F1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OuterCertificate {
    /// Smallest modulus among the zeros; `None` when there are none.
    pub min_root_modulus: Option<f64>,
    /// The factor was rectangular and the test ran on a square compression.
    pub compressed: bool,
    pub outer: bool,
}

/// Gram coefficients of `I − T(λ)*T(λ)` for a contractive square pencil.
pub fn gram_coefficients(t: &LinearPencil, profile: &ToleranceProfile) -> Result<GramCoefficients> {
    if !t.is_square() {
        return Err(DilationError::ShapeMismatch(format!(
            "pencil must be square, got {}x{}",
            t.rows(),
            t.cols()
        )));
    }
    let class = classify(t, profile.grid, profile.classify)?;
    if !class.is_contractive() {
        return Err(DilationError::NotContractive {
            max_norm: class.max_norm_on_grid,
        });
    }
    Ok(raw_gram_coefficients(t))
}

pub(crate) fn raw_gram_coefficients(t: &LinearPencil) -> GramCoefficients {
    let (a0, a1) = (t.a0(), t.a1());
    let r0 = identity(t.cols()) - a0.adjoint() * a0 - a1.adjoint() * a1;
    let c = -(a0.adjoint() * a1);
    GramCoefficients { r0, c }
}

/// Computes the outer factor of `R(λ)` by the Bauer fixed-point iteration.
///
/// Fails with `NotPsd` if `R` is indefinite on the grid, `NoConvergence`
/// when the step is still above `profile.convergence` after
/// `profile.max_iter` iterations, and `NotOuter` if the result has a zero
/// inside the disk.
pub fn bauer_factorize(
    g: &GramCoefficients,
    profile: &ToleranceProfile,
) -> Result<FejerRieszFactor> {
    let n = g.dim();
    let psd_tol = profile.classify * op_norm(&g.r0).max(1.0);
    for lambda in unit_circle_grid(profile.grid) {
        let (values, _) = hermitian_eigen(&g.eval(lambda));
        if let Some(&min) = values.last() {
            if min < -psd_tol {
                return Err(DilationError::NotPsd {
                    min_eigenvalue: min,
                });
            }
        }
    }

    let ch = g.c.adjoint();
    let mut x = g.r0.clone();
    let mut step = f64::INFINITY;
    let mut converged = false;
    for _ in 0..profile.max_iter {
        let next = &g.r0 - &ch * hermitian_pinv(&x, profile.pinv) * &g.c;
        let next = (&next + next.adjoint()).scale(0.5);
        step = max_abs(&(&next - &x));
        x = next;
        if step <= profile.convergence {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(DilationError::NoConvergence {
            iterations: profile.max_iter,
            residual: step,
        });
    }

    let (values, vectors) = hermitian_eigen(&x);
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    let dim_y = values
        .iter()
        .filter(|&&m| top > 0.0 && m > profile.rank * top)
        .count();

    let (f0, f1) = if dim_y == n {
        // Square case: gauge fixed by taking F0 = X^{1/2} positive semidefinite.
        let sq = CVector::from_iterator(n, values.iter().map(|&m| c64(m.sqrt(), 0.0)));
        let inv = CVector::from_iterator(n, values.iter().map(|&m| c64(1.0 / m.sqrt(), 0.0)));
        let f0 = &vectors * CMatrix::from_diagonal(&sq) * vectors.adjoint();
        let f1 = &vectors * CMatrix::from_diagonal(&inv) * vectors.adjoint() * &g.c;
        (f0, f1)
    } else {
        // Rows of F0 are the canonicalized eigenvectors of X scaled by sqrt(μ).
        let ur = vectors.columns(0, dim_y).adjoint();
        let sq = CVector::from_iterator(dim_y, values[..dim_y].iter().map(|&m| c64(m.sqrt(), 0.0)));
        let inv = CVector::from_iterator(
            dim_y,
            values[..dim_y].iter().map(|&m| c64(1.0 / m.sqrt(), 0.0)),
        );
        let f0 = CMatrix::from_diagonal(&sq) * &ur;
        let f1 = CMatrix::from_diagonal(&inv) * &ur * &g.c;
        (f0, f1)
    };
    let factor = FejerRieszFactor { f0, f1 };

    let residual = factor.coefficient_residual(g);
    if residual > profile.factorization {
        return Err(DilationError::FactorMismatch { residual });
    }
    let cert = outer_root_check(&factor);
    if !cert.outer {
        return Err(DilationError::NotOuter {
            modulus: cert.min_root_modulus.unwrap_or(0.0),
        });
    }
    Ok(factor)
}

/// Locates the zeros of `det(F0 + z·F1)`; rectangular factors are first
/// compressed to the row space of `F0`.
///
/// Zeros are `z = −1/μ` for the nonzero eigenvalues `μ` of `F0⁻¹F1`; a
/// singular `F0` puts a zero at the origin.
pub fn outer_root_check(f: &FejerRieszFactor) -> OuterCertificate {
    let (dy, dh) = (f.dim_y(), f.dim_h());
    if dy == 0 {
        return OuterCertificate {
            min_root_modulus: None,
            compressed: false,
            outer: true,
        };
    }
    let compressed = dy != dh;
    let (g0, g1) = if compressed {
        let w = orthonormal_range(&f.f0.adjoint(), 1e-12);
        if w.dim() < dy {
            return OuterCertificate {
                min_root_modulus: Some(0.0),
                compressed,
                outer: false,
            };
        }
        (&f.f0 * w.basis(), &f.f1 * w.basis())
    } else {
        (f.f0.clone(), f.f1.clone())
    };
    if numerical_rank(&g0, 1e-12) < dy {
        return OuterCertificate {
            min_root_modulus: Some(0.0),
            compressed,
            outer: false,
        };
    }
    let companion = lu_solve(&g0, &g1).expect("compressed F0 has full rank");
    let spectral_radius = crate::linalg::eigenvalues(&companion)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let min_root_modulus = (spectral_radius > 0.0).then(|| 1.0 / spectral_radius);
    OuterCertificate {
        min_root_modulus,
        compressed,
        outer: min_root_modulus.is_none_or(|m| m >= 1.0 - OUTER_ROOT_MARGIN),
    }
}

/// `max_λ ‖F(λ)*F(λ) − (I − T(λ)*T(λ))‖` over `grid_size` roots of unity.
pub fn verify_factorization(
    t: &LinearPencil,
    f: &FejerRieszFactor,
    grid_size: usize,
) -> Result<f64> {
    if f.dim_h() != t.cols() {
        return Err(DilationError::DimensionMismatch(format!(
            "factor acts on dimension {}, pencil on {}",
            f.dim_h(),
            t.cols()
        )));
    }
    Ok(unit_circle_grid(grid_size)
        .into_iter()
        .map(|l| factorization_residual_at(t, f, l))
        .fold(0.0, f64::max))
}

pub fn factorization_residual_at(
    t: &LinearPencil,
    f: &FejerRieszFactor,
    lambda: crate::linalg::C64,
) -> f64 {
    let tl = t.eval(lambda);
    let fl = f.eval(lambda);
    let defect = identity(t.cols()) - tl.adjoint() * &tl;
    op_norm(&(fl.adjoint() * &fl - defect))
}

/// Pointwise surjectivity of `F(λ)` onto `Y` on the grid.
pub fn outer_surrogate_check(f: &FejerRieszFactor, grid_size: usize, tol: f64) -> bool {
    unit_circle_grid(grid_size)
        .into_iter()
        .all(|l| numerical_rank(&f.eval(l), tol) == f.dim_y())
}
