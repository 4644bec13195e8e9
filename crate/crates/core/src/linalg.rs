//! Dense complex linear algebra and subspace calculus.
//!
//! Matrices are `nalgebra` dynamic matrices over `Complex64`; SVD and
//! eigendecompositions are delegated to `faer`. Every basis
//! produced here is canonicalized: within each column the first entry of
//! largest modulus is made real and positive, so repeated calls on the same
//! input return bit-identical bases.

use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{DilationError, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative slack used when deciding which entry of a column is "the first
/// of largest modulus" during phase canonicalization.
const PHASE_TIE: f64 = 1e-9;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn ensure_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(DilationError::NonFinite)
    }
}

/// Builds a matrix from row-major data, rejecting NaN/Inf entries.
pub fn matrix_from_rows(rows: usize, cols: usize, data: &[C64]) -> Result<CMatrix> {
    if data.len() != rows * cols {
        return Err(DilationError::ShapeMismatch(format!(
            "expected {} entries for a {rows}x{cols} matrix, got {}",
            rows * cols,
            data.len()
        )));
    }
    let m = CMatrix::from_row_slice(rows, cols, data);
    ensure_finite(&m)?;
    Ok(m)
}

pub fn real_matrix(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    CMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| c64(x, 0.0)))
}

fn to_faer(m: &CMatrix) -> Mat<C64> {
    // Sequential kernels keep results independent of the thread count.
    static SEQUENTIAL: std::sync::Once = std::sync::Once::new();
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Singular values in descending order; empty for a matrix with a zero dimension.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    to_faer(m)
        .singular_values()
        .expect("svd of a finite matrix converges")
}

/// Spectral norm (largest singular value).
pub fn op_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn numerical_rank(m: &CMatrix, tol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&smax) if smax > 0.0 => s.iter().filter(|&&x| x > tol * smax).count(),
        _ => 0,
    }
}

/// Rotates the column so that its first entry of largest modulus is real positive.
pub fn canonicalize_phase(col: &mut CVector) {
    let max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let Some(idx) = col.iter().position(|z| z.norm() >= max * (1.0 - PHASE_TIE)) else {
        return;
    };
    let pivot = col[idx];
    let phase = pivot.conj() / pivot.norm();
    col.iter_mut().for_each(|z| *z *= phase);
    col[idx] = c64(col[idx].re, 0.0);
}

fn canonicalize_columns(m: &mut CMatrix) {
    for j in 0..m.ncols() {
        let mut col = m.column(j).into_owned();
        canonicalize_phase(&mut col);
        m.set_column(j, &col);
    }
}

/// Left singular vectors of `m` sorted by descending singular value.
fn left_singular(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return (Vec::new(), CMatrix::zeros(m.nrows(), 0));
    }
    let svd = to_faer(m)
        .thin_svd()
        .expect("svd of a finite matrix converges");
    let s = (0..k).map(|i| svd.S()[i].re).collect();
    let u = svd.U();
    (s, CMatrix::from_fn(m.nrows(), k, |i, j| u[(i, j)]))
}

/// A subspace of `C^n` given by a matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    basis: CMatrix,
}

impl SubspaceBasis {
    pub fn empty(ambient_dim: usize) -> Self {
        Self {
            basis: CMatrix::zeros(ambient_dim, 0),
        }
    }

    /// Wraps a matrix whose columns are already orthonormal within `tol`.
    pub fn from_orthonormal(basis: CMatrix, tol: f64) -> Result<Self> {
        ensure_finite(&basis)?;
        let k = basis.ncols();
        if k > basis.nrows() {
            return Err(DilationError::ShapeMismatch(format!(
                "{k} columns cannot be orthonormal in dimension {}",
                basis.nrows()
            )));
        }
        let gram = basis.adjoint() * &basis;
        let err = max_abs(&(gram - identity(k)));
        if err > tol {
            return Err(DilationError::ShapeMismatch(format!(
                "columns are not orthonormal (Gram error {err:.3e})"
            )));
        }
        Ok(Self { basis })
    }

    /// Coordinate subspace spanned by the listed standard basis vectors.
    pub fn coordinate(ambient_dim: usize, indices: &[usize]) -> Self {
        let mut basis = CMatrix::zeros(ambient_dim, indices.len());
        for (j, &i) in indices.iter().enumerate() {
            basis[(i, j)] = c64(1.0, 0.0);
        }
        Self { basis }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn into_matrix(self) -> CMatrix {
        self.basis
    }

    /// Orthogonal direct sum of two mutually orthogonal subspaces (columns of
    /// `self` first).
    pub fn direct_sum(&self, other: &SubspaceBasis) -> Result<SubspaceBasis> {
        if self.ambient_dim() != other.ambient_dim() {
            return Err(DilationError::DimensionMismatch(format!(
                "ambient dimensions {} and {} differ",
                self.ambient_dim(),
                other.ambient_dim()
            )));
        }
        Ok(SubspaceBasis {
            basis: hstack(&[&self.basis, &other.basis]),
        })
    }
}

/// Orthonormal basis of the numerical column space of `m`. Directions with
/// `sigma <= tol * sigma_max` are discarded.
pub fn orthonormal_range(m: &CMatrix, tol: f64) -> SubspaceBasis {
    let n = m.nrows();
    if n == 0 || m.ncols() == 0 {
        return SubspaceBasis::empty(n);
    }
    let (s, u) = left_singular(m);
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return SubspaceBasis::empty(n);
    }
    let r = s.iter().filter(|&&x| x > tol * smax).count();
    let mut basis = u.columns(0, r).into_owned();
    canonicalize_columns(&mut basis);
    SubspaceBasis { basis }
}

/// Orthonormal basis of `span(a) ⊖ span(b)`; `b` must lie in `span(a)`
/// up to `containment_tol`.
pub fn orthocomplement_within(
    a: &SubspaceBasis,
    b: &SubspaceBasis,
    containment_tol: f64,
) -> Result<SubspaceBasis> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(DilationError::DimensionMismatch(format!(
            "ambient dimensions {} and {} differ",
            a.ambient_dim(),
            b.ambient_dim()
        )));
    }
    let n = a.ambient_dim();
    let outside = b.basis() - projector(a) * b.basis();
    let residual = op_norm(&outside);
    if residual > containment_tol || b.dim() > a.dim() {
        return Err(DilationError::ContainmentViolation { residual });
    }
    let k = a.dim() - b.dim();
    if k == 0 {
        return Ok(SubspaceBasis::empty(n));
    }
    let rest = a.basis() - projector(b) * a.basis();
    let (_, u) = left_singular(&rest);
    let mut basis = u.columns(0, k).into_owned();
    canonicalize_columns(&mut basis);
    Ok(SubspaceBasis { basis })
}

pub fn projector(b: &SubspaceBasis) -> CMatrix {
    b.basis() * b.basis().adjoint()
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in descending
/// order with matching eigenvector columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let h = (m + m.adjoint()).scale(0.5);
    let eig = to_faer(&h)
        .self_adjoint_eigen(Side::Lower)
        .expect("hermitian eigensolver converges");
    // faer sorts ascending.
    let values = (0..n).rev().map(|i| eig.S()[i].re).collect();
    let cols: Vec<CVector> = (0..n)
        .rev()
        .map(|i| {
            let mut v = CVector::from_fn(n, |r, _| eig.U()[(r, i)]);
            canonicalize_phase(&mut v);
            v
        })
        .collect();
    (values, CMatrix::from_columns(&cols))
}

fn hermitian_asymmetry(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Positive semidefinite square root; eigenvalues in `[-tol, 0)` are clipped.
pub fn psd_sqrt(m: &CMatrix, tol: f64) -> Result<CMatrix> {
    if m.nrows() != m.ncols() {
        return Err(DilationError::ShapeMismatch(format!(
            "psd_sqrt needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let asymmetry = hermitian_asymmetry(m);
    if asymmetry > tol {
        return Err(DilationError::NotHermitian { asymmetry });
    }
    let (values, vectors) = hermitian_eigen(m);
    if let Some(&min) = values.last() {
        if min < -tol {
            return Err(DilationError::NotPsd {
                min_eigenvalue: min,
            });
        }
    }
    let roots = CVector::from_iterator(
        values.len(),
        values.iter().map(|&x| c64(x.max(0.0).sqrt(), 0.0)),
    );
    Ok(&vectors * CMatrix::from_diagonal(&roots) * vectors.adjoint())
}

/// Moore–Penrose inverse of a Hermitian matrix; eigenvalues with modulus
/// at most `rel_tol * max|eig|` are treated as zero.
pub fn hermitian_pinv(m: &CMatrix, rel_tol: f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let scale = values.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let inv = CVector::from_iterator(
        values.len(),
        values.iter().map(|&x| {
            if scale > 0.0 && x.abs() > rel_tol * scale {
                c64(1.0 / x, 0.0)
            } else {
                c64(0.0, 0.0)
            }
        }),
    );
    &vectors * CMatrix::from_diagonal(&inv) * vectors.adjoint()
}

/// Eigenvalues of a general square complex matrix.
pub fn eigenvalues(m: &CMatrix) -> Vec<C64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    to_faer(m).eigenvalues().expect("eigensolver converges")
}

/// Solves `a·x = b` for square nonsingular `a`.
pub fn lu_solve(a: &CMatrix, b: &CMatrix) -> Option<CMatrix> {
    a.clone().lu().solve(b)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hstack(blocks: &[&CMatrix]) -> CMatrix {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hstack row mismatch");
        out.view_mut((0, at), (rows, b.ncols())).copy_from(*b);
        at += b.ncols();
    }
    out
}

pub fn vstack(blocks: &[&CMatrix]) -> CMatrix {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vstack column mismatch");
        out.view_mut((at, 0), (b.nrows(), cols)).copy_from(*b);
        at += b.nrows();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const S2: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        a.shape() == b.shape() && max_abs(&(a - b)) <= tol
    }

    #[test]
    fn range_of_identity_is_identity() {
        let b = orthonormal_range(&identity(2), 1e-10);
        assert!(close(b.basis(), &identity(2), 1e-14));
    }

    #[test]
    fn range_of_single_column() {
        let m = real_matrix(3, 1, &[1.0, 0.0, 0.0]);
        let b = orthonormal_range(&m, 1e-10);
        assert!(close(b.basis(), &m, 1e-14));
    }

    #[test]
    fn range_of_rank_one_matrix() {
        let m = real_matrix(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let b = orthonormal_range(&m, 1e-10);
        assert_eq!(b.dim(), 1);
        assert!(close(b.basis(), &real_matrix(2, 1, &[S2, S2]), 1e-14));
    }

    #[test]
    fn range_of_zero_matrix_is_empty() {
        let b = orthonormal_range(&CMatrix::zeros(3, 2), 1e-10);
        assert_eq!(b.dim(), 0);
        assert_eq!(b.ambient_dim(), 3);
    }

    #[test]
    fn complement_examples() {
        let a = SubspaceBasis::coordinate(3, &[0, 1]);
        let b = SubspaceBasis::coordinate(3, &[0]);
        let c = orthocomplement_within(&a, &b, 1e-9).unwrap();
        assert!(close(
            c.basis(),
            &real_matrix(3, 1, &[0.0, 1.0, 0.0]),
            1e-14
        ));

        let full = SubspaceBasis::coordinate(2, &[0, 1]);
        let diag = SubspaceBasis::from_orthonormal(real_matrix(2, 1, &[S2, S2]), 1e-12).unwrap();
        let c = orthocomplement_within(&full, &diag, 1e-9).unwrap();
        assert!(close(c.basis(), &real_matrix(2, 1, &[S2, -S2]), 1e-14));

        let same = orthocomplement_within(&a, &a, 1e-9).unwrap();
        assert_eq!(same.dim(), 0);
    }

    #[test]
    fn complement_rejects_non_contained() {
        let a = SubspaceBasis::coordinate(3, &[0]);
        let b = SubspaceBasis::coordinate(3, &[1]);
        assert!(matches!(
            orthocomplement_within(&a, &b, 1e-9),
            Err(DilationError::ContainmentViolation { .. })
        ));
    }

    #[test]
    fn projector_examples() {
        assert!(close(
            &projector(&SubspaceBasis::empty(2)),
            &CMatrix::zeros(2, 2),
            0.0
        ));
        let e1 = SubspaceBasis::coordinate(2, &[0]);
        assert!(close(
            &projector(&e1),
            &real_matrix(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            0.0
        ));
        let diag = SubspaceBasis::from_orthonormal(real_matrix(2, 1, &[S2, S2]), 1e-12).unwrap();
        assert!(close(
            &projector(&diag),
            &real_matrix(2, 2, &[0.5; 4]),
            1e-15
        ));
    }

    #[test]
    fn psd_sqrt_examples() {
        assert!(close(
            &psd_sqrt(&identity(3), 1e-12).unwrap(),
            &identity(3),
            1e-14
        ));
        let d = real_matrix(2, 2, &[4.0, 0.0, 0.0, 0.0]);
        let r = real_matrix(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        assert!(close(&psd_sqrt(&d, 1e-12).unwrap(), &r, 1e-14));

        // [[2,1],[1,2]] = 3·uuᵀ + 1·vvᵀ with u=(1,1)/√2, v=(1,-1)/√2.
        let m = real_matrix(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (a, b) = ((3f64.sqrt() + 1.0) / 2.0, (3f64.sqrt() - 1.0) / 2.0);
        let expected = real_matrix(2, 2, &[a, b, b, a]);
        assert!(close(&psd_sqrt(&m, 1e-12).unwrap(), &expected, 1e-14));
    }

    #[test]
    fn psd_sqrt_errors() {
        let neg = real_matrix(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            psd_sqrt(&neg, 1e-12),
            Err(DilationError::NotPsd { .. })
        ));
        let asym = real_matrix(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(
            psd_sqrt(&asym, 1e-12),
            Err(DilationError::NotHermitian { .. })
        ));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(numerical_rank(&CMatrix::zeros(3, 3), 1e-10), 0);
        assert_eq!(numerical_rank(&identity(4), 1e-10), 4);
        assert_eq!(numerical_rank(&real_matrix(2, 2, &[1.0; 4]), 1e-10), 1);
    }

    #[test]
    fn rejects_non_finite() {
        let data = [c64(f64::NAN, 0.0)];
        assert_eq!(matrix_from_rows(1, 1, &data), Err(DilationError::NonFinite));
    }

    #[test]
    fn eigenvalues_of_triangular_matrix() {
        let m = real_matrix(2, 2, &[2.0, 1.0, 0.0, -3.0]);
        let mut ev: Vec<f64> = eigenvalues(&m).iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] + 3.0).abs() < 1e-12 && (ev[1] - 2.0).abs() < 1e-12);
    }
}
