//! Library results against independent computations done here from scratch.

use pencil_dilate_core::linalg::{
    c64, identity, op_norm, orthonormal_range, projector, real_matrix, CMatrix, CVector, C64,
};
use pencil_dilate_core::pencil::{binomial, classify, symmetrized_multipower, unit_circle_grid};
use pencil_dilate_core::unidil::verify_q_identities;
use pencil_dilate_core::verify::{construct, default_corpus};
use pencil_dilate_core::{Construction, KPlusVector, LinearPencil, PencilKind, ToleranceProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn profile() -> ToleranceProfile {
    ToleranceProfile::default()
}

fn sample_constructions() -> Vec<Construction> {
    default_corpus()
        .iter()
        .take(8)
        .map(|t| construct(t, &profile()).unwrap())
        .collect()
}

/// `V(λ)` truncated to `[slot −n, …, slot −1, head]`: the tail moves one slot
/// deeper (slot −n falls off), `F(λ)h` enters slot −1, the head becomes `T(λ)h`.
fn dense_v(c: &Construction, lambda: C64, n: usize) -> CMatrix {
    let (dy, dh) = (c.factor.dim_y(), c.pencil.cols());
    let size = n * dy + dh;
    let mut m = CMatrix::zeros(size, size);
    for k in 1..n {
        let (from, to) = ((n - k) * dy, (n - k - 1) * dy);
        m.view_mut((to, from), (dy, dy)).copy_from(&identity(dy));
    }
    m.view_mut(((n - 1) * dy, n * dy), (dy, dh))
        .copy_from(&c.factor.eval(lambda));
    m.view_mut((n * dy, n * dy), (dh, dh))
        .copy_from(&c.pencil.eval(lambda));
    m
}

fn compress(m: &CMatrix, dh: usize) -> CMatrix {
    let s = m.nrows() - dh;
    m.view((s, s), (dh, dh)).into_owned()
}

fn random_c(rng: &mut ChaCha8Rng) -> C64 {
    c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    CVector::from_iterator(n, (0..n).map(|_| random_c(rng)))
}

#[test]
fn dense_truncation_powers_and_products() {
    let grid = unit_circle_grid(12);
    for c in sample_constructions() {
        let dh = c.pencil.cols();
        let n = 8;
        for &l in &grid {
            let v = dense_v(&c, l, n);
            let tl = c.pencil.eval(l);
            let (mut vn, mut tn) = (identity(v.nrows()), identity(dh));
            for _ in 0..6 {
                vn = &v * vn;
                tn = &tl * tn;
                assert!(op_norm(&(compress(&vn, dh) - &tn)) < 1e-10);
            }
        }
        let (l1, l2, l3) = (grid[1], grid[5], c64(-0.6, 0.8));
        let prod = dense_v(&c, l1, n) * dense_v(&c, l2, n) * dense_v(&c, l3, n);
        let want = c.pencil.eval(l1) * c.pencil.eval(l2) * c.pencil.eval(l3);
        assert!(op_norm(&(compress(&prod, dh) - want)) < 1e-10);
    }
}

#[test]
fn structured_apply_matches_dense_truncation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for c in sample_constructions() {
        let (dy, dh) = (c.factor.dim_y(), c.pencil.cols());
        let n = 6;
        for _ in 0..5 {
            let l = C64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU);
            let tail: Vec<CVector> = (0..n - 1).map(|_| random_vec(&mut rng, dy)).collect();
            let head = random_vec(&mut rng, dh);
            let mut dense = CVector::zeros(n * dy + dh);
            for (k, y) in tail.iter().enumerate() {
                dense.rows_mut((n - 1 - k) * dy, dy).copy_from(y);
            }
            dense.rows_mut(n * dy, dh).copy_from(&head);
            let x = KPlusVector::new(tail, head);
            let y = c.isometric.apply(l, &x).unwrap();
            let want = dense_v(&c, l, n) * dense;
            assert!((y.head() - want.rows(n * dy, dh)).norm() < 1e-12);
            for k in 1..=n {
                let got = y.slot(k).cloned().unwrap_or_else(|| CVector::zeros(dy));
                assert!((got - want.rows((n - k) * dy, dy)).norm() < 1e-12);
            }
            assert!((y.norm() - x.norm()).abs() < 1e-10);
        }
    }
}

#[test]
fn multipowers_match_polynomial_expansion() {
    let t = &default_corpus()[4];
    let mut poly = vec![identity(t.cols())];
    for n in 1..=6usize {
        let mut next = vec![CMatrix::zeros(t.rows(), t.cols()); n + 1];
        for (k, m) in poly.iter().enumerate() {
            next[k] += t.a0() * m;
            next[k + 1] += t.a1() * m;
        }
        poly = next;
        for (k, coeff) in poly.iter().enumerate() {
            let avg = symmetrized_multipower(t, (n - k, k), 10).unwrap();
            assert!(op_norm(&(avg * c64(binomial(n, k), 0.0) - coeff)) < 1e-12);
        }
    }
}

#[test]
fn factor_of_complex_scalar_pencil() {
    let t = LinearPencil::new(
        CMatrix::from_element(1, 1, c64(0.3, -0.2)),
        CMatrix::from_element(1, 1, c64(-0.1, 0.45)),
    )
    .unwrap();
    let c = construct(&t, &profile()).unwrap();
    let (f0, f1) = (c.factor.f0[(0, 0)], c.factor.f1[(0, 0)]);
    for l in unit_circle_grid(64) {
        let tl = t.eval(l)[(0, 0)];
        let fl = f0 + l * f1;
        assert!((fl.norm_sqr() - (1.0 - tl.norm_sqr())).abs() < 1e-10);
    }
    // Outer: the root -f0/f1 lies outside the open disk.
    assert!(f0.norm() >= f1.norm());
}

#[test]
fn classification_of_known_pencils() {
    let p = real_matrix(2, 2, &[1.0, 0.0, 0.0, 0.0]);
    let unitary = LinearPencil::new(p.clone(), identity(2) - p).unwrap();
    assert_eq!(
        classify(&unitary, 64, 1e-10).unwrap().kind,
        PencilKind::Unitary
    );

    let iso = LinearPencil::constant(real_matrix(2, 1, &[0.6, 0.8]));
    assert_eq!(
        classify(&iso, 64, 1e-10).unwrap().kind,
        PencilKind::Isometric
    );

    let big = LinearPencil::new(real_matrix(1, 1, &[0.7]), real_matrix(1, 1, &[0.4])).unwrap();
    let class = classify(&big, 64, 1e-10).unwrap();
    assert_eq!(class.kind, PencilKind::NotContractive);
    assert!((class.max_norm_on_grid - 1.1).abs() < 1e-12);
}

#[test]
fn canonical_unitary_core_is_unitary_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for c in sample_constructions() {
        for _ in 0..4 {
            let l = C64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU);
            let block = c.unitary.core_block(0) + c.unitary.core_block(1) * l;
            let n = block.ncols();
            assert_eq!(block.nrows(), n);
            assert!(op_norm(&(block.adjoint() * &block - identity(n))) < 1e-10);
        }
    }
}

#[test]
fn rank_one_ranges_and_norms() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (r, c) in [(2, 2), (3, 3), (6, 6), (8, 5), (12, 12)] {
        for _ in 0..50 {
            let x = random_vec(&mut rng, r);
            let y = random_vec(&mut rng, c);
            let m = &x * y.adjoint();
            let b = orthonormal_range(&m, 1e-10);
            assert_eq!(b.dim(), 1);
            assert!(op_norm(&(projector(&b) * &m - &m)) < 1e-13);
            assert!((op_norm(&m) - x.norm() * y.norm()).abs() < 1e-13);
        }
    }
}

#[test]
fn unitary_extension_of_nearly_constant_pencil() {
    let t = LinearPencil::new(
        CMatrix::from_element(1, 1, c64(0.7840825423325853, 0.15374565103114232)),
        CMatrix::from_element(1, 1, c64(-0.026819204388387356, 0.0)),
    )
    .unwrap();
    let c = construct(&t, &profile()).unwrap();
    let r = verify_q_identities(&c.isometric, c.unitary.q(), 256, 1e-9).unwrap();
    assert!(r.pass, "{r}");
    // Scalar closed form: Q(λ) spans the orthocomplement of V(λ) = (a(λ), b(λ)),
    // so |⟨Q(λ), (-b(λ)^*, a(λ)^*)⟩| = 1.
    for l in unit_circle_grid(16) {
        let (a, b) = (c.factor.eval(l)[(0, 0)], t.eval(l)[(0, 0)]);
        let q = c.unitary.q().eval(l);
        let overlap = q[(0, 0)].conj() * (-b.conj()) + q[(1, 0)].conj() * a.conj();
        assert!((overlap.norm() - 1.0).abs() < 1e-10);
    }
}
