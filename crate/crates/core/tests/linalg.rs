mod common;

use common::*;
use geoguide::linalg::{extract_subspace, orthonormal_complement, svd, Matrix, SubspaceBasis};
use geoguide::Error;
use proptest::prelude::*;

#[test]
fn svd_matches_gram_eigen_oracle() {
    let mut r = rng(1);
    for trial in 0..20 {
        let a = random_matrix(&mut r, 5, 3);
        let dec = svd(&a).unwrap();
        let (vals, _) = jacobi_eigen(&a.t_matmul(&a).unwrap());
        for (s, l) in dec.s.iter().zip(&vals) {
            assert!((s * s - l).abs() < 1e-10, "trial {trial}: {s}² vs {l}");
        }
        let resid = frob_diff(&a, &dec.reconstruct());
        assert!(resid <= 1e-8 * a.frobenius_norm());
        assert!(dec.u.orthonormality_defect() < 1e-10);
        assert!(dec.vt.transpose().orthonormality_defect() < 1e-10);
    }
}

#[test]
fn svd_wide_and_tall_shapes() {
    let mut r = rng(2);
    for (m, n) in [(1, 1), (1, 7), (7, 1), (3, 9), (12, 4), (16, 32), (32, 16)] {
        let a = random_matrix(&mut r, m, n);
        let dec = svd(&a).unwrap();
        assert!(dec.s.windows(2).all(|w| w[0] >= w[1]));
        assert!(dec.s.iter().all(|&s| s >= 0.0));
        assert!(frob_diff(&a, &dec.reconstruct()) <= 1e-8 * a.frobenius_norm(), "{m}x{n}");
        for j in 0..dec.u.cols() {
            let col = dec.u.column(j);
            let big = col.iter().copied().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
            assert!(big > 0.0, "sign convention");
        }
    }
}

#[test]
fn svd_examples() {
    assert_eq!(svd(&Matrix::identity(3)).unwrap().s, vec![1.0, 1.0, 1.0]);
    let s = svd(&Matrix::from_diag(&[3.0, 2.0, 1.0])).unwrap().s;
    assert!(s.iter().zip([3.0, 2.0, 1.0]).all(|(a, b)| (a - b).abs() < 1e-14));
}

#[test]
fn complement_projector_identity() {
    let mut r = rng(3);
    for _ in 0..20 {
        let b = random_basis(&mut r, 4, 2);
        let c = orthonormal_complement(&b).unwrap();
        assert_eq!(c.sub_dim(), 2);
        let expected = Matrix::identity(4).sub(&projector(b.basis())).unwrap();
        assert!(frob_diff(&projector(c.basis()), &expected) < 1e-10);
        assert!(c.basis().t_matmul(b.basis()).unwrap().frobenius_norm() < 1e-10);
    }
    let e1 = SubspaceBasis::new(Matrix::from_rows(&[[1.0], [0.0], [0.0]]).unwrap()).unwrap();
    let c = orthonormal_complement(&e1).unwrap();
    let expected = Matrix::from_diag(&[0.0, 1.0, 1.0]);
    assert!(frob_diff(&projector(c.basis()), &expected) < 1e-12);
    assert!(matches!(orthonormal_complement(&random_basis(&mut r, 3, 3)), Err(Error::FullSpace(3))));
}

#[test]
fn extract_subspace_matches_gram_oracle() {
    let mut r = rng(4);
    for _ in 0..20 {
        let f = random_matrix(&mut r, 10, 8);
        let got = extract_subspace(&f, 3).unwrap();
        let (_, vecs) = jacobi_eigen(&f.t_matmul(&f).unwrap());
        let top = vecs.leading_columns(3);
        assert!(frob_diff(&projector(got.basis()), &projector(&top)) <= 1e-8);
    }
}

#[test]
fn extract_subspace_examples() {
    let one = Matrix::from_rows(&[[1.0, 0.0, 0.0, 0.0]]).unwrap();
    let b = extract_subspace(&one, 2).unwrap();
    assert_eq!(b.sub_dim(), 1);
    assert!((b.basis().get(0, 0).abs() - 1.0).abs() < 1e-14);
    let two = Matrix::from_rows(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
    let b = extract_subspace(&two, 2).unwrap();
    assert!(frob_diff(&projector(b.basis()), &Matrix::from_diag(&[1.0, 1.0, 0.0])) < 1e-12);
    assert!(matches!(extract_subspace(&Matrix::zeros(3, 4), 2), Err(Error::ZeroMatrix)));
    assert!(matches!(extract_subspace(&two, 4), Err(Error::DimensionMismatch(_))));
}

#[test]
fn matrix_rejects_bad_data() {
    assert!(matches!(Matrix::new(2, 2, vec![1.0; 3]), Err(Error::ShapeData { .. })));
    assert!(matches!(Matrix::new(1, 2, vec![1.0, f64::NAN]), Err(Error::NonFinite { row: 0, col: 1 })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extract_subspace_is_row_permutation_invariant(seed in any::<u64>(), n in 3usize..12, d in 2usize..9, k in 1usize..4) {
        let mut r = rng(seed);
        let f = random_matrix(&mut r, n, d);
        let k = k.min(d);
        let mut order: Vec<usize> = (0..n).collect();
        order.reverse();
        order.rotate_left(seed as usize % n);
        let rows: Vec<Vec<f64>> = order.iter().map(|&i| f.row(i).to_vec()).collect();
        let g = Matrix::from_rows(&rows).unwrap();
        let (a, b) = (extract_subspace(&f, k).unwrap(), extract_subspace(&g, k).unwrap());
        prop_assert!(frob_diff(&projector(a.basis()), &projector(b.basis())) <= 1e-10);
    }

    #[test]
    fn double_complement_recovers_projector(seed in any::<u64>(), d in 2usize..12, k in 1usize..6) {
        let k = k.min(d - 1);
        let b = random_basis(&mut rng(seed), d, k);
        let back = orthonormal_complement(&orthonormal_complement(&b).unwrap()).unwrap();
        prop_assert!(frob_diff(&projector(back.basis()), &projector(b.basis())) <= 1e-8);
    }

    #[test]
    fn svd_values_sorted_and_reconstruct(seed in any::<u64>(), m in 1usize..9, n in 1usize..9) {
        let a = random_matrix(&mut rng(seed), m, n);
        let dec = svd(&a).unwrap();
        prop_assert!(dec.s.windows(2).all(|w| w[0] >= w[1]) && dec.s.iter().all(|&s| s >= 0.0));
        prop_assert!(frob_diff(&a, &dec.reconstruct()) <= 1e-8 * a.frobenius_norm().max(1e-300));
    }
}
