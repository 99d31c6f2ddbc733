mod common;

use std::f64::consts::FRAC_PI_2;

use common::*;
use geoguide::grassmann::{
    evaluate_flow, geodesic_cosine, geodesic_cosine_grad, geodesic_flow, guidance_between, principal_angles,
    q_matrix, q_matrix_trapezoid, GuidanceMetric,
};
use geoguide::linalg::{cosine, Matrix};
use geoguide::losses::check_gradient;
use geoguide::Error;
use proptest::prelude::*;

const NODES: usize = 10_000;

#[test]
fn closed_form_q_matches_slerp_quadrature() {
    let mut r = rng(10);
    for (d, k) in [(4, 1), (6, 2), (8, 3), (12, 4)] {
        for _ in 0..5 {
            let p = random_basis(&mut r, d, k);
            let q = random_basis(&mut r, d, k);
            let flow = geodesic_flow(&p, &q).unwrap();
            let closed = q_matrix(&flow);
            let oracle = trapezoid_q(d, NODES, slerp_flow(&p, &q));
            let err = frob_diff(closed.q(), &oracle);
            assert!(err <= 1e-6, "d={d} k={k}: {err:e}");
            let own = q_matrix_trapezoid(&flow, NODES + 1).unwrap();
            assert!(frob_diff(&own, &oracle) <= 1e-6);
        }
    }
}

#[test]
fn tiny_and_zero_angles_match_quadrature() {
    let mut r = rng(11);
    for theta in [0.0, 1e-8, 1e-4, 5e-3, 1e-2, 2e-2, 0.7, 1.4] {
        let (p, q) = planted_pair(&mut r, 6, &[theta, 0.5 * theta]);
        let flow = geodesic_flow(&p, &q).unwrap();
        let got = principal_angles(&p, &q).unwrap();
        assert!((got[1] - theta).abs() < 1e-7, "{got:?} vs {theta}");
        let closed = q_matrix(&flow);
        let oracle = trapezoid_q(6, NODES, slerp_flow(&p, &q));
        assert!(frob_diff(closed.q(), &oracle) <= 1e-6, "θ={theta}");
        assert!(closed.min_eigenvalue() >= -1e-9);
    }
}

#[test]
fn zero_angle_flow_is_the_projector() {
    let mut r = rng(12);
    let p = random_basis(&mut r, 5, 2);
    let q = q_matrix(&geodesic_flow(&p, &p).unwrap());
    assert!(frob_diff(q.q(), &projector(p.basis())) < 1e-12);
}

#[test]
fn principal_angles_match_cross_gram_oracle() {
    let mut r = rng(13);
    for _ in 0..20 {
        let p = random_basis(&mut r, 7, 3);
        let q = random_basis(&mut r, 7, 3);
        let m = p.basis().t_matmul(q.basis()).unwrap();
        let (vals, _) = jacobi_eigen(&m.t_matmul(&m).unwrap());
        let mut expected: Vec<f64> = vals.iter().map(|l| l.max(0.0).sqrt().min(1.0).acos()).collect();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let got = principal_angles(&p, &q).unwrap();
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-7);
        }
        let back = principal_angles(&q, &p).unwrap();
        assert!(got.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-10));
    }
}

#[test]
fn principal_angle_examples() {
    let e = |i: usize| {
        let mut v = vec![0.0; 3];
        v[i] = 1.0;
        geoguide::linalg::SubspaceBasis::new(Matrix::from_columns(3, &[v])).unwrap()
    };
    assert_eq!(principal_angles(&e(0), &e(0)).unwrap(), vec![0.0]);
    assert!((principal_angles(&e(0), &e(1)).unwrap()[0] - FRAC_PI_2).abs() < 1e-15);
}

#[test]
fn flow_endpoints_and_residuals() {
    let mut r = rng(14);
    for _ in 0..10 {
        let p = random_basis(&mut r, 9, 3);
        let q = random_basis(&mut r, 9, 3);
        let flow = geodesic_flow(&p, &q).unwrap();
        let (r1, r2) = flow.residuals();
        assert!(r1 < 1e-10 && r2 < 1e-10, "{r1:e} {r2:e}");
        assert!(flow.u1().orthonormality_defect() < 1e-10);
        assert!(flow.v().orthonormality_defect() < 1e-10);
        assert!(flow.u2().orthonormality_defect() < 1e-10);
        let start = evaluate_flow(&flow, 0.0).unwrap();
        let end = evaluate_flow(&flow, 1.0).unwrap();
        assert!(start.projector_distance(&p).unwrap() < 1e-10);
        assert!(end.projector_distance(&q).unwrap() < 1e-10);
        for i in 0..=10 {
            let pi = evaluate_flow(&flow, i as f64 / 10.0).unwrap();
            assert!(pi.basis().orthonormality_defect() < 1e-10);
        }
        assert!(matches!(evaluate_flow(&flow, 1.5), Err(Error::OutOfRange(_))));
    }
}

#[test]
fn flow_rejects_mismatched_inputs() {
    let mut r = rng(15);
    let a = random_basis(&mut r, 4, 2);
    assert!(matches!(geodesic_flow(&a, &random_basis(&mut r, 5, 2)), Err(Error::DimensionMismatch(_))));
    assert!(matches!(geodesic_flow(&a, &random_basis(&mut r, 4, 1)), Err(Error::DimensionMismatch(_))));
    let full = random_basis(&mut r, 3, 3);
    assert!(matches!(geodesic_flow(&full, &full), Err(Error::FullSpace(3))));
}

#[test]
fn guidance_between_handles_rank_and_full_space() {
    let mut r = rng(16);
    let full = random_basis(&mut r, 4, 4);
    let q = guidance_between(&full, &random_basis(&mut r, 4, 4)).unwrap();
    assert!(frob_diff(q.q(), &Matrix::identity(4)) < 1e-15);
    let a = random_basis(&mut r, 6, 3);
    let b = random_basis(&mut r, 6, 1);
    assert_eq!(guidance_between(&a, &b).unwrap().source_dim(), 1);
}

#[test]
fn q_cosine_reduces_to_projected_cosine() {
    let mut r = rng(17);
    for _ in 0..20 {
        let p = random_basis(&mut r, 6, 3);
        let q = q_matrix(&geodesic_flow(&p, &p).unwrap());
        let (a, b) = (uniform_vec(&mut r, 6), uniform_vec(&mut r, 6));
        let pa = p.basis().t_matvec(&a).unwrap();
        let pb = p.basis().t_matvec(&b).unwrap();
        assert!((geodesic_cosine(&q, &a, &b).unwrap() - cosine(&pa, &pb)).abs() < 1e-10);
    }
    let id = GuidanceMetric::from_matrix(Matrix::identity(5)).unwrap();
    let (a, b) = (uniform_vec(&mut r, 5), uniform_vec(&mut r, 5));
    assert!((geodesic_cosine(&id, &a, &b).unwrap() - cosine(&a, &b)).abs() < 1e-14);
}

#[test]
fn q_cosine_gradient_matches_finite_differences() {
    let mut r = rng(18);
    let q = q_matrix(&geodesic_flow(&random_basis(&mut r, 8, 3), &random_basis(&mut r, 8, 3)).unwrap());
    for _ in 0..50 {
        let a = uniform_vec(&mut r, 8);
        let b = uniform_vec(&mut r, 8);
        let rec = check_gradient(|x| geodesic_cosine_grad(&q, x, &b).unwrap(), &a, 1e-6);
        assert!(rec.relative_error <= 1e-5, "{:e}", rec.relative_error);
    }
}

#[test]
fn degenerate_projection_is_reported() {
    let mut r = rng(19);
    let p = random_basis(&mut r, 4, 1);
    let q = q_matrix(&geodesic_flow(&p, &p).unwrap());
    let comp = geoguide::linalg::orthonormal_complement(&p).unwrap();
    let z = comp.basis().column(0);
    assert!(matches!(geodesic_cosine(&q, &z, &p.basis().column(0)), Err(Error::DegenerateProjection(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn q_is_symmetric_psd_with_trace_k(seed in any::<u64>(), d in 2usize..10, k in 1usize..5) {
        let k = k.min(d - 1);
        let mut r = rng(seed);
        let q = q_matrix(&geodesic_flow(&random_basis(&mut r, d, k), &random_basis(&mut r, d, k)).unwrap());
        prop_assert!(q.q().is_symmetric(1e-12));
        prop_assert!(q.min_eigenvalue() >= -1e-9);
        let trace: f64 = (0..d).map(|i| q.q().get(i, i)).sum();
        prop_assert!((trace - k as f64).abs() < 1e-9);
    }

    #[test]
    fn angles_are_sorted_and_in_range(seed in any::<u64>(), d in 2usize..10, k in 1usize..5) {
        let k = k.min(d);
        let mut r = rng(seed);
        let a = principal_angles(&random_basis(&mut r, d, k), &random_basis(&mut r, d, k)).unwrap();
        prop_assert!(a.iter().all(|t| (0.0..=FRAC_PI_2 + 1e-12).contains(t)));
        prop_assert!(a.windows(2).all(|w| w[0] <= w[1] + 1e-12));
    }

    #[test]
    fn q_cosine_is_scale_invariant(seed in any::<u64>(), s in 0.01f64..100.0) {
        let mut r = rng(seed);
        let q = q_matrix(&geodesic_flow(&random_basis(&mut r, 6, 2), &random_basis(&mut r, 6, 2)).unwrap());
        let (a, b) = (uniform_vec(&mut r, 6), uniform_vec(&mut r, 6));
        let scaled: Vec<f64> = a.iter().map(|x| s * x).collect();
        let (c1, c2) = (geodesic_cosine(&q, &a, &b), geodesic_cosine(&q, &scaled, &b));
        if let (Ok(c1), Ok(c2)) = (c1, c2) {
            prop_assert!((c1 - c2).abs() < 1e-10);
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&c1));
        }
    }
}
