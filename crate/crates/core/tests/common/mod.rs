#![allow(dead_code)]

use geoguide::linalg::{Matrix, SubspaceBasis};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

pub fn uniform_vec(r: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}

pub fn random_matrix(r: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0))
}

/// Modified Gram–Schmidt on the columns of a random D×k matrix.
pub fn random_basis(r: &mut impl Rng, d: usize, k: usize) -> SubspaceBasis {
    let mut cols: Vec<Vec<f64>> = Vec::new();
    while cols.len() < k {
        let mut v = uniform_vec(r, d);
        for _ in 0..2 {
            for c in &cols {
                let p: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(a, b)| *a -= p * b);
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            cols.push(v.iter().map(|x| x / n).collect());
        }
    }
    SubspaceBasis::new(Matrix::from_columns(d, &cols)).unwrap()
}

pub fn projector(b: &Matrix) -> Matrix {
    let (d, k) = b.shape();
    Matrix::from_fn(d, d, |i, j| (0..k).map(|c| b.get(i, c) * b.get(j, c)).sum())
}

pub fn frob_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Classic two-sided cyclic Jacobi for a symmetric matrix, written
/// independently of the library. Returns eigenvalues descending with
/// eigenvectors as columns.
pub fn jacobi_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let phi = 0.5 * (2.0 * m[p][q]).atan2(m[q][q] - m[p][p]);
                let (s, c) = phi.sin_cos();
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j][j].partial_cmp(&m[i][i]).unwrap());
    let vals = order.iter().map(|&i| m[i][i]).collect();
    let vecs = Matrix::from_fn(n, n, |r, c| v[r][order[c]]);
    (vals, vecs)
}

/// Trapezoid rule for `∫₀¹ Π(ν)Π(ν)ᵀ dν` given a basis evaluator.
pub fn trapezoid_q(d: usize, nodes: usize, mut pi: impl FnMut(f64) -> Matrix) -> Matrix {
    let mut acc = vec![0.0; d * d];
    for i in 0..=nodes {
        let w = if i == 0 || i == nodes { 0.5 } else { 1.0 } / nodes as f64;
        let p = projector(&pi(i as f64 / nodes as f64));
        acc.iter_mut().zip(p.data()).for_each(|(a, v)| *a += w * v);
    }
    Matrix::new(d, d, acc).unwrap()
}

/// Pair of k-dimensional subspaces with prescribed principal angles, in a
/// randomly rotated frame. Needs `2k ≤ d`.
pub fn planted_pair(r: &mut impl Rng, d: usize, angles: &[f64]) -> (SubspaceBasis, SubspaceBasis) {
    let k = angles.len();
    assert!(2 * k <= d);
    let o = random_basis(r, d, d);
    let col = |coef: &[(usize, f64)]| -> Vec<f64> {
        (0..d).map(|i| coef.iter().map(|&(j, c)| c * o.basis().get(i, j)).sum()).collect()
    };
    let p: Vec<Vec<f64>> = (0..k).map(|i| col(&[(i, 1.0)])).collect();
    let q: Vec<Vec<f64>> = angles.iter().enumerate().map(|(i, t)| col(&[(i, t.cos()), (k + i, t.sin())])).collect();
    (
        SubspaceBasis::new(Matrix::from_columns(d, &p)).unwrap(),
        SubspaceBasis::new(Matrix::from_columns(d, &q)).unwrap(),
    )
}

fn mat_col_combo(m: &Matrix, v: &[f64]) -> Vec<f64> {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m.get(i, j) * v[j]).sum()).collect()
}

/// Geodesic basis at ν by column-wise slerp between paired principal
/// vectors, built from an eigen-decomposition of `MᵀM` with `M = PᵀP'`.
/// Only the projector `ΠΠᵀ` is meaningful.
pub fn slerp_flow(p: &SubspaceBasis, q: &SubspaceBasis) -> impl Fn(f64) -> Matrix {
    let (d, k) = p.basis().shape();
    let m = p.basis().t_matmul(q.basis()).unwrap();
    let (_, v) = jacobi_eigen(&m.t_matmul(&m).unwrap());
    let mut pairs = Vec::new();
    for j in 0..k {
        let vj = v.column(j);
        let b = mat_col_combo(q.basis(), &vj);
        let mv = mat_col_combo(&m, &vj);
        let gamma = mv.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(gamma > 1e-6, "oracle needs non-orthogonal pairs");
        let u: Vec<f64> = mv.iter().map(|x| x / gamma).collect();
        let a = mat_col_combo(p.basis(), &u);
        let perp: f64 = a.iter().zip(&b).map(|(x, y)| (y - gamma * x).powi(2)).sum::<f64>().sqrt();
        pairs.push((a, b, perp.atan2(gamma)));
    }
    move |nu: f64| {
        let cols: Vec<Vec<f64>> = pairs
            .iter()
            .map(|(a, b, t)| {
                let (wa, wb) = if t.sin() < 1e-14 {
                    (1.0 - nu, nu)
                } else {
                    ((t * nu).cos() - t.cos() * (t * nu).sin() / t.sin(), (t * nu).sin() / t.sin())
                };
                a.iter().zip(b).map(|(x, y)| wa * x + wb * y).collect()
            })
            .collect();
        Matrix::from_columns(d, &cols)
    }
}
