//! Geodesics on the Grassmann manifold and the guidance metric they induce.
//!
//! For two k-dimensional subspaces with bases `P` and `P'` of R^D, write
//! `PᵀP' = U₁ Γ Vᵀ` and `RᵀP' = −U₂ Σ Vᵀ` where `R` spans the orthogonal
//! complement of `P`, `Γ = diag(cos θ)` and `Σ = diag(sin θ)`. The geodesic
//!
//! ```text
//! Π(ν) = P U₁ Γ(ν) − R U₂ Σ(ν),   Γ(ν) = diag(cos θν),  Σ(ν) = diag(sin θν)
//! ```
//!
//! starts at span(P) for ν = 0 and reaches span(P') at ν = 1. Integrating the
//! projector along it gives the guidance metric `Q = ∫₀¹ Π(ν)Π(ν)ᵀ dν`.
//!
//! Both factorizations share the single `V` from the SVD of `PᵀP'`: the
//! columns of `(I − PPᵀ)P'V` are mutually orthogonal with norms `sin θᵢ`, so
//! `R U₂` is read off directly and `R` itself is only built on request.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::{self, axpy, dot, norm, orthonormal_complement, svd, Matrix, SubspaceBasis};

/// Sines at or below this are treated as zero-angle directions whose
/// complement column is arbitrary.
const SINE_TOL: f64 = 1e-12;

/// Below this angle the Q coefficients switch to their Taylor series.
const SERIES_CUTOFF: f64 = 1e-2;

/// `zᵀQz` at or below this makes the Q-cosine undefined.
pub const PROJECTION_EPS: f64 = 1e-12;

/// Principal angles between two subspaces, ascending, in [0, π/2].
pub fn principal_angles(p: &SubspaceBasis, q: &SubspaceBasis) -> Result<Vec<f64>> {
    if p.ambient_dim() != q.ambient_dim() {
        return Err(Error::DimensionMismatch(format!(
            "ambient dimensions {} and {}",
            p.ambient_dim(),
            q.ambient_dim()
        )));
    }
    let cross = p.basis().t_matmul(q.basis())?;
    let s = svd(&cross)?.s;
    Ok(s.iter().map(|c| c.clamp(-1.0, 1.0).acos()).collect())
}

/// Closed-form parameterization of the geodesic between two equal-rank
/// subspaces.
#[derive(Debug)]
pub struct GeodesicFlow {
    p_t: SubspaceBasis,
    p_next: SubspaceBasis,
    u1: Matrix,
    v: Matrix,
    angles: Vec<f64>,
    /// `P·U₁`, D×k.
    source_dirs: Matrix,
    /// `R·U₂`, D×k. Columns are unit vectors, or zero where the complement
    /// has no room left.
    complement_dirs: Matrix,
    complement: OnceLock<SubspaceBasis>,
}

impl GeodesicFlow {
    pub fn p_t(&self) -> &SubspaceBasis {
        &self.p_t
    }

    pub fn p_next(&self) -> &SubspaceBasis {
        &self.p_next
    }

    pub fn u1(&self) -> &Matrix {
        &self.u1
    }

    pub fn v(&self) -> &Matrix {
        &self.v
    }

    /// Principal angles θᵢ, ascending.
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn ambient_dim(&self) -> usize {
        self.p_t.ambient_dim()
    }

    pub fn sub_dim(&self) -> usize {
        self.p_t.sub_dim()
    }

    /// Orthonormal complement `R` of `P_t`, computed on first use.
    pub fn complement_r(&self) -> &SubspaceBasis {
        self.complement.get_or_init(|| {
            orthonormal_complement(&self.p_t).expect("flow construction guarantees k < D")
        })
    }

    /// `U₂ = Rᵀ(R U₂)`, (D−k)×k.
    pub fn u2(&self) -> Matrix {
        self.complement_r().basis().t_matmul(&self.complement_dirs).expect("shapes agree")
    }

    /// Construction residuals `‖P_tᵀP_next − U₁ΓVᵀ‖_F` and
    /// `‖RᵀP_next + U₂ΣVᵀ‖_F`.
    pub fn residuals(&self) -> (f64, f64) {
        let k = self.sub_dim();
        let gamma: Vec<f64> = self.angles.iter().map(|t| t.cos()).collect();
        let sigma: Vec<f64> = self.angles.iter().map(|t| t.sin()).collect();
        let vt = self.v.transpose();
        let cos_part = scale_columns(&self.u1, &gamma).matmul(&vt).expect("k×k");
        let direct = self.p_t.basis().t_matmul(self.p_next.basis()).expect("k×k");
        let r1 = direct.sub(&cos_part).expect("k×k").frobenius_norm();

        let r = self.complement_r();
        let sin_part = scale_columns(&self.u2(), &sigma).matmul(&vt).expect("(D−k)×k");
        let direct = r.basis().t_matmul(self.p_next.basis()).expect("(D−k)×k");
        let r2 = direct.add(&sin_part).expect("(D−k)×k").frobenius_norm();
        debug_assert_eq!(sin_part.cols(), k);
        (r1, r2)
    }
}

fn scale_columns(m: &Matrix, c: &[f64]) -> Matrix {
    Matrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j) * c[j])
}

/// Builds the geodesic from `span(p_t)` to `span(p_next)`.
pub fn geodesic_flow(p_t: &SubspaceBasis, p_next: &SubspaceBasis) -> Result<GeodesicFlow> {
    let d = p_t.ambient_dim();
    let k = p_t.sub_dim();
    if p_next.ambient_dim() != d {
        return Err(Error::DimensionMismatch(format!("ambient dimensions {d} and {}", p_next.ambient_dim())));
    }
    if p_next.sub_dim() != k {
        return Err(Error::DimensionMismatch(format!("subspace dimensions {k} and {}", p_next.sub_dim())));
    }
    if k >= d {
        return Err(Error::FullSpace(d));
    }

    let p = p_t.basis();
    let cross = p.t_matmul(p_next.basis())?;
    let dec = svd(&cross)?;
    let u1 = dec.u;
    let v = dec.vt.transpose();
    let gamma: Vec<f64> = dec.s.iter().map(|c| c.min(1.0)).collect();

    // W = (I − PPᵀ) P' V = P'V − P U₁ Γ
    let p_next_v = p_next.basis().matmul(&v)?;
    let source_dirs = p.matmul(&u1)?;
    let w = Matrix::from_fn(d, k, |i, j| p_next_v.get(i, j) - source_dirs.get(i, j) * gamma[j]);
    let sines: Vec<f64> = (0..k).map(|j| norm(&w.column(j))).collect();
    let angles: Vec<f64> = (0..k).map(|j| sines[j].atan2(gamma[j])).collect();

    // R U₂ = −W Σ⁻¹, re-orthogonalized; largest sines first so that the
    // well-determined directions fix the frame for the degenerate ones.
    let mut by_sine: Vec<usize> = (0..k).collect();
    by_sine.sort_by(|&a, &b| sines[b].partial_cmp(&sines[a]).expect("finite"));
    let mut taken: Vec<Vec<f64>> = (0..k).map(|j| p.column(j)).collect();
    let mut dirs = vec![vec![0.0; d]; k];
    for &j in &by_sine {
        let col = if sines[j] > SINE_TOL {
            let mut c: Vec<f64> = w.column(j).iter().map(|x| -x).collect();
            for _ in 0..2 {
                for t in &taken {
                    let proj = dot(t, &c);
                    axpy(-proj, t, &mut c);
                }
            }
            let n = norm(&c);
            c.iter_mut().for_each(|x| *x /= n);
            Some(c)
        } else {
            linalg::orthogonal_unit_vector(&taken, d)
        };
        if let Some(c) = col {
            taken.push(c.clone());
            dirs[j] = c;
        }
    }
    let complement_dirs = Matrix::from_columns(d, &dirs);

    // order by ascending angle; the SVD order already nearly is
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| angles[a].partial_cmp(&angles[b]).expect("finite"));
    let permute = |m: &Matrix| Matrix::from_fn(m.rows(), k, |i, j| m.get(i, order[j]));

    Ok(GeodesicFlow {
        p_t: p_t.clone(),
        p_next: p_next.clone(),
        u1: permute(&u1),
        v: permute(&v),
        angles: order.iter().map(|&j| angles[j]).collect(),
        source_dirs: permute(&source_dirs),
        complement_dirs: permute(&complement_dirs),
        complement: OnceLock::new(),
    })
}

/// Like [`geodesic_flow`], but first truncates the higher-rank basis to the
/// rank of the other.
pub fn reconciled_flow(p_t: &SubspaceBasis, p_next: &SubspaceBasis) -> Result<GeodesicFlow> {
    let k = p_t.sub_dim().min(p_next.sub_dim());
    geodesic_flow(&p_t.truncate(k), &p_next.truncate(k))
}

/// Guidance metric between two subspaces of possibly different rank. When
/// the common rank fills the ambient space every flow point is all of R^D
/// and the metric is the identity.
pub fn guidance_between(p_t: &SubspaceBasis, p_next: &SubspaceBasis) -> Result<GuidanceMetric> {
    if p_t.ambient_dim() != p_next.ambient_dim() {
        return Err(Error::DimensionMismatch(format!(
            "ambient dimensions {} and {}",
            p_t.ambient_dim(),
            p_next.ambient_dim()
        )));
    }
    let d = p_t.ambient_dim();
    if p_t.sub_dim().min(p_next.sub_dim()) >= d {
        return GuidanceMetric::from_matrix(Matrix::identity(d));
    }
    Ok(q_matrix(&reconciled_flow(p_t, p_next)?))
}

/// The basis `Π(ν)` at `ν ∈ [0, 1]`.
pub fn evaluate_flow(f: &GeodesicFlow, nu: f64) -> Result<SubspaceBasis> {
    if !(0.0..=1.0).contains(&nu) {
        return Err(Error::OutOfRange(nu));
    }
    let d = f.ambient_dim();
    let k = f.sub_dim();
    let cos_nu: Vec<f64> = f.angles.iter().map(|t| (t * nu).cos()).collect();
    let sin_nu: Vec<f64> = f.angles.iter().map(|t| (t * nu).sin()).collect();
    let pi = Matrix::from_fn(d, k, |i, j| {
        f.source_dirs.get(i, j) * cos_nu[j] - f.complement_dirs.get(i, j) * sin_nu[j]
    });
    Ok(SubspaceBasis::from_trusted(pi))
}

/// `(∫cos²(θν), −∫cos(θν)sin(θν), ∫sin²(θν))` over ν ∈ [0, 1].
pub fn q_coefficients(theta: f64) -> (f64, f64, f64) {
    if theta.abs() < SERIES_CUTOFF {
        let t2 = theta * theta;
        let q3 = t2 / 3.0 - t2 * t2 / 15.0 + 2.0 * t2 * t2 * t2 / 315.0;
        let q2 = -theta / 2.0 + theta * t2 / 6.0 - theta * t2 * t2 / 45.0;
        (1.0 - q3, q2, q3)
    } else {
        let half_sinc = (2.0 * theta).sin() / (4.0 * theta);
        let s = theta.sin();
        (0.5 + half_sinc, -s * s / (2.0 * theta), 0.5 - half_sinc)
    }
}

/// Symmetric PSD guidance metric on R^D.
#[derive(Debug)]
pub struct GuidanceMetric {
    q: Matrix,
    source_dim: usize,
    target_dim: usize,
    eigen_floor: OnceLock<f64>,
}

impl GuidanceMetric {
    /// Wraps an externally supplied matrix, checking symmetry.
    pub fn from_matrix(q: Matrix) -> Result<Self> {
        if !q.is_symmetric(1e-10) {
            return Err(Error::DimensionMismatch("guidance metric must be square and symmetric".into()));
        }
        let d = q.rows();
        Ok(Self { q, source_dim: d, target_dim: d, eigen_floor: OnceLock::new() })
    }

    /// `BBᵀ` for a single subspace (the zero-angle limit of a flow).
    pub fn projector(basis: &SubspaceBasis) -> Self {
        Self {
            q: basis.projector(),
            source_dim: basis.sub_dim(),
            target_dim: basis.sub_dim(),
            eigen_floor: OnceLock::new(),
        }
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn ambient_dim(&self) -> usize {
        self.q.rows()
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    /// Smallest eigenvalue of Q, computed once.
    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigen_floor.get_or_init(|| {
            linalg::symmetric_eigen(&self.q).map(|(vals, _)| vals[0]).unwrap_or(f64::NAN)
        })
    }

    pub fn quadratic(&self, z: &[f64]) -> Result<f64> {
        self.q.bilinear(z, z)
    }
}

/// Closed-form `Q = ∫₀¹ Π(ν)Π(ν)ᵀ dν`.
pub fn q_matrix(f: &GeodesicFlow) -> GuidanceMetric {
    let d = f.ambient_dim();
    let mut q = vec![0.0; d * d];
    for (j, &theta) in f.angles.iter().enumerate() {
        let (q1, q2, q3) = q_coefficients(theta);
        let a = f.source_dirs.column(j);
        let b = f.complement_dirs.column(j);
        for r in 0..d {
            let row = &mut q[r * d..(r + 1) * d];
            let (ar, br) = (a[r], b[r]);
            let ca = q1 * ar + q2 * br;
            let cb = q2 * ar + q3 * br;
            for c in 0..d {
                row[c] += ca * a[c] + cb * b[c];
            }
        }
    }
    // exact symmetry
    for r in 0..d {
        for c in r + 1..d {
            let avg = 0.5 * (q[r * d + c] + q[c * d + r]);
            q[r * d + c] = avg;
            q[c * d + r] = avg;
        }
    }
    GuidanceMetric {
        q: Matrix::new(d, d, q).expect("finite Q"),
        source_dim: f.sub_dim(),
        target_dim: f.p_next.sub_dim(),
        eigen_floor: OnceLock::new(),
    }
}

/// Trapezoid-rule approximation of `∫₀¹ Π(ν)Π(ν)ᵀ dν` on `nodes` equally
/// spaced points. Independent of the closed form; used as a diagnostic.
pub fn q_matrix_trapezoid(f: &GeodesicFlow, nodes: usize) -> Result<Matrix> {
    let nodes = nodes.max(2);
    let d = f.ambient_dim();
    let h = 1.0 / (nodes - 1) as f64;
    let mut acc = Matrix::zeros(d, d);
    for i in 0..nodes {
        let nu = if i == nodes - 1 { 1.0 } else { i as f64 * h };
        let w = if i == 0 || i == nodes - 1 { 0.5 * h } else { h };
        let pi = evaluate_flow(f, nu)?;
        acc = acc.add(&pi.projector().scale(w))?;
    }
    Ok(acc)
}

/// `z_aᵀQz_b / (√(z_aᵀQz_a) √(z_bᵀQz_b))`.
pub fn geodesic_cosine(q: &GuidanceMetric, z_a: &[f64], z_b: &[f64]) -> Result<f64> {
    Ok(geodesic_cosine_grad(q, z_a, z_b)?.0)
}

/// `1 − geodesic_cosine`.
pub fn geodesic_loss(q: &GuidanceMetric, z_a: &[f64], z_b: &[f64]) -> Result<f64> {
    Ok(1.0 - geodesic_cosine(q, z_a, z_b)?)
}

/// Q-cosine and its gradient with respect to `z_a`.
pub fn geodesic_cosine_grad(q: &GuidanceMetric, z_a: &[f64], z_b: &[f64]) -> Result<(f64, Vec<f64>)> {
    let d = q.ambient_dim();
    if z_a.len() != d || z_b.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "metric is {d}-dimensional, vectors have lengths {} and {}",
            z_a.len(),
            z_b.len()
        )));
    }
    let qa = q.q.matvec(z_a)?;
    let qb = q.q.matvec(z_b)?;
    let aqa = dot(z_a, &qa);
    let bqb = dot(z_b, &qb);
    for quad in [aqa, bqb] {
        if !(quad > PROJECTION_EPS) {
            return Err(Error::DegenerateProjection(quad));
        }
    }
    let na = aqa.sqrt();
    let nb = bqb.sqrt();
    let cos = dot(z_a, &qb) / (na * nb);
    let grad = qb.iter().zip(&qa).map(|(b, a)| b / (na * nb) - cos * a / aqa).collect();
    Ok((cos, grad))
}
