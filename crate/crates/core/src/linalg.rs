//! Dense real matrices and the decompositions the geodesic machinery needs:
//! a one-sided Jacobi SVD, a cyclic Jacobi symmetric eigensolver, orthogonal
//! complements and PCA subspace extraction.
//!
//! Everything here is a pure function of its inputs. Results are fully
//! deterministic: singular vectors follow a fixed sign convention (the
//! largest-magnitude entry of every left singular vector is positive).

use std::fmt;

use crate::error::{Error, Result};

/// Sweeps allowed before the Jacobi kernels report non-convergence.
pub const MAX_SWEEPS: usize = 60;

/// Singular values at or below `RANK_TOL * s_max` are treated as zero when
/// extracting a subspace.
pub const RANK_TOL: f64 = 1e-10;

/// Row-major dense matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// A batch of feature vectors, one per row.
pub type EmbeddingBatch = Matrix;

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeData { rows, cols, len: data.len() });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: pos / cols.max(1), col: pos % cols.max(1) });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has length {}, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns<C: AsRef<[f64]>>(rows: usize, columns: &[C]) -> Self {
        let cols = columns.len();
        Self::from_fn(rows, cols, |i, j| columns[j].as_ref()[i])
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · other` without materializing the transpose.
    pub fn t_matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot form ({}x{})ᵀ · {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let a_row = self.row(k);
            let b_row = other.row(k);
            for (i, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} columns, vector has length {}",
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `selfᵀ · y`.
    pub fn t_matvec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} rows, vector has length {}",
                self.rows,
                y.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                axpy(yi, self.row(i), &mut out);
            }
        }
        Ok(out)
    }

    /// `xᵀ · self · y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(dot(x, &self.matvec(y)?))
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * c).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    /// Keeps the leading `k` columns.
    pub fn leading_columns(&self, k: usize) -> Matrix {
        let k = k.min(self.cols);
        Matrix::from_fn(self.rows, k, |i, j| self.get(i, j))
    }

    /// `‖selfᵀself − I‖_F`.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.t_matmul(self).expect("square gram");
        gram.sub(&Matrix::identity(self.cols)).expect("same shape").frobenius_norm()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols && self.sub(&self.transpose()).map_or(false, |d| d.frobenius_norm() <= tol)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha · x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Returns `(x / ‖x‖, ‖x‖)`, or `ZeroVector` when `‖x‖ < min_norm`.
pub fn normalize(x: &[f64], min_norm: f64) -> Result<(Vec<f64>, f64)> {
    let n = norm(x);
    if !(n >= min_norm) {
        return Err(Error::ZeroVector(n));
    }
    Ok((x.iter().map(|v| v / n).collect(), n))
}

/// `a·b / √((a·a)(b·b))`; exactly ±1 when `b = ±a`.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / (dot(a, a) * dot(b, b)).sqrt()
}

/// Thin singular value decomposition `A = U · diag(s) · Vᵀ`.
#[derive(Clone, Debug)]
pub struct SvdResult {
    /// m×r left singular vectors, r = min(m, n).
    pub u: Matrix,
    /// Singular values, descending and non-negative.
    pub s: Vec<f64>,
    /// r×n right singular vectors (transposed).
    pub vt: Matrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> Matrix {
        let us = Matrix::from_fn(self.u.rows(), self.s.len(), |i, j| self.u.get(i, j) * self.s[j]);
        us.matmul(&self.vt).expect("consistent svd shapes")
    }
}

/// Column-major scratch used by the Jacobi sweeps.
struct Columns {
    len: usize,
    data: Vec<f64>,
}

impl Columns {
    fn from_matrix(a: &Matrix) -> Self {
        let mut data = Vec::with_capacity(a.rows * a.cols);
        for j in 0..a.cols {
            data.extend((0..a.rows).map(|i| a.get(i, j)));
        }
        Self { len: a.rows, data }
    }

    fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { len: n, data }
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.len..(j + 1) * self.len]
    }

    fn pair_mut(&mut self, p: usize, q: usize) -> (&mut [f64], &mut [f64]) {
        debug_assert!(p < q);
        let (lo, hi) = self.data.split_at_mut(q * self.len);
        (&mut lo[p * self.len..(p + 1) * self.len], &mut hi[..self.len])
    }

    fn rotate(&mut self, p: usize, q: usize, c: f64, s: f64) {
        let (cp, cq) = self.pair_mut(p, q);
        for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
            let (a, b) = (*x, *y);
            *x = c * a - s * b;
            *y = s * a + c * b;
        }
    }
}

/// One-sided Jacobi on a tall matrix (rows ≥ cols). Returns the rotated
/// columns `A·V` and the accumulated `V`, both column-major.
fn jacobi_tall(a: &Matrix) -> Result<(Columns, Columns)> {
    let n = a.cols;
    let mut g = Columns::from_matrix(a);
    let mut v = Columns::identity(n);
    let tol = f64::EPSILON * (a.rows.max(16) as f64);
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(g.col(p), g.col(p));
                let beta = dot(g.col(q), g.col(q));
                let gamma = dot(g.col(p), g.col(q));
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                g.rotate(p, q, c, s);
                v.rotate(p, q, c, s);
            }
        }
        if !rotated {
            return Ok((g, v));
        }
    }
    Err(Error::NonConvergence { sweeps: MAX_SWEEPS })
}

/// Fills zero columns of `cols` (vectors of length `len`) with unit vectors
/// orthogonal to every other column.
fn complete_orthonormal(cols: &mut [Vec<f64>], len: usize) {
    for j in 0..cols.len() {
        if norm(&cols[j]) > 0.0 {
            continue;
        }
        let others: Vec<Vec<f64>> =
            cols.iter().enumerate().filter(|(i, c)| *i != j && norm(c) > 0.0).map(|(_, c)| c.clone()).collect();
        if let Some(fill) = orthogonal_unit_vector(&others, len) {
            cols[j] = fill;
        }
    }
}

/// A unit vector orthogonal to all of `basis` (assumed orthonormal), chosen
/// from the coordinate axes, or `None` if `basis` already spans the space.
pub(crate) fn orthogonal_unit_vector(basis: &[Vec<f64>], len: usize) -> Option<Vec<f64>> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for axis in 0..len {
        let mut e = vec![0.0; len];
        e[axis] = 1.0;
        for _ in 0..2 {
            for b in basis {
                let c = dot(b, &e);
                axpy(-c, b, &mut e);
            }
        }
        let n = norm(&e);
        if best.as_ref().map_or(true, |(bn, _)| n > *bn) {
            best = Some((n, e));
        }
        if n > 0.7 {
            break;
        }
    }
    match best {
        Some((n, mut e)) if n > 1e-8 => {
            e.iter_mut().for_each(|x| *x /= n);
            Some(e)
        }
        _ => None,
    }
}

/// Thin SVD by one-sided Jacobi rotations.
///
/// Wide inputs are decomposed through their transpose so the rotation
/// count scales with the smaller dimension.
pub fn svd(a: &Matrix) -> Result<SvdResult> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Err(Error::DimensionMismatch(format!("svd of empty {m}x{n} matrix")));
    }
    let tall = m >= n;
    let work = if tall { a.clone() } else { a.transpose() };
    let r = work.cols;
    let len = work.rows;
    let (g, v) = jacobi_tall(&work)?;

    let s: Vec<f64> = (0..r).map(|j| norm(g.col(j))).collect();
    // left vectors of `work`
    let mut lw: Vec<Vec<f64>> = (0..r)
        .map(|j| if s[j] > 0.0 { g.col(j).iter().map(|x| x / s[j]).collect() } else { vec![0.0; len] })
        .collect();
    complete_orthonormal(&mut lw, len);
    let rw: Vec<Vec<f64>> = (0..r).map(|j| v.col(j).to_vec()).collect();

    // A = U S Vᵀ; for the transposed case Aᵀ = Lw S Rwᵀ so U = Rw and V = Lw.
    let (mut left, mut right) = if tall { (lw, rw) } else { (rw, lw) };

    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).expect("finite singular values"));

    let mut s_sorted = Vec::with_capacity(r);
    let mut u_cols = Vec::with_capacity(r);
    let mut v_rows = Vec::with_capacity(r);
    for &j in &order {
        let mut uj = std::mem::take(&mut left[j]);
        let mut vj = std::mem::take(&mut right[j]);
        let pivot = uj.iter().fold(0.0_f64, |best, &x| if x.abs() > best.abs() { x } else { best });
        if pivot < 0.0 {
            uj.iter_mut().for_each(|x| *x = -*x);
            vj.iter_mut().for_each(|x| *x = -*x);
        }
        s_sorted.push(s[j]);
        u_cols.push(uj);
        v_rows.push(vj);
    }

    Ok(SvdResult {
        u: Matrix::from_columns(m, &u_cols),
        s: s_sorted,
        vt: Matrix::from_rows(&v_rows)?,
    })
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues ascending and the matching eigenvectors as columns.
pub fn symmetric_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = a.rows();
    if n != a.cols() {
        return Err(Error::DimensionMismatch(format!("eigen of non-square {}x{}", a.rows(), a.cols())));
    }
    let mut w = a.clone();
    // symmetrize to absorb round-off in the caller's construction
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (w.get(i, j) + w.get(j, i));
            w.set(i, j, avg);
            w.set(j, i, avg);
        }
    }
    let mut vecs = Columns::identity(n);
    let scale = w.frobenius_norm();
    let mut converged = n <= 1 || scale == 0.0;
    for _sweep in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| w.get(i, j).powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = w.get(p, q);
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = w.get(p, p);
                let aqq = w.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = w.get(k, p);
                    let akq = w.get(k, q);
                    w.set(k, p, c * akp - s * akq);
                    w.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = w.get(p, k);
                    let aqk = w.get(q, k);
                    w.set(p, k, c * apk - s * aqk);
                    w.set(q, k, s * apk + c * aqk);
                }
                vecs.rotate(p, q, c, s);
            }
        }
    }
    if !converged {
        return Err(Error::NonConvergence { sweeps: MAX_SWEEPS });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w.get(i, i).partial_cmp(&w.get(j, j)).expect("finite eigenvalues"));
    let values = order.iter().map(|&i| w.get(i, i)).collect();
    let columns: Vec<&[f64]> = order.iter().map(|&i| vecs.col(i)).collect();
    Ok((values, Matrix::from_columns(n, &columns)))
}

/// A k-dimensional subspace of R^D held as a D×k column-orthonormal basis.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceBasis {
    basis: Matrix,
}

impl SubspaceBasis {
    /// Orthonormality tolerance enforced by [`SubspaceBasis::new`].
    pub const ORTHO_TOL: f64 = 1e-10;

    pub fn new(basis: Matrix) -> Result<Self> {
        if basis.cols() > basis.rows() || basis.cols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "basis of shape {}x{} cannot be column-orthonormal",
                basis.rows(),
                basis.cols()
            )));
        }
        let defect = basis.orthonormality_defect();
        if defect > Self::ORTHO_TOL {
            return Err(Error::DimensionMismatch(format!("basis columns not orthonormal (defect {defect:e})")));
        }
        Ok(Self { basis })
    }

    pub(crate) fn from_trusted(basis: Matrix) -> Self {
        debug_assert!(basis.orthonormality_defect() < 1e-8);
        Self { basis }
    }

    /// Orthonormalizes the columns of `m` (Gram–Schmidt, twice) and wraps the
    /// result. Fails if the columns are numerically dependent.
    pub fn orthonormalize(m: &Matrix) -> Result<Self> {
        let cols: Vec<Vec<f64>> = (0..m.cols()).map(|j| m.column(j)).collect();
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
        for mut c in cols {
            let n0 = norm(&c);
            for _ in 0..2 {
                for b in &out {
                    let p = dot(b, &c);
                    axpy(-p, b, &mut c);
                }
            }
            let n = norm(&c);
            if !(n > 1e-10 * n0.max(f64::MIN_POSITIVE)) || n == 0.0 {
                return Err(Error::DimensionMismatch("columns are linearly dependent".into()));
            }
            c.iter_mut().for_each(|x| *x /= n);
            out.push(c);
        }
        Self::new(Matrix::from_columns(m.rows(), &out))
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn sub_dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn into_matrix(self) -> Matrix {
        self.basis
    }

    /// Orthogonal projector `B·Bᵀ` onto the subspace.
    pub fn projector(&self) -> Matrix {
        self.basis.matmul(&self.basis.transpose()).expect("projector shape")
    }

    /// Frobenius distance between the two orthogonal projectors.
    pub fn projector_distance(&self, other: &SubspaceBasis) -> Result<f64> {
        Ok(self.projector().sub(&other.projector())?.frobenius_norm())
    }

    /// Keeps the first `k` basis vectors.
    pub fn truncate(&self, k: usize) -> SubspaceBasis {
        Self { basis: self.basis.leading_columns(k.max(1)) }
    }

    /// Coordinates `Bᵀz` and reconstruction `B·Bᵀz` of `z`.
    pub fn project(&self, z: &[f64]) -> Result<Vec<f64>> {
        let coords = self.basis.t_matvec(z)?;
        self.basis.matvec(&coords)
    }
}

/// Orthonormal basis of the orthogonal complement of `b`.
///
/// Computed from the SVD of the complementary projector `I − BBᵀ`; its
/// leading D−k left singular vectors span the complement.
pub fn orthonormal_complement(b: &SubspaceBasis) -> Result<SubspaceBasis> {
    let d = b.ambient_dim();
    let k = b.sub_dim();
    if k >= d {
        return Err(Error::FullSpace(d));
    }
    let comp_proj = Matrix::identity(d).sub(&b.projector())?;
    let dec = svd(&comp_proj)?;
    let own: Vec<Vec<f64>> = (0..k).map(|j| b.basis().column(j)).collect();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(d - k);
    for j in 0..d - k {
        let mut c = dec.u.column(j);
        for _ in 0..2 {
            for v in own.iter().chain(out.iter()) {
                let p = dot(v, &c);
                axpy(-p, v, &mut c);
            }
        }
        let n = norm(&c);
        if n < 0.5 {
            // the SVD handed back a vector from the wrong block; replace it
            let mut all = own.clone();
            all.extend(out.iter().cloned());
            c = orthogonal_unit_vector(&all, d).ok_or(Error::NonConvergence { sweeps: MAX_SWEEPS })?;
        } else {
            c.iter_mut().for_each(|x| *x /= n);
        }
        out.push(c);
    }
    Ok(SubspaceBasis::from_trusted(Matrix::from_columns(d, &out)))
}

/// PCA subspace of an (uncentered) feature batch: the leading right singular
/// directions, truncated to the numeric rank when that is below `target_dim`.
pub fn extract_subspace(features: &EmbeddingBatch, target_dim: usize) -> Result<SubspaceBasis> {
    let (n, d) = features.shape();
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    if target_dim == 0 || target_dim > d {
        return Err(Error::DimensionMismatch(format!("target dimension {target_dim} not in 1..={d}")));
    }
    let dec = svd(features)?;
    let s_max = dec.s[0];
    if !(s_max > 1e-300) {
        return Err(Error::ZeroMatrix);
    }
    let rank = dec.s.iter().take_while(|&&s| s > RANK_TOL * s_max).count();
    let k = target_dim.min(rank);
    let basis = Matrix::from_fn(d, k, |i, j| dec.vt.get(j, i));
    Ok(SubspaceBasis::from_trusted(basis))
}
