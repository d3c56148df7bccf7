//! Dense numerical substrate: matrices, vectors, d-mode tensors, reduced SVD,
//! Kronecker products, mode-n products and least squares.
//!
//! Everything is `f64`, row-major and allocation-owning. Sizes in this crate
//! top out around a few thousand on a side, so plain loop kernels are used
//! throughout; they autovectorize well enough that no BLAS backend is needed.

use thiserror::Error;

/// Relative cutoff below which singular values are treated as zero rank.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Default cap on Kronecker product size (entries).
pub const KRON_ENTRY_CAP: usize = 100_000_000;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("non-finite entry at flat index {index}")]
    NonFinite { index: usize },
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },
    #[error("result would hold {entries} entries, above the cap of {cap}")]
    TooLarge { entries: u128, cap: usize },
    #[error("zero or empty matrix where a nonzero matrix is required")]
    ZeroMatrix,
    #[error("triangular factor is rank deficient: |R[{index},{index}]| = {value:.3e}")]
    RankDeficient { index: usize, value: f64 },
}

fn check_finite(data: &[f64]) -> Result<(), TensorError> {
    match data.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(TensorError::NonFinite { index }),
        None => Ok(()),
    }
}

// ---------------------------------------------------------------------------
// DenseVector
// ---------------------------------------------------------------------------

/// Owned dense vector of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector {
    data: Vec<f64>,
}

impl DenseVector {
    pub fn new(data: Vec<f64>) -> Result<Self, TensorError> {
        check_finite(&data)?;
        Ok(Self { data })
    }

    /// Skips the finiteness scan; for values produced by arithmetic on
    /// already-validated inputs.
    pub(crate) fn from_raw(data: Vec<f64>) -> Self {
        Self { data }
    }

    pub fn zeros(len: usize) -> Self {
        Self { data: vec![0.0; len] }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn dot(&self, other: &DenseVector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scale(&self, factor: f64) -> DenseVector {
        DenseVector::from_raw(self.data.iter().map(|x| x * factor).collect())
    }

    pub fn add(&self, other: &DenseVector) -> DenseVector {
        debug_assert_eq!(self.len(), other.len());
        DenseVector::from_raw(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &DenseVector) -> DenseVector {
        debug_assert_eq!(self.len(), other.len());
        DenseVector::from_raw(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }
}

impl std::ops::Index<usize> for DenseVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl std::ops::IndexMut<usize> for DenseVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

// ---------------------------------------------------------------------------
// DenseMatrix
// ---------------------------------------------------------------------------

/// Owned dense matrix of finite reals, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, TensorError> {
        if data.len() != rows * cols {
            return Err(TensorError::DimMismatch {
                context: "DenseMatrix::new",
                expected: format!("{} entries", rows * cols),
                got: format!("{}", data.len()),
            });
        }
        check_finite(&data)?;
        Ok(Self { rows, cols, data })
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
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

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> DenseVector {
        DenseVector::from_raw((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scale(&self, factor: f64) -> DenseMatrix {
        DenseMatrix::from_raw(
            self.rows,
            self.cols,
            self.data.iter().map(|x| x * factor).collect(),
        )
    }

    pub fn add(&self, other: &DenseMatrix) -> DenseMatrix {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        DenseMatrix::from_raw(
            self.rows,
            self.cols,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        DenseMatrix::from_raw(
            self.rows,
            self.cols,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    /// `self * other`.
    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(
            self.cols, other.rows,
            "matmul: {}x{} by {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let (m, k, n) = (self.rows, self.cols, other.cols);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let arow = &self.data[i * k..(i + 1) * k];
            let orow = &mut out[i * n..(i + 1) * n];
            for (p, &a) in arow.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[p * n..(p + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        DenseMatrix::from_raw(m, n, out)
    }

    /// `self * otherᵀ` without materializing the transpose.
    pub fn matmul_nt(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.cols, "matmul_nt: inner dims");
        let (m, k, n) = (self.rows, self.cols, other.rows);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let arow = &self.data[i * k..(i + 1) * k];
            for j in 0..n {
                let brow = &other.data[j * k..(j + 1) * k];
                out[i * n + j] = arow.iter().zip(brow).map(|(a, b)| a * b).sum();
            }
        }
        DenseMatrix::from_raw(m, n, out)
    }

    /// `selfᵀ * other` without materializing the transpose.
    pub fn matmul_tn(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.rows, other.rows, "matmul_tn: inner dims");
        let (m, k, n) = (self.cols, self.rows, other.cols);
        let mut out = vec![0.0; m * n];
        for p in 0..k {
            let arow = &self.data[p * m..(p + 1) * m];
            let brow = &other.data[p * n..(p + 1) * n];
            for (i, &a) in arow.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let orow = &mut out[i * n..(i + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        DenseMatrix::from_raw(m, n, out)
    }

    /// `self * x`.
    pub fn mul_vec(&self, x: &DenseVector) -> DenseVector {
        assert_eq!(self.cols, x.len(), "mul_vec: dims");
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            out.push(
                self.row(i)
                    .iter()
                    .zip(x.as_slice())
                    .map(|(a, b)| a * b)
                    .sum(),
            );
        }
        DenseVector::from_raw(out)
    }

    /// `selfᵀ * x`.
    pub fn tr_mul_vec(&self, x: &DenseVector) -> DenseVector {
        assert_eq!(self.rows, x.len(), "tr_mul_vec: dims");
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        DenseVector::from_raw(out)
    }

    /// Column-stacked vectorization: `vec(X)[i + rows*j] = X[i,j]`,
    /// so that `vec(A X Cᵀ) = (C ⊗ A) vec(X)`.
    pub fn vec_cols(&self) -> DenseVector {
        let mut out = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.push(self.data[i * self.cols + j]);
            }
        }
        DenseVector::from_raw(out)
    }

    /// Inverse of [`vec_cols`](Self::vec_cols).
    pub fn from_vec_cols(rows: usize, cols: usize, v: &DenseVector) -> Result<Self, TensorError> {
        if v.len() != rows * cols {
            return Err(TensorError::DimMismatch {
                context: "from_vec_cols",
                expected: format!("{} entries", rows * cols),
                got: format!("{}", v.len()),
            });
        }
        let mut out = DenseMatrix::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                out.data[i * cols + j] = v[j * rows + i];
            }
        }
        Ok(out)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

// ---------------------------------------------------------------------------
// Kronecker product
// ---------------------------------------------------------------------------

/// Kronecker product `A ⊗ B` with the block structure `A[i,j] * B`.
pub fn kronecker(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, TensorError> {
    kronecker_capped(a, b, KRON_ENTRY_CAP)
}

pub fn kronecker_capped(
    a: &DenseMatrix,
    b: &DenseMatrix,
    cap: usize,
) -> Result<DenseMatrix, TensorError> {
    let rows = a.rows as u128 * b.rows as u128;
    let cols = a.cols as u128 * b.cols as u128;
    let entries = rows * cols;
    if entries > cap as u128 {
        return Err(TensorError::TooLarge { entries, cap });
    }
    let (rows, cols) = (rows as usize, cols as usize);
    let mut out = DenseMatrix::zeros(rows, cols);
    for ia in 0..a.rows {
        for ja in 0..a.cols {
            let av = a[(ia, ja)];
            if av == 0.0 {
                continue;
            }
            for ib in 0..b.rows {
                for jb in 0..b.cols {
                    out[(ia * b.rows + ib, ja * b.cols + jb)] = av * b[(ib, jb)];
                }
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Dense d-mode tensor
// ---------------------------------------------------------------------------

/// Dense tensor with an arbitrary number of modes, row-major (last index
/// fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self, TensorError> {
        let expected: usize = dims.iter().product();
        if data.len() != expected {
            return Err(TensorError::DimMismatch {
                context: "Tensor::new",
                expected: format!("{expected} entries"),
                got: format!("{}", data.len()),
            });
        }
        check_finite(&data)?;
        Ok(Self { dims, data })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn from_matrix(m: &DenseMatrix) -> Self {
        Self {
            dims: vec![m.rows(), m.cols()],
            data: m.as_slice().to_vec(),
        }
    }

    pub fn to_matrix(&self) -> Result<DenseMatrix, TensorError> {
        if self.dims.len() != 2 {
            return Err(TensorError::DimMismatch {
                context: "Tensor::to_matrix",
                expected: "2 modes".into(),
                got: format!("{} modes", self.dims.len()),
            });
        }
        Ok(DenseMatrix::from_raw(
            self.dims[0],
            self.dims[1],
            self.data.clone(),
        ))
    }

    /// Fortran-order (first index fastest) linearization. For a matrix this
    /// stacks columns, matching [`DenseMatrix::vec_cols`].
    pub fn vec_fortran(&self) -> DenseVector {
        let d = self.dims.len();
        let total = self.data.len();
        let mut out = vec![0.0; total];
        // Row-major strides (last index fastest).
        let mut row_strides = vec![1usize; d];
        for k in (0..d.saturating_sub(1)).rev() {
            row_strides[k] = row_strides[k + 1] * self.dims[k + 1];
        }
        // Fortran strides (first index fastest).
        let mut col_strides = vec![1usize; d];
        for k in 1..d {
            col_strides[k] = col_strides[k - 1] * self.dims[k - 1];
        }
        let mut idx = vec![0usize; d];
        for flat in 0..total {
            let mut rem = flat;
            let mut fortran = 0usize;
            for k in 0..d {
                idx[k] = rem / row_strides[k];
                rem %= row_strides[k];
                fortran += idx[k] * col_strides[k];
            }
            out[fortran] = self.data[flat];
        }
        DenseVector::from_raw(out)
    }
}

/// Mode-`mode` product: contracts `m.cols` against the tensor's extent along
/// `mode`; the output extent along `mode` becomes `m.rows`.
pub fn mode_product(t: &Tensor, m: &DenseMatrix, mode: usize) -> Result<Tensor, TensorError> {
    if mode >= t.dims.len() {
        return Err(TensorError::DimMismatch {
            context: "mode_product",
            expected: format!("mode < {}", t.dims.len()),
            got: format!("mode {mode}"),
        });
    }
    if m.cols() != t.dims[mode] {
        return Err(TensorError::DimMismatch {
            context: "mode_product",
            expected: format!("matrix with {} columns", t.dims[mode]),
            got: format!("{} columns", m.cols()),
        });
    }
    let d_in = t.dims[mode];
    let d_out = m.rows();
    let inner: usize = t.dims[mode + 1..].iter().product();
    let outer: usize = t.dims[..mode].iter().product();
    let mut out_dims = t.dims.clone();
    out_dims[mode] = d_out;
    let mut out = vec![0.0; outer * d_out * inner];
    for o in 0..outer {
        let in_base = o * d_in * inner;
        let out_base = o * d_out * inner;
        for r in 0..d_out {
            let orow = &mut out[out_base + r * inner..out_base + (r + 1) * inner];
            for k in 0..d_in {
                let w = m[(r, k)];
                if w == 0.0 {
                    continue;
                }
                let irow = &t.data[in_base + k * inner..in_base + (k + 1) * inner];
                for (ov, &iv) in orow.iter_mut().zip(irow) {
                    *ov += w * iv;
                }
            }
        }
    }
    Ok(Tensor {
        dims: out_dims,
        data: out,
    })
}

// ---------------------------------------------------------------------------
// Reduced SVD (one-sided Jacobi)
// ---------------------------------------------------------------------------

/// Reduced singular value decomposition `M = U diag(σ) Vᵀ`.
///
/// Singular values come back nonincreasing; directions with
/// `σ < RANK_TOLERANCE · σ_max` are dropped, so `U` is n×r and `V` is c×r for
/// the revealed rank r.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub v: DenseMatrix,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    pub fn sigma_min(&self) -> f64 {
        self.singular_values.last().copied().unwrap_or(0.0)
    }

    /// `U diag(σ) Vᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut scaled = self.u.clone();
        for i in 0..scaled.rows() {
            for (j, s) in self.singular_values.iter().enumerate() {
                scaled[(i, j)] *= s;
            }
        }
        scaled.matmul_nt(&self.v)
    }
}

/// One-sided Jacobi on the columns of a tall matrix (rows >= cols).
/// Returns column-major rotated matrix W = A·V and the accumulated V.
fn jacobi_orthogonalize(a: &DenseMatrix) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = a.rows();
    let c = a.cols();
    let mut w: Vec<Vec<f64>> = (0..c).map(|j| (0..n).map(|i| a[(i, j)]).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..c)
        .map(|j| (0..c).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let tol = 1e-15;
    for _sweep in 0..60 {
        // Fresh norms each sweep; incremental updates drift over many rotations.
        let mut norms: Vec<f64> = w.iter().map(|col| col.iter().map(|x| x * x).sum()).collect();
        let mut max_rel = 0.0_f64;
        for i in 0..c {
            for j in (i + 1)..c {
                let (aii, ajj) = (norms[i], norms[j]);
                if aii == 0.0 || ajj == 0.0 {
                    continue;
                }
                let aij: f64 = w[i].iter().zip(&w[j]).map(|(x, y)| x * y).sum();
                let rel = aij.abs() / (aii * ajj).sqrt();
                max_rel = max_rel.max(rel);
                if rel <= tol {
                    continue;
                }
                let tau = (ajj - aii) / (2.0 * aij);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cth = 1.0 / (1.0 + t * t).sqrt();
                let sth = cth * t;
                // wi' = c·wi − s·wj ; wj' = s·wi + c·wj, same for V columns.
                let (wi, wj) = split_pair(&mut w, i, j);
                rotate(wi, wj, cth, sth);
                let (vi, vj) = split_pair(&mut v, i, j);
                rotate(vi, vj, cth, sth);
                norms[i] = aii - t * aij;
                norms[j] = ajj + t * aij;
            }
        }
        if max_rel <= tol {
            break;
        }
    }
    (w, v)
}

fn split_pair<'a, T>(v: &'a mut [Vec<T>], i: usize, j: usize) -> (&'a mut Vec<T>, &'a mut Vec<T>) {
    debug_assert!(i < j);
    let (left, right) = v.split_at_mut(j);
    (&mut left[i], &mut right[0])
}

fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
        let xv = *xi;
        let yv = *yi;
        *xi = c * xv - s * yv;
        *yi = s * xv + c * yv;
    }
}

fn svd_tall(a: &DenseMatrix) -> SvdResult {
    let n = a.rows();
    let c = a.cols();
    let (w, v) = jacobi_orthogonalize(a);
    let mut order: Vec<(f64, usize)> = w
        .iter()
        .enumerate()
        .map(|(j, col)| (col.iter().map(|x| x * x).sum::<f64>().sqrt(), j))
        .collect();
    order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let sigma_max = order.first().map(|x| x.0).unwrap_or(0.0);
    let cutoff = sigma_max * RANK_TOLERANCE;
    let kept: Vec<(f64, usize)> = order
        .into_iter()
        .filter(|(s, _)| *s > cutoff && *s > 0.0)
        .collect();
    let r = kept.len();
    let mut u = DenseMatrix::zeros(n, r);
    let mut vm = DenseMatrix::zeros(c, r);
    let mut singular_values = Vec::with_capacity(r);
    for (k, (s, j)) in kept.iter().enumerate() {
        singular_values.push(*s);
        for i in 0..n {
            u[(i, k)] = w[*j][i] / s;
        }
        for i in 0..c {
            vm[(i, k)] = v[*j][i];
        }
    }
    SvdResult {
        u,
        singular_values,
        v: vm,
    }
}

/// Reduced SVD; full column rank is not required (rank revealed up to
/// `RANK_TOLERANCE`).
pub fn svd_reduced(m: &DenseMatrix) -> Result<SvdResult, TensorError> {
    check_finite(m.as_slice())?;
    if m.rows() >= m.cols() {
        Ok(svd_tall(m))
    } else {
        let t = svd_tall(&m.transpose());
        Ok(SvdResult {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        })
    }
}

/// All `min(rows, cols)` singular values, nonincreasing, without rank
/// truncation (exact zeros included).
pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>, TensorError> {
    check_finite(m.as_slice())?;
    let tall = if m.rows() >= m.cols() {
        m.clone()
    } else {
        m.transpose()
    };
    let (w, _) = jacobi_orthogonalize(&tall);
    let mut sv: Vec<f64> = w
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(sv)
}

// ---------------------------------------------------------------------------
// Spectral norm (power iteration — independent of the Jacobi SVD path)
// ---------------------------------------------------------------------------

/// Largest singular value via power iteration on `MᵀM`.
pub fn spectral_norm(m: &DenseMatrix) -> f64 {
    if m.rows() == 0 || m.cols() == 0 {
        return 0.0;
    }
    let fro = m.frobenius_norm();
    if fro == 0.0 {
        return 0.0;
    }
    let mut best = 0.0_f64;
    // Two deterministic starts guard against a start vector that is (nearly)
    // orthogonal to the top singular direction.
    for start in 0..2 {
        let mut v = DenseVector::from_raw(
            (0..m.cols())
                .map(|j| match start {
                    0 => 1.0 + 0.1 * ((j % 7) as f64),
                    _ => ((j as f64) + 0.5).sin() + 1.5,
                })
                .collect(),
        );
        let nv = v.norm();
        v = v.scale(1.0 / nv);
        let mut sigma = 0.0_f64;
        for _ in 0..1000 {
            let av = m.mul_vec(&v);
            let new_sigma = av.norm();
            if new_sigma == 0.0 {
                sigma = 0.0;
                break;
            }
            let atav = m.tr_mul_vec(&av);
            let n2 = atav.norm();
            v = atav.scale(1.0 / n2);
            if (new_sigma - sigma).abs() <= 1e-12 * new_sigma.max(1e-300) {
                sigma = new_sigma;
                break;
            }
            sigma = new_sigma;
        }
        best = best.max(sigma);
        if best > 1e-8 * fro {
            break;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Householder QR least squares
// ---------------------------------------------------------------------------

/// Cached Householder QR of a tall matrix, for repeated least-squares solves
/// against the same design.
#[derive(Debug, Clone)]
pub struct QrLstsq {
    qr: DenseMatrix,
    beta: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl QrLstsq {
    pub fn new(a: &DenseMatrix) -> Result<Self, TensorError> {
        let (m, n) = (a.rows(), a.cols());
        if m < n {
            return Err(TensorError::DimMismatch {
                context: "QrLstsq::new",
                expected: "rows >= cols".into(),
                got: format!("{m}x{n}"),
            });
        }
        let mut qr = a.clone();
        let mut beta = vec![0.0; n];
        for k in 0..n {
            // Householder vector for column k, rows k..m (Golub & Van Loan).
            let mut sigma = 0.0;
            for i in (k + 1)..m {
                sigma += qr[(i, k)] * qr[(i, k)];
            }
            let x0 = qr[(k, k)];
            if sigma == 0.0 {
                beta[k] = 0.0;
                continue;
            }
            let mu = (x0 * x0 + sigma).sqrt();
            // v0 = x0 - mu in both branches; the second form avoids cancellation.
            let v0 = if x0 <= 0.0 { x0 - mu } else { -sigma / (x0 + mu) };
            beta[k] = 2.0 * v0 * v0 / (sigma + v0 * v0);
            // Normalize so the implicit leading component is 1.
            for i in (k + 1)..m {
                qr[(i, k)] /= v0;
            }
            qr[(k, k)] = mu;
            // Apply the reflector to the trailing columns.
            for j in (k + 1)..n {
                let mut dot = qr[(k, j)];
                for i in (k + 1)..m {
                    dot += qr[(i, k)] * qr[(i, j)];
                }
                let w = beta[k] * dot;
                qr[(k, j)] -= w;
                for i in (k + 1)..m {
                    let vik = qr[(i, k)];
                    qr[(i, j)] -= w * vik;
                }
            }
        }
        let d_max = (0..n).fold(0.0_f64, |m, k| m.max(qr[(k, k)].abs()));
        for k in 0..n {
            let d = qr[(k, k)].abs();
            if d <= d_max * 1e-13 {
                return Err(TensorError::RankDeficient { index: k, value: d });
            }
        }
        Ok(Self {
            qr,
            beta,
            rows: m,
            cols: n,
        })
    }

    /// Minimizes `‖A x − b‖₂`.
    pub fn solve_vec(&self, b: &DenseVector) -> DenseVector {
        assert_eq!(b.len(), self.rows, "QrLstsq::solve_vec: rhs length");
        let mut y = b.as_slice().to_vec();
        // y ← Qᵀ y
        for k in 0..self.cols {
            if self.beta[k] == 0.0 {
                continue;
            }
            let mut dot = y[k];
            for i in (k + 1)..self.rows {
                dot += self.qr[(i, k)] * y[i];
            }
            let w = self.beta[k] * dot;
            y[k] -= w;
            for i in (k + 1)..self.rows {
                y[i] -= w * self.qr[(i, k)];
            }
        }
        // Back-substitute R x = y[..n].
        let mut x = vec![0.0; self.cols];
        for k in (0..self.cols).rev() {
            let mut acc = y[k];
            for j in (k + 1)..self.cols {
                acc -= self.qr[(k, j)] * x[j];
            }
            x[k] = acc / self.qr[(k, k)];
        }
        DenseVector::from_raw(x)
    }

    /// Column-wise least squares: returns the `cols(self) × cols(b)` matrix of
    /// solutions.
    pub fn solve_mat(&self, b: &DenseMatrix) -> DenseMatrix {
        assert_eq!(b.rows(), self.rows, "QrLstsq::solve_mat: rhs rows");
        let mut out = DenseMatrix::zeros(self.cols, b.cols());
        for j in 0..b.cols() {
            let x = self.solve_vec(&b.column(j));
            for i in 0..self.cols {
                out[(i, j)] = x[i];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::GaussianStream;
    use approx::assert_abs_diff_eq;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut g = GaussianStream::new(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| g.next_normal())
    }

    #[test]
    fn svd_identity_is_identity() {
        let svd = svd_reduced(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(svd.rank(), 3);
        for s in &svd.singular_values {
            assert_abs_diff_eq!(*s, 1.0, epsilon = 1e-14);
        }
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(svd.u[(i, j)], expect, epsilon = 1e-14);
                assert_abs_diff_eq!(svd.v[(i, j)], expect, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn svd_three_four_five() {
        let m = DenseMatrix::new(2, 1, vec![3.0, 4.0]).unwrap();
        let svd = svd_reduced(&m).unwrap();
        assert_eq!(svd.rank(), 1);
        assert_abs_diff_eq!(svd.singular_values[0], 5.0, epsilon = 1e-12);
        // U column determined up to sign.
        let sign = svd.u[(0, 0)].signum();
        assert_abs_diff_eq!(sign * svd.u[(0, 0)], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(sign * svd.u[(1, 0)], 0.8, epsilon = 1e-12);
    }

    fn assert_svd_invariants(m: &DenseMatrix) {
        let svd = svd_reduced(m).unwrap();
        let r = svd.rank();
        // Orthonormal columns.
        let utu = svd.u.matmul_tn(&svd.u);
        let vtv = svd.v.matmul_tn(&svd.v);
        for i in 0..r {
            for j in 0..r {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((utu[(i, j)] - expect).abs() < 1e-8, "UᵀU[{i},{j}]");
                assert!((vtv[(i, j)] - expect).abs() < 1e-8, "VᵀV[{i},{j}]");
            }
        }
        // Nonincreasing.
        for w in svd.singular_values.windows(2) {
            assert!(w[0] >= w[1]);
        }
        // Reconstruction.
        let err = svd.reconstruct().sub(m).frobenius_norm();
        let scale = m.frobenius_norm().max(1e-300);
        assert!(err / scale < 1e-8, "reconstruction error {}", err / scale);
    }

    #[test]
    fn svd_random_8x3_reconstructs() {
        assert_svd_invariants(&random_matrix(8, 3, 11));
    }

    #[test]
    fn svd_invariants_on_many_random_matrices() {
        let mut g = GaussianStream::new(99);
        for case in 0..100 {
            let rows = 1 + g.next_index(12);
            let cols = 1 + g.next_index(12);
            let m = random_matrix(rows, cols, 1000 + case);
            assert_svd_invariants(&m);
        }
    }

    #[test]
    fn svd_rank_deficient_is_truncated() {
        // Two identical columns: rank 1.
        let m = DenseMatrix::new(3, 2, vec![1.0, 1.0, 2.0, 2.0, 3.0, 3.0]).unwrap();
        let svd = svd_reduced(&m).unwrap();
        assert_eq!(svd.rank(), 1);
        assert_svd_invariants(&m);
    }

    #[test]
    fn svd_rejects_non_finite() {
        let m = DenseMatrix::from_raw(1, 2, vec![1.0, f64::NAN]);
        assert!(matches!(
            svd_reduced(&m),
            Err(TensorError::NonFinite { .. })
        ));
    }

    #[test]
    fn mode_product_identity_leaves_tensor_unchanged() {
        let t = Tensor::new(vec![2, 3, 2], (0..12).map(|x| x as f64).collect()).unwrap();
        for mode in 0..3 {
            let id = DenseMatrix::identity(t.dims()[mode]);
            let out = mode_product(&t, &id, mode).unwrap();
            assert_eq!(out, t);
        }
    }

    #[test]
    fn mode_products_match_sandwich_product() {
        let x = random_matrix(2, 2, 5);
        let a = random_matrix(3, 2, 6);
        let c = random_matrix(4, 2, 7);
        let t = Tensor::from_matrix(&x);
        let out = mode_product(&mode_product(&t, &a, 0).unwrap(), &c, 1).unwrap();
        let expect = a.matmul(&x).matmul_nt(&c);
        let got = out.to_matrix().unwrap();
        assert!(expect.sub(&got).frobenius_norm() < 1e-12);
    }

    #[test]
    fn mode_product_vectorization_matches_kronecker() {
        // vec(X ×₁ A₁ ×₂ A₂) = (A₂ ⊗ A₁) vec(X)
        let x = random_matrix(4, 3, 8);
        let a1 = random_matrix(2, 4, 9);
        let a2 = random_matrix(5, 3, 10);
        let t = mode_product(
            &mode_product(&Tensor::from_matrix(&x), &a1, 0).unwrap(),
            &a2,
            1,
        )
        .unwrap();
        let lhs = t.vec_fortran();
        let rhs = kronecker(&a2, &a1).unwrap().mul_vec(&x.vec_cols());
        assert!(lhs.sub(&rhs).norm() < 1e-10);
    }

    #[test]
    fn kron_vec_identity_many_instances() {
        for seed in 0..100 {
            let a1 = random_matrix(3, 4, 3000 + seed);
            let a2 = random_matrix(2, 5, 4000 + seed);
            let x = random_matrix(4, 5, 5000 + seed);
            let t = mode_product(
                &mode_product(&Tensor::from_matrix(&x), &a1, 0).unwrap(),
                &a2,
                1,
            )
            .unwrap();
            let lhs = t.vec_fortran();
            let rhs = kronecker(&a2, &a1).unwrap().mul_vec(&x.vec_cols());
            assert!(lhs.sub(&rhs).norm() <= 1e-10);
        }
    }

    #[test]
    fn mode_product_dim_mismatch_errors() {
        let t = Tensor::new(vec![2, 3], vec![0.0; 6]).unwrap();
        let m = DenseMatrix::zeros(4, 4);
        assert!(mode_product(&t, &m, 0).is_err());
        assert!(mode_product(&t, &m, 5).is_err());
    }

    #[test]
    fn kronecker_of_identities() {
        let out = kronecker(&DenseMatrix::identity(2), &DenseMatrix::identity(3)).unwrap();
        assert_eq!(out, DenseMatrix::identity(6));
    }

    #[test]
    fn kronecker_scalar_scales() {
        let b = random_matrix(3, 2, 12);
        let a = DenseMatrix::new(1, 1, vec![2.0]).unwrap();
        let out = kronecker(&a, &b).unwrap();
        assert!(out.sub(&b.scale(2.0)).frobenius_norm() < 1e-15);
    }

    #[test]
    fn kronecker_matches_blockwise_definition() {
        let a = random_matrix(2, 2, 13);
        let b = random_matrix(2, 2, 14);
        let out = kronecker(&a, &b).unwrap();
        for ia in 0..2 {
            for ja in 0..2 {
                for ib in 0..2 {
                    for jb in 0..2 {
                        let expect = a[(ia, ja)] * b[(ib, jb)];
                        assert_abs_diff_eq!(
                            out[(ia * 2 + ib, ja * 2 + jb)],
                            expect,
                            epsilon = 1e-15
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn kronecker_respects_entry_cap() {
        let a = DenseMatrix::zeros(100, 100);
        let b = DenseMatrix::zeros(100, 100);
        assert!(matches!(
            kronecker_capped(&a, &b, 10_000),
            Err(TensorError::TooLarge { .. })
        ));
    }

    #[test]
    fn spectral_norm_diagonal() {
        let m = DenseMatrix::new(2, 2, vec![3.0, 0.0, 0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(spectral_norm(&m), 3.0, epsilon = 1e-10);
    }

    #[test]
    fn spectral_norm_zero_matrix() {
        assert_eq!(spectral_norm(&DenseMatrix::zeros(4, 3)), 0.0);
    }

    #[test]
    fn spectral_norm_matches_svd() {
        for seed in 0..20 {
            let m = random_matrix(5, 4, 600 + seed);
            let svd = svd_reduced(&m).unwrap();
            let sn = spectral_norm(&m);
            assert!(
                (sn - svd.sigma_max()).abs() <= 1e-8 * svd.sigma_max(),
                "seed {seed}: {sn} vs {}",
                svd.sigma_max()
            );
        }
    }

    #[test]
    fn spectral_norm_bounded_by_frobenius() {
        for seed in 0..50 {
            let m = random_matrix(6, 3, 700 + seed);
            assert!(spectral_norm(&m) <= m.frobenius_norm() + 1e-12);
        }
    }

    #[test]
    fn qr_least_squares_matches_normal_equations() {
        for seed in 0..10 {
            let a = random_matrix(12, 5, 800 + seed);
            let b = {
                let mut g = GaussianStream::new(900 + seed);
                DenseVector::from_raw((0..12).map(|_| g.next_normal()).collect())
            };
            let qr = QrLstsq::new(&a).unwrap();
            let x = qr.solve_vec(&b);
            // Normal-equation residual: Aᵀ(Ax − b) = 0.
            let resid = a.tr_mul_vec(&a.mul_vec(&x).sub(&b));
            assert!(resid.norm() < 1e-9, "seed {seed}: {}", resid.norm());
        }
    }

    #[test]
    fn qr_exact_solve_square() {
        let a = DenseMatrix::new(2, 2, vec![2.0, 1.0, 1.0, 3.0]).unwrap();
        let b = DenseVector::new(vec![5.0, 10.0]).unwrap();
        let x = QrLstsq::new(&a).unwrap().solve_vec(&b);
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn qr_rejects_rank_deficient() {
        let a = DenseMatrix::new(3, 2, vec![1.0, 2.0, 2.0, 4.0, 3.0, 6.0]).unwrap();
        assert!(matches!(
            QrLstsq::new(&a),
            Err(TensorError::RankDeficient { .. })
        ));
    }

    #[test]
    fn vec_cols_round_trip() {
        let m = random_matrix(4, 3, 15);
        let v = m.vec_cols();
        let back = DenseMatrix::from_vec_cols(4, 3, &v).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn matrix_constructor_validates() {
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(DenseMatrix::new(1, 2, vec![1.0, f64::INFINITY]).is_err());
        assert!(DenseVector::new(vec![f64::NAN]).is_err());
    }
}
