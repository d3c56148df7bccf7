//! Smooth and sparse-side basis matrices and their diagnostics.
//!
//! B-spline bases use a clamped (open uniform) knot vector on [0,1] with
//! `knots` equally spaced interior knots, sampled at the n midpoints
//! t_i = (i − 0.5)/n. A basis of degree d with k interior knots has
//! k + d + 1 columns, each with contiguous support.
//!
//! The diagnostics are the quantities the feasibility theory consumes:
//! the local support length l (longest index interval covering any column's
//! nonzeros), the incoherence mu of the column space, and singular-value
//! bounds on how far the basis is from an isometry.

use serde::{Deserialize, Serialize};
use std::sync::OnceLock;
use thiserror::Error;

use crate::tensor::{singular_values, svd_reduced, DenseMatrix, TensorError};

/// Entries with absolute value at or below this count as zero when measuring
/// support. B-spline evaluation produces exact zeros outside support; the
/// threshold only guards rounding.
pub const SUPPORT_ZERO_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum BasisError {
    #[error("basis would have {cols} columns but only {n} samples")]
    TooManyColumns { n: usize, cols: usize },
    #[error("column {col} is identically zero")]
    ZeroColumn { col: usize },
    #[error("zero matrix has no column space")]
    ZeroMatrix,
    #[error("constructor expects a {expected} spec")]
    KindMismatch { expected: &'static str },
    #[error("signal length must be at least 1")]
    EmptySignal,
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// What kind of basis to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BasisKind {
    /// Clamped uniform B-splines: `degree >= 0`, `knots` interior knots,
    /// `knots + degree + 1` columns.
    Bspline { degree: usize, knots: usize },
    /// The n×n identity.
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub kind: BasisKind,
    pub n: usize,
}

impl BasisSpec {
    pub fn bspline(n: usize, degree: usize, knots: usize) -> Self {
        Self {
            kind: BasisKind::Bspline { degree, knots },
            n,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            kind: BasisKind::Identity,
            n,
        }
    }

    /// Column count implied by the spec.
    pub fn columns(&self) -> usize {
        match self.kind {
            BasisKind::Bspline { degree, knots } => knots + degree + 1,
            BasisKind::Identity => self.n,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct SpectralDiag {
    mu: f64,
    sigma_max: f64,
    sigma_min: f64,
}

/// A constructed basis with cached diagnostics. Immutable after construction.
#[derive(Debug)]
pub struct BasisMatrix {
    spec: BasisSpec,
    matrix: DenseMatrix,
    support_len: usize,
    spectral: OnceLock<SpectralDiag>,
}

impl BasisMatrix {
    fn from_matrix(spec: BasisSpec, matrix: DenseMatrix) -> Result<Self, BasisError> {
        let support_len = local_support_length(&matrix)?;
        Ok(Self {
            spec,
            matrix,
            support_len,
            spectral: OnceLock::new(),
        })
    }

    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    pub fn columns(&self) -> usize {
        self.matrix.cols()
    }

    /// Longest index interval covering any column's nonzeros.
    pub fn support_len(&self) -> usize {
        self.support_len
    }

    fn spectral(&self) -> SpectralDiag {
        *self.spectral.get_or_init(|| {
            let mu = incoherence(&self.matrix).expect("nonzero by construction");
            let sv = singular_values(&self.matrix).expect("finite by construction");
            SpectralDiag {
                mu,
                sigma_max: sv.first().copied().unwrap_or(0.0),
                sigma_min: sv.last().copied().unwrap_or(0.0),
            }
        })
    }

    pub fn mu(&self) -> f64 {
        self.spectral().mu
    }

    pub fn sigma_max(&self) -> f64 {
        self.spectral().sigma_max
    }

    pub fn sigma_min(&self) -> f64 {
        self.spectral().sigma_min
    }

    /// `max(σ_max − 1, 1 − σ_min)`, the loose isometry-defect bound.
    pub fn ric_upper_bound(&self) -> f64 {
        let d = self.spectral();
        (d.sigma_max - 1.0).max(1.0 - d.sigma_min)
    }
}

/// Clamped knot vector on [0,1]: degree+1 zeros, `interior` equally spaced
/// interior knots, degree+1 ones.
fn clamped_knots(degree: usize, interior: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(2 * (degree + 1) + interior);
    t.extend(std::iter::repeat(0.0).take(degree + 1));
    for i in 1..=interior {
        t.push(i as f64 / (interior + 1) as f64);
    }
    t.extend(std::iter::repeat(1.0).take(degree + 1));
    t
}

/// Index i with knots[i] <= t < knots[i+1], restricted to valid spans.
fn find_span(knots: &[f64], degree: usize, num_basis: usize, t: f64) -> usize {
    let lo = degree;
    let hi = num_basis - 1; // last valid span start
    if t >= knots[hi + 1] {
        return hi;
    }
    let mut a = lo;
    let mut b = hi;
    while a < b {
        let mid = (a + b + 1) / 2;
        if knots[mid] <= t {
            a = mid;
        } else {
            b = mid - 1;
        }
    }
    a
}

/// The degree+1 nonzero basis values at t for the given span (de Boor).
fn basis_values(knots: &[f64], degree: usize, span: usize, t: f64) -> Vec<f64> {
    let mut vals = vec![0.0; degree + 1];
    let mut left = vec![0.0; degree + 1];
    let mut right = vec![0.0; degree + 1];
    vals[0] = 1.0;
    for j in 1..=degree {
        left[j] = t - knots[span + 1 - j];
        right[j] = knots[span + j] - t;
        let mut saved = 0.0;
        for r in 0..j {
            let tmp = vals[r] / (right[r + 1] + left[j - r]);
            vals[r] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        vals[j] = saved;
    }
    vals
}

/// Builds a clamped uniform B-spline basis sampled at the n midpoints of
/// [0,1].
pub fn build_bspline_basis(spec: &BasisSpec) -> Result<BasisMatrix, BasisError> {
    let BasisKind::Bspline { degree, knots } = spec.kind else {
        return Err(BasisError::KindMismatch {
            expected: "bspline",
        });
    };
    let n = spec.n;
    let cols = spec.columns();
    if n == 0 {
        return Err(BasisError::EmptySignal);
    }
    if cols > n {
        return Err(BasisError::TooManyColumns { n, cols });
    }
    let kv = clamped_knots(degree, knots);
    let mut m = DenseMatrix::zeros(n, cols);
    for i in 0..n {
        let t = (i as f64 + 0.5) / n as f64;
        let span = find_span(&kv, degree, cols, t);
        let vals = basis_values(&kv, degree, span, t);
        for (offset, v) in vals.iter().enumerate() {
            m[(i, span - degree + offset)] = *v;
        }
    }
    BasisMatrix::from_matrix(*spec, m)
}

pub fn build_identity_basis(n: usize) -> Result<BasisMatrix, BasisError> {
    if n == 0 {
        return Err(BasisError::EmptySignal);
    }
    BasisMatrix::from_matrix(BasisSpec::identity(n), DenseMatrix::identity(n))
}

/// Builds whatever the spec asks for.
pub fn build_basis(spec: &BasisSpec) -> Result<BasisMatrix, BasisError> {
    match spec.kind {
        BasisKind::Bspline { .. } => build_bspline_basis(spec),
        BasisKind::Identity => build_identity_basis(spec.n),
    }
}

/// Maximum over columns of the length of the smallest index interval covering
/// that column's nonzeros (interior zeros count toward the interval).
pub fn local_support_length(b: &DenseMatrix) -> Result<usize, BasisError> {
    let mut max_len = 0usize;
    for j in 0..b.cols() {
        let mut first = None;
        let mut last = 0usize;
        for i in 0..b.rows() {
            if b[(i, j)].abs() > SUPPORT_ZERO_TOLERANCE {
                if first.is_none() {
                    first = Some(i);
                }
                last = i;
            }
        }
        match first {
            Some(f) => max_len = max_len.max(last - f + 1),
            None => return Err(BasisError::ZeroColumn { col: j }),
        }
    }
    Ok(max_len)
}

/// Incoherence of the column space: with `B = U Σ Vᵀ` reduced,
/// `mu = (n/r) · max_i ‖Uᵀ e_i‖²` over all n coordinate directions — the
/// smallest value making `max_i ‖Uᵀ e_i‖ ≤ sqrt(mu · r / n)` tight.
pub fn incoherence(b: &DenseMatrix) -> Result<f64, BasisError> {
    let svd = svd_reduced(b)?;
    let r = svd.rank();
    if r == 0 {
        return Err(BasisError::ZeroMatrix);
    }
    let n = b.rows();
    let mut max_row = 0.0_f64;
    for i in 0..n {
        let row_sq: f64 = (0..r).map(|k| svd.u[(i, k)] * svd.u[(i, k)]).sum();
        max_row = max_row.max(row_sq);
    }
    Ok(n as f64 / r as f64 * max_row)
}

/// `max(σ_max − 1, 1 − σ_min)` over all min(n, q) singular values of B
/// (structural zeros included), a loose upper bound on the isometry defect of
/// B on sparse coefficient vectors.
pub fn ric_upper_bound(b: &DenseMatrix) -> Result<f64, BasisError> {
    if b.frobenius_norm() == 0.0 {
        return Err(BasisError::ZeroMatrix);
    }
    let sv = singular_values(b)?;
    let s_max = sv.first().copied().unwrap_or(0.0);
    let s_min = sv.last().copied().unwrap_or(0.0);
    Ok((s_max - 1.0).max(1.0 - s_min))
}
