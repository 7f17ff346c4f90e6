//! Differentiable primitives. Each forward function has a matching
//! `*_backward` that maps the upstream gradient onto the inputs.

use crate::error::{Error, Result};

use super::matrix::{kernels, Matrix};
use super::scalar::Scalar;

/// Rows with a norm below this are treated as collapsed embeddings.
pub const MIN_ROW_NORM: f64 = 1e-12;

pub fn matmul<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    a.matmul(b)
}

/// Gradients of `a × b` w.r.t. `a` and `b` given `d_out`.
pub fn matmul_backward<T: Scalar>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    d_out: &Matrix<T>,
) -> Result<(Matrix<T>, Matrix<T>)> {
    if d_out.shape() != (a.rows(), b.cols()) {
        return Err(Error::Dimension {
            op: "matmul_backward",
            left: (a.rows(), b.cols()),
            right: d_out.shape(),
        });
    }
    let da = d_out.matmul_transposed(b)?;
    let db = a.transpose_matmul(d_out)?;
    Ok((da, db))
}

/// Output of [`l2_normalize_rows`]: the unit rows plus the original norms,
/// which the backward pass needs.
#[derive(Debug, Clone)]
pub struct NormalizedRows<T> {
    pub output: Matrix<T>,
    pub norms: Vec<T>,
}

pub fn l2_normalize_rows<T: Scalar>(m: &Matrix<T>) -> Result<NormalizedRows<T>> {
    let mut output = m.clone();
    let mut norms = Vec::with_capacity(m.rows());
    for i in 0..m.rows() {
        let row = output.row_mut(i);
        let norm = kernels::dot(row, row).sqrt();
        if norm.as_f64().is_nan() || norm.as_f64() < MIN_ROW_NORM {
            return Err(Error::DegenerateEmbedding {
                row: i,
                norm: norm.as_f64(),
            });
        }
        let inv = T::one() / norm;
        row.iter_mut().for_each(|x| *x *= inv);
        norms.push(norm);
    }
    Ok(NormalizedRows { output, norms })
}

/// For `y = x / ‖x‖`: `dx = (dy − y·(y·dy)) / ‖x‖`.
pub fn l2_normalize_rows_backward<T: Scalar>(
    normalized: &NormalizedRows<T>,
    d_out: &Matrix<T>,
) -> Result<Matrix<T>> {
    let y = &normalized.output;
    if y.shape() != d_out.shape() {
        return Err(Error::Dimension {
            op: "l2_normalize_rows_backward",
            left: y.shape(),
            right: d_out.shape(),
        });
    }
    let mut dx = Matrix::zeros(y.rows(), y.cols());
    for i in 0..y.rows() {
        let yr = y.row(i);
        let dyr = d_out.row(i);
        let proj = kernels::dot(yr, dyr);
        let inv = T::one() / normalized.norms[i];
        for ((d, &yv), &dy) in dx.row_mut(i).iter_mut().zip(yr).zip(dyr) {
            *d = (dy - yv * proj) * inv;
        }
    }
    Ok(dx)
}

/// `S[i][j] = a_i · b_j`. Rows are expected to be unit length already, so
/// this is the cosine similarity.
pub fn cosine_similarity_matrix<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    if a.cols() != b.cols() {
        return Err(Error::Dimension {
            op: "cosine_similarity_matrix",
            left: a.shape(),
            right: b.shape(),
        });
    }
    a.matmul_transposed(b)
}

/// Gradients of `a × bᵀ`: `da = dS × b`, `db = dSᵀ × a`.
pub fn cosine_similarity_backward<T: Scalar>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    d_sim: &Matrix<T>,
) -> Result<(Matrix<T>, Matrix<T>)> {
    if d_sim.shape() != (a.rows(), b.rows()) {
        return Err(Error::Dimension {
            op: "cosine_similarity_backward",
            left: (a.rows(), b.rows()),
            right: d_sim.shape(),
        });
    }
    let da = d_sim.matmul(b)?;
    let db = d_sim.transpose_matmul(a)?;
    Ok((da, db))
}
