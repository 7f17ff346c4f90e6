//! Dense matrices, differentiable primitives, Adam, and a finite-difference
//! gradient checker.

mod adam;
mod gradcheck;
mod matrix;
mod ops;
mod scalar;

pub(crate) use matrix::kernels;

pub use adam::{adam_step, AdamConfig, ParamBlock};
pub use gradcheck::{
    finite_difference_check, relative_error, BlockCheck, GradCheckConfig, GradCheckReport, ParamSet,
};
pub use matrix::Matrix;
pub use ops::{
    cosine_similarity_backward, cosine_similarity_matrix, l2_normalize_rows,
    l2_normalize_rows_backward, matmul, matmul_backward, NormalizedRows, MIN_ROW_NORM,
};
pub use scalar::{sigmoid, Scalar};
