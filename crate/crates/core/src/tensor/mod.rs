//! Dense tensors, constant sparse operators, reverse-mode differentiation and
//! Adam.
//!
//! Everything is `f64`. Kernels that run in parallel split work by output row
//! and reduce each row in a fixed order, so results are bit-identical no
//! matter how many threads rayon uses.

mod adam;
mod dense;
pub mod memory;
mod params;
mod sparse;
mod tape;

use thiserror::Error;

pub use adam::{adam_update, Adam, AdamConfig, Moments};
pub use dense::Tensor;
pub use memory::{memory_high_water, reset_high_water};
pub use params::{ParamId, ParamStore};
pub use sparse::{reset_sparse_product_count, sparse_product_count, SparseMatrix};
pub use tape::{Gradients, Tape, Var};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    ShapeMismatch { op: &'static str, left: (usize, usize), right: (usize, usize) },
    #[error("buffer of length {len} does not fit shape {shape:?}")]
    BadLength { shape: (usize, usize), len: usize },
    #[error("sparse entry ({row}, {col}) outside shape {shape:?}")]
    SparseIndex { row: usize, col: usize, shape: (usize, usize) },
    #[error("backward needs a scalar loss, got shape {0:?}")]
    NotScalar((usize, usize)),
    #[error("{0}")]
    InvalidArgument(String),
}
