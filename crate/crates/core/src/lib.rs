//! Multi-label classification by group-preserving label embedding.
//!
//! Labels are clustered into groups by spectral clustering, the label matrix
//! is factored as `Y ~ U V` with a per-group row-sparsity penalty on `V`, and
//! a sparse linear map `Z` sends features onto the embedding. Prediction is
//! `sign(X Z V)`.

pub mod apg;
pub mod baseline;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod feature_embed;
pub mod grouping;
pub mod label_embed;
pub mod linalg;
pub mod metrics;
pub mod model_file;
pub mod predictor;
pub mod synthetic;

pub use error::{Error, Result};
pub use linalg::Matrix;
