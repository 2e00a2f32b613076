//! Unbiased estimation of the limit of a convergent sequence of
//! approximations by randomized truncation.
//!
//! Given coupled approximations `X_0, X_1, ...` with `E[X_n] -> x_inf`, draw a
//! random top level `N` and weight each increment by the inverse probability
//! that it is included:
//!
//! ```text
//! Y = X_s + sum_{n=s+1}^{N} (X_n - X_{n-1}) / P(N >= n)
//! ```
//!
//! `Y` has mean exactly `x_inf`, so averaging independent replicates gives an
//! unbiased estimate with an ordinary standard error.
//!
//! ```
//! use debias::{run_estimate, sequences::ToyGeometricModel, TruncationLaw};
//!
//! let model = ToyGeometricModel::new(1.0, 1.0, 0.5).unwrap();
//! let law = TruncationLaw::geometric(0.5, 0).unwrap();
//! let report = run_estimate(model, law, 100_000, 7).unwrap();
//! assert!((report.mean - 1.0).abs() < 4.0 * report.stderr);
//! ```

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod error;
pub mod estimator;
pub mod heston;
pub mod law;
pub mod model;
pub mod sequences;
pub mod stream;

pub use error::{Error, Result};
pub use estimator::{
    pooled_average, run_estimate, within_replicate_variance, EstimateReport, Estimator, Replicate,
};
pub use law::{AdaptiveLaw, ShiftedGeometric, TableLaw, TruncationLaw};
pub use model::{CostModel, LevelSequenceModel, LevelWalker};
pub use stream::{replicate_stream, Stream};
