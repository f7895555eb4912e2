//! Maximum-likelihood estimation for Dirichlet and Dirichlet-multinomial
//! (Polya) distributions.
//!
//! The Dirichlet-multinomial likelihood normally forces every solver
//! iteration to rescan the whole N x K count matrix. This crate instead
//! compresses the dataset in a single pass into survival tallies (a K x M
//! matrix `U` and an M-vector `v`, with M the largest row total), after
//! which Newton-Raphson (or fixed-point) iterations cost O(MK) regardless
//! of N. The tallies are additive, so shards can be compressed in parallel
//! and merged, and more data can be folded in later.
//!
//! ```
//! use polyafit::{fit_dm, CountMatrix, FitInput, SolverConfig};
//!
//! let data = CountMatrix::from_rows(2, [[3u64, 1], [4, 2], [1, 3], [0, 2]]).unwrap();
//! let report = fit_dm(FitInput::Counts(&data), &SolverConfig::default()).unwrap();
//! assert!(report.converged);
//! ```
//!
//! The naive O(NK)-per-iteration methods (digamma/trigamma row sums) are
//! included as cross-checks and benchmark baselines. The `parallel`
//! feature (on by default) runs dataset ingestion, row sums, and sampling
//! on the rayon pool; results are bit-identical with it off.

// Reference constants carry their full published digits, and domain checks
// use `!(x > 0.0)` deliberately so NaN takes the rejection path.
#![allow(clippy::excessive_precision)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;
mod parallel;

pub mod compressed;
pub mod dirichlet;
pub mod dm;
pub mod io;
pub mod newton;
pub mod sampling;
pub mod solver;
pub mod special;

pub use compressed::{CompressedStats, CountMatrix};
pub use dirichlet::{
    dirichlet_log_pdf, dirichlet_mean, fit_dirichlet, posterior_update, suff_stat,
    DirichletParams, DirichletSuffStat, ProbabilityMatrix,
};
pub use dm::{fit_dm, FitInput};
pub use error::{Error, Result};
pub use sampling::{synthesize, RowTotals, SynthSpec};
pub use solver::{Init, Method, SolverConfig, SolverReport, Timings};
