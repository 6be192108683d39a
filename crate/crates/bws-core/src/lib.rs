//! Best Window Selection (BWS) for difficulty-score-based data pruning.
//!
//! Samples are sorted by a per-sample difficulty score, candidate subsets are
//! contiguous windows over that ordering, and each window is scored by a
//! kernel-ridge-regression proxy: fit one-vs-rest ridge classifiers on the
//! window and measure their accuracy on the full training set. The window
//! with the highest proxy accuracy wins.
//!
//! The crate also ships a self-contained Gaussian toy harness ([`theory`])
//! that reproduces the sample-deficient / sample-sufficient regime transition
//! numerically: with very few samples the easiest windows give the best
//! linear classifier, with many samples the hardest windows do.

pub mod dataset;
pub mod io;
pub mod proxy;
pub mod select;
pub mod theory;
pub mod windows;

pub use dataset::{
    FeatureMatrix, LabelVector, ScoreVector, ScoredDataset, SubsetIndices, Violation,
};
pub use proxy::{GradientBundle, RegressionSolution};
pub use select::{Candidate, EvalMode, ProxyKind, SweepReport, WindowMode};
pub use windows::WindowSpec;

use thiserror::Error;

/// Crate-wide error type. The variants map onto the CLI exit codes:
/// validation (1), I/O (2), numerical (3).
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation: {0}")]
    Validation(String),
    #[error("i/o error in {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("numerical: {0}")]
    Numerical(String),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
    pub fn io(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Io {
            path: path.into(),
            msg: msg.into(),
        }
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
