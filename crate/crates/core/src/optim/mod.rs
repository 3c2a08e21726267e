//! Trainers and the generic unconstrained minimizer.
//!
//! [`bfgs_minimize`] works on any [`Objective`]; [`bfgs_train`] and
//! [`gd_train`] wrap it (or the classic delta-rule loop) around the
//! perceptron's training loss.

mod bfgs;
mod config;
mod gd;
mod line_search;
mod objective;
mod train;

pub use bfgs::{bfgs_minimize, bfgs_minimize_observed, bfgs_update_b, bfgs_update_h, BfgsState, BfgsStep};
pub use config::{GdConfig, GdMode, StopCriteria, WolfeConfig};
pub use gd::gd_train;
pub use line_search::{satisfies_strong_wolfe, wolfe_line_search, LineSearchResult};
pub use objective::{FnObjective, Objective};
pub use train::{bfgs_train, bfgs_train_observed, MlpObjective};

use thiserror::Error;

use crate::math::{MathError, RealVector};
use crate::mlp::MlpError;

/// Dot-product threshold below which a BFGS update is skipped, relative to
/// `‖y‖·‖s‖`.
pub const CURVATURE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimError {
    #[error(transparent)]
    Math(#[from] MathError),
    #[error(transparent)]
    Mlp(#[from] MlpError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("objective has dimension {expected}, starting point has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("search direction is not a descent direction (slope {slope})")]
    NotDescent { slope: f64 },
    #[error("line search failed after {evals} evaluations; best step {best_alpha}")]
    LineSearchFailed {
        best_alpha: f64,
        best_f: f64,
        evals: usize,
    },
    #[error("curvature condition violated (denominator {denominator})")]
    Curvature { denominator: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    ConvergedGrad,
    ConvergedFtol,
    MaxIters,
    LineSearchFailed,
    /// Non-finite loss during gradient-descent training.
    Diverged,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::ConvergedGrad => "converged_grad",
            Status::ConvergedFtol => "converged_ftol",
            Status::MaxIters => "max_iters",
            Status::LineSearchFailed => "line_search_failed",
            Status::Diverged => "diverged",
        }
    }

    /// True for the statuses that indicate numerical failure.
    pub fn is_failure(&self) -> bool {
        matches!(self, Status::LineSearchFailed | Status::Diverged)
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One recorded iteration (or epoch). `test_f` is filled in by the
/// network trainers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryEntry {
    pub iter: usize,
    pub f: f64,
    pub grad_norm: f64,
    pub test_f: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeResult {
    pub x_final: RealVector,
    pub f_final: f64,
    pub grad_norm_final: f64,
    pub iters: usize,
    pub status: Status,
    /// Entry 0 is the starting point; length is `iters + 1`.
    pub history: Vec<HistoryEntry>,
    pub n_skipped_updates: usize,
}
