use std::io;
use std::path::PathBuf;

use afapprox_core::activations::ActivationError;
use afapprox_core::approx::ApproxError;
use afapprox_core::baselines::BaselineError;
use afapprox_core::mpccost::MpcError;
use afapprox_core::nn::NnError;
use afapprox_core::piecewise::PiecewiseError;
use afapprox_core::search::SearchError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("invalid document: {0}")]
    Document(String),
    #[error("{}: row {row}, column {column}: {reason}", path.display())]
    Csv { path: PathBuf, row: usize, column: usize, reason: String },
    #[error("no feasible candidate: {0}")]
    Infeasible(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Activation(#[from] ActivationError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Approx(#[from] ApproxError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Mpc(#[from] MpcError),
    #[error(transparent)]
    Piecewise(#[from] PiecewiseError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    pub(crate) fn json(path: impl Into<PathBuf>) -> impl FnOnce(serde_json::Error) -> Error {
        let path = path.into();
        move |source| Error::Json { path, source }
    }

    /// 2 for infeasible searches and unmet budgets, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Infeasible(_)
            | Error::Search(SearchError::NoFeasible)
            | Error::Approx(ApproxError::BudgetUnmet { .. })
            | Error::Baseline(BaselineError::Approx(ApproxError::BudgetUnmet { .. })) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
