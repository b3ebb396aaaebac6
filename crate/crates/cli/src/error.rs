use gibbsgap::{Alphabet, Error};
use thiserror::Error as ThisError;

/// A failed command, carrying the message shown to the user.
#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("{0}")]
    Input(String),

    #[error("{0}")]
    Infeasible(String),

    #[error("{failures} check(s) exceeded their threshold")]
    VerificationFailed { failures: usize },
}

impl CliError {
    /// 0 success, 1 input error, 2 infeasibility, 3 verification failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Infeasible(_) => 2,
            CliError::VerificationFailed { .. } => 3,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    /// Wraps a library error, naming points by label when `alphabet` is known.
    pub fn from_core(context: &str, err: Error, alphabet: Option<&Alphabet>) -> Self {
        let label = |i: usize| match alphabet.and_then(|a| a.label(i)) {
            Some(l) => format!("`{l}`"),
            None => i.to_string(),
        };
        let message = match &err {
            Error::NotAbsContinuous { point } => format!(
                "{context}: measure is not absolutely continuous: point {} has positive mass but the reference gives it zero",
                label(*point)
            ),
            Error::InfiniteLoss { model, point } => {
                format!("{context}: infinite loss for model {model} at support point {}", label(*point))
            }
            _ => format!("{context}: {err}"),
        };
        if is_infeasibility(&err) {
            CliError::Infeasible(message)
        } else {
            CliError::Input(message)
        }
    }
}

fn is_infeasibility(err: &Error) -> bool {
    matches!(
        err,
        Error::InfiniteLoss { .. }
            | Error::InfeasibleTemperature { .. }
            | Error::GammaInfeasible { .. }
            | Error::ConstantLossNonzeroGamma { .. }
            | Error::NonConvergence(_)
            | Error::DegenerateBeta
            | Error::NotAbsContinuous { .. }
            | Error::EnumerationCapExceeded { .. }
            | Error::InfiniteLautum { .. }
    )
}

pub type CliResult<T> = std::result::Result<T, CliError>;
