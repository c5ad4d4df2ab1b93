//! Process exit codes and error classification.

use std::fmt;
use std::process::ExitCode;

use appraise_core::evaluation::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Usage,
    Data,
    Check,
}

impl Kind {
    pub fn code(self) -> ExitCode {
        ExitCode::from(match self {
            Kind::Usage => 1,
            Kind::Data => 2,
            Kind::Check => 3,
        })
    }
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub error: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl Failure {
    pub fn new(kind: Kind, error: impl Into<anyhow::Error>) -> Self {
        Failure {
            kind,
            error: error.into(),
        }
    }

    pub fn usage(msg: impl fmt::Display) -> Self {
        Failure::new(Kind::Usage, anyhow::anyhow!("{msg}"))
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        Failure::new(Kind::Data, anyhow::anyhow!("{msg}"))
    }

    pub fn eval(error: EvalError) -> Self {
        let kind = match error {
            EvalError::OracleViolation { .. } => Kind::Check,
            EvalError::MissingEncoder | EvalError::InvalidArgument(_) | EvalError::Config(_) => Kind::Usage,
            _ => Kind::Data,
        };
        Failure::new(kind, error)
    }
}

pub type Outcome<T = ()> = Result<T, Failure>;

/// Tags a foreign error with the exit code it should produce.
pub trait Classify<T> {
    fn usage_err(self) -> Outcome<T>;
    fn data_err(self) -> Outcome<T>;
    fn data_context(self, context: impl fmt::Display + Send + Sync + 'static) -> Outcome<T>;
}

impl<T, E> Classify<T> for Result<T, E>
where
    E: std::error::Error + Send + Sync + 'static,
{
    fn usage_err(self) -> Outcome<T> {
        self.map_err(|e| Failure::new(Kind::Usage, e))
    }

    fn data_err(self) -> Outcome<T> {
        self.map_err(|e| Failure::new(Kind::Data, e))
    }

    fn data_context(self, context: impl fmt::Display + Send + Sync + 'static) -> Outcome<T> {
        self.map_err(|e| Failure::new(Kind::Data, anyhow::Error::new(e).context(context)))
    }
}
