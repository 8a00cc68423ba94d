use gradflow::Error;

/// Failure classes with their process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed input, bad flags (exit 2).
    Parse(String),
    /// Shapes that do not fit together (exit 3).
    Dimension(String),
    /// The input violates a precondition of the requested analysis (exit 4).
    Precondition(String),
    /// The numerics broke down (exit 5).
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Dimension(_) => 3,
            CliError::Precondition(_) => 4,
            CliError::Numeric(_) => 5,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Parse(m) | CliError::Dimension(m) | CliError::Precondition(m) | CliError::Numeric(m) => m,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.message())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::EmptyMatrix | Error::NotSquare { .. } | Error::DimensionMismatch { .. } => CliError::Dimension(msg),
            Error::NonFiniteInput | Error::BadTolerance(_) | Error::BadParameter(..) => CliError::Parse(msg),
            Error::NotDiagonalisable(_)
            | Error::NotSpd
            | Error::IllConditioned(_)
            | Error::FlowMismatch(_)
            | Error::AsymmetryDefect(_)
            | Error::NotCritical(_)
            | Error::DissipationNotCentred(_)
            | Error::NegativeRate { .. }
            | Error::ColumnSumNonzero { .. }
            | Error::DegenerateKernel(_)
            | Error::NonPositive
            | Error::NotReversible(_) => CliError::Precondition(msg),
            Error::NoConvergence
            | Error::Overflow(_)
            | Error::NonFiniteState(_)
            | Error::SingularStep(_)
            | Error::NonPositiveInput(_) => CliError::Numeric(msg),
        }
    }
}
