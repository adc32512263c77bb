use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration parse error: {0}")]
    Parse(String),
    #[error("configuration validation error: {0}")]
    Validation(String),
    #[error("missing configuration section [{0}]")]
    MissingSection(&'static str),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("solver did not converge: {0}")]
    NotConverged(String),
    #[error(transparent)]
    Core(#[from] rqdiff::Error),
}

/// Name and exit status of every error kind.
pub const EXIT_CODES: &[(&str, i32)] = &[
    ("ParseError", 2),
    ("ValidationError", 3),
    ("MissingSection", 4),
    ("IoError", 5),
    ("NotConverged", 6),
    ("DegenerateDenominator", 10),
    ("NegativeArgument", 11),
    ("InvalidParameter", 12),
    ("BadGrid", 13),
    ("NonIntegrableWeight", 14),
    ("OutOfDomain", 15),
    ("OriginSingularity", 16),
    ("MissingDerivative", 17),
    ("StartupFailure", 18),
    ("StepFailure", 19),
    ("NoCrossing", 20),
    ("PositivityViolated", 21),
    ("SigmaOutOfRange", 22),
    ("GammaOutOfRange", 23),
    ("ThresholdMismatch", 24),
    ("TrivialProfile", 25),
    ("IncompleteGrid", 26),
];

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "ParseError",
            CliError::Validation(_) => "ValidationError",
            CliError::MissingSection(_) => "MissingSection",
            CliError::Io { .. } => "IoError",
            CliError::NotConverged(_) => "NotConverged",
            CliError::Core(e) => e.kind(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        let kind = self.kind();
        EXIT_CODES.iter().find(|(k, _)| *k == kind).map_or(1, |(_, c)| *c)
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Payload<'a> {
            error: &'a str,
            message: String,
            exit_code: i32,
        }
        serde_json::to_string(&Payload { error: self.kind(), message: self.to_string(), exit_code: self.exit_code() })
            .expect("error payload serializes")
    }
}

pub fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Io { path: path.display().to_string(), message: e.to_string() }
}
