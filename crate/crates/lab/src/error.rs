use std::io;
use std::path::PathBuf;

use oqm_core::classical::ClassicalError;
use oqm_core::quantize::QuantizeError;
use oqm_core::spectra::SpectralError;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("artifact problem at {path}: {message}")]
    Artifact { path: PathBuf, message: String },
}

impl LabError {
    pub fn validation(field: impl Into<String>, message: impl ToString) -> Self {
        LabError::Validation {
            field: field.into(),
            message: message.to_string(),
        }
    }

    pub fn artifact(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        LabError::Artifact {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, err: io::Error) -> Self {
        LabError::artifact(path, err)
    }

    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Validation { .. } => 2,
            LabError::Construction(_) => 3,
            LabError::Solver(_) => 4,
            LabError::Artifact { .. } => 5,
        }
    }
}

impl From<ClassicalError> for LabError {
    fn from(e: ClassicalError) -> Self {
        match e {
            ClassicalError::CapExceeded { .. } | ClassicalError::EscapedPoint { .. } => LabError::Construction(e.to_string()),
            ClassicalError::InvalidDepth { .. } => LabError::validation("depth", e),
            _ => LabError::validation("model", e),
        }
    }
}

impl From<QuantizeError> for LabError {
    fn from(e: QuantizeError) -> Self {
        match e {
            QuantizeError::NoConvergence { .. } | QuantizeError::DegenerateJacobian { .. } => LabError::Solver(e.to_string()),
            _ => LabError::Construction(e.to_string()),
        }
    }
}

impl From<SpectralError> for LabError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::Quantize(q) => q.into(),
            SpectralError::Classical(c) => c.into(),
            SpectralError::DimensionTooLarge { .. } => LabError::Construction(e.to_string()),
            SpectralError::InvalidThreshold(_) => LabError::validation("epsilons", e),
            SpectralError::TooFewDims(_) => LabError::validation("dims", e),
            SpectralError::InvalidSteps | SpectralError::DimensionMismatch { .. } => LabError::validation("steps", e),
            SpectralError::Format(_) => LabError::artifact("spectrum", e),
            SpectralError::NoConvergence | SpectralError::AccuracyContract { .. } | SpectralError::EmptyCount { .. } => {
                LabError::Solver(e.to_string())
            }
        }
    }
}
