use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum LabError {
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("grid shape mismatch: {0}")]
    Shape(String),
    #[error("resolution guard: delta {delta} needs spacing <= {max_spacing}; use n_per_axis >= {required_n}")]
    Resolution {
        delta: f64,
        max_spacing: f64,
        required_n: usize,
    },
    #[error("frequency band 2^{k} exceeds what the grid resolves (nyquist {nyquist})")]
    Aliasing { k: i32, nyquist: f64 },
    #[error("cube is not aligned with the grid: {0}")]
    Alignment(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
