//! Library surface of the command-line driver: file formats and the error
//! type with its exit-code mapping. The binary in `main.rs` is a thin clap
//! wrapper over this.

pub mod formats;

/// Error carrying its process exit code: 2 input error, 3 insufficient
/// data, 4 numeric failure.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: String) -> Self {
        Self { code: 2, message }
    }
}

impl From<multiphoton::Error> for CliError {
    fn from(e: multiphoton::Error) -> Self {
        use multiphoton::Error::*;
        let code = match e {
            SizeLimit(_) | Shape(_) | Dimension(_) | InvalidValue(_) => 2,
            InsufficientData(_) => 3,
            Numeric(_) | FitFailed(_) | OptimizationFailed(_) => 4,
        };
        Self { code, message: e.to_string() }
    }
}
