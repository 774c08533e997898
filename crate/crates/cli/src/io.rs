//! Reading input files and mapping failures onto exit codes.

use std::fmt;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use statespace::kernel::max_dim;
use statespace::{DenseMatrix, Error};

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_VALIDATION: u8 = 3;
pub const EXIT_DIMENSION: u8 = 4;

use crate::table::Table;

/// What a command prints: JSON for scripts, a table for people.
#[derive(Debug)]
pub struct Report {
    pub json: Value,
    pub human: Table,
}

/// A failed command. `report` is printed before exiting when present.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
    pub report: Option<Report>,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into(), report: None }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = if e.is_dimensional() { EXIT_DIMENSION } else { EXIT_VALIDATION };
        Self { code, message: format!("[{}] {e}", e.code()), report: None }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::input(format!("parse error in {}: {e}", path.display()))
    })
}

#[derive(Deserialize)]
struct MatrixFile {
    #[serde(flatten)]
    matrix: DenseMatrix,
    tol: Option<f64>,
}

/// A matrix file plus the tolerance it asks for, if any.
pub struct LoadedMatrix {
    pub matrix: DenseMatrix,
    pub tol: Option<f64>,
}

pub fn read_matrix(path: &Path) -> CliResult<LoadedMatrix> {
    let file: MatrixFile = read_json(path)?;
    check_dim(file.matrix.dim())?;
    Ok(LoadedMatrix { matrix: file.matrix, tol: file.tol })
}

pub fn check_dim(dim: usize) -> CliResult<()> {
    let max = max_dim();
    if dim > max {
        return Err(Error::DimensionOverflow { dim, max }.into());
    }
    Ok(())
}

pub fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}
