//! JSON input documents: matrices, generators and synthesized systems.

use std::fs;
use std::path::Path;

use gradflow::{CanonicalGradientSystem, Diagonalisation, Matrix, Vector};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SYSTEM_SCHEMA_VERSION: &str = "1";

/// `{"dim": d, "rows": [[...], ...]}`, row-major.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDoc {
    pub dim: usize,
    pub rows: Vec<Vec<f64>>,
}

/// A matrix document that also declares the column convention.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorDoc {
    pub dim: usize,
    pub rows: Vec<Vec<f64>>,
    pub convention: Option<String>,
}

/// Everything `synthesize` produces, in one document.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDoc {
    pub schema_version: String,
    pub dim: usize,
    #[serde(rename = "K")]
    pub k: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    pub pi: Vec<f64>,
    #[serde(rename = "V")]
    pub v: Vec<Vec<f64>>,
    pub f: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
}

/// A loaded system file with its derived objects.
pub struct LoadedSystem {
    pub gs: CanonicalGradientSystem,
    pub diag: Diagonalisation,
    pub a: Matrix,
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))
}

fn parse<'a, T: Deserialize<'a>>(bytes: &'a [u8], path: &Path) -> Result<T, CliError> {
    serde_json::from_slice(bytes).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

pub fn to_matrix(dim: usize, rows: &[Vec<f64>], what: &str) -> Result<Matrix, CliError> {
    if dim == 0 {
        return Err(CliError::Dimension(format!("{what}: dim must be positive")));
    }
    if rows.len() != dim {
        return Err(CliError::Dimension(format!("{what}: dim is {dim} but {} rows given", rows.len())));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
        return Err(CliError::Dimension(format!("{what}: row {i} has {} entries, expected {dim}", r.len())));
    }
    Ok(Matrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

pub fn to_vector(dim: usize, v: &[f64], what: &str) -> Result<Vector, CliError> {
    if v.len() != dim {
        return Err(CliError::Dimension(format!("{what}: expected {dim} entries, found {}", v.len())));
    }
    Ok(Vector::from_column_slice(v))
}

pub fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn parse_matrix(bytes: &[u8], path: &Path) -> Result<Matrix, CliError> {
    let doc: MatrixDoc = parse(bytes, path)?;
    to_matrix(doc.dim, &doc.rows, "matrix")
}

/// Generators must say `"convention": "transposed"` (columns sum to zero).
pub fn parse_generator(bytes: &[u8], path: &Path) -> Result<Matrix, CliError> {
    let doc: GeneratorDoc = parse(bytes, path)?;
    match doc.convention.as_deref() {
        Some("transposed") => to_matrix(doc.dim, &doc.rows, "generator"),
        Some(other) => Err(CliError::Parse(format!(
            "{}: unsupported convention {other:?}; only \"transposed\" (columns sum to zero) is accepted",
            path.display()
        ))),
        None => Err(CliError::Parse(format!(
            "{}: generator files must declare \"convention\": \"transposed\"",
            path.display()
        ))),
    }
}

pub fn parse_system(bytes: &[u8], path: &Path, tol: f64) -> Result<LoadedSystem, CliError> {
    let doc: SystemDoc = parse(bytes, path)?;
    if doc.schema_version != SYSTEM_SCHEMA_VERSION {
        return Err(CliError::Parse(format!(
            "{}: unsupported system schema_version {:?}",
            path.display(),
            doc.schema_version
        )));
    }
    let d = doc.dim;
    let k = to_matrix(d, &doc.k, "K")?;
    let b = to_matrix(d, &doc.b, "B")?;
    let v = to_matrix(d, &doc.v, "V")?;
    let a = to_matrix(d, &doc.a, "A")?;
    let pi = to_vector(d, &doc.pi, "pi")?;
    let f = to_vector(d, &doc.f, "f")?;
    let gs = CanonicalGradientSystem::new(k, b, pi, tol)?;
    let diag = Diagonalisation::from_parts(v, f, tol)?;
    Ok(LoadedSystem { gs, diag, a })
}

impl SystemDoc {
    pub fn new(gs: &CanonicalGradientSystem, diag: &Diagonalisation, a: &Matrix) -> Self {
        Self {
            schema_version: SYSTEM_SCHEMA_VERSION.to_string(),
            dim: gs.dim(),
            k: rows_of(gs.k()),
            b: rows_of(gs.b()),
            pi: gs.pi().iter().copied().collect(),
            v: rows_of(diag.v()),
            f: diag.f().iter().copied().collect(),
            a: rows_of(a),
        }
    }
}

/// Comma-separated components, e.g. `0.5,0.25,0.25`.
pub fn parse_state(s: &str) -> Result<Vector, CliError> {
    let parts: Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
    match parts {
        Ok(v) if v.iter().all(|x| x.is_finite()) => Ok(Vector::from_vec(v)),
        Ok(_) => Err(CliError::Parse(format!("state {s:?} has non-finite components"))),
        Err(e) => Err(CliError::Parse(format!("cannot parse state {s:?}: {e}"))),
    }
}
