//! Numeric CSV ingestion and lossless matrix output.

use std::fs;
use std::path::{Path, PathBuf};

use mtggm::SymmetricMatrix;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

/// Largest relative asymmetry `max|aᵢⱼ − aⱼᵢ| / max|aᵢⱼ|` accepted (and
/// then averaged away) for covariance input.
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MatrixRole {
    /// Rows are observations, columns variables.
    Samples,
    /// A square symmetric covariance matrix.
    Covariance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFile {
    pub path: PathBuf,
    pub role: MatrixRole,
    pub data: DMatrix<f64>,
    pub header: Option<Vec<String>>,
    /// Whether a small asymmetry was averaged away.
    pub symmetrized: bool,
    /// Hex SHA-256 of the raw file bytes.
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn load_matrix_csv(path: &Path, role: MatrixRole) -> Result<MatrixFile> {
    let bytes = fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    let mut file = parse_matrix_csv(&bytes, role, path)?;
    file.sha256 = sha256_hex(&bytes);
    Ok(file)
}

/// Parses comma-separated numbers. A first line with any non-numeric cell
/// is taken as a header. `origin` only labels error messages.
pub fn parse_matrix_csv(bytes: &[u8], role: MatrixRole, origin: &Path) -> Result<MatrixFile> {
    let parse_err = |line: usize, column: usize, message: String| HarnessError::Parse {
        path: origin.to_path_buf(),
        line,
        column,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);

    let mut header = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| parse_err(line, 0, e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let cells: Vec<Option<f64>> = record.iter().map(parse_number).collect();
        if header.is_none() && rows.is_empty() && cells.iter().any(Option::is_none) {
            header = Some(record.iter().map(str::to_string).collect::<Vec<_>>());
            continue;
        }
        let width = header.as_ref().map(Vec::len).or_else(|| rows.first().map(Vec::len));
        if let Some(width) = width {
            if cells.len() != width {
                return Err(parse_err(
                    line,
                    cells.len().min(width) + 1,
                    format!("expected {width} cells, found {}", cells.len()),
                ));
            }
        }
        let mut row = Vec::with_capacity(cells.len());
        for (j, cell) in cells.into_iter().enumerate() {
            match cell {
                Some(v) => row.push(v),
                None => return Err(parse_err(line, j + 1, format!("not a finite number: {:?}", &record[j]))),
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(HarnessError::Invalid {
            path: origin.to_path_buf(),
            message: "no numeric rows".into(),
        });
    }
    let (nrows, ncols) = (rows.len(), rows[0].len());
    let mut data = DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]);

    let mut symmetrized = false;
    if role == MatrixRole::Covariance {
        if nrows != ncols {
            return Err(HarnessError::Invalid {
                path: origin.to_path_buf(),
                message: format!("covariance must be square, found {nrows} rows and {ncols} columns"),
            });
        }
        let scale = data.amax();
        let mut worst = (0.0, 0, 0);
        for i in 0..nrows {
            for j in (i + 1)..ncols {
                let gap = (data[(i, j)] - data[(j, i)]).abs();
                if gap > worst.0 {
                    worst = (gap, i, j);
                }
            }
        }
        let (gap, i, j) = worst;
        if gap > SYMMETRY_TOL * scale {
            return Err(HarnessError::Invalid {
                path: origin.to_path_buf(),
                message: format!(
                    "covariance is not symmetric: row {} column {} is {} but row {} column {} is {}",
                    i + 1,
                    j + 1,
                    data[(i, j)],
                    j + 1,
                    i + 1,
                    data[(j, i)]
                ),
            });
        }
        if gap > 0.0 {
            data = (&data + data.transpose()) * 0.5;
            symmetrized = true;
        }
    }
    Ok(MatrixFile {
        path: origin.to_path_buf(),
        role,
        data,
        header,
        symmetrized,
        sha256: String::new(),
    })
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|&v| format_value(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    fs::write(path, matrix_to_csv(m)).map_err(|e| HarnessError::io(path, e))
}

/// Sample covariance with divisor `T`, centered on the column means when
/// `center` is set. Returns the matrix and `T`.
pub fn sample_covariance(samples: &MatrixFile, center: bool) -> Result<(SymmetricMatrix, usize)> {
    let t = samples.data.nrows();
    let needed = if center { 2 } else { 1 };
    if t < needed {
        return Err(HarnessError::Invalid {
            path: samples.path.clone(),
            message: format!("{t} sample rows; at least {needed} needed"),
        });
    }
    Ok((mtggm::synth::sample_covariance(&samples.data, center)?, t))
}
