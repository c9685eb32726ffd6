//! Dense row-major matrices and their on-disk form: raw little-endian `f32`
//! values plus a JSON sidecar describing shape and row/column ids.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("invalid sidecar {path}: {source}")]
    Sidecar { path: PathBuf, source: serde_json::Error },
    #[error("matrix file {path} holds {found} bytes, expected {expected}")]
    Size {
        path: PathBuf,
        found: usize,
        expected: usize,
    },
    #[error("shape mismatch: {rows}x{cols} does not match {len} values")]
    Shape { rows: usize, cols: usize, len: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, MatrixError> {
        if rows * cols != data.len() {
            return Err(MatrixError::Shape {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, MatrixError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(MatrixError::Shape {
                    rows: rows.len(),
                    cols,
                    len: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[T]> {
        (0..self.rows).map(move |r| self.row(r))
    }

    pub fn cast<U: Scalar>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }
}

/// JSON sidecar stored next to every `.f32` matrix file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSidecar {
    pub rows: usize,
    pub cols: usize,
    pub dtype: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub row_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub col_ids: Vec<String>,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

/// Writes `matrix` to `path` as little-endian f32 and `path.json` as its sidecar.
pub fn write_matrix<T: Scalar>(
    path: &Path,
    matrix: &Matrix<T>,
    row_ids: &[String],
    col_ids: &[String],
) -> Result<(), MatrixError> {
    let io_err = |source| MatrixError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut bytes = Vec::with_capacity(matrix.data.len() * 4);
    for v in &matrix.data {
        bytes.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
    }
    let mut f = fs::File::create(path).map_err(io_err)?;
    f.write_all(&bytes).map_err(io_err)?;
    let sidecar = MatrixSidecar {
        rows: matrix.rows,
        cols: matrix.cols,
        dtype: "f32le".to_string(),
        row_ids: row_ids.to_vec(),
        col_ids: col_ids.to_vec(),
    };
    let json = serde_json::to_vec_pretty(&sidecar).expect("sidecar serializes");
    fs::write(sidecar_path(path), json).map_err(|source| MatrixError::Io {
        path: sidecar_path(path),
        source,
    })
}

pub fn read_matrix<T: Scalar>(path: &Path) -> Result<(Matrix<T>, MatrixSidecar), MatrixError> {
    let sc_path = sidecar_path(path);
    let raw = fs::read(&sc_path).map_err(|source| MatrixError::Io {
        path: sc_path.clone(),
        source,
    })?;
    let sidecar: MatrixSidecar =
        serde_json::from_slice(&raw).map_err(|source| MatrixError::Sidecar { path: sc_path, source })?;
    let bytes = fs::read(path).map_err(|source| MatrixError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let expected = sidecar.rows * sidecar.cols * 4;
    if bytes.len() != expected {
        return Err(MatrixError::Size {
            path: path.to_path_buf(),
            found: bytes.len(),
            expected,
        });
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| T::of(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
        .collect();
    let m = Matrix::from_vec(sidecar.rows, sidecar.cols, data)?;
    Ok((m, sidecar))
}
