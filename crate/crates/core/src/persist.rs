//! Plain-text matrix files.
//!
//! ```text
//! # free comment
//! kind learning-filter
//! dt 0.01
//! matrix taps 1 3
//! 0.5 -1 2
//! ```
//!
//! Each `matrix NAME ROWS COLS` header is followed by `ROWS` lines of
//! `COLS` values. Values use the shortest round-trip decimal form, so a
//! write/read cycle is exact.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::error::ErrorCategory;
use crate::learnfilter::LearningFilter;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Format {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("missing entry {0}")]
    Missing(String),
    #[error("entry {name} has shape {got:?}, expected {expected:?}")]
    Shape {
        name: String,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("file kind {got}, expected {expected}")]
    Kind { expected: String, got: String },
    #[error("csv {path}: {msg}")]
    Csv { path: String, msg: String },
}

impl PersistError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        PersistError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            PersistError::Io { .. } => ErrorCategory::Io,
            _ => ErrorCategory::Config,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatrixFile {
    pub kind: String,
    pub dt: Option<f64>,
    pub entries: Vec<(String, DMatrix<f64>)>,
}

impl MatrixFile {
    pub fn new(kind: &str) -> Self {
        Self {
            kind: kind.to_string(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, name: &str, m: DMatrix<f64>) {
        self.entries.push((name.to_string(), m));
    }

    pub fn push_scalar(&mut self, name: &str, v: f64) {
        self.push(name, DMatrix::from_element(1, 1, v));
    }

    pub fn get(&self, name: &str) -> Result<&DMatrix<f64>, PersistError> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| PersistError::Missing(name.to_string()))
    }

    pub fn get_shaped(
        &self,
        name: &str,
        rows: usize,
        cols: usize,
    ) -> Result<&DMatrix<f64>, PersistError> {
        let m = self.get(name)?;
        if m.shape() != (rows, cols) {
            return Err(PersistError::Shape {
                name: name.to_string(),
                expected: (rows, cols),
                got: m.shape(),
            });
        }
        Ok(m)
    }

    pub fn scalar(&self, name: &str) -> Result<f64, PersistError> {
        Ok(self.get_shaped(name, 1, 1)?[(0, 0)])
    }

    pub fn expect_kind(&self, kind: &str) -> Result<(), PersistError> {
        if self.kind != kind {
            return Err(PersistError::Kind {
                expected: kind.to_string(),
                got: self.kind.clone(),
            });
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "kind {}", self.kind).unwrap();
        if let Some(dt) = self.dt {
            writeln!(s, "dt {dt}").unwrap();
        }
        for (name, m) in &self.entries {
            writeln!(s, "matrix {name} {} {}", m.nrows(), m.ncols()).unwrap();
            for i in 0..m.nrows() {
                let row: Vec<String> = (0..m.ncols()).map(|j| format!("{}", m[(i, j)])).collect();
                writeln!(s, "{}", row.join(" ")).unwrap();
            }
        }
        s
    }

    pub fn parse(text: &str, path: &str) -> Result<Self, PersistError> {
        let fail = |line: usize, msg: &str| PersistError::Format {
            path: path.to_string(),
            line,
            msg: msg.to_string(),
        };
        let mut out = MatrixFile::default();
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        while let Some((ln, line)) = lines.next() {
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("kind") => {
                    out.kind = parts
                        .next()
                        .ok_or_else(|| fail(ln, "kind without value"))?
                        .to_string()
                }
                Some("dt") => {
                    let v = parts.next().ok_or_else(|| fail(ln, "dt without value"))?;
                    out.dt = Some(v.parse().map_err(|_| fail(ln, "bad dt value"))?);
                }
                Some("matrix") => {
                    let name = parts
                        .next()
                        .ok_or_else(|| fail(ln, "matrix without name"))?;
                    let rows: usize = parts
                        .next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| fail(ln, "bad row count"))?;
                    let cols: usize = parts
                        .next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| fail(ln, "bad column count"))?;
                    let mut data = Vec::with_capacity(rows * cols);
                    for _ in 0..rows {
                        let (rl, row) = lines.next().ok_or_else(|| fail(ln, "matrix truncated"))?;
                        let vals: Result<Vec<f64>, _> =
                            row.split_whitespace().map(str::parse).collect();
                        let vals = vals.map_err(|_| fail(rl, "bad number"))?;
                        if vals.len() != cols {
                            return Err(fail(
                                rl,
                                &format!("expected {cols} values, got {}", vals.len()),
                            ));
                        }
                        data.extend(vals);
                    }
                    out.push(name, DMatrix::from_row_slice(rows, cols, &data));
                }
                _ => return Err(fail(ln, "unknown directive")),
            }
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<(), PersistError> {
        create_parent(path)?;
        std::fs::write(path, self.to_text()).map_err(|e| PersistError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, PersistError> {
        let text = std::fs::read_to_string(path).map_err(|e| PersistError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }
}

fn create_parent(path: &Path) -> Result<(), PersistError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            std::fs::create_dir_all(dir).map_err(|e| PersistError::io(dir, e))
        }
        _ => Ok(()),
    }
}

fn csv_error(path: &Path, e: csv::Error) -> PersistError {
    let msg = e.to_string();
    match e.into_kind() {
        csv::ErrorKind::Io(io) => PersistError::io(path, io),
        _ => PersistError::Csv {
            path: path.display().to_string(),
            msg,
        },
    }
}

/// Writes `rows` with a header derived from the row type.
pub fn write_csv<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<(), PersistError> {
    let csv_err = |e| csv_error(path, e);
    create_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| PersistError::io(path, e))
}

pub fn read_csv<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, PersistError> {
    let csv_err = |e| csv_error(path, e);
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

impl LearningFilter {
    pub const KIND: &'static str = "learning-filter";

    pub fn to_matrix_file(&self) -> MatrixFile {
        let mut f = MatrixFile::new(Self::KIND);
        f.dt = Some(self.dt);
        f.push(
            "taps",
            DMatrix::from_row_slice(1, self.taps.len(), &self.taps),
        );
        let r = self.realization();
        f.push("A_L", r.a.clone());
        f.push("B_L", r.b.clone());
        f.push("C_L", r.c.clone());
        f.push("D_L", r.d.clone());
        f
    }

    pub fn from_matrix_file(f: &MatrixFile) -> Result<Self, PersistError> {
        f.expect_kind(Self::KIND)?;
        let taps = f.get("taps")?;
        if taps.nrows() != 1 || taps.ncols() == 0 {
            return Err(PersistError::Shape {
                name: "taps".into(),
                expected: (1, taps.ncols().max(1)),
                got: taps.shape(),
            });
        }
        let dt = f.dt.ok_or_else(|| PersistError::Missing("dt".into()))?;
        Ok(LearningFilter::new(taps.iter().copied().collect(), dt))
    }

    pub fn save(&self, path: &Path) -> Result<(), PersistError> {
        self.to_matrix_file().save(path)
    }

    pub fn load(path: &Path) -> Result<Self, PersistError> {
        Self::from_matrix_file(&MatrixFile::load(path)?)
    }
}
