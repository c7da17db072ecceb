//! CSV and JSON file plumbing. Matrices on disk are sample-major with a
//! `f0,f1,...` header; in memory they are feature-major.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use l0cca::{DataMatrix, DenseMatrix};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Reads a sample-major CSV into a `D×N` matrix.
pub fn read_matrix(path: &Path) -> CliResult<DenseMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let width = rdr.headers().map_err(|e| csv_error(path, e))?.len();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::data(path, format!("row {}: {e}", line + 1)))?;
        if row.len() != width {
            return Err(CliError::data(path, format!("row {} has {} fields, header has {width}", line + 1, row.len())));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(CliError::data(path, format!("row {} has a non-finite value", line + 1)));
        }
        rows.push(row);
    }
    if rows.is_empty() || width == 0 {
        return Err(CliError::data(path, "no data"));
    }
    Ok(DenseMatrix::from_rows(&rows)?.transpose())
}

/// Reads a view and centers it.
pub fn read_view(path: &Path) -> CliResult<DataMatrix> {
    Ok(DataMatrix::centered(read_matrix(path)?)?)
}

/// Reads a one-column CSV of non-negative integer labels.
pub fn read_labels(path: &Path) -> CliResult<Vec<usize>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        if rec.len() != 1 {
            return Err(CliError::data(path, format!("row {}: expected one label", line + 1)));
        }
        out.push(
            rec[0]
                .trim()
                .parse::<usize>()
                .map_err(|e| CliError::data(path, format!("row {}: {e}", line + 1)))?,
        );
    }
    if out.is_empty() {
        return Err(CliError::data(path, "no labels"));
    }
    Ok(out)
}

/// Writes a `D×N` matrix as sample-major CSV.
pub fn write_matrix(path: &Path, m: &DenseMatrix) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let header: Vec<String> = (0..m.rows()).map(|i| format!("f{i}")).collect();
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for j in 0..m.cols() {
        w.write_record(m.col(j).iter().map(|v| v.to_string()))
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_labels(path: &Path, labels: &[usize]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["label"]).map_err(|e| csv_error(path, e))?;
    for l in labels {
        w.write_record([l.to_string()]).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(l0cca::Error::from)?;
    s.push('\n');
    fs::write(path, s).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let s = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&s).map_err(|e| CliError::data(path, e.to_string()))
}

/// Writes one JSON value per line.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> CliResult<()> {
    let appender = JsonlAppender::create(path)?;
    for r in records {
        appender.append(r)?;
    }
    Ok(())
}

pub fn write_csv_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Line-at-a-time JSONL writer that can be shared between worker threads.
/// Each record is written and flushed under the lock, so lines never interleave.
pub struct JsonlAppender {
    path: PathBuf,
    file: Mutex<BufWriter<File>>,
}

impl JsonlAppender {
    /// Creates (or truncates) the file.
    pub fn create(path: &Path) -> CliResult<Self> {
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(true)
            .open(path)
            .map_err(|e| CliError::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            file: Mutex::new(BufWriter::new(file)),
        })
    }

    pub fn append<T: Serialize>(&self, record: &T) -> CliResult<()> {
        let mut line = serde_json::to_string(record).map_err(l0cca::Error::from)?;
        line.push('\n');
        let mut f = self.file.lock().unwrap_or_else(|p| p.into_inner());
        f.write_all(line.as_bytes())
            .and_then(|_| f.flush())
            .map_err(|e| CliError::io(&self.path, e))
    }
}

/// Reads every line of a JSONL file.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let s = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    s.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| CliError::data(path, format!("line {}: {e}", i + 1))))
        .collect()
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path, io),
            other => CliError::data(path, format!("{other:?}")),
        }
    } else {
        CliError::data(path, e.to_string())
    }
}
