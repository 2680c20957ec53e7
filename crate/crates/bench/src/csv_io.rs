//! CSV persistence. Reals are written with 17 significant digits so that parsing
//! recovers the exact values.
//!
//! Record schema: `problem,method,run,iters,fevals,time_ms,status,f1..fm`.
//! Summary schema: `problem,method,mean_iter,mean_feval,mean_time_ms,converged_fraction`.

use std::fs::File;
use std::path::Path;

use nalgebra::DVector;

use crate::error::{BenchError, Result};
use crate::records::{RunRecord, Summary};

const RECORD_FIELDS: [&str; 7] = ["problem", "method", "run", "iters", "fevals", "time_ms", "status"];
const SUMMARY_FIELDS: [&str; 6] = ["problem", "method", "mean_iter", "mean_feval", "mean_time_ms", "converged_fraction"];

/// `v` in scientific notation with 17 significant digits.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| BenchError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> BenchError + '_ {
    move |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_rows(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(row.into_iter().map(format_real)).map_err(csv_err(path))?;
    }
    finish(w, path)
}

/// Writes run records. Records with fewer objectives than the widest one leave
/// the trailing value cells empty.
pub fn export_records(records: &[RunRecord], path: &Path) -> Result<()> {
    let m = records.iter().map(|r| r.final_values.len()).max().unwrap_or(0);
    let mut w = writer(path)?;
    let header = RECORD_FIELDS.iter().map(|s| s.to_string()).chain((1..=m).map(|i| format!("f{i}")));
    w.write_record(header).map_err(csv_err(path))?;
    for r in records {
        let mut row = vec![
            r.problem.clone(),
            r.method.clone(),
            r.run_index.to_string(),
            r.iterations.to_string(),
            r.fevals.to_string(),
            format_real(r.time_ms),
            r.status.to_string(),
        ];
        row.extend(r.final_values.iter().map(|v| format_real(*v)));
        row.resize(RECORD_FIELDS.len() + m, String::new());
        w.write_record(&row).map_err(csv_err(path))?;
    }
    finish(w, path)
}

pub fn export_summaries(summaries: &[Summary], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(SUMMARY_FIELDS).map_err(csv_err(path))?;
    for s in summaries {
        w.write_record([
            s.problem.clone(),
            s.method.clone(),
            format_real(s.mean_iter),
            format_real(s.mean_feval),
            format_real(s.mean_time_ms),
            format_real(s.converged_fraction),
        ])
        .map_err(csv_err(path))?;
    }
    finish(w, path)
}

fn reader(path: &Path, expected: &[&str]) -> Result<(csv::Reader<File>, usize)> {
    let file = File::open(path).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut r = csv::ReaderBuilder::new().flexible(false).from_reader(file);
    let header = r.headers().map_err(csv_err(path))?.clone();
    if header.len() < expected.len() || header.iter().zip(expected).any(|(a, b)| a != *b) {
        return Err(BenchError::Parse {
            path: path.to_path_buf(),
            message: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    Ok((r, header.len() - expected.len()))
}

fn field<T: std::str::FromStr>(row: &csv::StringRecord, i: usize, path: &Path) -> Result<T> {
    let raw = row.get(i).unwrap_or("");
    raw.parse().map_err(|_| BenchError::Parse {
        path: path.to_path_buf(),
        message: format!("cannot parse `{raw}` in column {}", i + 1),
    })
}

/// Reads records written by [`export_records`]. Points are not stored and come back empty.
pub fn parse_records(path: &Path) -> Result<Vec<RunRecord>> {
    let (mut r, m) = reader(path, &RECORD_FIELDS)?;
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(csv_err(path))?;
        let mut values = Vec::with_capacity(m);
        for i in RECORD_FIELDS.len()..RECORD_FIELDS.len() + m {
            if !row.get(i).unwrap_or("").is_empty() {
                values.push(field::<f64>(&row, i, path)?);
            }
        }
        out.push(RunRecord {
            problem: row[0].to_string(),
            method: row[1].to_string(),
            run_index: field(&row, 2, path)?,
            iterations: field(&row, 3, path)?,
            fevals: field(&row, 4, path)?,
            time_ms: field(&row, 5, path)?,
            status: field(&row, 6, path)?,
            final_values: DVector::from_vec(values),
            final_point: DVector::zeros(0),
            initial_point: DVector::zeros(0),
        });
    }
    Ok(out)
}

pub fn parse_summaries(path: &Path) -> Result<Vec<Summary>> {
    let (mut r, _) = reader(path, &SUMMARY_FIELDS)?;
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(csv_err(path))?;
        out.push(Summary {
            problem: row[0].to_string(),
            method: row[1].to_string(),
            mean_iter: field(&row, 2, path)?,
            mean_feval: field(&row, 3, path)?,
            mean_time_ms: field(&row, 4, path)?,
            converged_fraction: field(&row, 5, path)?,
        });
    }
    Ok(out)
}
