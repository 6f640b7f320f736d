// SPDX-License-Identifier: Apache-2.0

//! CSV readers and writers for features, labels and matrices.
//!
//! Feature files hold one point per row as comma-separated reals. Label
//! files hold one integer per row, `-1` meaning unlabeled. Both accept an
//! optional header line, detected by the first row failing to parse.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::Dataset;
use crate::numerics::Matrix;

fn read_records<R: Read>(reader: R) -> Result<Vec<csv::StringRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        records.push(rec);
    }
    Ok(records)
}

fn parse_reals(rec: &csv::StringRecord) -> Option<Vec<f64>> {
    rec.iter().map(|f| f.parse::<f64>().ok()).collect()
}

pub fn parse_features<R: Read>(reader: R) -> Result<Dataset> {
    let records = read_records(reader)?;
    let skip = match records.first() {
        Some(first) if parse_reals(first).is_none() => 1,
        _ => 0,
    };
    let mut rows = Vec::with_capacity(records.len());
    for (line, rec) in records.iter().enumerate().skip(skip) {
        let row = parse_reals(rec).ok_or_else(|| {
            Error::Validation(format!("feature row {} is not a list of numbers", line + 1))
        })?;
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "feature row {} has a non-finite value",
                line + 1
            )));
        }
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    if let Some((i, _)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
        return Err(Error::Validation(format!(
            "feature row {} has a different column count than the first row",
            i + 1 + skip
        )));
    }
    Dataset::new(Matrix::from_rows(&rows)?)
}

/// Labels with `-1` as unlabeled.
pub fn parse_labels<R: Read>(reader: R) -> Result<Vec<Option<usize>>> {
    let records = read_records(reader)?;
    let skip = match records.first() {
        Some(first) if first.get(0).and_then(|f| f.parse::<i64>().ok()).is_none() => 1,
        _ => 0,
    };
    records
        .iter()
        .enumerate()
        .skip(skip)
        .map(|(line, rec)| {
            if rec.len() != 1 {
                return Err(Error::Validation(format!(
                    "label row {} must hold one integer",
                    line + 1
                )));
            }
            match rec[0].parse::<i64>() {
                Ok(-1) => Ok(None),
                Ok(v) if v >= 0 => Ok(Some(v as usize)),
                _ => Err(Error::Validation(format!(
                    "bad label {:?} on row {}",
                    &rec[0],
                    line + 1
                ))),
            }
        })
        .collect()
}

/// Ground-truth classes; unlabeled markers are rejected.
pub fn parse_truth<R: Read>(reader: R) -> Result<Vec<usize>> {
    parse_labels(reader)?
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            l.ok_or_else(|| Error::Validation(format!("truth row {} is unlabeled", i + 1)))
        })
        .collect()
}

pub fn read_features(path: &Path) -> Result<Dataset> {
    parse_features(File::open(path)?)
}

pub fn read_labels(path: &Path) -> Result<Vec<Option<usize>>> {
    parse_labels(File::open(path)?)
}

pub fn read_truth(path: &Path) -> Result<Vec<usize>> {
    parse_truth(File::open(path)?)
}

pub fn write_matrix_csv<W: Write>(out: W, m: &Matrix) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    for r in 0..m.rows() {
        w.write_record(m.row(r).iter().map(|v| format!("{v:?}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_matrix_file(path: &Path, m: &Matrix) -> Result<()> {
    write_matrix_csv(BufWriter::new(File::create(path)?), m)
}

/// One label per line, `-1` for `None`.
pub fn write_labels<W: Write>(mut out: W, labels: &[Option<usize>]) -> Result<()> {
    for l in labels {
        match l {
            Some(c) => writeln!(out, "{c}")?,
            None => writeln!(out, "-1")?,
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_labels_file(path: &Path, labels: &[Option<usize>]) -> Result<()> {
    write_labels(BufWriter::new(File::create(path)?), labels)
}
