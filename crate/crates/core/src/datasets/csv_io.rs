use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::table::{Column, ColumnData, Provenance, TabularDataset, Task};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    #[default]
    Regression,
    /// Integer class indices, or string labels if the target is declared
    /// categorical (indexed in sorted order).
    Classification,
}

/// How to interpret the columns of a CSV file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSchema {
    pub target: String,
    #[serde(default)]
    pub categorical: Vec<String>,
    #[serde(default)]
    pub task: TargetKind,
}

impl CsvSchema {
    pub fn regression(target: impl Into<String>) -> Self {
        Self {
            target: target.into(),
            categorical: vec![],
            task: TargetKind::Regression,
        }
    }
}

fn parse_err(line: u64, column: usize, message: String) -> Error {
    Error::Parse {
        line: line as usize,
        column,
        message,
    }
}

pub fn csv_read(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<TabularDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

/// Reads a header row and data rows; every field must be present.
pub fn read_csv(reader: impl Read, schema: &CsvSchema) -> Result<TabularDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let target_idx = headers
        .iter()
        .position(|h| *h == schema.target)
        .ok_or_else(|| Error::Schema(format!("target column '{}' not in header", schema.target)))?;
    for c in &schema.categorical {
        if !headers.contains(c) {
            return Err(Error::Schema(format!(
                "categorical column '{c}' not in header"
            )));
        }
    }
    let is_cat: Vec<bool> = headers
        .iter()
        .map(|h| schema.categorical.contains(h))
        .collect();
    let mut raw: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    let mut numeric: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            return Err(parse_err(
                line,
                record.len().min(headers.len()) + 1,
                format!("expected {} fields, found {}", headers.len(), record.len()),
            ));
        }
        for (j, field) in record.iter().enumerate() {
            let field = field.trim();
            if field.is_empty() {
                return Err(parse_err(
                    line,
                    j + 1,
                    format!("missing value in column '{}'", headers[j]),
                ));
            }
            if is_cat[j] {
                raw[j].push(field.to_string());
            } else {
                let v: f64 = field.parse().map_err(|_| {
                    parse_err(
                        line,
                        j + 1,
                        format!("'{field}' in column '{}' is not a number", headers[j]),
                    )
                })?;
                if !v.is_finite() {
                    return Err(parse_err(
                        line,
                        j + 1,
                        format!("non-finite value '{field}'"),
                    ));
                }
                numeric[j].push(v);
            }
        }
    }
    let (target, task) = match (schema.task, is_cat[target_idx]) {
        (TargetKind::Regression, false) => {
            (std::mem::take(&mut numeric[target_idx]), Task::Regression)
        }
        (TargetKind::Regression, true) => {
            return Err(Error::Schema(
                "a regression target cannot be categorical".into(),
            ))
        }
        (TargetKind::Classification, true) => {
            let mut labels = raw[target_idx].clone();
            labels.sort();
            labels.dedup();
            let t = raw[target_idx]
                .iter()
                .map(|v| labels.binary_search(v).map_or(0.0, |i| i as f64))
                .collect();
            (
                t,
                Task::Classification {
                    n_classes: labels.len(),
                },
            )
        }
        (TargetKind::Classification, false) => {
            let t = std::mem::take(&mut numeric[target_idx]);
            let n_classes = t.iter().fold(0.0f64, |m, &v| m.max(v)) as usize + 1;
            (t, Task::Classification { n_classes })
        }
    };
    let features = headers
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != target_idx)
        .map(|(j, h)| Column {
            name: h.clone(),
            data: if is_cat[j] {
                ColumnData::Categorical(std::mem::take(&mut raw[j]))
            } else {
                ColumnData::Numeric(std::mem::take(&mut numeric[j]))
            },
        })
        .collect();
    TabularDataset::new(
        features,
        schema.target.clone(),
        target,
        task,
        Provenance {
            source: "csv".into(),
            seed: None,
        },
    )
}

pub fn csv_write(path: impl AsRef<Path>, ds: &TabularDataset) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut buf = std::io::BufWriter::new(file);
    write_csv(&mut buf, ds)?;
    buf.flush().map_err(|e| Error::io(path, e))
}

/// Features then the target. Floats use the shortest representation that
/// parses back to the same value.
pub fn write_csv(writer: impl Write, ds: &TabularDataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = ds.feature_names();
    header.push(ds.target_name());
    w.write_record(&header)?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for r in 0..ds.n_rows() {
        row.clear();
        for c in ds.features() {
            row.push(match &c.data {
                ColumnData::Numeric(v) => v[r].to_string(),
                ColumnData::Categorical(v) => v[r].clone(),
            });
        }
        row.push(ds.target()[r].to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}
