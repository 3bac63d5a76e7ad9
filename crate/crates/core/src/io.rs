//! CSV and JSON persistence for datasets.
//!
//! A dataset is a CSV file with one column per feature followed by the
//! outcome column `Y`. Floats are written in Rust's shortest round-trip form,
//! so reading a written file reproduces every value bit for bit. Synthetic
//! datasets additionally carry a JSON sidecar with their generating design
//! and ground truth.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, GroundTruth};
use crate::error::{Error, Result};
use crate::synthetic::{EnvironmentSpec, GraphKind, OutcomeSpec};

pub const OUTCOME_COLUMN: &str = "Y";

pub fn write_dataset<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = ds.feature_names().iter().map(String::as_str).collect();
    header.push(OUTCOME_COLUMN);
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(ds.p() + 1);
    for i in 0..ds.n() {
        record.clear();
        record.extend(ds.x().row(i).iter().map(|v| v.to_string()));
        record.push(ds.y()[i].to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dataset_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_dataset(ds, File::create(path)?)
}

/// Reads a table whose outcome column is `outcome` and whose features are
/// `features`, or every other column when `features` is `None`.
pub fn read_table<R: Read>(reader: R, outcome: &str, features: Option<&[String]>) -> Result<Dataset> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Column {
                column: name.to_string(),
                message: "missing from header".into(),
            })
    };
    let y_idx = find(outcome)?;
    let names: Vec<String> = match features {
        Some(f) => {
            if let Some(dup) = f.iter().find(|c| c.as_str() == outcome) {
                return Err(Error::Column {
                    column: dup.clone(),
                    message: "is both a feature and the outcome".into(),
                });
            }
            f.to_vec()
        }
        None => header.iter().filter(|h| h.as_str() != outcome).cloned().collect(),
    };
    let x_idx = names.iter().map(|c| find(c)).collect::<Result<Vec<_>>>()?;

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |idx: usize| -> Result<f64> {
            let raw = rec.get(idx).unwrap_or("").trim();
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::Column {
                    column: header[idx].clone(),
                    message: format!("row {}: cannot parse {raw:?} as a finite number", row + 1),
                }),
            }
        };
        for &j in &x_idx {
            xs.push(parse(j)?);
        }
        ys.push(parse(y_idx)?);
    }
    let n = ys.len();
    let x = DMatrix::from_row_slice(n, names.len(), &xs);
    Dataset::new(x, DVector::from_vec(ys), names)
}

/// Reads a file written by [`write_dataset_csv`].
pub fn read_dataset_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    read_table(File::open(path)?, OUTCOME_COLUMN, None)
}

/// Generating design and ground truth of a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub graph: GraphKind,
    pub outcome: OutcomeSpec,
    /// `None` for an unselected sample.
    pub environment: Option<EnvironmentSpec>,
    pub seed: u64,
    pub n: usize,
    pub p: usize,
    #[serde(flatten)]
    pub truth: GroundTruth,
}

impl DatasetMetadata {
    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = File::create(path)?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_reader(File::open(path)?)?)
    }
}

/// Reads a dataset CSV and attaches the ground truth from its sidecar.
pub fn read_dataset_with_metadata(
    csv_path: impl AsRef<Path>,
    json_path: impl AsRef<Path>,
) -> Result<(Dataset, DatasetMetadata)> {
    let ds = read_dataset_csv(csv_path)?;
    let meta = DatasetMetadata::read_json(json_path)?;
    if (meta.n, meta.p) != (ds.n(), ds.p()) {
        return Err(Error::InvalidInput(format!(
            "metadata describes {}x{} data but the CSV holds {}x{}",
            meta.n,
            meta.p,
            ds.n(),
            ds.p()
        )));
    }
    let ds = ds.with_truth(meta.truth.clone())?;
    Ok((ds, meta))
}
