//! Dataset CSV ingestion and the JSON fit document.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::model::{Dataset, MixtureFit};
use serde::{Deserialize, Serialize};
use std::io::Read;
use std::path::Path;

/// Read a dataset: header row, a `y` column first, covariate columns after,
/// decimal-point floats, no missing values.
pub fn read_dataset_csv(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_dataset(file)
}

pub fn read_dataset(reader: impl Read) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::BadSchema(e.to_string()))?.clone();
    if headers.is_empty() || headers.get(0) != Some("y") {
        return Err(Error::BadSchema("first column must be named `y`".into()));
    }
    let p = headers.len() - 1;
    let mut y = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::BadSchema(e.to_string()))?;
        if record.len() != p + 1 {
            return Err(Error::BadSchema(format!(
                "row {} has {} fields, expected {}",
                line + 2,
                record.len(),
                p + 1
            )));
        }
        let parse = |idx: usize| -> Result<f64> {
            let raw = record.get(idx).unwrap_or("").trim();
            if raw.is_empty() {
                return Err(Error::BadSchema(format!("missing value at row {}, column {}", line + 2, idx + 1)));
            }
            raw.parse::<f64>().map_err(|_| {
                Error::BadSchema(format!("non-numeric value {raw:?} at row {}, column {}", line + 2, idx + 1))
            })
        };
        y.push(parse(0)?);
        let mut row = Vec::with_capacity(p);
        for j in 0..p {
            row.push(parse(j + 1)?);
        }
        rows.push(row);
    }
    if y.is_empty() {
        return Err(Error::BadSchema("dataset has no data rows".into()));
    }
    let x = if p == 0 { Mat::zeros(y.len(), 0) } else { Mat::from_rows(&rows) };
    Dataset::new(y, x)
}

/// Write a dataset in the same schema, with x1..xp covariate headers.
pub fn write_dataset_csv(path: &Path, data: &Dataset) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    let mut header = vec!["y".to_string()];
    for j in 0..data.p() {
        header.push(format!("x{}", j + 1));
    }
    wtr.write_record(&header)?;
    for i in 0..data.n() {
        let mut record = vec![data.y()[i].to_string()];
        for v in data.x_row(i) {
            record.push(v.to_string());
        }
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Extra block carried by least squares fits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LseSummary {
    pub mu: f64,
    /// Asymptotic covariance of sqrt(n)(theta - theta*), row-major nested.
    pub covariance: Vec<Vec<f64>>,
    pub mu_grid: Vec<f64>,
    pub sse: f64,
}

/// Versioned JSON document wrapping a fit; profile and least squares blocks
/// appear for the marginal methods.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitDocument {
    pub schema_version: u32,
    pub method: String,
    #[serde(flatten)]
    pub fit: MixtureFit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lse: Option<LseSummary>,
}

pub const SCHEMA_VERSION: u32 = 1;

impl FitDocument {
    pub fn new(method: &str, fit: MixtureFit) -> Self {
        FitDocument {
            schema_version: SCHEMA_VERSION,
            method: method.into(),
            fit,
            profile: None,
            lse: None,
        }
    }
}

pub fn write_fit_document(path: &Path, doc: &FitDocument) -> Result<()> {
    let json = serde_json::to_string_pretty(doc)?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn read_fit_document(path: &Path) -> Result<FitDocument> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::BadFitFile(e.to_string()))?;
    let doc: FitDocument =
        serde_json::from_str(&raw).map_err(|e| Error::BadFitFile(e.to_string()))?;
    doc.fit.prior.validate().map_err(|e| Error::BadFitFile(e.to_string()))?;
    doc.fit.signal.validate().map_err(|e| Error::BadFitFile(e.to_string()))?;
    doc.fit.null.validate().map_err(|e| Error::BadFitFile(e.to_string()))?;
    if doc.fit.lfdr.iter().any(|l| !(0.0..=1.0).contains(l)) {
        return Err(Error::BadFitFile("lfdr entries outside [0,1]".into()));
    }
    Ok(doc)
}
