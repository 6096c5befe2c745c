//! Dataset ingestion: CSV files (features then an integer label per row) and
//! the seeded synthetic generators.

use std::path::{Path, PathBuf};

use afapprox_core::nn::{blobs, rings, Dataset};

use crate::error::{Error, Result};

/// Fraction of every dataset used for training and calibration.
pub const TRAIN_FRACTION: f64 = 0.75;

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Blobs { n: usize, dim: usize, classes: usize, seed: u64 },
    Rings { n: usize, classes: usize, seed: u64 },
    Csv(PathBuf),
}

impl DataSource {
    /// `blobs` and `rings` name the generators; anything else is a path.
    pub fn parse(name: &str, n: usize, dim: usize, classes: usize, seed: u64) -> Self {
        match name {
            "blobs" => DataSource::Blobs { n, dim, classes, seed },
            "rings" => DataSource::Rings { n, classes, seed },
            path => DataSource::Csv(PathBuf::from(path)),
        }
    }

    pub fn load(&self) -> Result<Dataset> {
        match self {
            DataSource::Blobs { n, dim, classes, seed } => Ok(blobs(*n, *dim, *classes, *seed)),
            DataSource::Rings { n, classes, seed } => Ok(rings(*n, *classes, *seed)),
            DataSource::Csv(path) => read_csv(path),
        }
    }

    /// Train and test splits.
    pub fn load_split(&self) -> Result<(Dataset, Dataset)> {
        Ok(self.load()?.split(TRAIN_FRACTION))
    }

    pub fn path(&self) -> Option<&Path> {
        match self {
            DataSource::Csv(p) => Some(p),
            _ => None,
        }
    }
}

/// Reads a headerless CSV. A first row with no numeric cells is taken as a
/// header and skipped. Rows and columns in errors are 1-based.
pub fn read_csv(path: &Path) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row = i + 1;
        if i == 0 && rec.iter().all(|c| c.parse::<f64>().is_err()) {
            continue;
        }
        let bad = |column: usize, reason: String| Error::Csv { path: path.into(), row, column, reason };
        if rec.len() < 2 {
            return Err(bad(1, "need at least one feature and a label".into()));
        }
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => return Err(bad(rec.len().min(w) + 1, format!("expected {w} cells"))),
            _ => {}
        }
        let last = rec.len() - 1;
        let x = rec
            .iter()
            .take(last)
            .enumerate()
            .map(|(j, c)| match c.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(bad(j + 1, format!("non-finite value {c:?}"))),
                Err(_) => Err(bad(j + 1, format!("not a number: {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let label =
            rec[last].parse::<usize>().map_err(|_| bad(last + 1, format!("not a class index: {:?}", &rec[last])))?;
        features.push(x);
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(Error::Csv { path: path.into(), row: 0, column: 0, reason: "no data rows".into() });
    }
    let classes = labels.iter().max().map_or(0, |&m| m + 1);
    Ok(Dataset::new(features, labels, classes)?)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    Error::Csv { path: path.into(), row, column: 0, reason: e.to_string() }
}

pub fn write_csv(path: &Path, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for (x, &y) in data.features.iter().zip(&data.labels) {
        let mut row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        row.push(y.to_string());
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(Error::io(path))
}
