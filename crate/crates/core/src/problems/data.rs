//! Dataset ingestion: numeric CSV and the CIFAR-10 binary format.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::SeededRng;

pub const CIFAR10_IMAGE_BYTES: usize = 3072;
pub const CIFAR10_RECORD_BYTES: usize = CIFAR10_IMAGE_BYTES + 1;

/// `n × d` feature matrix stored row-major, plus one label per row.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetMatrix {
    n: usize,
    d: usize,
    features: Vec<f64>,
    labels: Vec<f64>,
}

impl DatasetMatrix {
    pub fn new(n: usize, d: usize, features: Vec<f64>, labels: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if features.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                got: features.len(),
            });
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: labels.len(),
            });
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse {
                row: pos / d.max(1) + 1,
                col: pos % d.max(1) + 1,
                message: "non-finite value".into(),
            });
        }
        if let Some(row) = labels.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse {
                row: row + 1,
                col: d + 1,
                message: "non-finite label".into(),
            });
        }
        Ok(Self {
            n,
            d,
            features,
            labels,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    /// Keeps only the listed rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(rows.len() * self.d);
        let mut labels = Vec::with_capacity(rows.len());
        for &r in rows {
            features.extend_from_slice(self.row(r));
            labels.push(self.labels[r]);
        }
        Self::new(rows.len(), self.d, features, labels)
    }

    /// Splits off a held-out set of `round(fraction·n)` rows chosen by a
    /// seeded shuffle. Returns `(train, heldout)`.
    pub fn split_holdout(&self, fraction: f64, rng: &mut SeededRng) -> Result<(Self, Self)> {
        if !(0.0..1.0).contains(&fraction) || fraction == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "holdout_fraction must lie in (0, 1), got {fraction}"
            )));
        }
        let held = ((self.n as f64) * fraction).round() as usize;
        if held == 0 || held >= self.n {
            return Err(Error::InvalidArgument(format!(
                "holdout_fraction {fraction} leaves an empty split for n={}",
                self.n
            )));
        }
        let mut order = rng.sample_indices(self.n, self.n)?;
        let heldout = order.split_off(self.n - held);
        Ok((self.select(&order)?, self.select(&heldout)?))
    }
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<DatasetMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(BufReader::new(file))
}

/// Parses a rectangular numeric CSV whose last column is the label. A first
/// row in which every cell is non-numeric is taken as a header. Positions in
/// errors are 1-based and count the header row.
pub fn parse_csv<R: Read>(reader: R) -> Result<DatasetMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut width: Option<usize> = None;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let row = k + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            col: 0,
            message: e.to_string(),
        })?;
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        if k == 0 && record.iter().all(|c| c.parse::<f64>().is_err()) {
            width = Some(record.len());
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::RaggedRow {
                    row,
                    expected: w,
                    found: record.len(),
                })
            }
            _ => {}
        }
        if record.len() < 2 {
            return Err(Error::Parse {
                row,
                col: 1,
                message: "need at least one feature column and a label column".into(),
            });
        }
        let last = record.len() - 1;
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                col: c + 1,
                message: format!("not a number: {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    col: c + 1,
                    message: format!("non-finite value: {cell:?}"),
                });
            }
            if c == last {
                labels.push(v);
            } else {
                features.push(v);
            }
        }
    }
    let n = labels.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let d = features.len() / n;
    DatasetMatrix::new(n, d, features, labels)
}

/// Reads CIFAR-10 binary records (1 label byte in `0..=9` followed by 3072
/// pixel bytes). Pixels are scaled to `[0, 1]` by `/255`. At most `limit`
/// records are read.
pub fn load_cifar10_binary(path: impl AsRef<Path>, limit: Option<usize>) -> Result<DatasetMatrix> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    if limit == Some(0) {
        return Err(Error::EmptyDataset);
    }
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(io_err)?;
    parse_cifar10_binary(&bytes, limit)
}

pub fn parse_cifar10_binary(bytes: &[u8], limit: Option<usize>) -> Result<DatasetMatrix> {
    let available = bytes.len().div_ceil(CIFAR10_RECORD_BYTES);
    let count = limit.map_or(available, |l| l.min(available));
    if count == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut features = Vec::with_capacity(count * CIFAR10_IMAGE_BYTES);
    let mut labels = Vec::with_capacity(count);
    for (record, chunk) in bytes.chunks(CIFAR10_RECORD_BYTES).take(count).enumerate() {
        if chunk.len() != CIFAR10_RECORD_BYTES {
            return Err(Error::TruncatedRecord {
                record,
                expected: CIFAR10_RECORD_BYTES,
                found: chunk.len(),
            });
        }
        let label = chunk[0];
        if label > 9 {
            return Err(Error::InvalidLabel {
                row: record + 1,
                label: label as f64,
                reason: "CIFAR-10 label byte must be in 0..=9",
            });
        }
        labels.push(label as f64);
        features.extend(chunk[1..].iter().map(|&p| p as f64 / 255.0));
    }
    DatasetMatrix::new(count, CIFAR10_IMAGE_BYTES, features, labels)
}
