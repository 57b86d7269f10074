use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Origin of one feature row: which virtual reservoir, port and tap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureLabel {
    pub boundary: usize,
    pub frequency: usize,
    pub port: usize,
    pub tap: usize,
}

impl fmt::Display for FeatureLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "b{}.f{}.p{}.t{}",
            self.boundary, self.frequency, self.port, self.tap
        )
    }
}

impl FromStr for FeatureLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split('.').collect();
        let field = |i: usize, tag: char| -> std::result::Result<usize, String> {
            parts
                .get(i)
                .and_then(|p| p.strip_prefix(tag))
                .and_then(|p| p.parse().ok())
                .ok_or_else(|| format!("bad feature label `{s}` (expected b<i>.f<i>.p<i>.t<i>)"))
        };
        if parts.len() != 4 {
            return Err(format!(
                "bad feature label `{s}` (expected b<i>.f<i>.p<i>.t<i>)"
            ));
        }
        Ok(Self {
            boundary: field(0, 'b')?,
            frequency: field(1, 'f')?,
            port: field(2, 'p')?,
            tap: field(3, 't')?,
        })
    }
}

pub const BIAS_LABEL: &str = "bias";

/// Concatenated reservoir outputs: `N_r` feature rows plus a trailing bias
/// row of ones, one column per task step.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    data: Array2<T>,
    labels: Vec<FeatureLabel>,
}

impl<T: Scalar> FeatureMatrix<T> {
    /// `features` excludes the bias row; it is appended here.
    pub fn from_features(features: Array2<T>, labels: Vec<FeatureLabel>) -> Result<Self> {
        let cols = features.ncols();
        let bias = Array2::from_elem((1, cols), T::one());
        let data = ndarray::concatenate(Axis(0), &[features.view(), bias.view()])
            .map_err(|e| Error::invalid(e.to_string()))?;
        Self::from_data(data, labels)
    }

    /// `data` must already end in the bias row.
    pub fn from_data(data: Array2<T>, labels: Vec<FeatureLabel>) -> Result<Self> {
        if data.nrows() != labels.len() + 1 {
            return Err(Error::DimensionMismatch {
                left: format!("{} data rows", data.nrows()),
                right: format!("{} labels + bias", labels.len()),
            });
        }
        if data.row(data.nrows() - 1).iter().any(|v| *v != T::one()) {
            return Err(Error::invalid("last row must be the all-ones bias row"));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite feature at flat index {i}"
            )));
        }
        Ok(Self { data, labels })
    }

    /// Number of feature rows, bias excluded.
    pub fn n_features(&self) -> usize {
        self.labels.len()
    }

    pub fn n_rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &Array2<T> {
        &self.data
    }

    pub fn labels(&self) -> &[FeatureLabel] {
        &self.labels
    }

    /// Keeps the given feature rows (by index, bias excluded) plus the bias.
    pub fn select_features(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&r) = rows.iter().find(|&&r| r >= self.n_features()) {
            return Err(Error::invalid(format!("feature row {r} out of range")));
        }
        let mut idx = rows.to_vec();
        idx.push(self.n_features());
        Ok(Self {
            data: self.data.select(Axis(0), &idx),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
        })
    }

    /// Columns `[start, end)`.
    pub fn columns(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end > self.n_cols() {
            return Err(Error::invalid(format!(
                "columns {start}..{end} out of range for {}",
                self.n_cols()
            )));
        }
        Ok(Self {
            data: self.data.slice(ndarray::s![.., start..end]).to_owned(),
            labels: self.labels.clone(),
        })
    }

    /// Header `feature,0,1,...`; one row per feature labelled
    /// `b<i>.f<i>.p<i>.t<i>`, then the `bias` row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["feature".to_string()];
        header.extend((0..self.n_cols()).map(|c| c.to_string()));
        w.write_record(&header)?;
        for (r, row) in self.data.rows().into_iter().enumerate() {
            let label = self
                .labels
                .get(r)
                .map_or_else(|| BIAS_LABEL.to_string(), |l| l.to_string());
            let mut rec = vec![label];
            rec.extend(row.iter().map(|v| format!("{v:e}")));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, origin: &Path) -> Result<Self> {
        let perr = |line: usize, msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            msg,
        };
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut records = r.records();
        let header = records
            .next()
            .ok_or_else(|| perr(1, "empty file".into()))??;
        if header.get(0) != Some("feature") {
            return Err(perr(1, "header must start with `feature`".into()));
        }
        let n_cols = header.len() - 1;
        let mut labels = Vec::new();
        let mut values: Vec<T> = Vec::new();
        let mut saw_bias = false;
        for (i, rec) in records.enumerate() {
            let line = i + 2;
            let rec = rec?;
            if saw_bias {
                return Err(perr(line, "rows after the bias row".into()));
            }
            if rec.len() != n_cols + 1 {
                return Err(perr(
                    line,
                    format!("expected {} fields, found {}", n_cols + 1, rec.len()),
                ));
            }
            let label = &rec[0];
            if label == BIAS_LABEL {
                saw_bias = true;
            } else {
                labels.push(label.parse::<FeatureLabel>().map_err(|m| perr(line, m))?);
            }
            for (c, field) in rec.iter().skip(1).enumerate() {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|e| perr(line, format!("column {c}: {e}")))?;
                if !v.is_finite() {
                    return Err(perr(line, format!("column {c}: non-finite value")));
                }
                if saw_bias && v != 1.0 {
                    return Err(perr(line, format!("bias column {c} is {v}, expected 1")));
                }
                values.push(T::lit(v));
            }
        }
        if !saw_bias {
            return Err(perr(labels.len() + 2, "missing bias row".into()));
        }
        let data = Array2::from_shape_vec((labels.len() + 1, n_cols), values)
            .map_err(|e| perr(0, e.to_string()))?;
        Self::from_data(data, labels)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(f), path)
    }
}
