//! Uniformly sampled multi-channel signals and their CSV interchange form.
//!
//! CSV layout: a header row of channel names, then a metadata row whose
//! single field is `#dt=<seconds>`, then one row per sample with one column
//! per channel.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    names: Vec<String>,
    values: Array2<T>,
    dt: f64,
}

impl<T: Scalar> TimeSeries<T> {
    /// Builds a series from a `channels x samples` matrix.
    pub fn new(values: Array2<T>, dt: f64) -> Result<Self> {
        let names = (0..values.nrows()).map(|c| format!("ch{c}")).collect();
        Self::with_names(names, values, dt)
    }

    pub fn with_names(names: Vec<String>, values: Array2<T>, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!(
                "sample period must be > 0, got {dt}"
            )));
        }
        if values.nrows() == 0 {
            return Err(Error::invalid("time series needs at least one channel"));
        }
        if names.len() != values.nrows() {
            return Err(Error::DimensionMismatch {
                left: format!("{} channel names", names.len()),
                right: format!("{} channels", values.nrows()),
            });
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value at flat index {idx}"
            )));
        }
        Ok(Self { names, values, dt })
    }

    pub fn from_channels(names: &[&str], channels: Vec<Vec<T>>, dt: f64) -> Result<Self> {
        let len = channels.first().map_or(0, Vec::len);
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::invalid("channels have unequal lengths"));
        }
        let flat: Vec<T> = channels.into_iter().flatten().collect();
        let values = Array2::from_shape_vec((names.len(), len), flat)
            .map_err(|e| Error::invalid(e.to_string()))?;
        Self::with_names(names.iter().map(|s| s.to_string()).collect(), values, dt)
    }

    pub fn scalar(name: &str, samples: Vec<T>, dt: f64) -> Result<Self> {
        Self::from_channels(&[name], vec![samples], dt)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &Array2<T> {
        &self.values
    }

    pub fn into_values(self) -> Array2<T> {
        self.values
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_channels(&self) -> usize {
        self.values.nrows()
    }

    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.len() as f64
    }

    pub fn channel(&self, c: usize) -> ArrayView1<'_, T> {
        self.values.row(c)
    }

    /// Keeps a subset of channels, in the order given.
    pub fn select_channels(&self, channels: &[usize]) -> Result<Self> {
        if let Some(&c) = channels.iter().find(|&&c| c >= self.n_channels()) {
            return Err(Error::invalid(format!("channel {c} out of range")));
        }
        let values = self.values.select(Axis(0), channels);
        let names = channels.iter().map(|&c| self.names[c].clone()).collect();
        Self::with_names(names, values, self.dt)
    }

    /// Samples `[start, end)` of every channel.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end > self.len() {
            return Err(Error::invalid(format!(
                "slice {start}..{end} out of range for {} samples",
                self.len()
            )));
        }
        let values = self.values.slice(ndarray::s![.., start..end]).to_owned();
        Self::with_names(self.names.clone(), values, self.dt)
    }

    pub fn with_dt(mut self, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!(
                "sample period must be > 0, got {dt}"
            )));
        }
        self.dt = dt;
        Ok(self)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(writer);
        w.write_record(&self.names)?;
        w.write_record([format!("#dt={:e}", self.dt)])?;
        for col in self.values.columns() {
            w.write_record(col.iter().map(|v| format!("{v:e}")))?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, origin: &Path) -> Result<Self> {
        let parse_err = |line: usize, msg: String| Error::Parse {
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
            .ok_or_else(|| parse_err(1, "missing header row".into()))??;
        let names: Vec<String> = header.iter().map(str::to_string).collect();
        let meta = records
            .next()
            .ok_or_else(|| parse_err(2, "missing #dt metadata row".into()))??;
        let dt = meta
            .get(0)
            .and_then(|f| f.strip_prefix("#dt="))
            .ok_or_else(|| parse_err(2, "expected `#dt=<seconds>`".into()))?
            .trim()
            .parse::<f64>()
            .map_err(|e| parse_err(2, format!("bad dt: {e}")))?;
        let mut channels: Vec<Vec<T>> = vec![Vec::new(); names.len()];
        for (i, rec) in records.enumerate() {
            let line = i + 3;
            let rec = rec?;
            if rec.len() != names.len() {
                return Err(parse_err(
                    line,
                    format!("expected {} fields, found {}", names.len(), rec.len()),
                ));
            }
            for (c, field) in rec.iter().enumerate() {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|e| parse_err(line, format!("field {c}: {e}")))?;
                channels[c].push(T::lit(v));
            }
        }
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        Self::from_channels(&refs, channels, dt).map_err(|e| parse_err(0, e.to_string()))
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

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_bad_dt_and_nan() {
        assert!(TimeSeries::new(array![[1.0f64, 2.0]], 0.0).is_err());
        assert!(TimeSeries::new(array![[1.0f64, f64::NAN]], 1.0).is_err());
        assert!(TimeSeries::<f64>::new(Array2::zeros((0, 3)), 1.0).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let ts = TimeSeries::from_channels(
            &["x", "y"],
            vec![vec![0.1f64, -2.5e-7, 3.0], vec![1.0 / 3.0, 0.0, 7.25]],
            1.25e-12,
        )
        .unwrap();
        let mut buf = Vec::new();
        ts.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,y\n#dt=1.25e-12\n"));
        let back = TimeSeries::<f64>::read_csv(buf.as_slice(), Path::new("mem")).unwrap();
        assert_eq!(back, ts);
    }

    #[test]
    fn csv_reports_line_of_bad_row() {
        let text = "a,b\n#dt=1\n1,2\n3\n";
        let err = TimeSeries::<f64>::read_csv(text.as_bytes(), Path::new("t.csv")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other}"),
        }
    }
}
