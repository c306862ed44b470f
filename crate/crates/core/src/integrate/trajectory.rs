use std::io::{Read, Write};
use std::path::Path;

use crate::{Error, Result};

/// Sampled solution: strictly increasing times and one flat state row per time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<f64>,
    labels: Vec<String>,
}

impl Trajectory {
    pub fn new(labels: Vec<String>) -> Self {
        Self {
            times: Vec::new(),
            states: Vec::new(),
            labels,
        }
    }

    pub fn from_rows(
        labels: Vec<String>,
        rows: impl IntoIterator<Item = (f64, Vec<f64>)>,
    ) -> Result<Self> {
        let mut traj = Self::new(labels);
        for (t, s) in rows {
            traj.push(t, &s)?;
        }
        Ok(traj)
    }

    pub fn push(&mut self, t: f64, s: &[f64]) -> Result<()> {
        if s.len() != self.dim() {
            return Err(Error::shape(format!(
                "sample has length {}, trajectory has {} columns",
                s.len(),
                self.dim()
            )));
        }
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(Error::arg(format!(
                    "sample times must increase strictly ({t} after {last})"
                )));
            }
        }
        self.times.push(t);
        self.states.extend_from_slice(s);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, k: usize) -> &[f64] {
        let d = self.dim();
        &self.states[k * d..(k + 1) * d]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.states.chunks_exact(self.dim().max(1))
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, &[f64])> + '_ {
        self.times.iter().copied().zip(self.states())
    }

    pub fn first(&self) -> Option<&[f64]> {
        (!self.is_empty()).then(|| self.state(0))
    }

    pub fn last(&self) -> Option<&[f64]> {
        (!self.is_empty()).then(|| self.state(self.len() - 1))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.states().map(|s| s[j]).collect()
    }

    pub fn column_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownName {
                kind: "column",
                name: label.to_string(),
                registered: self.labels.clone(),
            })
    }

    /// Applies `f` to every sample, producing a trajectory with new columns.
    pub fn map_states(
        &self,
        labels: Vec<String>,
        mut f: impl FnMut(f64, &[f64]) -> Result<Vec<f64>>,
    ) -> Result<Self> {
        let mut out = Self::new(labels);
        out.times.reserve(self.len());
        for (t, s) in self.samples() {
            let row = f(t, s)?;
            out.push(t, &row)?;
        }
        Ok(out)
    }

    /// Keeps the first `dim` columns.
    pub fn leading_columns(&self, dim: usize) -> Result<Self> {
        if dim > self.dim() {
            return Err(Error::shape(format!(
                "asked for {dim} columns of {}",
                self.dim()
            )));
        }
        self.map_states(self.labels[..dim].to_vec(), |_, s| Ok(s[..dim].to_vec()))
    }

    /// Adds derived columns after the existing ones.
    pub fn append_columns(
        &self,
        labels: Vec<String>,
        mut f: impl FnMut(f64, &[f64]) -> Result<Vec<f64>>,
    ) -> Result<Self> {
        let mut all = self.labels.clone();
        all.extend(labels);
        self.map_states(all, |t, s| {
            let mut row = s.to_vec();
            row.extend(f(t, s)?);
            Ok(row)
        })
    }

    /// Every `stride`-th sample, always keeping the last one.
    pub fn decimate(&self, stride: usize) -> Self {
        let stride = stride.max(1);
        let n = self.len();
        let mut out = Self::new(self.labels.clone());
        for k in (0..n).filter(|&k| k % stride == 0 || k + 1 == n) {
            out.times.push(self.times[k]);
            out.states.extend_from_slice(self.state(k));
        }
        out
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend(self.labels.iter().cloned());
        wr.write_record(&header)?;
        for (t, s) in self.samples() {
            let mut rec = Vec::with_capacity(s.len() + 1);
            rec.push(format!("{t:.16e}"));
            rec.extend(s.iter().map(|v| format!("{v:.16e}")));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let header = rd.headers()?.clone();
        if header.get(0) != Some("t") {
            return Err(Error::arg("trajectory CSV must start with a 't' column"));
        }
        let labels = header.iter().skip(1).map(str::to_string).collect();
        let mut traj = Self::new(labels);
        let mut row = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            row.clear();
            for field in rec.iter() {
                row.push(field.trim().parse::<f64>().map_err(|e| {
                    Error::arg(format!("bad number '{field}' in trajectory CSV: {e}"))
                })?);
            }
            traj.push(row[0], &row[1..])?;
        }
        Ok(traj)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(f)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}
