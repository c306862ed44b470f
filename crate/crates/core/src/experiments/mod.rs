//! Named, parameter-frozen experiments. Each one builds its game, integrates, runs the
//! analyses it needs and returns a [`Report`].

mod chain;
mod gda;
mod pixel;
mod replicator;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use chain::{random_interior_profile, toroid_chain, toroid_modulations};
pub use pixel::{encode_grid, encode_intensities, image_distance, Image, PixelCode};

use crate::analysis::{DriftReport, RecurrenceEvent};
use crate::dynamics::{DynamicsKind, RegularizerKind};
use crate::games::GameSpec;
use crate::integrate::{integrate_with, IntegratorConfig, Method, Trajectory, VectorField};
use crate::{Error, Result};

/// Frozen description of a run; echoed in its report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub game_label: String,
    /// Game actually simulated; absent for payoffs that have no periodic spec form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub game: Option<GameSpec>,
    pub dynamics: DynamicsKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularizer: Option<RegularizerKind>,
    pub x0: Vec<f64>,
    pub t0: f64,
    pub t1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    pub integrator: IntegratorConfig,
    pub analyses: Vec<String>,
    pub seed: u64,
    /// Experiment-specific numeric knobs (thresholds, sizes).
    pub params: BTreeMap<String, f64>,
}

impl ExperimentSpec {
    pub fn param(&self, key: &str) -> Result<f64> {
        self.params
            .get(key)
            .copied()
            .ok_or_else(|| Error::arg(format!("experiment {} has no parameter '{key}'", self.name)))
    }

    pub fn period(&self) -> Result<f64> {
        self.period
            .ok_or_else(|| Error::Unsupported(format!("experiment {} is not periodic", self.name)))
    }

    pub fn periods(&self) -> Option<f64> {
        self.period.map(|p| (self.t1 - self.t0) / p)
    }

    /// Applies `key=value` overrides. Besides the entries of `params`, the keys `seed`,
    /// `step`, `periods`, `period`, `x0` (JSON array), `regularizer`, `method` and
    /// `sample_every` are understood.
    pub fn apply_overrides(&mut self, overrides: &Overrides) -> Result<()> {
        let num = |k: &str, v: &str| -> Result<f64> {
            v.trim()
                .parse::<f64>()
                .map_err(|e| Error::arg(format!("override {k}={v}: {e}")))
        };
        // period first so that `periods` and `step` given together with it win
        if let Some(v) = overrides.get("period") {
            let new = num("period", v)?;
            let old = self.period()?;
            if !(new > 0.0 && new.is_finite()) {
                return Err(Error::arg("period must be positive"));
            }
            let scale = new / old;
            self.t1 = self.t0 + (self.t1 - self.t0) * scale;
            self.integrator.step *= scale;
            self.period = Some(new);
        }
        for (k, v) in overrides {
            match k.as_str() {
                "period" => {}
                "seed" => {
                    self.seed = v
                        .trim()
                        .parse()
                        .map_err(|e| Error::arg(format!("override seed={v}: {e}")))?
                }
                "step" => self.integrator.step = num(k, v)?,
                "sample_every" => self.integrator.sample_every = Some(num(k, v)?),
                "periods" => {
                    let n = num(k, v)?;
                    if !(n > 0.0) {
                        return Err(Error::arg("periods must be positive"));
                    }
                    self.t1 = self.t0 + n * self.period()?;
                }
                "x0" => self.x0 = serde_json::from_str(v)?,
                "regularizer" => {
                    if self.regularizer.is_none() {
                        return Err(Error::arg(format!(
                            "experiment {} takes no regularizer",
                            self.name
                        )));
                    }
                    self.regularizer = Some(v.trim().parse()?);
                }
                "method" => {
                    self.integrator.method = match v.trim() {
                        "rk4" => Method::Rk4,
                        "rk45" => Method::Rk45,
                        other => {
                            return Err(Error::UnknownName {
                                kind: "integrator",
                                name: other.to_string(),
                                registered: crate::integrate::STEPPERS
                                    .iter()
                                    .map(|s| s.to_string())
                                    .collect(),
                            })
                        }
                    }
                }
                _ => match self.params.get_mut(k) {
                    Some(slot) => *slot = num(k, v)?,
                    None => {
                        let mut known: Vec<String> = [
                            "seed",
                            "step",
                            "periods",
                            "period",
                            "x0",
                            "regularizer",
                            "method",
                            "sample_every",
                        ]
                        .iter()
                        .map(|s| s.to_string())
                        .collect();
                        known.extend(self.params.keys().cloned());
                        return Err(Error::UnknownName {
                            kind: "override",
                            name: k.clone(),
                            registered: known,
                        });
                    }
                },
            }
        }
        self.integrator.validate()?;
        if let Some(p) = self.period {
            self.integrator.validate_for_period(p)?;
        }
        if !(self.t1 > self.t0) {
            return Err(Error::arg("horizon must be positive"));
        }
        Ok(())
    }
}

pub type Overrides = BTreeMap<String, String>;

/// Parses `key=value` strings.
pub fn parse_overrides<S: AsRef<str>>(items: &[S]) -> Result<Overrides> {
    let mut out = Overrides::new();
    for item in items {
        let item = item.as_ref();
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::arg(format!("override '{item}' is not key=value")))?;
        out.insert(k.trim().to_string(), v.to_string());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceSummary {
    /// Coordinates scanned, e.g. `state` or `z`.
    pub space: String,
    pub eps: f64,
    pub exclude_until: f64,
    pub events: Vec<RecurrenceEvent>,
    /// Closest approach after the exclusion time.
    pub closest: Option<RecurrenceEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Analysis {
    Drift(DriftReport),
    Recurrence(RecurrenceSummary),
    Scalar {
        value: f64,
    },
    Vector {
        labels: Vec<String>,
        values: Vec<f64>,
    },
    Series {
        label: String,
        t: Vec<f64>,
        values: Vec<f64>,
    },
}

impl Analysis {
    pub fn vector(labels: &[String], values: &[f64]) -> Self {
        Analysis::Vector {
            labels: labels.to_vec(),
            values: values.to_vec(),
        }
    }

    /// Series capped at roughly `max_points` entries.
    pub fn series(label: &str, traj: &Trajectory, column: usize, max_points: usize) -> Self {
        let stride = traj.len().div_ceil(max_points.max(1)).max(1);
        let d = traj.decimate(stride);
        Analysis::Series {
            label: label.to_string(),
            t: d.times().to_vec(),
            values: d.column(column),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub spec: ExperimentSpec,
    pub results: BTreeMap<String, Analysis>,
    pub wall_clock_s: f64,
    /// File names relative to the report's directory.
    pub outputs: Vec<String>,
}

impl Report {
    pub fn get(&self, key: &str) -> Result<&Analysis> {
        self.results.get(key).ok_or_else(|| Error::UnknownName {
            kind: "result",
            name: key.to_string(),
            registered: self.results.keys().cloned().collect(),
        })
    }

    pub fn scalar(&self, key: &str) -> Result<f64> {
        match self.get(key)? {
            Analysis::Scalar { value } => Ok(*value),
            _ => Err(Error::arg(format!("result '{key}' is not a scalar"))),
        }
    }

    pub fn vector(&self, key: &str) -> Result<&[f64]> {
        match self.get(key)? {
            Analysis::Vector { values, .. } => Ok(values),
            _ => Err(Error::arg(format!("result '{key}' is not a vector"))),
        }
    }

    pub fn drift(&self, key: &str) -> Result<&DriftReport> {
        match self.get(key)? {
            Analysis::Drift(d) => Ok(d),
            _ => Err(Error::arg(format!("result '{key}' is not a drift report"))),
        }
    }

    pub fn recurrence(&self, key: &str) -> Result<&RecurrenceSummary> {
        match self.get(key)? {
            Analysis::Recurrence(r) => Ok(r),
            _ => Err(Error::arg(format!(
                "result '{key}' is not a recurrence scan"
            ))),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Where an experiment writes its files; `None` keeps everything in memory.
#[derive(Debug, Default)]
pub struct OutputSink {
    dir: Option<PathBuf>,
    files: Vec<String>,
}

impl OutputSink {
    pub fn new(dir: Option<&Path>) -> Result<Self> {
        if let Some(d) = dir {
            std::fs::create_dir_all(d)?;
        }
        Ok(Self {
            dir: dir.map(Path::to_path_buf),
            files: Vec::new(),
        })
    }

    /// Calls `write` with the full path of `name` when writing is enabled.
    pub fn write(&mut self, name: &str, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        if let Some(d) = &self.dir {
            write(&d.join(name))?;
            self.files.push(name.to_string());
        }
        Ok(())
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }
}

/// A reproducible experiment.
pub trait Experiment: Send + Sync {
    fn name(&self) -> &'static str;

    fn summary(&self) -> &'static str;

    fn defaults(&self) -> ExperimentSpec;

    /// Runs with a fully resolved spec, writing any files through `out`.
    fn execute(
        &self,
        spec: &mut ExperimentSpec,
        out: &mut OutputSink,
    ) -> Result<BTreeMap<String, Analysis>>;
}

pub const EXPERIMENTS: &[&str] = &[
    "fig1_gda_mp",
    "fig2_toroid_kl",
    "fig3_image_grid",
    "cex_nonperiodic",
    "cex_no_invariant_eq",
    "cex_ftrl_shifting_eq",
    "tavg_gda",
    "tavg_replicator_sin",
    "kl_two_player",
];

pub fn experiment(name: &str) -> Result<Box<dyn Experiment>> {
    Ok(match name {
        "fig1_gda_mp" => Box::new(gda::Fig1),
        "cex_nonperiodic" => Box::new(gda::NonPeriodic),
        "cex_no_invariant_eq" => Box::new(gda::DummyPlayer),
        "tavg_gda" => Box::new(gda::AlternatingAverage),
        "fig2_toroid_kl" => Box::new(replicator::ToroidKl),
        "fig3_image_grid" => Box::new(replicator::ImageGrid),
        "cex_ftrl_shifting_eq" => Box::new(replicator::ShiftingEquilibrium),
        "tavg_replicator_sin" => Box::new(replicator::SinAverage),
        "kl_two_player" => Box::new(replicator::TwoPlayerKl),
        _ => {
            return Err(Error::UnknownName {
                kind: "experiment",
                name: name.to_string(),
                registered: EXPERIMENTS.iter().map(|s| s.to_string()).collect(),
            })
        }
    })
}

/// Resolves `name`, applies overrides, runs it and, when `outdir` is given, writes
/// `<outdir>/<name>/report.json` next to the experiment's other files.
pub fn run_named(name: &str, overrides: &Overrides, outdir: Option<&Path>) -> Result<Report> {
    let exp = experiment(name)?;
    let mut spec = exp.defaults();
    spec.apply_overrides(overrides)?;
    run_spec(exp.as_ref(), spec, outdir)
}

pub fn run_spec(
    exp: &dyn Experiment,
    mut spec: ExperimentSpec,
    outdir: Option<&Path>,
) -> Result<Report> {
    let dir = outdir.map(|d| d.join(exp.name()));
    let mut out = OutputSink::new(dir.as_deref())?;
    let start = Instant::now();
    let results = exp.execute(&mut spec, &mut out)?;
    let wall_clock_s = start.elapsed().as_secs_f64();
    let mut outputs = out.files().to_vec();
    if dir.is_some() {
        outputs.push("report.json".to_string());
    }
    let report = Report {
        spec,
        results,
        wall_clock_s,
        outputs,
    };
    if let Some(d) = &dir {
        std::fs::write(d.join("report.json"), report.to_json()?)?;
    }
    Ok(report)
}

/// Integrates while feeding every step to `observe`, keeping samples at least `every`
/// apart (plus the first and last) for output.
pub(crate) fn run_recorded(
    field: &dyn VectorField,
    x0: &[f64],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    every: f64,
    mut observe: impl FnMut(f64, &[f64]) -> Result<()>,
) -> Result<Trajectory> {
    let mut kept = Trajectory::new(field.labels());
    let mut last_kept = f64::NEG_INFINITY;
    let mut pending: Option<(f64, Vec<f64>)> = None;
    integrate_with(field, x0, t0, t1, cfg, &mut |t, s| {
        observe(t, s)?;
        if t - last_kept >= every * (1.0 - 1e-9) {
            kept.push(t, s)?;
            last_kept = t;
            pending = None;
        } else {
            pending = Some((t, s.to_vec()));
        }
        Ok(())
    })?;
    if let Some((t, s)) = pending {
        kept.push(t, &s)?;
    }
    Ok(kept)
}

pub(crate) fn check_x0(spec: &ExperimentSpec, dim: usize) -> Result<()> {
    if spec.x0.len() != dim {
        return Err(Error::shape(format!(
            "{} needs an initial state of length {dim}, got {}",
            spec.name,
            spec.x0.len()
        )));
    }
    Ok(())
}
