use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Scalar time modulation applied to a segment's base matrix.
///
/// Modulations are evaluated on the reduced time `t mod T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Modulation {
    Constant {
        value: f64,
    },
    Sine {
        amplitude: f64,
        angular_frequency: f64,
        phase: f64,
    },
    Linear {
        slope: f64,
        intercept: f64,
    },
}

impl Modulation {
    pub fn constant(value: f64) -> Self {
        Modulation::Constant { value }
    }

    pub fn sine(amplitude: f64, angular_frequency: f64, phase: f64) -> Self {
        Modulation::Sine {
            amplitude,
            angular_frequency,
            phase,
        }
    }

    pub fn linear(slope: f64, intercept: f64) -> Self {
        Modulation::Linear { slope, intercept }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Modulation::Constant { value } => value,
            Modulation::Sine {
                amplitude,
                angular_frequency,
                phase,
            } => amplitude * (angular_frequency * t + phase).sin(),
            Modulation::Linear { slope, intercept } => slope * t + intercept,
        }
    }
}

/// One piece of a schedule on the half-open interval `[start, end)`.
///
/// When `base` is set it replaces the schedule's base matrix on this piece.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub modulation: Modulation,
    pub base: Option<DMatrix<f64>>,
}

impl Segment {
    pub fn new(start: f64, end: f64, modulation: Modulation) -> Self {
        Segment {
            start,
            end,
            modulation,
            base: None,
        }
    }

    pub fn with_base(mut self, base: DMatrix<f64>) -> Self {
        self.base = Some(base);
        self
    }
}

/// Reduces `t` into `[0, period)` as `t - period * floor(t / period)`.
pub fn reduce_time(t: f64, period: f64) -> f64 {
    let r = t - period * (t / period).floor();
    // rounding can land exactly on `period` for inputs just below a multiple of it
    if r >= period {
        0.0
    } else {
        r
    }
}

/// A `T`-periodic, piecewise-smooth payoff matrix `A(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffSchedule {
    base: DMatrix<f64>,
    segments: Vec<Segment>,
    period: f64,
}

impl PayoffSchedule {
    /// Builds a schedule, checking that the segments tile `[0, period)` without gaps or overlap.
    ///
    /// Boundaries that agree to within `1e-12 * max(1, T)` are snapped together.
    pub fn new(base: DMatrix<f64>, mut segments: Vec<Segment>, period: f64) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::ScheduleMalformed(format!(
                "period must be positive and finite, got {period}"
            )));
        }
        if segments.is_empty() {
            return Err(Error::ScheduleMalformed("no segments".into()));
        }
        let tol = 1e-12 * period.max(1.0);
        if segments[0].start.abs() > tol {
            return Err(Error::ScheduleMalformed(format!(
                "first segment starts at {} instead of 0",
                segments[0].start
            )));
        }
        segments[0].start = 0.0;
        for k in 0..segments.len() {
            if k > 0 {
                let prev_end = segments[k - 1].end;
                if (segments[k].start - prev_end).abs() > tol {
                    return Err(Error::ScheduleMalformed(format!(
                        "gap or overlap between {} and {}",
                        prev_end, segments[k].start
                    )));
                }
                segments[k].start = prev_end;
            }
            let seg = &segments[k];
            if !(seg.end > seg.start) {
                return Err(Error::ScheduleMalformed(format!(
                    "empty or reversed segment [{}, {})",
                    seg.start, seg.end
                )));
            }
            if let Some(b) = &seg.base {
                if b.shape() != base.shape() {
                    return Err(Error::shape(format!(
                        "segment base {:?} does not match schedule base {:?}",
                        b.shape(),
                        base.shape()
                    )));
                }
            }
        }
        let last = segments.len() - 1;
        if (segments[last].end - period).abs() > tol {
            return Err(Error::ScheduleMalformed(format!(
                "last segment ends at {} but the period is {period}",
                segments[last].end
            )));
        }
        segments[last].end = period;
        Ok(PayoffSchedule {
            base,
            segments,
            period,
        })
    }

    /// A single segment covering the whole period.
    pub fn single(base: DMatrix<f64>, modulation: Modulation, period: f64) -> Result<Self> {
        Self::new(base, vec![Segment::new(0.0, period, modulation)], period)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn base(&self) -> &DMatrix<f64> {
        &self.base
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn shape(&self) -> (usize, usize) {
        self.base.shape()
    }

    fn segment_index(&self, tau: f64) -> Result<usize> {
        let idx = self.segments.partition_point(|s| s.start <= tau);
        if idx == 0 || !(tau < self.segments[idx - 1].end) {
            return Err(Error::ScheduleMalformed(format!(
                "reduced time {tau} falls in no segment"
            )));
        }
        Ok(idx - 1)
    }

    fn check_time(t: f64) -> Result<()> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::arg(format!(
                "schedule time must be finite and >= 0, got {t}"
            )));
        }
        Ok(())
    }

    /// The scalar modulation value and effective base matrix at time `t`.
    pub fn piece_at(&self, t: f64) -> Result<(f64, &DMatrix<f64>)> {
        self.piece_anchored(t, t)
    }

    /// Like [`piece_at`](Self::piece_at), but the segment is chosen by `anchor` and the
    /// modulation is evaluated at `t` in that segment's period.
    ///
    /// Integrators anchor every stage of a step to the step's midpoint, so stages sitting on
    /// a breakpoint see the smooth extension of the piece they belong to.
    pub fn piece_anchored(&self, t: f64, anchor: f64) -> Result<(f64, &DMatrix<f64>)> {
        Self::check_time(anchor)?;
        if !t.is_finite() {
            return Err(Error::arg(format!("non-finite schedule time {t}")));
        }
        let tau_anchor = reduce_time(anchor, self.period);
        let seg = &self.segments[self.segment_index(tau_anchor)?];
        let tau = if t == anchor {
            tau_anchor
        } else {
            t - (anchor - tau_anchor)
        };
        let base = seg.base.as_ref().unwrap_or(&self.base);
        Ok((seg.modulation.eval(tau), base))
    }

    /// `A(t)`; exactly periodic because evaluation goes through `t mod T`.
    pub fn eval(&self, t: f64) -> Result<DMatrix<f64>> {
        let (m, base) = self.piece_at(t)?;
        Ok(base * m)
    }

    pub fn eval_anchored(&self, t: f64, anchor: f64) -> Result<DMatrix<f64>> {
        let (m, base) = self.piece_anchored(t, anchor)?;
        Ok(base * m)
    }

    /// Segment boundaries (including multiples of the period) in the open interval `(t0, t1)`.
    pub fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut out = Vec::new();
        if !(t1 > t0) {
            return out;
        }
        let k0 = (t0 / self.period).floor() as i64;
        let k1 = (t1 / self.period).ceil() as i64;
        for k in k0..=k1 {
            let offset = k as f64 * self.period;
            for seg in &self.segments {
                let b = offset + seg.start;
                if b > t0 && b < t1 {
                    out.push(b);
                }
            }
        }
        out
    }

    /// The schedule `-A(t)^T`, i.e. the opponent's side of a zero-sum edge.
    pub fn negated_transpose(&self) -> PayoffSchedule {
        PayoffSchedule {
            base: -self.base.transpose(),
            segments: self
                .segments
                .iter()
                .map(|s| Segment {
                    start: s.start,
                    end: s.end,
                    modulation: s.modulation,
                    base: s.base.as_ref().map(|b| -b.transpose()),
                })
                .collect(),
            period: self.period,
        }
    }
}
