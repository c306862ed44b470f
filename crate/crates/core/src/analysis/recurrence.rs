use serde::{Deserialize, Serialize};

use crate::integrate::Trajectory;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceEvent {
    pub t_return: f64,
    pub distance: f64,
}

pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Streaming recurrence detector.
///
/// Samples after `exclude_until` closer than `eps` (sup norm) to the reference form
/// excursions; each excursion is reported once, at its closest sample.
#[derive(Debug, Clone)]
pub struct RecurrenceScanner {
    reference: Vec<f64>,
    eps: f64,
    exclude_until: f64,
    current: Option<RecurrenceEvent>,
    events: Vec<RecurrenceEvent>,
    closest: Option<RecurrenceEvent>,
}

impl RecurrenceScanner {
    pub fn new(reference: &[f64], eps: f64, exclude_until: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::arg(format!("eps must be positive, got {eps}")));
        }
        Ok(Self {
            reference: reference.to_vec(),
            eps,
            exclude_until,
            current: None,
            events: Vec::new(),
            closest: None,
        })
    }

    pub fn observe(&mut self, t: f64, s: &[f64]) -> Result<()> {
        if s.len() != self.reference.len() {
            return Err(Error::shape(format!(
                "sample has length {}, reference has {}",
                s.len(),
                self.reference.len()
            )));
        }
        if t < self.exclude_until {
            return Ok(());
        }
        let d = sup_distance(s, &self.reference);
        let here = RecurrenceEvent {
            t_return: t,
            distance: d,
        };
        if self.closest.is_none_or(|c| d < c.distance) {
            self.closest = Some(here);
        }
        if d < self.eps {
            if self.current.is_none_or(|c| d < c.distance) {
                self.current = Some(here);
            }
        } else if let Some(ev) = self.current.take() {
            self.events.push(ev);
        }
        Ok(())
    }

    /// Closest sample seen after the exclusion time, whether or not it is within `eps`.
    pub fn closest(&self) -> Option<RecurrenceEvent> {
        self.closest
    }

    pub fn finish(mut self) -> Vec<RecurrenceEvent> {
        if let Some(ev) = self.current.take() {
            self.events.push(ev);
        }
        self.events
    }
}

pub fn recurrence_scan(
    traj: &Trajectory,
    reference: &[f64],
    eps: f64,
    exclude_until: f64,
) -> Result<Vec<RecurrenceEvent>> {
    let mut scan = RecurrenceScanner::new(reference, eps, exclude_until)?;
    for (t, s) in traj.samples() {
        scan.observe(t, s)?;
    }
    Ok(scan.finish())
}
