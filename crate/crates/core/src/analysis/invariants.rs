use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dynamics::{FtrlState, Regularizer, RegularizerKind};
use crate::games::PolymatrixGame;
use crate::integrate::Trajectory;
use crate::{Error, Result};

/// `½(‖x1‖² + ‖x2‖²)` of a flat GDA state.
pub fn gda_energy(s: &[f64]) -> f64 {
    0.5 * s.iter().map(|v| v * v).sum::<f64>()
}

/// `Σ p_a ln(p_a / q_a)` with `0 ln 0 = 0`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::shape(format!(
            "distributions of length {} and {}",
            p.len(),
            q.len()
        )));
    }
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if !(b > 0.0) {
                return Err(Error::Domain(
                    "support of p is not contained in support of q".into(),
                ));
            }
            total += a * (a / b).ln();
        }
    }
    Ok(total)
}

/// `Σ_i KL(x*_i ‖ x_i)`.
pub fn kl_sum(xstar: &[DVector<f64>], x: &[DVector<f64>]) -> Result<f64> {
    if xstar.len() != x.len() {
        return Err(Error::shape("profiles have different player counts"));
    }
    xstar
        .iter()
        .zip(x)
        .map(|(p, q)| kl_divergence(p.as_slice(), q.as_slice()))
        .sum()
}

/// `Σ_i h*(y_i) - <x*_i, y_i> + h(x*_i)` for an explicit comparison profile `x*`.
pub fn fenchel_coupling_at(
    reg: &dyn Regularizer,
    xstar: &[DVector<f64>],
    y: &[DVector<f64>],
) -> Result<f64> {
    if xstar.len() != y.len() {
        return Err(Error::shape("profiles have different player counts"));
    }
    let mut total = 0.0;
    for (xs, yi) in xstar.iter().zip(y) {
        if xs.len() != yi.len() {
            return Err(Error::shape("strategy and payoff lengths differ"));
        }
        if reg.kind() == RegularizerKind::Entropic && xs.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::Domain(
                "entropic coupling needs an interior comparison strategy".into(),
            ));
        }
        total += reg.conjugate(yi.as_slice()) - xs.dot(yi) + reg.penalty(xs.as_slice());
    }
    Ok(total)
}

/// Fenchel coupling between the game's declared equilibrium and `y`.
pub fn fenchel_coupling(
    game: &PolymatrixGame,
    reg: &dyn Regularizer,
    y: &FtrlState,
) -> Result<f64> {
    fenchel_coupling_at(reg, &game.equilibrium_vectors(), &y.y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub functional: String,
    pub initial: f64,
    pub max_abs_drift: f64,
    /// `max_abs_drift / |initial|`, or the absolute drift when the initial value is zero.
    pub max_rel_drift: f64,
}

/// Streaming drift of a scalar functional.
#[derive(Debug, Clone)]
pub struct DriftTracker {
    name: String,
    initial: Option<f64>,
    max_abs: f64,
}

impl DriftTracker {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            initial: None,
            max_abs: 0.0,
        }
    }

    pub fn observe(&mut self, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::Numeric(format!("{} is not finite", self.name)));
        }
        match self.initial {
            None => self.initial = Some(value),
            Some(v0) => self.max_abs = self.max_abs.max((value - v0).abs()),
        }
        Ok(())
    }

    pub fn report(&self) -> DriftReport {
        let initial = self.initial.unwrap_or(0.0);
        let max_rel_drift = if initial != 0.0 {
            self.max_abs / initial.abs()
        } else {
            self.max_abs
        };
        DriftReport {
            functional: self.name.clone(),
            initial,
            max_abs_drift: self.max_abs,
            max_rel_drift,
        }
    }
}

/// Drift of `functional` along `traj` relative to its value at the first sample.
pub fn invariant_drift(
    traj: &Trajectory,
    name: &str,
    mut functional: impl FnMut(f64, &[f64]) -> Result<f64>,
) -> Result<DriftReport> {
    let mut tracker = DriftTracker::new(name);
    for (t, s) in traj.samples() {
        tracker.observe(functional(t, s)?)?;
    }
    Ok(tracker.report())
}
