use nalgebra::DMatrix;

use super::PayoffSchedule;
use crate::{Error, Result};

/// Time-varying payoff of player 1 in a bilinear game.
#[derive(Debug, Clone, PartialEq)]
pub enum BilinearPayoff {
    Periodic(PayoffSchedule),
    /// `A(t) = base / t^2`, defined for `t > 0`. Not periodic; used as a counterexample.
    InverseSquare {
        base: DMatrix<f64>,
    },
}

/// Zero-sum bilinear game: player 1 earns `x1' A(t) x2`, player 2 earns the negative.
///
/// Strategies are unconstrained vectors and `(0, 0)` is always an equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearGame {
    payoff: BilinearPayoff,
}

impl BilinearGame {
    pub fn periodic(schedule: PayoffSchedule) -> Self {
        BilinearGame {
            payoff: BilinearPayoff::Periodic(schedule),
        }
    }

    pub fn inverse_square(base: DMatrix<f64>) -> Self {
        BilinearGame {
            payoff: BilinearPayoff::InverseSquare { base },
        }
    }

    pub fn payoff(&self) -> &BilinearPayoff {
        &self.payoff
    }

    pub fn dims(&self) -> (usize, usize) {
        match &self.payoff {
            BilinearPayoff::Periodic(s) => s.shape(),
            BilinearPayoff::InverseSquare { base } => base.shape(),
        }
    }

    pub fn period(&self) -> Option<f64> {
        match &self.payoff {
            BilinearPayoff::Periodic(s) => Some(s.period()),
            BilinearPayoff::InverseSquare { .. } => None,
        }
    }

    pub fn schedule(&self) -> Option<&PayoffSchedule> {
        match &self.payoff {
            BilinearPayoff::Periodic(s) => Some(s),
            BilinearPayoff::InverseSquare { .. } => None,
        }
    }

    /// `A(t)` for player 1.
    pub fn payoff_at(&self, t: f64) -> Result<DMatrix<f64>> {
        self.payoff_anchored(t, t)
    }

    pub fn payoff_anchored(&self, t: f64, anchor: f64) -> Result<DMatrix<f64>> {
        match &self.payoff {
            BilinearPayoff::Periodic(s) => s.eval_anchored(t, anchor),
            BilinearPayoff::InverseSquare { base } => {
                if !(t > 0.0) {
                    return Err(Error::Domain(format!("1/t^2 payoff undefined at t = {t}")));
                }
                Ok(base / (t * t))
            }
        }
    }

    pub fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        match &self.payoff {
            BilinearPayoff::Periodic(s) => s.breakpoints(t0, t1),
            BilinearPayoff::InverseSquare { .. } => Vec::new(),
        }
    }

    /// Utilities `(u1, u2)`; `u2 = -u1` by construction.
    pub fn utilities(&self, t: f64, x1: &[f64], x2: &[f64]) -> Result<(f64, f64)> {
        let a = self.payoff_at(t)?;
        let (n1, n2) = a.shape();
        if x1.len() != n1 || x2.len() != n2 {
            return Err(Error::shape(format!(
                "strategies ({}, {}) do not match payoff {n1}x{n2}",
                x1.len(),
                x2.len()
            )));
        }
        let mut u1 = 0.0;
        for r in 0..n1 {
            for c in 0..n2 {
                u1 += x1[r] * a[(r, c)] * x2[c];
            }
        }
        Ok((u1, -u1))
    }
}
