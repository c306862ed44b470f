use nalgebra::DVector;

use crate::games::BilinearGame;
use crate::integrate::VectorField;
use crate::{Error, Result};

/// Unconstrained GDA state `(x1, x2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GdaState {
    pub x1: DVector<f64>,
    pub x2: DVector<f64>,
}

impl GdaState {
    pub fn new(x1: &[f64], x2: &[f64]) -> Self {
        Self {
            x1: DVector::from_column_slice(x1),
            x2: DVector::from_column_slice(x2),
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.x1.iter().chain(self.x2.iter()).copied().collect()
    }

    pub fn from_flat(n1: usize, s: &[f64]) -> Result<Self> {
        if s.len() < n1 {
            return Err(Error::shape(format!(
                "flat state of length {} is shorter than n1 = {n1}",
                s.len()
            )));
        }
        Ok(Self::new(&s[..n1], &s[n1..]))
    }
}

/// `(A(t) x2, -A(t)^T x1)`.
pub fn gda_field(game: &BilinearGame, t: f64, s: &GdaState) -> Result<GdaState> {
    let (n1, n2) = game.dims();
    if s.x1.len() != n1 || s.x2.len() != n2 {
        return Err(Error::shape(format!(
            "state ({}, {}) does not match payoff {n1}x{n2}",
            s.x1.len(),
            s.x2.len()
        )));
    }
    let a = game.payoff_at(t)?;
    Ok(GdaState {
        x1: &a * &s.x2,
        x2: -(a.transpose() * &s.x1),
    })
}

/// GDA as an integrable field over the flat state `[x1, x2]`.
///
/// With `freeze_player2` the second player is held fixed (`ẋ2 = 0`), which models a dummy
/// player whose strategy never changes.
#[derive(Debug, Clone)]
pub struct GdaField {
    game: BilinearGame,
    freeze_player2: bool,
}

impl GdaField {
    pub fn new(game: BilinearGame) -> Self {
        Self {
            game,
            freeze_player2: false,
        }
    }

    pub fn with_frozen_player2(game: BilinearGame) -> Self {
        Self {
            game,
            freeze_player2: true,
        }
    }

    pub fn game(&self) -> &BilinearGame {
        &self.game
    }
}

impl VectorField for GdaField {
    fn dim(&self) -> usize {
        let (n1, n2) = self.game.dims();
        n1 + n2
    }

    fn eval(&self, t: f64, s: &[f64], out: &mut [f64]) -> Result<()> {
        self.eval_anchored(t, t, s, out)
    }

    fn eval_anchored(&self, t: f64, anchor: f64, s: &[f64], out: &mut [f64]) -> Result<()> {
        let (n1, n2) = self.game.dims();
        let a = self.game.payoff_anchored(t, anchor)?;
        let (x1, x2) = s.split_at(n1);
        let (d1, d2) = out.split_at_mut(n1);
        for r in 0..n1 {
            d1[r] = (0..n2).map(|c| a[(r, c)] * x2[c]).sum();
        }
        for c in 0..n2 {
            d2[c] = if self.freeze_player2 {
                0.0
            } else {
                -(0..n1).map(|r| a[(r, c)] * x1[r]).sum::<f64>()
            };
        }
        Ok(())
    }

    fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        self.game.breakpoints(t0, t1)
    }

    fn labels(&self) -> Vec<String> {
        let (n1, n2) = self.game.dims();
        (0..n1)
            .map(|a| format!("x1_{a}"))
            .chain((0..n2).map(|a| format!("x2_{a}")))
            .collect()
    }
}
