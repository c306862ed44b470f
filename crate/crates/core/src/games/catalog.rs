//! Ready-made games used by the experiments and tests.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;

use super::{
    matching_pennies, BilinearGame, Edge, MixedStrategy, Modulation, PayoffSchedule,
    PolymatrixGame, Segment,
};
use crate::Result;

fn scalar(v: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, v)
}

/// Two-player polymatrix game with a single edge `(0, 1)` carrying `schedule`.
pub fn two_player(schedule: PayoffSchedule) -> Result<PolymatrixGame> {
    let (n1, n2) = schedule.shape();
    PolymatrixGame::new(
        vec![n1, n2],
        vec![Edge::zero_sum(0, 1, schedule)],
        vec![MixedStrategy::uniform(n1), MixedStrategy::uniform(n2)],
    )
}

/// Matching Pennies scaled by `sin(2πt/T)`.
pub fn sin_mp_schedule(period: f64) -> Result<PayoffSchedule> {
    PayoffSchedule::single(
        matching_pennies(),
        Modulation::sine(1.0, TAU / period, 0.0),
        period,
    )
}

pub fn sin_mp(period: f64) -> Result<PolymatrixGame> {
    two_player(sin_mp_schedule(period)?)
}

/// Matching Pennies scaled by `sin t` on `[0, 3π/2)` and by the line `(2/π)t - 4` back to zero
/// on `[3π/2, 2π)`.
pub fn fig1_schedule() -> Result<PayoffSchedule> {
    PayoffSchedule::new(
        matching_pennies(),
        vec![
            Segment::new(0.0, 1.5 * PI, Modulation::sine(1.0, 1.0, 0.0)),
            Segment::new(1.5 * PI, TAU, Modulation::linear(2.0 / PI, -4.0)),
        ],
        TAU,
    )
}

pub fn fig1_gda() -> Result<BilinearGame> {
    Ok(BilinearGame::periodic(fig1_schedule()?))
}

/// Scalar game with `A = -1` on `[0, π)`, `+1` on `[π, 3π/2)` and `-1` on `[3π/2, 3π)`.
pub fn alternating_sign_gda() -> Result<BilinearGame> {
    let one = Modulation::constant(1.0);
    let minus = Modulation::constant(-1.0);
    Ok(BilinearGame::periodic(PayoffSchedule::new(
        scalar(1.0),
        vec![
            Segment::new(0.0, PI, minus),
            Segment::new(PI, 1.5 * PI, one),
            Segment::new(1.5 * PI, 3.0 * PI, minus),
        ],
        3.0 * PI,
    )?))
}

/// Scalar game with `A(t) = 1/t²`; not periodic.
pub fn inverse_square_gda() -> BilinearGame {
    BilinearGame::inverse_square(scalar(1.0))
}

/// Scalar game with `A = +1` on `[0, 1)` and `-1` on `[1, 3)`, period 3.
pub fn dummy_sign_gda() -> Result<BilinearGame> {
    Ok(BilinearGame::periodic(PayoffSchedule::new(
        scalar(1.0),
        vec![
            Segment::new(0.0, 1.0, Modulation::constant(1.0)),
            Segment::new(1.0, 3.0, Modulation::constant(-1.0)),
        ],
        3.0,
    )?))
}

/// Game whose equilibrium is not time-invariant: Matching Pennies for the first quarter of
/// each period, then `[[0.05, -0.5], [-0.5, 5]]` (equilibrium `(10/11, 1/11)` for both).
///
/// The declared equilibrium is the uniform one, which is wrong for three quarters of the
/// period; [`PolymatrixGame::equilibrium_residual`] exposes that.
pub fn shifting_equilibrium(period: f64) -> Result<PolymatrixGame> {
    let skewed = DMatrix::from_row_slice(2, 2, &[0.05, -0.5, -0.5, 5.0]);
    let one = Modulation::constant(1.0);
    two_player(PayoffSchedule::new(
        matching_pennies(),
        vec![
            Segment::new(0.0, 0.25 * period, one),
            Segment::new(0.25 * period, period, one).with_base(skewed),
        ],
        period,
    )?)
}
