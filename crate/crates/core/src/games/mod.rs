//! Periodic zero-sum game models.
//!
//! A [`PayoffSchedule`] is a `T`-periodic, piecewise-smooth matrix-valued function of time.
//! [`BilinearGame`] pairs one schedule with unconstrained strategy vectors; [`PolymatrixGame`]
//! places schedules on the edges of a player graph with simplex-constrained strategies and a
//! declared, time-invariant interior equilibrium.

mod bilinear;
pub mod catalog;
mod polymatrix;
mod schedule;
mod spec;

pub use bilinear::{BilinearGame, BilinearPayoff};
pub use polymatrix::{build_cycle_chain, matching_pennies, Edge, MixedStrategy, PolymatrixGame};
pub use schedule::{reduce_time, Modulation, PayoffSchedule, Segment};
pub use spec::{EdgeSpec, Game, GameKind, GameSpec, SegmentSpec};
