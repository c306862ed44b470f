//! Continuous-time learning dynamics in periodic zero-sum games.
//!
//! The crate is organised in layers:
//!
//! * [`games`] – periodic payoff schedules, bilinear and polymatrix games, structural checks.
//! * [`dynamics`] – vector fields for gradient descent-ascent, follow-the-regularized-leader
//!   (payoff space, strategy space and the reduced difference space).
//! * [`integrate`] – breakpoint-aware Runge-Kutta integration, period maps, FD Jacobians.
//! * [`analysis`] – invariants, recurrence scans, time averages, regret and volume checks.
//! * [`experiments`] – named, seedable reproductions that produce [`experiments::Report`]s.
//!
//! Interchangeable algorithms (regularizers, integrators, dynamics, experiments) sit behind
//! traits and are looked up by name through small registries.

// NaN must fail validation checks, hence the negated comparisons.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::too_many_arguments,
    clippy::type_complexity
)]

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod games;
pub mod integrate;

pub use error::{Error, Result};
