//! Measurements on trajectories: conserved quantities, recurrence, averages, regret and
//! volume preservation.

mod averages;
mod invariants;
mod recurrence;
mod volume;

pub use averages::{
    half_period_symmetry_residual, regret, regret_bound, regret_bound_from, running_time_average,
    time_average, time_average_utility, Trapezoid,
};
pub use invariants::{
    fenchel_coupling, fenchel_coupling_at, gda_energy, invariant_drift, kl_divergence, kl_sum,
    DriftReport, DriftTracker,
};
pub use recurrence::{recurrence_scan, sup_distance, RecurrenceEvent, RecurrenceScanner};
pub use volume::{divergence_trace, volume_ratio};

#[cfg(test)]
mod tests;
