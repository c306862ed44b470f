//! Fixed-step and adaptive integration of non-autonomous fields with declared discontinuities.

mod field;
mod poincare;
mod stepper;
mod trajectory;

pub use field::{FnField, VectorField};
pub use poincare::{map_jacobian_fd, poincare_map, poincare_map_from};
pub use stepper::{
    advance, integrate, integrate_with, sample_at, stepper, IntegratorConfig, Method, Stepper,
    STEPPERS,
};
pub use trajectory::Trajectory;
