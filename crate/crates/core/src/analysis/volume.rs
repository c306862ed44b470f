use crate::integrate::{map_jacobian_fd, poincare_map, IntegratorConfig, VectorField};
use crate::{Error, Result};

/// Central-difference trace of the Jacobian of `field` at `(t, s)`.
pub fn divergence_trace(field: &dyn VectorField, t: f64, s: &[f64], bump: f64) -> Result<f64> {
    if !(bump > 0.0) {
        return Err(Error::arg(format!("bump must be positive, got {bump}")));
    }
    let mut trace = 0.0;
    let mut p = s.to_vec();
    for i in 0..s.len() {
        p[i] = s[i] + bump;
        let fp = field.eval_vec(t, &p)?[i];
        p[i] = s[i] - bump;
        let fm = field.eval_vec(t, &p)?[i];
        p[i] = s[i];
        trace += (fp - fm) / (2.0 * bump);
    }
    Ok(trace)
}

/// `|det D φ^T(s)|` for the one-period map starting at `t = 0`.
pub fn volume_ratio(
    field: &dyn VectorField,
    period: f64,
    s: &[f64],
    bump: f64,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let jac = map_jacobian_fd(|x| poincare_map(field, x, period, 1, cfg), s, bump)?;
    Ok(jac.determinant().abs())
}
