use nalgebra::DMatrix;

use super::{advance, IntegratorConfig, VectorField};
use crate::{Error, Result};

/// State after `k` periods starting at `t = 0`.
pub fn poincare_map(
    field: &dyn VectorField,
    s: &[f64],
    period: f64,
    k: usize,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    poincare_map_from(field, s, 0.0, period, k, cfg)
}

pub fn poincare_map_from(
    field: &dyn VectorField,
    s: &[f64],
    t0: f64,
    period: f64,
    k: usize,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::arg("number of periods must be at least 1"));
    }
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::arg(format!("period must be positive, got {period}")));
    }
    advance(field, s, t0, t0 + k as f64 * period, cfg)
}

/// Central-difference Jacobian of `map` at `s`; columns are computed on separate threads.
pub fn map_jacobian_fd<F>(map: F, s: &[f64], bump: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    if !(bump.is_finite() && bump > 0.0) {
        return Err(Error::arg(format!("bump must be positive, got {bump}")));
    }
    let n = s.len();
    let columns: Vec<Result<Vec<f64>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..n)
            .map(|i| {
                let map = &map;
                scope.spawn(move || {
                    let mut plus = s.to_vec();
                    let mut minus = s.to_vec();
                    plus[i] += bump;
                    minus[i] -= bump;
                    let fp = map(&plus)?;
                    let fm = map(&minus)?;
                    if fp.len() != fm.len() {
                        return Err(Error::shape("map output length changed"));
                    }
                    Ok(fp
                        .iter()
                        .zip(&fm)
                        .map(|(a, b)| (a - b) / (2.0 * bump))
                        .collect())
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("jacobian column panicked"))
            .collect()
    });
    let columns = columns.into_iter().collect::<Result<Vec<_>>>()?;
    let m = columns.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(m, n, |r, c| columns[c][r]))
}
