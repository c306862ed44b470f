use crate::{Error, Result};

/// Right-hand side `f(t, s)` of an ODE.
///
/// Fields with jumps report them through [`breakpoints`](VectorField::breakpoints); the
/// integrators never step across one. Within a step every stage calls
/// [`eval_anchored`](VectorField::eval_anchored) with the step midpoint as anchor, so a field
/// can keep using the piece that owns the step even when a stage lands on its boundary.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, t: f64, s: &[f64], out: &mut [f64]) -> Result<()>;

    fn eval_anchored(&self, t: f64, _anchor: f64, s: &[f64], out: &mut [f64]) -> Result<()> {
        self.eval(t, s, out)
    }

    /// Discontinuity times strictly inside `(t0, t1)`, sorted.
    fn breakpoints(&self, _t0: f64, _t1: f64) -> Vec<f64> {
        Vec::new()
    }

    fn labels(&self) -> Vec<String> {
        (0..self.dim()).map(|i| format!("s{i}")).collect()
    }

    fn eval_vec(&self, t: f64, s: &[f64]) -> Result<Vec<f64>> {
        if s.len() != self.dim() {
            return Err(Error::shape(format!(
                "state has length {}, field expects {}",
                s.len(),
                self.dim()
            )));
        }
        let mut out = vec![0.0; self.dim()];
        self.eval(t, s, &mut out)?;
        Ok(out)
    }
}

/// A smooth field given by a closure.
pub struct FnField<F> {
    dim: usize,
    f: F,
    breaks: Vec<f64>,
    period: Option<f64>,
}

impl<F> FnField<F>
where
    F: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self {
            dim,
            f,
            breaks: Vec::new(),
            period: None,
        }
    }

    /// Declares jumps at `offsets + k·period` for every integer `k`.
    pub fn with_periodic_breaks(mut self, offsets: Vec<f64>, period: f64) -> Self {
        self.breaks = offsets;
        self.period = Some(period);
        self
    }
}

impl<F> VectorField for FnField<F>
where
    F: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, t: f64, s: &[f64], out: &mut [f64]) -> Result<()> {
        (self.f)(t, s, out);
        Ok(())
    }

    fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        let Some(period) = self.period else {
            return Vec::new();
        };
        let mut out = Vec::new();
        let mut k = (t0 / period).floor() - 1.0;
        while k * period <= t1 {
            for &o in &self.breaks {
                let b = k * period + o;
                if b > t0 && b < t1 {
                    out.push(b);
                }
            }
            k += 1.0;
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}
