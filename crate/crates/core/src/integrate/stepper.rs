use serde::{Deserialize, Serialize};

use super::{Trajectory, VectorField};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rk4,
    Rk45,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Rk4 => "rk4",
            Method::Rk45 => "rk45",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Base step for RK4, initial step for RK45.
    pub step: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Minimum spacing between recorded samples; `None` records every step.
    /// Knots (start, end, breakpoints) are always recorded.
    #[serde(default)]
    pub sample_every: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self::rk4(1e-3)
    }
}

impl IntegratorConfig {
    pub fn rk4(step: f64) -> Self {
        Self {
            method: Method::Rk4,
            step,
            rtol: 1e-10,
            atol: 1e-12,
            sample_every: None,
        }
    }

    pub fn rk45(rtol: f64, atol: f64) -> Self {
        Self {
            method: Method::Rk45,
            step: 1e-2,
            rtol,
            atol,
            sample_every: None,
        }
    }

    /// RK4 with `h = 1e-3·T`.
    pub fn for_period(period: f64) -> Self {
        Self::rk4(1e-3 * period)
    }

    pub fn sampled(mut self, every: f64) -> Self {
        self.sample_every = Some(every);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::arg(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::arg("tolerances must be positive"));
        }
        if let Some(dt) = self.sample_every {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::arg("sample_every must be positive"));
            }
        }
        Ok(())
    }

    pub fn validate_for_period(&self, period: f64) -> Result<()> {
        self.validate()?;
        if self.step > period / 10.0 {
            return Err(Error::arg(format!(
                "step {} exceeds a tenth of the period {period}",
                self.step
            )));
        }
        Ok(())
    }
}

/// One integration scheme. `run` advances over an interval that contains no breakpoint in
/// its interior and reports every accepted step.
pub trait Stepper: Send + Sync {
    fn name(&self) -> &'static str;

    fn run(
        &self,
        field: &dyn VectorField,
        a: f64,
        b: f64,
        state: &mut [f64],
        cfg: &IntegratorConfig,
        visit: &mut dyn FnMut(f64, &[f64]) -> Result<()>,
    ) -> Result<()>;
}

pub const STEPPERS: &[&str] = &["rk4", "rk45"];

pub fn stepper(name: &str) -> Result<Box<dyn Stepper>> {
    match name {
        "rk4" => Ok(Box::new(Rk4)),
        "rk45" => Ok(Box::new(DormandPrince)),
        _ => Err(Error::UnknownName {
            kind: "integrator",
            name: name.to_string(),
            registered: STEPPERS.iter().map(|s| s.to_string()).collect(),
        }),
    }
}

fn check_finite(t: f64, s: &[f64]) -> Result<()> {
    if s.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Diverged { t })
    }
}

fn axpy(out: &mut [f64], s: &[f64], h: f64, k: &[f64]) {
    for ((o, &x), &d) in out.iter_mut().zip(s).zip(k) {
        *o = x + h * d;
    }
}

/// Classical fourth-order Runge–Kutta on a uniform grid: the interval is cut into
/// `ceil(len / step)` equal steps so the last one ends exactly on `b`.
struct Rk4;

impl Stepper for Rk4 {
    fn name(&self) -> &'static str {
        "rk4"
    }

    fn run(
        &self,
        field: &dyn VectorField,
        a: f64,
        b: f64,
        state: &mut [f64],
        cfg: &IntegratorConfig,
        visit: &mut dyn FnMut(f64, &[f64]) -> Result<()>,
    ) -> Result<()> {
        let d = state.len();
        let n = ((b - a) / cfg.step - 1e-9).ceil().max(1.0) as u64;
        let hh = (b - a) / n as f64;
        let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
            vec![0.0; d],
            vec![0.0; d],
            vec![0.0; d],
            vec![0.0; d],
            vec![0.0; d],
        );
        for k in 0..n {
            let t = a + k as f64 * hh;
            let t_next = if k + 1 == n {
                b
            } else {
                a + (k + 1) as f64 * hh
            };
            let h = t_next - t;
            let mid = t + 0.5 * h;
            field.eval_anchored(t, mid, state, &mut k1)?;
            axpy(&mut tmp, state, 0.5 * h, &k1);
            field.eval_anchored(mid, mid, &tmp, &mut k2)?;
            axpy(&mut tmp, state, 0.5 * h, &k2);
            field.eval_anchored(mid, mid, &tmp, &mut k3)?;
            axpy(&mut tmp, state, h, &k3);
            field.eval_anchored(t_next, mid, &tmp, &mut k4)?;
            for i in 0..d {
                state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            check_finite(t_next, state)?;
            visit(t_next, state)?;
        }
        Ok(())
    }
}

/// Dormand–Prince 5(4) with step-size control on the mixed error norm.
struct DormandPrince;

const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

impl Stepper for DormandPrince {
    fn name(&self) -> &'static str {
        "rk45"
    }

    fn run(
        &self,
        field: &dyn VectorField,
        a: f64,
        b: f64,
        state: &mut [f64],
        cfg: &IntegratorConfig,
        visit: &mut dyn FnMut(f64, &[f64]) -> Result<()>,
    ) -> Result<()> {
        let d = state.len();
        let mut k = vec![vec![0.0; d]; 7];
        let mut tmp = vec![0.0; d];
        let mut next = vec![0.0; d];
        let mut t = a;
        let mut h = cfg.step.min(b - a);
        while t < b {
            let last = t + h >= b;
            let h_try = if last { b - t } else { h };
            let mid = t + 0.5 * h_try;
            for s in 0..7 {
                tmp.copy_from_slice(state);
                for j in 0..s {
                    let c = DP_A[s][j];
                    if c != 0.0 {
                        for i in 0..d {
                            tmp[i] += h_try * c * k[j][i];
                        }
                    }
                }
                let ts = if s >= 5 && last {
                    b
                } else {
                    t + DP_C[s] * h_try
                };
                field.eval_anchored(ts, mid, &tmp, &mut k[s])?;
            }
            let mut err = 0.0f64;
            for i in 0..d {
                let mut y = state[i];
                let mut e = 0.0;
                for s in 0..7 {
                    y += h_try * DP_B[s] * k[s][i];
                    e += h_try * DP_E[s] * k[s][i];
                }
                next[i] = y;
                let scale = cfg.atol + cfg.rtol * state[i].abs().max(y.abs());
                err = err.max((e / scale).abs());
            }
            if !err.is_finite() {
                return Err(Error::Diverged { t: t + h_try });
            }
            if err <= 1.0 {
                t = if last { b } else { t + h_try };
                state.copy_from_slice(&next);
                check_finite(t, state)?;
                visit(t, state)?;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = h_try * factor;
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::Numeric(format!("step size underflow at t = {t}")));
            }
        }
        Ok(())
    }
}

fn knots(field: &dyn VectorField, t0: f64, t1: f64) -> Vec<f64> {
    let tiny = |x: f64| 1e-12 * x.abs().max(1.0);
    let mut out = vec![t0];
    for b in field.breakpoints(t0, t1) {
        let last = *out.last().unwrap();
        if b - last > tiny(b) && t1 - b > tiny(b) {
            out.push(b);
        }
    }
    out.push(t1);
    out
}

/// Integrates from `t0` to `t1`, calling `observe` at `t0`, at each recorded sample and at
/// `t1`. Returns the final state.
pub fn integrate_with(
    field: &dyn VectorField,
    s0: &[f64],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    observe: &mut dyn FnMut(f64, &[f64]) -> Result<()>,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if s0.len() != field.dim() {
        return Err(Error::shape(format!(
            "initial state has length {}, field expects {}",
            s0.len(),
            field.dim()
        )));
    }
    if !(t1 > t0) {
        return Err(Error::arg(format!("need t1 > t0, got [{t0}, {t1}]")));
    }
    check_finite(t0, s0)?;
    let scheme = stepper(cfg.method.name())?;
    let mut state = s0.to_vec();
    observe(t0, &state)?;
    let mut last_recorded = t0;
    let ks = knots(field, t0, t1);
    for w in ks.windows(2) {
        let (a, b) = (w[0], w[1]);
        scheme.run(field, a, b, &mut state, cfg, &mut |t, s| {
            let due = match cfg.sample_every {
                None => true,
                Some(dt) => t - last_recorded >= dt * (1.0 - 1e-9),
            };
            if due || t == b {
                last_recorded = t;
                observe(t, s)?;
            }
            Ok(())
        })?;
    }
    Ok(state)
}

pub fn integrate(
    field: &dyn VectorField,
    s0: &[f64],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let mut traj = Trajectory::new(field.labels());
    integrate_with(field, s0, t0, t1, cfg, &mut |t, s| traj.push(t, s))?;
    Ok(traj)
}

/// Final state only, without storing samples.
pub fn advance(
    field: &dyn VectorField,
    s0: &[f64],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    integrate_with(field, s0, t0, t1, cfg, &mut |_, _| Ok(()))
}

/// Solution sampled exactly at `times` (strictly increasing, first entry is the start time).
pub fn sample_at(
    field: &dyn VectorField,
    s0: &[f64],
    times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let Some(&t0) = times.first() else {
        return Err(Error::arg("no sample times given"));
    };
    let mut traj = Trajectory::new(field.labels());
    traj.push(t0, s0)?;
    let mut state = s0.to_vec();
    for w in times.windows(2) {
        state = advance(field, &state, w[0], w[1], cfg)?;
        traj.push(w[1], &state)?;
    }
    Ok(traj)
}
