use nalgebra::DVector;

use crate::dynamics::{split_blocks, Regularizer};
use crate::games::PolymatrixGame;
use crate::integrate::Trajectory;
use crate::{Error, Result};

/// Running trapezoid-rule integral of a vector-valued signal.
#[derive(Debug, Clone, Default)]
pub struct Trapezoid {
    start: Option<f64>,
    last: Option<(f64, Vec<f64>)>,
    integral: Vec<f64>,
}

impl Trapezoid {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, t: f64, values: &[f64]) {
        match &self.last {
            None => {
                self.start = Some(t);
                self.integral = vec![0.0; values.len()];
            }
            Some((t_prev, prev)) => {
                let h = t - t_prev;
                for ((acc, a), b) in self.integral.iter_mut().zip(prev).zip(values) {
                    *acc += 0.5 * h * (a + b);
                }
            }
        }
        self.last = Some((t, values.to_vec()));
    }

    /// Adds one interval whose end values were computed separately for each end.
    pub fn add_interval(&mut self, t0: f64, left: &[f64], t1: f64, right: &[f64]) {
        if self.start.is_none() {
            self.start = Some(t0);
            self.integral = vec![0.0; left.len()];
        }
        let h = t1 - t0;
        for ((acc, a), b) in self.integral.iter_mut().zip(left).zip(right) {
            *acc += 0.5 * h * (a + b);
        }
        self.last = Some((t1, right.to_vec()));
    }

    pub fn integral(&self) -> &[f64] {
        &self.integral
    }

    pub fn elapsed(&self) -> f64 {
        match (self.start, &self.last) {
            (Some(a), Some((b, _))) => b - a,
            _ => 0.0,
        }
    }

    /// Integral divided by elapsed time; the latest value while no time has elapsed.
    pub fn mean(&self) -> Vec<f64> {
        let dt = self.elapsed();
        if dt > 0.0 {
            self.integral.iter().map(|v| v / dt).collect()
        } else {
            self.last
                .as_ref()
                .map(|(_, v)| v.clone())
                .unwrap_or_default()
        }
    }
}

/// `(1/(t1 - t0)) ∫ s dt` over the whole trajectory.
pub fn time_average(traj: &Trajectory) -> Result<Vec<f64>> {
    if traj.len() < 2 {
        return Err(Error::arg("time average needs at least two samples"));
    }
    let mut acc = Trapezoid::new();
    for (t, s) in traj.samples() {
        acc.add(t, s);
    }
    Ok(acc.mean())
}

/// Running average `(1/(t - t0)) ∫_{t0}^t s` at every sample.
pub fn running_time_average(traj: &Trajectory) -> Result<Trajectory> {
    let labels = traj.labels().iter().map(|l| format!("avg_{l}")).collect();
    let mut acc = Trapezoid::new();
    traj.map_states(labels, |t, s| {
        acc.add(t, s);
        Ok(acc.mean())
    })
}

fn check_player(game: &PolymatrixGame, traj: &Trajectory, player: usize) -> Result<()> {
    if player >= game.num_players() {
        return Err(Error::arg(format!("unknown player {player}")));
    }
    if traj.dim() != game.total_actions() {
        return Err(Error::shape(format!(
            "trajectory has {} columns, game has {} actions",
            traj.dim(),
            game.total_actions()
        )));
    }
    Ok(())
}

/// Running average of `u_player(x(τ), τ)` along a strategy-space trajectory.
///
/// Each trapezoid uses the schedule piece owning its interval, so jumps at breakpoints
/// are integrated exactly.
pub fn time_average_utility(
    game: &PolymatrixGame,
    traj: &Trajectory,
    player: usize,
) -> Result<Trajectory> {
    check_player(game, traj, player)?;
    let profile = |s: &[f64]| split_blocks(game.actions(), s);
    utility_average(game, traj, player, &profile, format!("avg_u{player}"))
}

fn utility_average(
    game: &PolymatrixGame,
    traj: &Trajectory,
    player: usize,
    profile: &dyn Fn(&[f64]) -> Result<Vec<DVector<f64>>>,
    label: String,
) -> Result<Trajectory> {
    let mut out = Trajectory::new(vec![label]);
    let mut acc = Trapezoid::new();
    let mut prev: Option<(f64, Vec<DVector<f64>>)> = None;
    for (t, s) in traj.samples() {
        let x = profile(s)?;
        match prev {
            None => {
                let u = game.utilities(t, &x)?[player];
                acc.add(t, &[u]);
            }
            Some((tp, ref xp)) => {
                let mid = 0.5 * (tp + t);
                let ul = game.utilities_anchored(tp, mid, xp)?[player];
                let ur = game.utilities_anchored(t, mid, &x)?[player];
                acc.add_interval(tp, &[ul], t, &[ur]);
            }
        }
        out.push(t, &acc.mean())?;
        prev = Some((t, x));
    }
    Ok(out)
}

/// Regret of `player` along an FTRL trajectory in `y` coordinates:
/// `max_a (y_a(t) - y_a(t0)) / (t - t0) - (1/(t - t0)) ∫ u`.
///
/// The first sample (zero elapsed time) is omitted.
pub fn regret(
    game: &PolymatrixGame,
    reg: &dyn Regularizer,
    traj: &Trajectory,
    player: usize,
) -> Result<Trajectory> {
    check_player(game, traj, player)?;
    let profile = |s: &[f64]| -> Result<Vec<DVector<f64>>> {
        let y = split_blocks(game.actions(), s)?;
        Ok(y.iter()
            .map(|yi| {
                let mut x = DVector::zeros(yi.len());
                reg.choice(yi.as_slice(), x.as_mut_slice());
                x
            })
            .collect())
    };
    let avg = utility_average(game, traj, player, &profile, String::new())?;
    let offset: usize = game.actions()[..player].iter().sum();
    let n = game.actions()[player];
    let t0 = traj.times()[0];
    let y0 = &traj.state(0)[offset..offset + n];
    let mut out = Trajectory::new(vec![format!("regret{player}")]);
    for k in 1..traj.len() {
        let t = traj.times()[k];
        let y = &traj.state(k)[offset..offset + n];
        let best = y
            .iter()
            .zip(y0)
            .map(|(a, b)| a - b)
            .fold(f64::NEG_INFINITY, f64::max);
        out.push(t, &[best / (t - t0) - avg.state(k)[0]])?;
    }
    Ok(out)
}

/// `(max h - min h) / t` for a player with `n` actions.
pub fn regret_bound(reg: &dyn Regularizer, n: usize, t: f64) -> f64 {
    reg.range(n) / t
}

/// Bound on the regret of a player started at `y0`: `max_a F(e_a, y0) / t`, with `F` the
/// Fenchel coupling. Equals [`regret_bound`] when `y0` is constant across actions.
pub fn regret_bound_from(reg: &dyn Regularizer, y0: &[f64], t: f64) -> f64 {
    let hstar = reg.conjugate(y0);
    let mut vertex = vec![0.0; y0.len()];
    let mut worst = f64::NEG_INFINITY;
    for a in 0..y0.len() {
        vertex[a] = 1.0;
        worst = worst.max(reg.penalty(&vertex) + hstar - y0[a]);
        vertex[a] = 0.0;
    }
    worst / t
}

/// `max_k |s_j(c + τ_k) - s_j(c - τ_k)|` about the midpoint `c` of the sample range.
pub fn half_period_symmetry_residual(traj: &Trajectory, coordinate: usize) -> Result<f64> {
    if coordinate >= traj.dim() {
        return Err(Error::arg(format!(
            "coordinate {coordinate} out of range for {} columns",
            traj.dim()
        )));
    }
    let times = traj.times();
    let n = times.len();
    if n < 2 {
        return Err(Error::arg("symmetry check needs at least two samples"));
    }
    let center2 = times[0] + times[n - 1];
    let tol = 1e-9 * times[n - 1].abs().max(1.0);
    let mut worst = 0.0f64;
    for k in 0..n / 2 + 1 {
        let m = n - 1 - k;
        if (times[k] + times[m] - center2).abs() > tol {
            return Err(Error::arg(format!(
                "sample grid is not symmetric: t = {} has no mirror image",
                times[k]
            )));
        }
        worst = worst.max((traj.state(k)[coordinate] - traj.state(m)[coordinate]).abs());
    }
    Ok(worst)
}
