use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use super::{
    check_x0, run_recorded, Analysis, Experiment, ExperimentSpec, OutputSink, RecurrenceSummary,
};
use crate::analysis::{gda_energy, sup_distance, time_average, DriftTracker, RecurrenceScanner};
use crate::dynamics::{DynamicsKind, GdaField};
use crate::games::catalog::{alternating_sign_gda, dummy_sign_gda, fig1_gda, inverse_square_gda};
use crate::games::{BilinearGame, GameSpec};
use crate::integrate::{IntegratorConfig, Trajectory, VectorField};
use crate::{Error, Result};

fn params(items: &[(&str, f64)]) -> BTreeMap<String, f64> {
    items.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn gda_spec(
    name: &str,
    label: &str,
    game: Option<&BilinearGame>,
    x0: Vec<f64>,
    (t0, t1): (f64, f64),
    step: f64,
    analyses: &[&str],
    extra: &[(&str, f64)],
) -> ExperimentSpec {
    ExperimentSpec {
        name: name.to_string(),
        game_label: label.to_string(),
        game: game.and_then(GameSpec::from_bilinear),
        dynamics: DynamicsKind::Gda,
        regularizer: None,
        x0,
        t0,
        t1,
        period: game.and_then(BilinearGame::period),
        integrator: IntegratorConfig::rk4(step),
        analyses: analyses.iter().map(|s| s.to_string()).collect(),
        seed: 0,
        params: params(extra),
    }
}

fn save_trajectory(out: &mut OutputSink, traj: &Trajectory) -> Result<()> {
    out.write("trajectory.csv", |p| traj.save_csv(p))
}

/// The catalog games behind these experiments have a fixed period.
fn require_period(spec: &ExperimentSpec, game: &BilinearGame) -> Result<f64> {
    let fixed = game.period().unwrap_or(f64::NAN);
    let p = spec.period()?;
    if (p - fixed).abs() > 1e-12 * fixed {
        return Err(Error::Unsupported(format!(
            "{} has a fixed period {fixed}; override periods instead",
            spec.name
        )));
    }
    Ok(p)
}

fn labels(field: &dyn VectorField) -> Vec<String> {
    field.labels()
}

/// GDA on Matching Pennies rescaled by the sine/linear schedule.
pub(super) struct Fig1;

impl Experiment for Fig1 {
    fn name(&self) -> &'static str {
        "fig1_gda_mp"
    }

    fn summary(&self) -> &'static str {
        "GDA in rescaled Matching Pennies: bounded orbits, conserved energy, returns"
    }

    fn defaults(&self) -> ExperimentSpec {
        let game = fig1_gda().expect("fixed schedule");
        gda_spec(
            self.name(),
            "Matching Pennies x (sin t on [0, 3pi/2), linear to 0 on [3pi/2, 2pi))",
            Some(&game),
            vec![1.0, 0.0, 0.0, 0.0],
            (0.0, 200.0 * TAU),
            1e-3 * TAU,
            &["energy", "recurrence", "terminal"],
            &[("eps", 1e-2), ("exclude_periods", 1.0)],
        )
    }

    fn execute(
        &self,
        spec: &mut ExperimentSpec,
        out: &mut OutputSink,
    ) -> Result<BTreeMap<String, Analysis>> {
        let game = fig1_gda()?;
        let period = require_period(spec, &game)?;
        let field = GdaField::new(game.clone());
        check_x0(spec, field.dim())?;
        let (eps, exclude) = (
            spec.param("eps")?,
            spec.t0 + spec.param("exclude_periods")? * period,
        );
        let mut energy = DriftTracker::new("gda_energy");
        let mut scan = RecurrenceScanner::new(&spec.x0, eps, exclude)?;
        let traj = run_recorded(
            &field,
            &spec.x0,
            spec.t0,
            spec.t1,
            &spec.integrator,
            period / 50.0,
            |t, s| {
                energy.observe(gda_energy(s))?;
                scan.observe(t, s)
            },
        )?;
        let closest = scan.closest();
        let mut res = BTreeMap::new();
        res.insert("energy".into(), Analysis::Drift(energy.report()));
        res.insert(
            "recurrence".into(),
            Analysis::Recurrence(RecurrenceSummary {
                space: "state".into(),
                eps,
                exclude_until: exclude,
                events: scan.finish(),
                closest,
            }),
        );
        res.insert(
            "terminal".into(),
            Analysis::vector(&labels(&field), traj.last().unwrap_or(&[])),
        );
        let with_mod = traj.append_columns(vec!["modulation".into()], |t, _| {
            Ok(vec![game.payoff_at(t)?[(0, 0)]])
        })?;
        save_trajectory(out, &with_mod)?;
        Ok(res)
    }
}

/// GDA with `A(t) = 1/t²`: converges to a rotated copy of the start instead of returning.
pub(super) struct NonPeriodic;

impl Experiment for NonPeriodic {
    fn name(&self) -> &'static str {
        "cex_nonperiodic"
    }

    fn summary(&self) -> &'static str {
        "GDA with payoff 1/t^2: equilibrium is time-invariant but payoffs are not periodic; no returns"
    }

    fn defaults(&self) -> ExperimentSpec {
        gda_spec(
            self.name(),
            "scalar payoff 1/t^2",
            None,
            vec![1.0, 0.0],
            (2.0, 1000.0),
            1e-2,
            &["recurrence", "terminal", "limit"],
            &[("eps", 0.15), ("exclude_until", 3.0)],
        )
    }

    fn execute(
        &self,
        spec: &mut ExperimentSpec,
        out: &mut OutputSink,
    ) -> Result<BTreeMap<String, Analysis>> {
        let field = GdaField::new(inverse_square_gda());
        check_x0(spec, 2)?;
        let (eps, exclude) = (spec.param("eps")?, spec.param("exclude_until")?);
        let mut scan = RecurrenceScanner::new(&spec.x0, eps, exclude)?;
        let traj = run_recorded(
            &field,
            &spec.x0,
            spec.t0,
            spec.t1,
            &spec.integrator,
            1.0,
            |t, s| scan.observe(t, s),
        )?;
        let closest = scan.closest();
        // x(t) = R(1/t - 1/t0) x0 with R the rotation by the given angle
        let rotate = |th: f64| {
            let (s, c) = th.sin_cos();
            vec![
                c * spec.x0[0] - s * spec.x0[1],
                s * spec.x0[0] + c * spec.x0[1],
            ]
        };
        let end = traj.last().unwrap_or(&[]).to_vec();
        let exact = rotate(1.0 / spec.t1 - 1.0 / spec.t0);
        let limit = rotate(-1.0 / spec.t0);
        let lab = labels(&field);
        let mut res = BTreeMap::new();
        res.insert(
            "recurrence".into(),
            Analysis::Recurrence(RecurrenceSummary {
                space: "state".into(),
                eps,
                exclude_until: exclude,
                events: scan.finish(),
                closest,
            }),
        );
        res.insert("terminal".into(), Analysis::vector(&lab, &end));
        res.insert(
            "exact_error".into(),
            Analysis::Scalar {
                value: sup_distance(&end, &exact),
            },
        );
        res.insert("limit".into(), Analysis::vector(&lab, &limit));
        res.insert(
            "limit_error".into(),
            Analysis::Scalar {
                value: sup_distance(&end, &limit),
            },
        );
        save_trajectory(out, &traj)?;
        Ok(res)
    }
}

/// Player 2 frozen at `x2 = 1` while `A` alternates between `+1` and `-1`: `x1` drifts by
/// `-1` per period.
pub(super) struct DummyPlayer;

impl Experiment for DummyPlayer {
    fn name(&self) -> &'static str {
        "cex_no_invariant_eq"
    }

    fn summary(&self) -> &'static str {
        "GDA against a dummy player in a periodic game without a time-invariant equilibrium"
    }

    fn defaults(&self) -> ExperimentSpec {
        let game = dummy_sign_gda().expect("fixed schedule");
        gda_spec(
            self.name(),
            "scalar payoff +1 on [0,1), -1 on [1,3); player 2 fixed at 1",
            Some(&game),
            vec![0.0, 1.0],
            (0.0, 60.0),
            3e-3,
            &["recurrence", "knots", "terminal"],
            &[("eps", 0.5), ("exclude_periods", 2.0)],
        )
    }

    fn execute(
        &self,
        spec: &mut ExperimentSpec,
        out: &mut OutputSink,
    ) -> Result<BTreeMap<String, Analysis>> {
        let game = dummy_sign_gda()?;
        let period = require_period(spec, &game)?;
        let field = GdaField::with_frozen_player2(game);
        check_x0(spec, 2)?;
        let (eps, exclude) = (
            spec.param("eps")?,
            spec.t0 + spec.param("exclude_periods")? * period,
        );
        let mut scan = RecurrenceScanner::new(&spec.x0, eps, exclude)?;
        let mut knots = [f64::NAN; 2];
        let traj = run_recorded(
            &field,
            &spec.x0,
            spec.t0,
            spec.t1,
            &spec.integrator,
            period / 100.0,
            |t, s| {
                if t == 1.0 {
                    knots[0] = s[0];
                } else if t == 3.0 {
                    knots[1] = s[0];
                }
                scan.observe(t, s)
            },
        )?;
        let closest = scan.closest();
        let end = traj.last().unwrap_or(&[]).to_vec();
        let mut res = BTreeMap::new();
        res.insert(
            "recurrence".into(),
            Analysis::Recurrence(RecurrenceSummary {
                space: "state".into(),
                eps,
                exclude_until: exclude,
                events: scan.finish(),
                closest,
            }),
        );
        res.insert(
            "knots".into(),
            Analysis::vector(&["x1(1)".into(), "x1(3)".into()], &knots),
        );
        res.insert(
            "drift_per_period".into(),
            Analysis::Scalar {
                value: (end[0] - spec.x0[0]) / spec.periods().unwrap_or(1.0),
            },
        );
        res.insert("terminal".into(), Analysis::vector(&labels(&field), &end));
        save_trajectory(out, &traj)?;
        Ok(res)
    }
}

/// One period of GDA in the alternating-sign scalar game: the orbit closes but its time
/// average is off the equilibrium.
pub(super) struct AlternatingAverage;

impl Experiment for AlternatingAverage {
    fn name(&self) -> &'static str {
        "tavg_gda"
    }

    fn summary(&self) -> &'static str {
        "GDA time average over one period of a piecewise-constant scalar game differs from the equilibrium"
    }

    fn defaults(&self) -> ExperimentSpec {
        let game = alternating_sign_gda().expect("fixed schedule");
        gda_spec(
            self.name(),
            "scalar payoff -1 on [0,pi), +1 on [pi,3pi/2), -1 on [3pi/2,3pi)",
            Some(&game),
            vec![1.0, 0.0],
            (0.0, 3.0 * PI),
            1e-3,
            &["time_average", "terminal", "energy"],
            &[],
        )
    }

    fn execute(
        &self,
        spec: &mut ExperimentSpec,
        out: &mut OutputSink,
    ) -> Result<BTreeMap<String, Analysis>> {
        let game = alternating_sign_gda()?;
        require_period(spec, &game)?;
        let field = GdaField::new(game);
        check_x0(spec, 2)?;
        let mut energy = DriftTracker::new("gda_energy");
        let full = run_recorded(
            &field,
            &spec.x0,
            spec.t0,
            spec.t1,
            &spec.integrator,
            0.0,
            |_, s| energy.observe(gda_energy(s)),
        )?;
        let end = full.last().unwrap_or(&[]).to_vec();
        let lab = labels(&field);
        let mut res = BTreeMap::new();
        res.insert(
            "time_average".into(),
            Analysis::vector(&lab, &time_average(&full)?),
        );
        res.insert("terminal".into(), Analysis::vector(&lab, &end));
        res.insert(
            "terminal_error".into(),
            Analysis::Scalar {
                value: sup_distance(&end, &spec.x0),
            },
        );
        res.insert("energy".into(), Analysis::Drift(energy.report()));
        save_trajectory(out, &full)?;
        Ok(res)
    }
}
