use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use approx::assert_abs_diff_eq;
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::dynamics::{
    choice_map, flatten_blocks, Entropic, Euclidean, FtrlField, FtrlState, GdaField, Regularizer,
    ReplicatorField, ZField,
};
use crate::games::catalog::{
    alternating_sign_gda, fig1_gda, fig1_schedule, inverse_square_gda, sin_mp, two_player,
};
use crate::games::{matching_pennies, Modulation, PayoffSchedule, PolymatrixGame};
use crate::integrate::{integrate, sample_at, FnField, IntegratorConfig, Trajectory, VectorField};
use crate::Error;

fn dv(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

fn constant(n: usize, s: &[f64]) -> Trajectory {
    let labels = (0..s.len()).map(|i| format!("c{i}")).collect();
    Trajectory::from_rows(labels, (0..n).map(|k| (k as f64 * 0.5, s.to_vec()))).unwrap()
}

fn static_mp() -> PolymatrixGame {
    two_player(PayoffSchedule::single(matching_pennies(), Modulation::constant(1.0), TAU).unwrap())
        .unwrap()
}

#[test]
fn energy_examples() {
    assert_eq!(gda_energy(&[0.0, 0.0]), 0.0);
    assert_eq!(gda_energy(&[1.0, 0.0]), 0.5);
}

#[test]
fn energy_is_conserved_on_alternating_sign_game() {
    let f = GdaField::new(alternating_sign_gda().unwrap());
    let traj = integrate(&f, &[1.0, 0.0], 0.0, 3.0 * PI, &IntegratorConfig::rk4(1e-3)).unwrap();
    let rep = invariant_drift(&traj, "energy", |_, s| Ok(gda_energy(s))).unwrap();
    assert!(rep.max_abs_drift <= 1e-8, "{rep:?}");
    assert_eq!(rep.initial, 0.5);
}

#[test]
fn energy_is_conserved_on_fig1_game() {
    let f = GdaField::new(fig1_gda().unwrap());
    let cfg = IntegratorConfig::for_period(TAU);
    let traj = integrate(&f, &[0.6, -0.2, 0.1, 0.3], 0.0, 10.0 * TAU, &cfg).unwrap();
    let rep = invariant_drift(&traj, "energy", |_, s| Ok(gda_energy(s))).unwrap();
    assert!(rep.max_rel_drift <= 1e-6, "{rep:?}");
}

#[test]
fn kl_examples() {
    assert_eq!(kl_divergence(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
    let want = 0.5 * (2.0f64 / 3.0).ln() + 0.5 * 2f64.ln();
    assert_abs_diff_eq!(
        kl_divergence(&[0.5, 0.5], &[0.75, 0.25]).unwrap(),
        want,
        epsilon = 1e-15
    );
    assert_abs_diff_eq!(want, 0.14384, epsilon = 1e-5);
    assert_abs_diff_eq!(
        kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap(),
        2f64.ln(),
        epsilon = 1e-15
    );
    assert!(matches!(
        kl_divergence(&[0.5, 0.5], &[1.0, 0.0]),
        Err(Error::Domain(_))
    ));
    assert!(kl_divergence(&[1.0], &[0.5, 0.5]).is_err());
}

#[test]
fn fenchel_examples() {
    let g = sin_mp(TAU).unwrap();
    let zero = FtrlState::zeros(&[2, 2]);
    assert_abs_diff_eq!(
        fenchel_coupling(&g, &Entropic, &zero).unwrap(),
        0.0,
        epsilon = 1e-15
    );
    let corner = vec![dv(&[1.0, 0.0]), dv(&[0.5, 0.5])];
    assert!(matches!(
        fenchel_coupling_at(&Entropic, &corner, &zero.y),
        Err(Error::Domain(_))
    ));
    assert!(fenchel_coupling_at(&Euclidean, &corner, &zero.y).unwrap() >= 0.0);
}

#[test]
fn entropic_fenchel_equals_kl_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = sin_mp(TAU).unwrap();
    for _ in 0..100 {
        let y = FtrlState::new(
            (0..2)
                .map(|_| DVector::from_fn(2, |_, _| rng.gen_range(-4.0..4.0)))
                .collect(),
        );
        let x: Vec<_> =
            y.y.iter()
                .map(|yi| choice_map(&Entropic, yi.as_slice()).unwrap().into_inner())
                .collect();
        let a = fenchel_coupling(&g, &Entropic, &y).unwrap();
        let b = kl_sum(&g.equilibrium_vectors(), &x).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-10);
    }
}

#[test]
fn drift_of_constant_trajectory_is_zero() {
    let rep = invariant_drift(&constant(5, &[1.0, 2.0]), "energy", |_, s| {
        Ok(gda_energy(s))
    })
    .unwrap();
    assert_eq!(rep.max_abs_drift, 0.0);
    assert_eq!(rep.max_rel_drift, 0.0);
}

#[test]
fn fenchel_is_conserved_under_ftrl() {
    let game = Arc::new(sin_mp(TAU).unwrap());
    for reg in [
        Arc::new(Entropic) as Arc<dyn Regularizer>,
        Arc::new(Euclidean),
    ] {
        let f = FtrlField::new(game.clone(), reg.clone());
        let traj = integrate(
            &f,
            &[0.3, 0.0, 0.0, 0.4],
            0.0,
            5.0 * TAU,
            &IntegratorConfig::for_period(TAU),
        )
        .unwrap();
        let rep = invariant_drift(&traj, "fenchel", |_, s| {
            fenchel_coupling(&game, reg.as_ref(), &FtrlState::from_flat(&[2, 2], s)?)
        })
        .unwrap();
        assert!(rep.max_rel_drift <= 1e-5, "{}: {rep:?}", reg.name());
        assert!(rep.initial > 0.0);
    }
}

#[test]
fn kl_is_conserved_under_replicator() {
    let game = Arc::new(sin_mp(TAU).unwrap());
    let f = ReplicatorField::new(game.clone());
    let traj = integrate(
        &f,
        &[0.9, 0.1, 0.8, 0.2],
        0.0,
        10.0 * TAU,
        &IntegratorConfig::for_period(TAU),
    )
    .unwrap();
    let xs = game.equilibrium_vectors();
    let rep = invariant_drift(&traj, "kl", |_, s| {
        kl_sum(&xs, &crate::dynamics::split_blocks(&[2, 2], s)?)
    })
    .unwrap();
    assert!(rep.max_rel_drift <= 1e-6, "{rep:?}");
}

#[test]
fn recurrence_on_constant_trajectory() {
    let traj = constant(6, &[1.0, 2.0]);
    let ev = recurrence_scan(&traj, &[1.0, 2.0], 1e-3, 0.75).unwrap();
    assert_eq!(
        ev,
        vec![RecurrenceEvent {
            t_return: 1.0,
            distance: 0.0
        }]
    );
    assert!(recurrence_scan(&traj, &[1.0, 2.0], 0.0, 0.75).is_err());
}

#[test]
fn recurrence_reports_one_event_per_excursion() {
    let rows = (0..200).map(|k| {
        let t = k as f64 * 0.1;
        (t, vec![t.cos(), t.sin()])
    });
    let traj = Trajectory::from_rows(vec!["a".into(), "b".into()], rows).unwrap();
    let ev = recurrence_scan(&traj, &[1.0, 0.0], 0.2, 1.0).unwrap();
    assert_eq!(ev.len(), 3);
    for (e, k) in ev.iter().zip(1..) {
        assert!((e.t_return - k as f64 * TAU).abs() < 0.06, "{e:?}");
        assert!(e.distance < 0.05);
    }
}

#[test]
fn inverse_square_game_converges_without_returning() {
    let f = GdaField::new(inverse_square_gda());
    let traj = integrate(&f, &[1.0, 0.0], 2.0, 1000.0, &IntegratorConfig::rk4(1e-2)).unwrap();
    let end = traj.last().unwrap();
    // exact solution (cos(1/t - 1/2), sin(1/t - 1/2))
    assert_abs_diff_eq!(end[0], (1e-3f64 - 0.5).cos(), epsilon = 1e-9);
    assert_abs_diff_eq!(end[1], (1e-3f64 - 0.5).sin(), epsilon = 1e-9);
    assert!(sup_distance(end, &[0.5f64.cos(), -(0.5f64.sin())]) < 1e-3);
    assert!(recurrence_scan(&traj, &[1.0, 0.0], 0.15, 3.0)
        .unwrap()
        .is_empty());
    let floor = 2.0 * (1.0f64 / 12.0).sin();
    let mut scan = RecurrenceScanner::new(&[1.0, 0.0], 0.15, 3.0).unwrap();
    for (t, s) in traj.samples() {
        scan.observe(t, s).unwrap();
    }
    let closest = scan.closest().unwrap();
    assert!(
        closest.distance >= floor * (1.0 - 1e-6) / 2f64.sqrt(),
        "{closest:?}"
    );
}

#[test]
fn time_average_examples() {
    assert_eq!(
        time_average(&constant(4, &[0.3, -1.0])).unwrap(),
        vec![0.3, -1.0]
    );
    let rows = (0..=2000).map(|k| {
        let t = k as f64 * TAU / 2000.0;
        (t, vec![t.sin()])
    });
    let traj = Trajectory::from_rows(vec!["s".into()], rows).unwrap();
    assert_abs_diff_eq!(time_average(&traj).unwrap()[0], 0.0, epsilon = 1e-12);
    assert!(time_average(&constant(1, &[0.0])).is_err());
}

#[test]
fn alternating_sign_time_average() {
    let f = GdaField::new(alternating_sign_gda().unwrap());
    let traj = integrate(&f, &[1.0, 0.0], 0.0, 3.0 * PI, &IntegratorConfig::rk4(1e-3)).unwrap();
    let avg = time_average(&traj).unwrap();
    let want = 2.0 / (3.0 * PI);
    assert_abs_diff_eq!(avg[0], -want, epsilon = 1e-4);
    assert_abs_diff_eq!(avg[1], want, epsilon = 1e-4);
    let end = traj.last().unwrap();
    assert!(sup_distance(end, &[1.0, 0.0]) <= 1e-6);
    let running = running_time_average(&traj).unwrap();
    assert_eq!(running.last().unwrap(), &avg[..]);
}

#[test]
fn pinned_players_earn_the_game_value() {
    let g = sin_mp(TAU).unwrap();
    let rows = (0..=100).map(|k| (k as f64 * 0.1, vec![0.5; 4]));
    let traj = Trajectory::from_rows((0..4).map(|i| format!("x{i}")).collect(), rows).unwrap();
    for p in 0..2 {
        let u = time_average_utility(&g, &traj, p).unwrap();
        assert!(u.states().all(|v| v[0] == 0.0));
    }
    let y = Trajectory::from_rows(
        (0..4).map(|i| format!("y{i}")).collect(),
        (0..=100).map(|k| (k as f64 * 0.1, vec![0.0; 4])),
    )
    .unwrap();
    let r = regret(&static_mp(), &Entropic, &y, 0).unwrap();
    assert!(r.states().all(|v| v[0] == 0.0));
    assert!(time_average_utility(&g, &traj, 2).is_err());
}

#[test]
fn replicator_average_utilities_vanish_and_cancel() {
    let game = Arc::new(sin_mp(TAU).unwrap());
    let f = ReplicatorField::new(game.clone());
    let traj = integrate(
        &f,
        &[0.9, 0.1, 0.8, 0.2],
        0.0,
        50.0 * TAU,
        &IntegratorConfig::for_period(TAU),
    )
    .unwrap();
    let u0 = time_average_utility(&game, &traj, 0).unwrap();
    let u1 = time_average_utility(&game, &traj, 1).unwrap();
    assert!(u0.last().unwrap()[0].abs() <= 5e-3);
    for (a, b) in u0.states().zip(u1.states()) {
        assert!((a[0] + b[0]).abs() <= 1e-12);
    }
}

#[test]
fn ftrl_regret_respects_bound() {
    let game = Arc::new(sin_mp(TAU).unwrap());
    for reg in [
        Arc::new(Entropic) as Arc<dyn Regularizer>,
        Arc::new(Euclidean),
    ] {
        let f = FtrlField::new(game.clone(), reg.clone());
        let traj = integrate(
            &f,
            &[0.0, 0.0, 0.4, 0.0],
            0.0,
            30.0,
            &IntegratorConfig::rk4(1e-2),
        )
        .unwrap();
        let r = regret(&game, reg.as_ref(), &traj, 0).unwrap();
        for (t, v) in r.samples() {
            assert!(
                v[0] <= regret_bound(reg.as_ref(), 2, t),
                "{} at t = {t}: {}",
                reg.name(),
                v[0]
            );
        }
    }
}

#[test]
fn regret_from_shifted_start_respects_coupling_bound() {
    let game = Arc::new(sin_mp(TAU).unwrap());
    for reg in [
        Arc::new(Entropic) as Arc<dyn Regularizer>,
        Arc::new(Euclidean),
    ] {
        assert_abs_diff_eq!(
            regret_bound_from(reg.as_ref(), &[0.3, 0.3], 2.0),
            regret_bound(reg.as_ref(), 2, 2.0),
            epsilon = 1e-12
        );
        let f = FtrlField::new(game.clone(), reg.clone());
        let y0 = [0.0, 0.0, 0.4, 0.0];
        let traj = integrate(&f, &y0, 0.0, 30.0, &IntegratorConfig::rk4(1e-2)).unwrap();
        let r = regret(&game, reg.as_ref(), &traj, 1).unwrap();
        for (t, v) in r.samples() {
            assert!(v[0] <= regret_bound_from(reg.as_ref(), &y0[2..], t) * (1.0 + 1e-9));
        }
    }
}

#[test]
fn symmetry_residual() {
    let game = Arc::new(sin_mp(TAU).unwrap());
    let f = ReplicatorField::new(game);
    let traj = integrate(
        &f,
        &[0.9, 0.1, 0.8, 0.2],
        0.0,
        TAU,
        &IntegratorConfig::for_period(TAU),
    )
    .unwrap();
    for j in 0..4 {
        assert!(half_period_symmetry_residual(&traj, j).unwrap() <= 1e-6);
    }
    assert!(half_period_symmetry_residual(&traj, 4).is_err());

    let rows = [(0.0, vec![1.0]), (1.0, vec![2.0]), (3.0, vec![1.0])];
    let lopsided = Trajectory::from_rows(vec!["a".into()], rows).unwrap();
    assert!(matches!(
        half_period_symmetry_residual(&lopsided, 0),
        Err(Error::Argument(_))
    ));
    let single =
        Trajectory::from_rows(vec!["a".into()], [(0.0, vec![1.0]), (2.0, vec![1.0])]).unwrap();
    assert_eq!(half_period_symmetry_residual(&single, 0).unwrap(), 0.0);
}

#[test]
fn fig1_modulation_breaks_half_period_symmetry() {
    let game = Arc::new(two_player(fig1_schedule().unwrap()).unwrap());
    let f = ReplicatorField::new(game);
    let times: Vec<f64> = (0..=400).map(|k| k as f64 * TAU / 400.0).collect();
    let traj = sample_at(
        &f,
        &[0.9, 0.1, 0.8, 0.2],
        &times,
        &IntegratorConfig::for_period(TAU),
    )
    .unwrap();
    assert!(half_period_symmetry_residual(&traj, 0).unwrap() > 1e-3);
}

#[test]
fn replicator_in_strategy_space_is_not_divergence_free() {
    // the skewed piece of this game makes the trace visibly nonzero
    let game = crate::games::catalog::shifting_equilibrium(TAU).unwrap();
    let f = ReplicatorField::new(Arc::new(game));
    let tr = divergence_trace(&f, 3.0, &[0.7, 0.3, 0.6, 0.4], 1e-5).unwrap();
    assert!(tr.abs() > 1e-3, "{tr}");
}

#[test]
fn volume_ratio_examples() {
    let cfg = IntegratorConfig::rk4(1e-3);
    let gda = GdaField::new(alternating_sign_gda().unwrap());
    let r = volume_ratio(&gda, 3.0 * PI, &[1.0, 0.0], 1e-4, &cfg).unwrap();
    assert_abs_diff_eq!(r, 1.0, epsilon = 1e-5);

    let scaled = FnField::new(2, |t, s: &[f64], out: &mut [f64]| {
        let a = if crate::games::reduce_time(t, TAU) < PI {
            2.0
        } else {
            -1.0
        };
        out[0] = a * s[1];
        out[1] = -a * s[0];
    })
    .with_periodic_breaks(vec![0.0, PI], TAU);
    let r = volume_ratio(&scaled, TAU, &[0.3, 0.8], 1e-4, &cfg).unwrap();
    assert_abs_diff_eq!(r, 1.0, epsilon = 1e-4);

    let game = Arc::new(sin_mp(TAU).unwrap());
    let z = ZField::with_last_benchmarks(game, Arc::new(Entropic));
    let s0 =
        crate::dynamics::z_from_interior(&[dv(&[0.6, 0.4]), dv(&[0.45, 0.55])], &[1, 1]).unwrap();
    let r = volume_ratio(
        &z,
        TAU,
        &s0.to_flat(),
        1e-4,
        &IntegratorConfig::for_period(TAU),
    )
    .unwrap();
    assert_abs_diff_eq!(r, 1.0, epsilon = 1e-4);
    assert!(divergence_trace(&z, 0.0, &[0.0, 0.0], 0.0).is_err());
}

proptest! {
    #[test]
    fn fenchel_is_nonnegative(y in prop::collection::vec(-5.0f64..5.0, 4)) {
        let g = sin_mp(TAU).unwrap();
        let s = FtrlState::from_flat(&[2, 2], &y).unwrap();
        for reg in [&Entropic as &dyn Regularizer, &Euclidean] {
            prop_assert!(fenchel_coupling(&g, reg, &s).unwrap() >= -1e-15);
        }
    }

    #[test]
    fn fenchel_is_shift_invariant(y in prop::collection::vec(-5.0f64..5.0, 4), c in -20.0f64..20.0) {
        let g = sin_mp(TAU).unwrap();
        let s = FtrlState::from_flat(&[2, 2], &y).unwrap();
        let shifted = FtrlState::from_flat(&[2, 2], &y.iter().map(|v| v + c).collect::<Vec<_>>()).unwrap();
        for reg in [&Entropic as &dyn Regularizer, &Euclidean] {
            let a = fenchel_coupling(&g, reg, &s).unwrap();
            let b = fenchel_coupling(&g, reg, &shifted).unwrap();
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn kl_is_nonnegative(p in 0.001f64..0.999, q in 0.001f64..0.999) {
        let d = kl_divergence(&[p, 1.0 - p], &[q, 1.0 - q]).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert!((d == 0.0) == (p == q));
    }

    #[test]
    fn events_respect_threshold_and_exclusion(
        values in prop::collection::vec(-1.0f64..1.0, 2..60),
        eps in 0.01f64..0.5,
        cut in 0.0f64..30.0,
    ) {
        let rows = values.iter().enumerate().map(|(k, v)| (k as f64, vec![*v]));
        let traj = Trajectory::from_rows(vec!["v".into()], rows).unwrap();
        let events = recurrence_scan(&traj, &[0.0], eps, cut).unwrap();
        for e in &events {
            prop_assert!(e.distance < eps);
            prop_assert!(e.t_return >= cut);
        }
        prop_assert!(events.windows(2).all(|w| w[1].t_return > w[0].t_return));
    }

    #[test]
    fn gda_divergence_vanishes(t in 0.0f64..40.0, s in prop::collection::vec(-2.0f64..2.0, 4)) {
        let f = GdaField::new(fig1_gda().unwrap());
        let scale = flatten_blocks(&[DVector::from_vec(f.eval_vec(t, &s).unwrap())]).iter().map(|v| v.abs()).fold(1.0, f64::max);
        prop_assert!(divergence_trace(&f, t, &s, 1e-4).unwrap().abs() <= 1e-8 * scale);
    }
}
