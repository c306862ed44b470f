use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use approx::assert_abs_diff_eq;
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::games::catalog::{alternating_sign_gda, fig1_gda, sin_mp, two_player};
use crate::games::{
    build_cycle_chain, matching_pennies, Modulation, PayoffSchedule, PolymatrixGame,
};
use crate::integrate::VectorField;

fn dv(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

/// Static Matching Pennies (modulation 1).
fn mp() -> PolymatrixGame {
    two_player(PayoffSchedule::single(matching_pennies(), Modulation::constant(1.0), TAU).unwrap())
        .unwrap()
}

/// Brute-force simplex projection for small `n`: solve the equality-constrained problem on
/// every face and keep the closest feasible point.
fn projection_oracle(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << n) {
        let support: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let k = support.len() as f64;
        let shift = (support.iter().map(|&i| y[i]).sum::<f64>() - 1.0) / k;
        let mut x = vec![0.0; n];
        let mut feasible = true;
        for &i in &support {
            x[i] = y[i] - shift;
            feasible &= x[i] >= -1e-15;
        }
        if !feasible {
            continue;
        }
        let d: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, x));
        }
    }
    best.unwrap().1
}

#[test]
fn gda_equilibrium_is_fixed() {
    let g = fig1_gda().unwrap();
    let d = gda_field(&g, 1.3, &GdaState::new(&[0.0, 0.0], &[0.0, 0.0])).unwrap();
    assert_eq!(d.to_flat(), vec![0.0; 4]);
}

#[test]
fn gda_alternating_sign_initial_velocity() {
    let g = alternating_sign_gda().unwrap();
    let d = gda_field(&g, 0.0, &GdaState::new(&[1.0], &[0.0])).unwrap();
    assert_eq!(d.to_flat(), vec![0.0, 1.0]);
}

#[test]
fn gda_fig1_hand_product() {
    let g = fig1_gda().unwrap();
    let d = gda_field(&g, PI / 2.0, &GdaState::new(&[1.0, 0.0], &[0.0, 1.0])).unwrap();
    let flat = d.to_flat();
    for (a, b) in flat.iter().zip([-1.0, 1.0, -1.0, 1.0]) {
        assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
    }
    let field = GdaField::new(g);
    let out = field.eval_vec(PI / 2.0, &[1.0, 0.0, 0.0, 1.0]).unwrap();
    assert_eq!(out, flat);
    assert_eq!(field.labels(), vec!["x1_0", "x1_1", "x2_0", "x2_1"]);
}

#[test]
fn gda_rejects_wrong_shape() {
    let g = fig1_gda().unwrap();
    assert!(gda_field(&g, 0.0, &GdaState::new(&[1.0], &[0.0, 1.0])).is_err());
}

#[test]
fn frozen_player_two_does_not_move() {
    let g = alternating_sign_gda().unwrap();
    let f = GdaField::with_frozen_player2(g);
    assert_eq!(f.eval_vec(0.5, &[3.0, 1.0]).unwrap(), vec![-1.0, 0.0]);
}

#[test]
fn payoff_vector_examples() {
    let g = mp();
    let half = dv(&[0.5, 0.5]);
    let v = g
        .payoff_vector(0, 0.3, &[dv(&[0.9, 0.1]), half.clone()])
        .unwrap();
    assert_eq!(v, dv(&[0.0, 0.0]));
    let v = g
        .payoff_vector(0, 0.3, &[half.clone(), dv(&[0.75, 0.25])])
        .unwrap();
    assert_abs_diff_eq!(v, dv(&[0.5, -0.5]), epsilon = 1e-15);
    assert!(g.payoff_vector(2, 0.3, &[half.clone(), half]).is_err());
}

#[test]
fn payoff_vector_with_two_uniform_neighbours_vanishes() {
    let mods = vec![Modulation::sine(1.0, 1.0, 0.3); 3];
    let g = build_cycle_chain(3, &mods, &matching_pennies(), TAU).unwrap();
    let x = vec![dv(&[0.5, 0.5]), dv(&[0.8, 0.2]), dv(&[0.5, 0.5])];
    assert_eq!(g.payoff_vector(1, 1.0, &x).unwrap(), dv(&[0.0, 0.0]));
}

#[test]
fn choice_map_examples() {
    let ent = Entropic;
    assert_eq!(
        choice_map(&ent, &[0.0, 0.0]).unwrap().as_slice(),
        &[0.5, 0.5]
    );
    let x = choice_map(&ent, &[3f64.ln(), 0.0]).unwrap();
    assert_abs_diff_eq!(x.as_slice()[0], 0.75, epsilon = 1e-15);
    assert_abs_diff_eq!(x.as_slice()[1], 0.25, epsilon = 1e-15);
    assert_eq!(
        choice_map(&Euclidean, &[2.0, 0.0]).unwrap().as_slice(),
        &[1.0, 0.0]
    );
    assert!(matches!(
        choice_map(&ent, &[f64::NAN, 0.0]),
        Err(crate::Error::Numeric(_))
    ));
}

#[test]
fn entropic_choice_survives_large_payoffs() {
    let x = choice_map(&Entropic, &[1e6, 1e6 - 1.0]).unwrap();
    assert!(x.as_slice().iter().all(|p| p.is_finite()));
    assert_abs_diff_eq!(
        x.as_slice()[0],
        1.0 / (1.0 + (-1f64).exp()),
        epsilon = 1e-12
    );
}

#[test]
fn regularizer_registry() {
    assert_eq!(
        regularizer("entropic").unwrap().kind(),
        RegularizerKind::Entropic
    );
    assert_eq!(regularizer("euclidean").unwrap().name(), "euclidean");
    assert!(matches!(
        regularizer("tsallis"),
        Err(crate::Error::UnknownName { .. })
    ));
    assert_abs_diff_eq!(Entropic.range(2), 2f64.ln());
    assert_abs_diff_eq!(Euclidean.range(2), 0.25);
}

#[test]
fn ftrl_field_examples() {
    let g = mp();
    let zero = FtrlState::zeros(&[2, 2]);
    let d = ftrl_field(&g, &Entropic, 0.4, &zero).unwrap();
    assert_eq!(d.to_flat(), vec![0.0; 4]);

    let s = FtrlState::new(vec![dv(&[0.0, 0.0]), dv(&[3f64.ln(), 0.0])]);
    let d = ftrl_field(&g, &Entropic, 0.4, &s).unwrap();
    assert_abs_diff_eq!(d.y[0], dv(&[0.5, -0.5]), epsilon = 1e-15);

    let g = sin_mp(TAU).unwrap();
    let d = ftrl_field(&g, &Entropic, PI, &s).unwrap();
    assert!(d.to_flat().iter().all(|v| v.abs() < 1e-15));
}

#[test]
fn replicator_examples() {
    let g = mp();
    let u = vec![dv(&[0.5, 0.5]), dv(&[0.5, 0.5])];
    let d = replicator_field(&g, 1.0, &u).unwrap();
    assert_eq!(flatten_blocks(&d), vec![0.0; 4]);

    let x = vec![dv(&[0.9, 0.1]), dv(&[0.75, 0.25])];
    let d = replicator_field(&g, 1.0, &x).unwrap();
    assert_abs_diff_eq!(d[0], dv(&[0.09, -0.09]), epsilon = 1e-15);

    let g = sin_mp(TAU).unwrap();
    let d = replicator_field(&g, PI, &x).unwrap();
    assert!(flatten_blocks(&d).iter().all(|v| v.abs() < 1e-15));

    let boundary = vec![dv(&[1.0, 0.0]), dv(&[0.3, 0.7])];
    let d = replicator_field(&mp(), 1.0, &boundary).unwrap();
    assert_eq!(d[0], dv(&[0.0, 0.0]));
}

#[test]
fn z_reduce_examples() {
    let z = z_reduce(&FtrlState::new(vec![dv(&[3.0, 3.0])]), &[1]).unwrap();
    assert_eq!(z.z[0], dv(&[0.0]));
    let z = z_reduce(&FtrlState::new(vec![dv(&[5.0, 2.0, 1.0])]), &[2]).unwrap();
    assert_eq!(z.z[0], dv(&[4.0, 1.0]));
    assert!(z_reduce(&FtrlState::new(vec![dv(&[5.0, 2.0])]), &[2]).is_err());
    assert_eq!(z_lift(&[4.0, 1.0], 1), dv(&[4.0, 0.0, 1.0]));
}

#[test]
fn z_field_examples() {
    let g = Arc::new(mp());
    let f = ZField::with_last_benchmarks(g.clone(), Arc::new(Entropic));
    assert_eq!(f.dim(), 2);
    assert_eq!(f.eval_vec(0.2, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    let d = f.eval_vec(0.2, &[0.0, 3f64.ln()]).unwrap();
    assert_abs_diff_eq!(d[0], 1.0, epsilon = 1e-15);
    assert_eq!(f.labels(), vec!["z0_0", "z1_0"]);
}

#[test]
fn z_field_commutes_with_reduction() {
    let mods: Vec<_> = (0..4)
        .map(|k| Modulation::sine(0.5 + 0.2 * k as f64, 1.0, k as f64))
        .collect();
    let chain = build_cycle_chain(4, &mods, &matching_pennies(), TAU).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for game in [mp(), chain] {
        let bench: Vec<usize> = game.actions().iter().map(|&n| n / 2).collect();
        for reg in [&Entropic as &dyn Regularizer, &Euclidean] {
            for _ in 0..100 {
                let t = rng.gen_range(0.0..20.0);
                let y = FtrlState::new(
                    game.actions()
                        .iter()
                        .map(|&n| DVector::from_fn(n, |_, _| rng.gen_range(-3.0..3.0)))
                        .collect(),
                );
                let lhs = z_field(&game, reg, t, &z_reduce(&y, &bench).unwrap()).unwrap();
                let rhs = z_reduce(&ftrl_field(&game, reg, t, &y).unwrap(), &bench).unwrap();
                for (a, b) in lhs.to_flat().iter().zip(rhs.to_flat()) {
                    assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
                }
            }
        }
    }
}

#[test]
fn reduced_choice_matches_full_choice() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let n = rng.gen_range(2..6);
        let y = DVector::from_fn(n, |_, _| rng.gen_range(-5.0..5.0));
        let b = rng.gen_range(0..n);
        let s = FtrlState::new(vec![y.clone()]);
        let z = z_reduce(&s, &[b]).unwrap();
        for reg in [&Entropic as &dyn Regularizer, &Euclidean] {
            let full = choice_map(reg, y.as_slice()).unwrap();
            let reduced = &z.strategies(reg).unwrap()[0];
            assert_abs_diff_eq!(full.probs(), reduced, epsilon = 1e-12);
        }
    }
}

#[test]
fn dynamics_registry() {
    use crate::games::Game;
    let poly = Game::Polymatrix(mp());
    for name in DYNAMICS {
        let f = dynamics(name, &poly, RegularizerKind::Entropic).unwrap();
        assert!(f.dim() > 0);
    }
    let bil = Game::Bilinear(fig1_gda().unwrap());
    assert!(dynamics("gda", &bil, RegularizerKind::Entropic).is_ok());
    assert!(matches!(
        dynamics("ftrl", &bil, RegularizerKind::Entropic),
        Err(crate::Error::Unsupported(_))
    ));
    assert!(matches!(
        dynamics("mwu", &poly, RegularizerKind::Entropic),
        Err(crate::Error::UnknownName { .. })
    ));
}

fn fd_trace(f: &dyn VectorField, t: f64, s: &[f64], bump: f64) -> f64 {
    (0..s.len())
        .map(|i| {
            let mut p = s.to_vec();
            let mut m = s.to_vec();
            p[i] += bump;
            m[i] -= bump;
            (f.eval_vec(t, &p).unwrap()[i] - f.eval_vec(t, &m).unwrap()[i]) / (2.0 * bump)
        })
        .sum()
}

proptest! {
    #[test]
    fn euclidean_projection_matches_oracle(y in prop::collection::vec(-3.0f64..3.0, 2..5)) {
        let mut x = vec![0.0; y.len()];
        project_simplex(&y, &mut x);
        let want = projection_oracle(&y);
        for (a, b) in x.iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn choice_is_shift_invariant(y in prop::collection::vec(-5.0f64..5.0, 2..6), c in -50.0f64..50.0) {
        let shifted: Vec<f64> = y.iter().map(|v| v + c).collect();
        for reg in [&Entropic as &dyn Regularizer, &Euclidean] {
            let a = choice_map(reg, &y).unwrap();
            let b = choice_map(reg, &shifted).unwrap();
            for (p, q) in a.as_slice().iter().zip(b.as_slice()) {
                prop_assert!((p - q).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn choice_is_a_mixed_strategy(y in prop::collection::vec(-20.0f64..20.0, 1..7)) {
        for reg in [&Entropic as &dyn Regularizer, &Euclidean] {
            let x = choice_map(reg, &y).unwrap();
            prop_assert!(crate::games::MixedStrategy::new(x.probs().clone()).is_ok());
        }
    }

    #[test]
    fn entropic_conjugate_identity(y in prop::collection::vec(-10.0f64..10.0, 2..6)) {
        let x = choice_map(&Entropic, &y).unwrap();
        let lhs: f64 = x.as_slice().iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() - Entropic.penalty(x.as_slice());
        let m = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + y.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        prop_assert!((lhs - lse).abs() <= 1e-10);
        prop_assert!((Entropic.conjugate(&y) - lse).abs() <= 1e-12);
    }

    #[test]
    fn replicator_is_tangent(a in 0.01f64..0.99, b in 0.01f64..0.99, t in 0.0f64..20.0) {
        let x = vec![dv(&[a, 1.0 - a]), dv(&[b, 1.0 - b])];
        let d = replicator_field(&sin_mp(TAU).unwrap(), t, &x).unwrap();
        for di in &d {
            prop_assert!(di.sum().abs() <= 1e-12);
        }
    }

    #[test]
    fn gda_field_is_divergence_free(t in 0.0f64..30.0, s in prop::collection::vec(-2.0f64..2.0, 4)) {
        let f = GdaField::new(fig1_gda().unwrap());
        prop_assert!(fd_trace(&f, t, &s, 1e-4).abs() <= 1e-8);
    }

    #[test]
    fn z_field_is_divergence_free(t in 0.0f64..30.0, s in prop::collection::vec(-3.0f64..3.0, 2)) {
        for reg in [Arc::new(Entropic) as Arc<dyn Regularizer>, Arc::new(Euclidean)] {
            let f = ZField::with_last_benchmarks(Arc::new(sin_mp(TAU).unwrap()), reg);
            prop_assert!(fd_trace(&f, t, &s, 1e-4).abs() <= 1e-6);
        }
    }
}
