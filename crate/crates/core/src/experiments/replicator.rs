use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::chain::{random_interior_profile, toroid_chain};
use super::pixel::{encode_grid, image_distance, Image, PixelCode};
use super::{
    check_x0, run_recorded, Analysis, Experiment, ExperimentSpec, OutputSink, RecurrenceSummary,
};
use crate::analysis::{
    fenchel_coupling, half_period_symmetry_residual, kl_sum, regret, regret_bound,
    regret_bound_from, time_average, time_average_utility, DriftTracker, RecurrenceScanner,
};
use crate::dynamics::{
    flatten_blocks, last_action_benchmarks, split_blocks, z_from_interior, z_reduce, DynamicsKind,
    FtrlField, FtrlState, Regularizer, RegularizerKind, ReplicatorField, ZField, ZState,
};
use crate::games::catalog::{shifting_equilibrium, sin_mp};
use crate::games::{GameSpec, PolymatrixGame};
use crate::integrate::{IntegratorConfig, Trajectory, VectorField};
use crate::{Error, Result};

fn replicator_spec(
    name: &str,
    label: &str,
    dynamics: DynamicsKind,
    regularizer: Option<RegularizerKind>,
    x0: Vec<f64>,
    periods: f64,
    analyses: &[&str],
    extra: &[(&str, f64)],
) -> ExperimentSpec {
    ExperimentSpec {
        name: name.to_string(),
        game_label: label.to_string(),
        game: None,
        dynamics,
        regularizer,
        x0,
        t0: 0.0,
        t1: periods * TAU,
        period: Some(TAU),
        integrator: IntegratorConfig::for_period(TAU),
        analyses: analyses.iter().map(|s| s.to_string()).collect(),
        seed: 0,
        params: extra.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
    }
}

fn usize_param(spec: &ExperimentSpec, key: &str) -> Result<usize> {
    let v = spec.param(key)?;
    if !(v >= 1.0 && v.fract() == 0.0) {
        return Err(Error::arg(format!(
            "parameter {key} must be a positive integer, got {v}"
        )));
    }
    Ok(v as usize)
}

fn exclusion(spec: &ExperimentSpec) -> Result<f64> {
    Ok(spec.t0 + spec.param("exclude_periods")? * spec.period()?)
}

fn kl_to_equilibrium(game: &PolymatrixGame, x: &[f64]) -> Result<f64> {
    kl_sum(
        &game.equilibrium_vectors(),
        &split_blocks(game.actions(), x)?,
    )
}

fn z_of(game: &PolymatrixGame, benchmarks: &[usize], x: &[f64]) -> Result<Vec<f64>> {
    Ok(z_from_interior(&split_blocks(game.actions(), x)?, benchmarks)?.to_flat())
}

/// `y` with `Q(y) = x` for an interior profile `x`.
fn interior_preimage(reg: RegularizerKind, x: &[f64]) -> Vec<f64> {
    match reg {
        RegularizerKind::Entropic => x.iter().map(|p| p.ln()).collect(),
        RegularizerKind::Euclidean => x.to_vec(),
    }
}

fn recurrence(space: &str, eps: f64, exclude_until: f64, scan: RecurrenceScanner) -> Analysis {
    let closest = scan.closest();
    Analysis::Recurrence(RecurrenceSummary {
        space: space.into(),
        eps,
        exclude_until,
        events: scan.finish(),
        closest,
    })
}

fn strategy_labels() -> Vec<String> {
    (0..2)
        .flat_map(|i| (0..2).map(move |a| format!("x{i}_{a}")))
        .collect()
}

fn kl_column(game: &PolymatrixGame, traj: &Trajectory) -> Result<Trajectory> {
    traj.append_columns(vec!["kl".into()], |_, s| {
        Ok(vec![kl_to_equilibrium(game, s)?])
    })
}

/// Profile for the toroid experiments: the given `x0`, or a seeded random interior one when
/// `x0` is empty.
fn resolve_profile(spec: &mut ExperimentSpec, players: usize) -> Result<()> {
    if spec.x0.is_empty() {
        spec.x0 =
            random_interior_profile(players, spec.seed, spec.param("x_lo")?, spec.param("x_hi")?);
    }
    check_x0(spec, 2 * players)
}

/// Replicator on a cycle of randomly rescaled Matching Pennies games.
pub(super) struct ToroidKl;

impl Experiment for ToroidKl {
    fn name(&self) -> &'static str {
        "fig2_toroid_kl"
    }

    fn summary(&self) -> &'static str {
        "replicator on a cycle of sine-rescaled Matching Pennies; KL to the equilibrium is conserved"
    }

    fn defaults(&self) -> ExperimentSpec {
        replicator_spec(
            self.name(),
            "cycle of Matching Pennies edges, each scaled by a seeded random sine",
            DynamicsKind::Replicator,
            None,
            Vec::new(),
            5.0,
            &["fenchel", "recurrence", "kl_series"],
            &[
                ("players", 64.0),
                ("x_lo", 0.4),
                ("x_hi", 0.6),
                ("eps", 5e-2),
                ("exclude_periods", 1.0),
            ],
        )
    }

    fn execute(
        &self,
        spec: &mut ExperimentSpec,
        out: &mut OutputSink,
    ) -> Result<BTreeMap<String, Analysis>> {
        let players = usize_param(spec, "players")?;
        let period = spec.period()?;
        let game = Arc::new(toroid_chain(players, spec.seed, period)?);
        spec.game = Some(GameSpec::from_polymatrix(&game));
        resolve_profile(spec, players)?;
        let field = ReplicatorField::new(game.clone());
        let bench = last_action_benchmarks(game.actions());
        let (eps, exclude) = (spec.param("eps")?, exclusion(spec)?);
        let mut kl = DriftTracker::new("kl_sum");
        let mut scan = RecurrenceScanner::new(&z_of(&game, &bench, &spec.x0)?, eps, exclude)?;
        let traj = run_recorded(
            &field,
            &spec.x0,
            spec.t0,
            spec.t1,
            &spec.integrator,
            period / 50.0,
            |t, s| {
                kl.observe(kl_to_equilibrium(&game, s)?)?;
                scan.observe(t, &z_of(&game, &bench, s)?)
            },
        )?;
        let traj = kl_column(&game, &traj)?;
        let mut res = BTreeMap::new();
        res.insert("fenchel".into(), Analysis::Drift(kl.report()));
        res.insert("recurrence".into(), recurrence("z", eps, exclude, scan));
        res.insert(
            "kl_series".into(),
            Analysis::series("kl", &traj, traj.dim() - 1, 500),
        );
        out.write("trajectory.csv", |p| traj.save_csv(p))?;
        Ok(res)
    }
}

// 8x8 ring with a centre dot; '#' marks players starting at the high probability.
const PATTERN: [&str; 8] = [
    "..####..", ".#....#.", "#......#", "#..##..#", "#..##..#", "#......#", ".#....#.", "..####..",
];
const GRID: usize = 8;

fn pattern_profile(lo: f64, hi: f64) -> Vec<f64> {
    PATTERN
        .iter()
        .flat_map(|row| row.chars())
        .flat_map(|c| {
            let p = if c == '#' { hi } else { lo };
            [p, 1.0 - p]
        })
        .collect()
}

fn frame(x: &[f64], code: &PixelCode) -> Result<Image> {
    let first: Vec<f64> = x.iter().step_by(2).copied().collect();
    encode_grid(&first, GRID, GRID, code)
}

/// Index `k` when `t` is (numerically) the `k`-th period boundary after `t0`.
fn period_index(t: f64, t0: f64, period: f64) -> Option<usize> {
    let k = ((t - t0) / period).round();
    ((t - t0 - k * period).abs() <= 1e-9 * t.abs().max(1.0)).then_some(k as usize)
}

/// 64-player cycle whose first-action probabilities are drawn as an 8x8 picture; the picture
/// is compared with itself once per period.
pub(super) struct ImageGrid;

impl Experiment for ImageGrid {
    fn name(&self) -> &'static str {
        "fig3_image_grid"
    }

    fn summary(&self) -> &'static str {
        "8x8 picture encoded in a 64-player replicator cycle; image distance dips when the orbit returns"
    }

    fn defaults(&self) -> ExperimentSpec {
        let mut spec = replicator_spec(
            self.name(),
            "64-player cycle of Matching Pennies edges, each scaled by a seeded random sine",
            DynamicsKind::Replicator,
            None,
            Vec::new(),
            100.0,
            &["image_distance", "best_return", "mid_distance"],
            &[("gain", 10.0), ("x_lo", 0.2), ("x_hi", 0.8)],
        );
        spec.integrator = IntegratorConfig::rk4(TAU / 200.0);
        spec
    }

    fn execute(
        &self,
        spec: &mut ExperimentSpec,
        out: &mut OutputSink,
    ) -> Result<BTreeMap<String, Analysis>> {
        let players = GRID * GRID;
        let period = spec.period()?;
        let game = Arc::new(toroid_chain(players, spec.seed, period)?);
        spec.game = Some(GameSpec::from_polymatrix(&game));
        if spec.x0.is_empty() {
            spec.x0 = pattern_profile(spec.param("x_lo")?, spec.param("x_hi")?);
        }
        check_x0(spec, 2 * players)?;
        let code = PixelCode {
            gain: spec.param("gain")?,
            ..PixelCode::default()
        };
        let field = ReplicatorField::new(game.clone());
        let reference = frame(&spec.x0, &code)?;
        let mut distances = Trajectory::new(vec!["image_distance".into()]);
        let mut images: Vec<Image> = Vec::new();
        let traj = run_recorded(
            &field,
            &spec.x0,
            spec.t0,
            spec.t1,
            &spec.integrator,
            period / 20.0,
            |t, s| {
                if let Some(k) = period_index(t, spec.t0, period) {
                    if k >= 1 && k > images.len() {
                        let img = frame(s, &code)?;
                        distances.push(t, &[image_distance(&reference, &img)?])?;
                        images.push(img);
                    }
                }
                Ok(())
            },
        )?;
        if images.len() < 4 {
            return Err(Error::arg("fig3_image_grid needs at least four periods"));
        }
        let d = distances.column(0);
        let best = (0..d.len()).fold(0, |b, k| if d[k] < d[b] { k } else { b });
        let n = d.len();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mid = rng.gen_range(n / 4..(3 * n / 4).max(n / 4 + 1));
        let times = distances.times().to_vec();
        let mean = d.iter().sum::<f64>() / n as f64;

        let mut res = BTreeMap::new();
        res.insert(
            "image_distance".into(),
            Analysis::series("image_distance", &distances, 0, 1000),
        );
        res.insert(
            "best_return".into(),
            Analysis::vector(&["t".into(), "distance".into()], &[times[best], d[best]]),
        );
        res.insert(
            "mid_distance".into(),
            Analysis::vector(&["t".into(), "distance".into()], &[times[mid], d[mid]]),
        );
        res.insert("mean_distance".into(), Analysis::Scalar { value: mean });

        let saves = [
            (spec.t0, &reference),
            (times[best], &images[best]),
            (times[mid], &images[mid]),
        ];
        for (t, img) in saves {
            out.write(&format!("frame_{t:.3}.ppm"), |p| img.save_ppm(p))?;
        }
        out.write("trajectory.csv", |p| traj.save_csv(p))?;
        Ok(res)
    }
}

/// FTRL in `z` coordinates on a game whose equilibrium moves within each period.
pub(super) struct ShiftingEquilibrium;

impl Experiment for ShiftingEquilibrium {
    fn name(&self) -> &'static str {
        "cex_ftrl_shifting_eq"
    }

    fn summary(&self) -> &'static str {
        "FTRL in a periodic game without a time-invariant equilibrium; no return near the start"
    }

    fn defaults(&self) -> ExperimentSpec {
        replicator_spec(
            self.name(),
            "Matching Pennies for the first quarter period, [[0.05,-0.5],[-0.5,5]] afterwards",
            DynamicsKind::Z,
            Some(RegularizerKind::Entropic),
            vec![0.75, 0.25, 0.5, 0.5],
            100.0,
            &["recurrence", "fenchel", "terminal"],
            &[("eps", 5e-2), ("exclude_periods", 1.0)],
        )
    }

    fn execute(
        &self,
        spec: &mut ExperimentSpec,
        out: &mut OutputSink,
    ) -> Result<BTreeMap<String, Analysis>> {
        let period = spec.period()?;
        let game = Arc::new(shifting_equilibrium(period)?);
        spec.game = Some(GameSpec::from_polymatrix(&game));
        check_x0(spec, game.total_actions())?;
        let kind = spec.regularizer.unwrap_or(RegularizerKind::Entropic);
        let reg: Arc<dyn Regularizer> = Arc::from(kind.build());
        let x0 = split_blocks(game.actions(), &spec.x0)?;
        if x0
            .iter()
            .any(|x| x.iter().any(|&p| !(p > 0.0)) || (x.sum() - 1.0).abs() > 1e-9)
        {
            return Err(Error::Domain(
                "x0 must be an interior strategy profile".into(),
            ));
        }
        let bench = last_action_benchmarks(game.actions());
        let y0 = FtrlState::from_flat(game.actions(), &interior_preimage(kind, &spec.x0))?;
        let z0 = z_reduce(&y0, &bench)?.to_flat();
        let field = ZField::new(game.clone(), reg.clone(), bench.clone())?;
        let (eps, exclude) = (spec.param("eps")?, exclusion(spec)?);
        let mut scan = RecurrenceScanner::new(&z0, eps, exclude)?;
        let mut coupling = DriftTracker::new("fenchel_coupling");
        let traj = run_recorded(
            &field,
            &z0,
            spec.t0,
            spec.t1,
            &spec.integrator,
            period / 50.0,
            |t, z| {
                let y = ZState::from_flat(game.actions(), bench.clone(), z)?.lift();
                coupling.observe(fenchel_coupling(&game, reg.as_ref(), &y)?)?;
                scan.observe(t, z)
            },
        )?;
        let end = traj.last().unwrap_or(&[]).to_vec();
        let x_end = flatten_blocks(&field.strategies(&end)?);
        let mut res = BTreeMap::new();
        res.insert("recurrence".into(), recurrence("z", eps, exclude, scan));
        res.insert("fenchel".into(), Analysis::Drift(coupling.report()));
        res.insert(
            "terminal".into(),
            Analysis::vector(&strategy_labels(), &x_end),
        );
        out.write("trajectory.csv", |p| traj.save_csv(p))?;
        Ok(res)
    }
}

/// Replicator on `sin(2πt/T)`-scaled Matching Pennies from an interior start.
pub(super) struct SinAverage;

impl Experiment for SinAverage {
    fn name(&self) -> &'static str {
        "tavg_replicator_sin"
    }

    fn summary(&self) -> &'static str {
        "replicator in sine-scaled Matching Pennies: average utilities vanish, average strategies need not"
    }

    fn defaults(&self) -> ExperimentSpec {
        replicator_spec(
            self.name(),
            "Matching Pennies scaled by sin(2 pi t / T)",
            DynamicsKind::Replicator,
            None,
            vec![0.9, 0.1, 0.8, 0.2],
            50.0,
            &[
                "avg_utility",
                "utility_sum",
                "time_average",
                "half_period_symmetry",
                "kl",
            ],
            &[],
        )
    }

    fn execute(
        &self,
        spec: &mut ExperimentSpec,
        out: &mut OutputSink,
    ) -> Result<BTreeMap<String, Analysis>> {
        let period = spec.period()?;
        let game = Arc::new(sin_mp(period)?);
        spec.game = Some(GameSpec::from_polymatrix(&game));
        check_x0(spec, game.total_actions())?;
        let field = ReplicatorField::new(game.clone());
        let mut kl = DriftTracker::new("kl_sum");
        let full = run_recorded(
            &field,
            &spec.x0,
            spec.t0,
            spec.t1,
            &spec.integrator,
            0.0,
            |_, s| kl.observe(kl_to_equilibrium(&game, s)?),
        )?;
        let u: Vec<f64> = (0..2)
            .map(|p| {
                Ok(time_average_utility(&game, &full, p)?
                    .last()
                    .unwrap_or(&[f64::NAN])[0])
            })
            .collect::<Result<_>>()?;
        let first_period = Trajectory::from_rows(
            field.labels(),
            full.samples()
                .take_while(|(t, _)| *t <= spec.t0 + period * (1.0 + 1e-12))
                .map(|(t, s)| (t, s.to_vec()))
                .collect::<Vec<_>>(),
        )?;
        let symmetry = (0..field.dim())
            .map(|j| half_period_symmetry_residual(&first_period, j))
            .try_fold(0.0f64, |m, r| r.map(|r| m.max(r)))?;

        let mut res = BTreeMap::new();
        res.insert(
            "avg_utility".into(),
            Analysis::vector(&["u0".into(), "u1".into()], &u),
        );
        res.insert(
            "utility_sum".into(),
            Analysis::Scalar {
                value: (u[0] + u[1]).abs(),
            },
        );
        res.insert(
            "time_average".into(),
            Analysis::vector(&field.labels(), &time_average(&full)?),
        );
        res.insert(
            "half_period_symmetry".into(),
            Analysis::Scalar { value: symmetry },
        );
        res.insert("kl".into(), Analysis::Drift(kl.report()));
        let stride = (full.len() / 5000).max(1);
        out.write("trajectory.csv", |p| full.decimate(stride).save_csv(p))?;
        Ok(res)
    }
}

/// FTRL in `y` coordinates on sine-scaled Matching Pennies, tracking the invariant and regret.
pub(super) struct TwoPlayerKl;

impl Experiment for TwoPlayerKl {
    fn name(&self) -> &'static str {
        "kl_two_player"
    }

    fn summary(&self) -> &'static str {
        "two-player FTRL: Fenchel coupling stays constant and regret decays like 1/t"
    }

    fn defaults(&self) -> ExperimentSpec {
        replicator_spec(
            self.name(),
            "Matching Pennies scaled by sin(2 pi t / T)",
            DynamicsKind::Ftrl,
            Some(RegularizerKind::Entropic),
            vec![0.0, 0.0, 0.4, 0.0],
            16.0,
            &["fenchel", "kl", "regret", "regret_ratio"],
            &[("regret_from", 1.0), ("regret_to", 100.0)],
        )
    }

    fn execute(
        &self,
        spec: &mut ExperimentSpec,
        out: &mut OutputSink,
    ) -> Result<BTreeMap<String, Analysis>> {
        let period = spec.period()?;
        let game = Arc::new(sin_mp(period)?);
        spec.game = Some(GameSpec::from_polymatrix(&game));
        check_x0(spec, game.total_actions())?;
        let kind = spec.regularizer.unwrap_or(RegularizerKind::Entropic);
        let reg: Arc<dyn Regularizer> = Arc::from(kind.build());
        let field = FtrlField::new(game.clone(), reg.clone());
        let mut coupling = DriftTracker::new("fenchel_coupling");
        let mut kl = DriftTracker::new("kl_sum");
        let full = run_recorded(
            &field,
            &spec.x0,
            spec.t0,
            spec.t1,
            &spec.integrator,
            0.0,
            |_, y| {
                let state = FtrlState::from_flat(game.actions(), y)?;
                coupling.observe(fenchel_coupling(&game, reg.as_ref(), &state)?)?;
                if kind == RegularizerKind::Entropic {
                    kl.observe(kl_sum(
                        &game.equilibrium_vectors(),
                        &state.strategies(reg.as_ref())?,
                    )?)?;
                }
                Ok(())
            },
        )?;
        let (from, to) = (spec.param("regret_from")?, spec.param("regret_to")?);
        let mut res = BTreeMap::new();
        res.insert("fenchel".into(), Analysis::Drift(coupling.report()));
        if kind == RegularizerKind::Entropic {
            res.insert("kl".into(), Analysis::Drift(kl.report()));
        }
        // Against the static range bound (exact only for players started at a constant
        // `y`) and against the bound for the actual starting point.
        let (mut ratios, mut ratios_from) = (Vec::new(), Vec::new());
        let mut offset = 0;
        for p in 0..game.num_players() {
            let r = regret(&game, reg.as_ref(), &full, p)?;
            let n = game.actions()[p];
            let y0 = &spec.x0[offset..offset + n];
            offset += n;
            let window = || {
                r.samples()
                    .filter(|(t, _)| *t - spec.t0 >= from && *t - spec.t0 <= to)
            };
            let worst = |bound: &dyn Fn(f64) -> f64| {
                window()
                    .map(|(t, v)| v[0] / bound(t - spec.t0))
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            ratios.push(worst(&|t| regret_bound(reg.as_ref(), n, t)));
            ratios_from.push(worst(&|t| regret_bound_from(reg.as_ref(), y0, t)));
            res.insert(
                format!("regret{p}"),
                Analysis::series(&format!("regret{p}"), &r, 0, 2000),
            );
        }
        let players: Vec<String> = (0..ratios.len()).map(|p| format!("player{p}")).collect();
        res.insert("regret_ratio".into(), Analysis::vector(&players, &ratios));
        res.insert(
            "regret_ratio_from_start".into(),
            Analysis::vector(&players, &ratios_from),
        );
        let x = full.map_states(strategy_labels(), |_, y| {
            let x = FtrlState::from_flat(game.actions(), y)?.strategies(reg.as_ref())?;
            Ok(flatten_blocks(&x))
        })?;
        let stride = (full.len() / 5000).max(1);
        out.write("trajectory.csv", |p| full.decimate(stride).save_csv(p))?;
        out.write("strategies.csv", |p| x.decimate(stride).save_csv(p))?;
        Ok(res)
    }
}
