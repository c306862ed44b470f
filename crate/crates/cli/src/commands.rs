use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;
use serde_json::{json, Value};

use periodic_games::analysis::{
    fenchel_coupling, gda_energy, kl_sum, time_average, time_average_utility, DriftTracker,
    RecurrenceScanner,
};
use periodic_games::dynamics::{
    dynamics, last_action_benchmarks, split_blocks, FtrlState, RegularizerKind, ZState,
};
use periodic_games::experiments::{
    experiment, parse_overrides, run_named, Analysis, Report, EXPERIMENTS,
};
use periodic_games::games::{Game, GameSpec};
use periodic_games::integrate::{integrate, IntegratorConfig, Trajectory};

use crate::out_dir;
use crate::svg::{render, PlotSpec, Series};

fn load_game(path: &Path) -> Result<(GameSpec, Game)> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec = GameSpec::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    let game = spec
        .build()
        .with_context(|| format!("building {}", path.display()))?;
    Ok((spec, game))
}

fn usage(msg: String) -> anyhow::Error {
    periodic_games::Error::arg(msg).into()
}

fn period_of(game: &Game) -> Result<f64> {
    game.period().context("game has no period")
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    game: PathBuf,
    /// gda, ftrl, replicator or z.
    #[arg(long)]
    dynamics: String,
    #[arg(long, default_value = "entropic")]
    regularizer: RegularizerKind,
    /// Initial state in the coordinates of the chosen dynamics, as a JSON array.
    #[arg(long)]
    x0: String,
    #[arg(long)]
    periods: f64,
    /// Step size; defaults to a thousandth of the period.
    #[arg(long)]
    step: Option<f64>,
    /// rk4 or rk45.
    #[arg(long, default_value = "rk4")]
    method: String,
    /// Spacing of the recorded samples; defaults to every step.
    #[arg(long)]
    sample_every: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn simulate(a: SimulateArgs) -> Result<ExitCode> {
    let (_, game) = load_game(&a.game)?;
    let field = dynamics(&a.dynamics, &game, a.regularizer)?;
    let x0: Vec<f64> = serde_json::from_str(&a.x0).context("parsing --x0")?;
    if x0.len() != field.dim() {
        return Err(periodic_games::Error::shape(format!(
            "--x0 has {} entries, {} dynamics on this game needs {}",
            x0.len(),
            a.dynamics,
            field.dim()
        ))
        .into());
    }
    let period = period_of(&game)?;
    if a.periods.is_nan() || a.periods <= 0.0 {
        return Err(periodic_games::Error::arg("--periods must be positive").into());
    }
    let mut cfg = match a.method.as_str() {
        "rk4" => IntegratorConfig::rk4(a.step.unwrap_or(1e-3 * period)),
        "rk45" => IntegratorConfig::rk45(1e-10, 1e-12),
        other => {
            return Err(periodic_games::Error::UnknownName {
                kind: "integrator",
                name: other.into(),
                registered: vec!["rk4".into(), "rk45".into()],
            }
            .into())
        }
    };
    cfg.sample_every = a.sample_every;
    let traj = integrate(field.as_ref(), &x0, 0.0, a.periods * period, &cfg)?;
    let dir = out_dir(a.out);
    std::fs::create_dir_all(&dir)?;
    traj.save_csv(dir.join("trajectory.csv"))?;
    let summary = json!({
        "game": a.game,
        "dynamics": a.dynamics,
        "regularizer": a.regularizer,
        "x0": x0,
        "t1": a.periods * period,
        "integrator": cfg,
        "samples": traj.len(),
        "labels": traj.labels(),
        "final": traj.last(),
    });
    std::fs::write(
        dir.join("run.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    println!(
        "wrote {} samples to {}",
        traj.len(),
        dir.join("trajectory.csv").display()
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Experiment name, or `all`.
    #[arg(long)]
    name: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// key=value, repeatable.
    #[arg(long = "override")]
    overrides: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn headline(r: &Report) -> String {
    let mut parts = Vec::new();
    for (k, v) in &r.results {
        match v {
            Analysis::Scalar { value } => parts.push(format!("{k}={value:.6e}")),
            Analysis::Drift(d) => parts.push(format!("{k}.rel_drift={:.3e}", d.max_rel_drift)),
            Analysis::Recurrence(s) => parts.push(format!("{k}.events={}", s.events.len())),
            _ => {}
        }
    }
    parts.join(" ")
}

pub fn reproduce(a: ReproduceArgs) -> Result<ExitCode> {
    let mut overrides = parse_overrides(&a.overrides)?;
    overrides.insert("seed".into(), a.seed.to_string());
    let dir = out_dir(a.out);
    let names: Vec<&str> = if a.name == "all" {
        EXPERIMENTS.to_vec()
    } else {
        experiment(&a.name)?;
        vec![a.name.as_str()]
    };
    let results: Vec<(&str, periodic_games::Result<Report>)> = std::thread::scope(|s| {
        let jobs: Vec<_> = names
            .iter()
            .map(|&n| {
                let (ov, dir) = (&overrides, &dir);
                (n, s.spawn(move || run_named(n, ov, Some(dir))))
            })
            .collect();
        jobs.into_iter()
            .map(|(n, h)| (n, h.join().expect("experiment thread panicked")))
            .collect()
    });
    let mut failed = None;
    for (name, r) in results {
        match r {
            Ok(r) => println!(
                "{name}: {} ({:.2}s) -> {}",
                headline(&r),
                r.wall_clock_s,
                dir.join(name).join("report.json").display()
            ),
            Err(e) => {
                eprintln!("{name}: {e}");
                failed.get_or_insert(e);
            }
        }
    }
    match failed {
        None => Ok(ExitCode::SUCCESS),
        Some(e) if names.len() == 1 => Err(e.into()),
        Some(_) => Ok(ExitCode::from(1)),
    }
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    game: PathBuf,
    /// Largest residual accepted.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

fn check_times(period: f64) -> Vec<f64> {
    const N: usize = 512;
    (0..N)
        .map(|k| (k as f64 + 0.37) * period / N as f64)
        .collect()
}

pub fn check(a: CheckArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&a.game)
        .with_context(|| format!("reading {}", a.game.display()))?;
    let spec =
        GameSpec::from_json(&text).with_context(|| format!("parsing {}", a.game.display()))?;
    let game = match spec.build() {
        Ok(g) => g,
        Err(e) => {
            println!("build: FAIL ({e})");
            return Ok(ExitCode::from(1));
        }
    };
    let period = period_of(&game)?;
    let times = check_times(period);
    let mut rows: Vec<(&str, f64)> = Vec::new();
    match &game {
        Game::Bilinear(g) => {
            // a single matrix serves both players, so only periodicity can fail
            let mut per = 0.0f64;
            for &t in &times {
                per = per.max((g.payoff_at(t)? - g.payoff_at(t + period)?).abs().max());
            }
            rows.push(("zero_sum_residual", 0.0));
            rows.push(("periodicity_residual", per));
            rows.push(("equilibrium_residual", 0.0));
        }
        Game::Polymatrix(g) => {
            // equilibrium plus a few fixed interior profiles
            let mut profiles = vec![g.equilibrium_vectors()];
            for k in 1..=8 {
                let w: Vec<f64> = (0..g.total_actions())
                    .map(|a| 0.2 + ((k * (a + 3)) as f64 * 0.618_033_988_7).fract())
                    .collect();
                let blocks = split_blocks(g.actions(), &w)?;
                profiles.push(
                    blocks
                        .into_iter()
                        .map(|b| {
                            let s = b.sum();
                            b / s
                        })
                        .collect(),
                );
            }
            let (mut zs, mut per, mut eq) = (0.0f64, 0.0f64, 0.0f64);
            for &t in &times {
                for x in &profiles {
                    zs = zs.max(g.zero_sum_residual(t, x)?);
                }
                for e in g.edges() {
                    per = per.max(
                        (e.forward.eval(t)? - e.forward.eval(t + period)?)
                            .abs()
                            .max(),
                    );
                    per = per.max(
                        (e.backward.eval(t)? - e.backward.eval(t + period)?)
                            .abs()
                            .max(),
                    );
                }
                eq = eq.max(g.equilibrium_residual(t)?);
            }
            rows.push(("zero_sum_residual", zs));
            rows.push(("periodicity_residual", per));
            rows.push(("equilibrium_residual", eq));
        }
    }
    let mut ok = true;
    for (name, r) in rows {
        let pass = r <= a.tol;
        ok &= pass;
        println!("{name}: {r:.3e} {}", if pass { "ok" } else { "FAIL" });
    }
    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Invariant {
    Energy,
    Fenchel,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    trajectory: PathBuf,
    #[arg(long)]
    game: PathBuf,
    /// Scan for returns within this sup-norm distance of the first sample.
    #[arg(long)]
    recurrence: Option<f64>,
    /// Returns before this time are ignored; defaults to one period after the first sample.
    #[arg(long)]
    exclude_until: Option<f64>,
    #[arg(long, value_enum)]
    invariant: Option<Invariant>,
    /// Regularizer used to read `y` or `z` columns.
    #[arg(long, default_value = "entropic")]
    regularizer: RegularizerKind,
    #[arg(long)]
    time_average: bool,
}

/// What the leading columns of a trajectory hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Coords {
    Gda,
    Strategy,
    Payoff,
    Difference,
}

fn coords(traj: &Trajectory, game: &Game) -> Result<(Coords, usize)> {
    let labels = traj.labels();
    let first = labels.first().map(String::as_str).unwrap_or("");
    let c = match game {
        Game::Bilinear(_) => Coords::Gda,
        // gda writes x1_a/x2_a, strategy-space dynamics write x0_a, x1_a, ...
        Game::Polymatrix(_) if labels.iter().any(|l| l.starts_with("x0_")) => Coords::Strategy,
        Game::Polymatrix(_) if first.starts_with("x1_") => Coords::Gda,
        Game::Polymatrix(_) if first.starts_with('y') => Coords::Payoff,
        Game::Polymatrix(_) if first.starts_with('z') => Coords::Difference,
        _ => {
            return Err(usage(format!(
                "cannot tell the coordinates of columns starting with '{first}'"
            )))
        }
    };
    let dim = match game {
        Game::Bilinear(g) => g.dims().0 + g.dims().1,
        Game::Polymatrix(g) if c == Coords::Difference => g.total_actions() - g.num_players(),
        Game::Polymatrix(g) => g.total_actions(),
    };
    if traj.dim() < dim {
        return Err(usage(format!(
            "trajectory has {} columns, the game needs {dim}",
            traj.dim()
        )));
    }
    Ok((c, dim))
}

fn drift_json(d: &periodic_games::analysis::DriftReport) -> Value {
    serde_json::to_value(d).expect("drift report serializes")
}

pub fn analyze(a: AnalyzeArgs) -> Result<ExitCode> {
    let (_, game) = load_game(&a.game)?;
    let traj = Trajectory::load_csv(&a.trajectory)?;
    if traj.is_empty() {
        return Err(periodic_games::Error::arg("trajectory has no samples").into());
    }
    let (c, dim) = coords(&traj, &game)?;
    let state = traj.leading_columns(dim)?;
    let mut out = BTreeMap::<String, Value>::new();
    out.insert("samples".into(), json!(state.len()));
    out.insert("columns".into(), json!(state.labels()));

    if let Some(eps) = a.recurrence {
        let t0 = state.times()[0];
        let exclude = match a.exclude_until {
            Some(t) => t,
            None => t0 + period_of(&game)?,
        };
        let mut scan = RecurrenceScanner::new(state.state(0), eps, exclude)?;
        for (t, s) in state.samples() {
            scan.observe(t, s)?;
        }
        let closest = scan.closest();
        out.insert(
            "recurrence".into(),
            json!({"eps": eps, "exclude_until": exclude, "events": scan.finish(), "closest": closest}),
        );
    }

    if let Some(inv) = a.invariant {
        let mut tracker;
        match (inv, c) {
            (Invariant::Energy, Coords::Gda) => {
                tracker = DriftTracker::new("gda_energy");
                for s in state.states() {
                    tracker.observe(gda_energy(s))?;
                }
            }
            (Invariant::Energy, _) => {
                return Err(usage(
                    "the energy invariant applies to gda trajectories".into(),
                ))
            }
            (Invariant::Fenchel, Coords::Gda) => {
                return Err(usage(
                    "the fenchel invariant applies to ftrl trajectories".into(),
                ))
            }
            (Invariant::Fenchel, _) => {
                let g = game.as_polymatrix()?;
                let reg = a.regularizer.build();
                let bench = last_action_benchmarks(g.actions());
                let xstar = g.equilibrium_vectors();
                tracker = DriftTracker::new(if c == Coords::Strategy {
                    "kl_sum"
                } else {
                    "fenchel_coupling"
                });
                for s in state.states() {
                    let v = match c {
                        Coords::Strategy => kl_sum(&xstar, &split_blocks(g.actions(), s)?)?,
                        Coords::Payoff => fenchel_coupling(
                            g,
                            reg.as_ref(),
                            &FtrlState::from_flat(g.actions(), s)?,
                        )?,
                        _ => {
                            let y = ZState::from_flat(g.actions(), bench.clone(), s)?.lift();
                            fenchel_coupling(g, reg.as_ref(), &y)?
                        }
                    };
                    tracker.observe(v)?;
                }
            }
        }
        out.insert("invariant".into(), drift_json(&tracker.report()));
    }

    if a.time_average {
        let avg = time_average(&state)?;
        let labels = state.labels().to_vec();
        out.insert(
            "time_average".into(),
            json!({"labels": labels, "values": avg}),
        );
        if c == Coords::Strategy {
            let g = game.as_polymatrix()?;
            let u = (0..g.num_players())
                .map(|p| {
                    Ok(time_average_utility(g, &state, p)?
                        .last()
                        .map(|v| v[0])
                        .unwrap_or(f64::NAN))
                })
                .collect::<Result<Vec<f64>>>()?;
            out.insert("time_average_utility".into(), json!(u));
        }
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Trajectory CSV or report.json.
    #[arg(long = "in")]
    input: PathBuf,
    /// Comma-separated columns (CSV) or result keys (report); defaults to all.
    #[arg(long, value_delimiter = ',')]
    series: Vec<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    title: Option<String>,
    #[arg(long, default_value = "t")]
    x_label: String,
    #[arg(long, default_value = "value")]
    y_label: String,
}

fn unknown(kind: &'static str, name: &str, registered: Vec<String>) -> anyhow::Error {
    periodic_games::Error::UnknownName {
        kind,
        name: name.to_string(),
        registered,
    }
    .into()
}

fn csv_series(path: &Path, wanted: &[String]) -> Result<Vec<Series>> {
    let traj = Trajectory::load_csv(path)?;
    let names: Vec<String> = if wanted.is_empty() {
        traj.labels().to_vec()
    } else {
        wanted.to_vec()
    };
    names
        .iter()
        .map(|n| {
            let j = traj
                .column_index(n)
                .map_err(|_| unknown("column", n, traj.labels().to_vec()))?;
            Ok(Series {
                label: n.clone(),
                points: traj.times().iter().copied().zip(traj.column(j)).collect(),
            })
        })
        .collect()
}

fn report_series(path: &Path, wanted: &[String]) -> Result<Vec<Series>> {
    let report = Report::from_json(&std::fs::read_to_string(path)?)?;
    let available: Vec<String> = report
        .results
        .iter()
        .filter(|(_, v)| matches!(v, Analysis::Series { .. }))
        .map(|(k, _)| k.clone())
        .collect();
    let names = if wanted.is_empty() {
        available.clone()
    } else {
        wanted.to_vec()
    };
    names
        .iter()
        .map(|n| match report.results.get(n) {
            Some(Analysis::Series { label, t, values }) => Ok(Series {
                label: label.clone(),
                points: t.iter().copied().zip(values.iter().copied()).collect(),
            }),
            _ => Err(unknown("series", n, available.clone())),
        })
        .collect()
}

pub fn plot(a: PlotArgs) -> Result<ExitCode> {
    let is_json = a.input.extension().is_some_and(|e| e == "json");
    let series = if is_json {
        report_series(&a.input, &a.series)?
    } else {
        csv_series(&a.input, &a.series)?
    };
    let svg = render(&PlotSpec {
        title: a.title,
        x_label: a.x_label,
        y_label: a.y_label,
        series,
    })
    .map_err(|e| periodic_games::Error::arg(e.to_string()))?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&a.out, svg)?;
    println!("wrote {}", a.out.display());
    Ok(ExitCode::SUCCESS)
}

pub fn list() -> Result<ExitCode> {
    for name in EXPERIMENTS {
        println!("{name}\t{}", experiment(name)?.summary());
    }
    Ok(ExitCode::SUCCESS)
}
