//! End-to-end acceptance checks, one per numbered criterion. Each prints a PASS/FAIL line;
//! the test fails if any criterion does.

use std::f64::consts::{PI, TAU};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use periodic_games::analysis::{divergence_trace, fenchel_coupling, volume_ratio};
use periodic_games::dynamics::{Entropic, FtrlState, GdaField, Regularizer, ZField};
use periodic_games::experiments::{parse_overrides, run_named, toroid_chain, Report};
use periodic_games::games::catalog::{alternating_sign_gda, fig1_gda, sin_mp};
use periodic_games::integrate::{IntegratorConfig, VectorField};

struct Outcome {
    pass: bool,
    detail: String,
}

fn run(name: &str, overrides: &[&str]) -> Report {
    run_named(name, &parse_overrides(overrides).unwrap(), None).unwrap()
}

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let took = start.elapsed();
    let in_time = took <= limit;
    o.detail = format!(
        "{}; {:.2}s (limit {}s)",
        o.detail,
        took.as_secs_f64(),
        limit.as_secs()
    );
    o.pass &= in_time;
    o
}

fn c1_exact_time_average() -> Outcome {
    let r = run("tavg_gda", &[]);
    let c = 2.0 / (3.0 * PI);
    let avg_err = sup(r.vector("time_average").unwrap(), &[-c, c]);
    let end_err = sup(r.vector("terminal").unwrap(), &[1.0, 0.0]);
    Outcome {
        pass: avg_err <= 1e-4 && end_err <= 1e-6,
        detail: format!("time-average error {avg_err:.2e}, terminal error {end_err:.2e}"),
    }
}

fn c2_nonperiodic() -> Outcome {
    let r = run("cex_nonperiodic", &[]);
    let events = r.recurrence("recurrence").unwrap().events.len();
    let err = sup(
        r.vector("terminal").unwrap(),
        &[0.5f64.cos(), -(0.5f64.sin())],
    );
    Outcome {
        pass: events == 0 && err <= 1e-3,
        detail: format!("{events} events at eps 0.15, terminal error {err:.2e}"),
    }
}

fn c3_gda_recurrence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut pass = true;
    let mut worst_drift = 0.0f64;
    let mut min_events = usize::MAX;
    for _ in 0..5 {
        let v: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let x0: Vec<f64> = v.iter().map(|x| x / n).collect();
        let r = run(
            "fig1_gda_mp",
            &[&format!("x0={}", serde_json::to_string(&x0).unwrap())],
        );
        let events = r.recurrence("recurrence").unwrap().events.len();
        let drift = r.drift("energy").unwrap().max_rel_drift;
        pass &= events >= 1 && drift <= 1e-6;
        worst_drift = worst_drift.max(drift);
        min_events = min_events.min(events);
    }
    Outcome {
        pass,
        detail: format!("fewest events {min_events}, worst energy drift {worst_drift:.2e}"),
    }
}

fn c4_volume() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let gda = GdaField::new(fig1_gda().unwrap());
    let game = Arc::new(sin_mp(TAU).unwrap());
    let reg: Arc<dyn Regularizer> = Arc::new(Entropic);
    let z_mp = ZField::with_last_benchmarks(game.clone(), reg.clone());
    let z_chain =
        ZField::with_last_benchmarks(Arc::new(toroid_chain(4, 0, TAU).unwrap()), reg.clone());
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let t = rng.gen_range(0.0..3.0 * TAU);
        for f in [&gda as &dyn VectorField, &z_mp, &z_chain] {
            let s: Vec<f64> = (0..f.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            worst = worst.max(divergence_trace(f, t, &s, 1e-4).unwrap().abs());
        }
    }
    let tavg = GdaField::new(alternating_sign_gda().unwrap());
    let v_gda = volume_ratio(
        &tavg,
        3.0 * PI,
        &[1.0, 0.0],
        1e-6,
        &IntegratorConfig::rk4(1e-3),
    )
    .unwrap();
    let v_z = volume_ratio(
        &z_mp,
        TAU,
        &[0.8, -0.4],
        1e-6,
        &IntegratorConfig::for_period(TAU),
    )
    .unwrap();
    let dv = (v_gda - 1.0).abs().max((v_z - 1.0).abs());
    Outcome {
        pass: worst <= 1e-6 && dv <= 1e-4,
        detail: format!("max |trace| {worst:.2e}, max |ratio - 1| {dv:.2e}"),
    }
}

fn softmax(y: &[f64]) -> Vec<f64> {
    let m = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = y.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

fn c5_fenchel() -> Outcome {
    let mut worst = 0.0f64;
    for reg in ["entropic", "euclidean"] {
        let r = run(
            "kl_two_player",
            &["periods=5", &format!("regularizer={reg}")],
        );
        worst = worst.max(r.drift("fenchel").unwrap().max_rel_drift);
    }
    let chain = run("fig2_toroid_kl", &[]);
    worst = worst.max(chain.drift("fenchel").unwrap().max_rel_drift);

    let game = sin_mp(TAU).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut gap = 0.0f64;
    for _ in 0..100 {
        let y: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let coupling = fenchel_coupling(
            &game,
            &Entropic,
            &FtrlState::from_flat(&[2, 2], &y).unwrap(),
        )
        .unwrap();
        // KL(x* || x) by hand with x* uniform
        let kl: f64 = [&y[..2], &y[2..]]
            .iter()
            .map(|yi| {
                softmax(yi)
                    .iter()
                    .map(|&x| 0.5 * (0.5 / x).ln())
                    .sum::<f64>()
            })
            .sum();
        gap = gap.max((coupling - kl).abs());
    }
    Outcome {
        pass: worst <= 1e-5 && gap <= 1e-10,
        detail: format!(
            "worst drift {worst:.2e} (players={}), coupling vs KL gap {gap:.2e}",
            chain.spec.x0.len() / 2
        ),
    }
}

fn c6_average_utility() -> Outcome {
    let r = run("tavg_replicator_sin", &[]);
    let u = r.vector("avg_utility").unwrap();
    let sum = r.scalar("utility_sum").unwrap();
    let worst = u.iter().map(|v| v.abs()).fold(0.0, f64::max);
    Outcome {
        pass: worst <= 5e-3 && sum <= 1e-12,
        detail: format!("max |avg utility| {worst:.2e}, |sum| {sum:.2e}"),
    }
}

fn c7_half_period() -> Outcome {
    let sym = run("tavg_replicator_sin", &["periods=1"])
        .scalar("half_period_symmetry")
        .unwrap();
    let short = run("tavg_replicator_sin", &["period=0.5", "periods=400"]);
    let avg = short.vector("time_average").unwrap()[0];
    Outcome {
        pass: sym <= 1e-6 && avg > 0.55,
        detail: format!("symmetry residual {sym:.2e}, long-run average x11 {avg:.5} at T = 0.5"),
    }
}

fn c8_regret() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for reg in ["entropic", "euclidean"] {
        let r = run("kl_two_player", &[&format!("regularizer={reg}")]);
        // player 0 starts at y = 0, where the bound range(h)/t applies
        let fixed = r.vector("regret_ratio").unwrap()[0];
        let from_start = r
            .vector("regret_ratio_from_start")
            .unwrap()
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        pass &= fixed <= 1.0 && from_start <= 1.0;
        parts.push(format!(
            "{reg}: regret/bound {fixed:.3}, start-aware {from_start:.3}"
        ));
    }
    Outcome {
        pass,
        detail: parts.join(", "),
    }
}

fn c9_recurrence() -> Outcome {
    let chain = run("fig2_toroid_kl", &["players=4", "periods=300"]);
    let returns = chain.recurrence("recurrence").unwrap().events.len();
    let shifted = run("cex_ftrl_shifting_eq", &[]);
    let rec = shifted.recurrence("recurrence").unwrap();
    let closest = rec.closest.as_ref().map_or(f64::NAN, |c| c.distance);
    Outcome {
        pass: returns >= 1 && rec.events.is_empty(),
        detail: format!(
            "4-player chain: {returns} events; shifting equilibrium: {} events, closest {closest:.3}",
            rec.events.len()
        ),
    }
}

fn c10_order() -> Outcome {
    let err = |h: &str| {
        run("tavg_gda", &[&format!("step={h}")])
            .scalar("terminal_error")
            .unwrap()
    };
    let (coarse, fine) = (err("0.1"), err("0.05"));
    let ratio = coarse / fine;
    Outcome {
        pass: (12.0..=20.0).contains(&ratio),
        detail: format!("errors {coarse:.3e} / {fine:.3e}, ratio {ratio:.2}"),
    }
}

fn reproduce_report(dir: &std::path::Path) -> String {
    let status = Command::new(env!("CARGO_BIN_EXE_pgames"))
        .args([
            "reproduce",
            "--name",
            "fig2_toroid_kl",
            "--seed",
            "0",
            "--out",
        ])
        .arg(dir)
        .output()
        .unwrap();
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    let text = std::fs::read_to_string(dir.join("fig2_toroid_kl/report.json")).unwrap();
    text.lines()
        .filter(|l| !l.trim_start().starts_with("\"wall_clock_s\""))
        .collect::<Vec<_>>()
        .join("\n")
}

fn c11_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let a = reproduce_report(&tmp.path().join("a"));
    let b = reproduce_report(&tmp.path().join("b"));
    Outcome {
        pass: a == b && a.len() > 1000,
        detail: format!("{} bytes each, identical: {}", a.len(), a == b),
    }
}

/// Number, time limit in seconds, check.
type Criterion = (u32, u64, fn() -> Outcome);

#[test]
fn acceptance() {
    let criteria: [Criterion; 11] = [
        (1, 1, c1_exact_time_average),
        (2, 5, c2_nonperiodic),
        (3, 30, c3_gda_recurrence),
        (4, 30, c4_volume),
        (5, 60, c5_fenchel),
        (6, 10, c6_average_utility),
        (7, 10, c7_half_period),
        (8, 10, c8_regret),
        (9, 60, c9_recurrence),
        (10, 2, c10_order),
        (11, 60, c11_determinism),
    ];
    let mut failed = Vec::new();
    for (n, limit, check) in criteria {
        let o = timed(Duration::from_secs(limit), check);
        println!(
            "criterion {n:>2}: {} ({})",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed.push(n);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
