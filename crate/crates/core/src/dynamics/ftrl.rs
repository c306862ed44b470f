use std::sync::Arc;

use nalgebra::DVector;

use super::Regularizer;
use crate::games::PolymatrixGame;
use crate::integrate::VectorField;
use crate::{Error, Result};

/// Splits a flat vector into per-player blocks of sizes `sizes`.
pub fn split_blocks(sizes: &[usize], flat: &[f64]) -> Result<Vec<DVector<f64>>> {
    let total: usize = sizes.iter().sum();
    if flat.len() != total {
        return Err(Error::shape(format!(
            "flat state has length {}, expected {total}",
            flat.len()
        )));
    }
    let mut out = Vec::with_capacity(sizes.len());
    let mut at = 0;
    for &n in sizes {
        out.push(DVector::from_column_slice(&flat[at..at + n]));
        at += n;
    }
    Ok(out)
}

pub fn flatten_blocks(blocks: &[DVector<f64>]) -> Vec<f64> {
    blocks.iter().flat_map(|b| b.iter().copied()).collect()
}

/// Cumulative payoffs `y_i`; strategies are always recovered as `Q(y_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FtrlState {
    pub y: Vec<DVector<f64>>,
}

impl FtrlState {
    pub fn new(y: Vec<DVector<f64>>) -> Self {
        Self { y }
    }

    pub fn zeros(actions: &[usize]) -> Self {
        Self::new(actions.iter().map(|&n| DVector::zeros(n)).collect())
    }

    pub fn from_flat(actions: &[usize], flat: &[f64]) -> Result<Self> {
        split_blocks(actions, flat).map(Self::new)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        flatten_blocks(&self.y)
    }

    pub fn strategies(&self, reg: &dyn Regularizer) -> Result<Vec<DVector<f64>>> {
        self.y
            .iter()
            .map(|yi| super::choice_map(reg, yi.as_slice()).map(|x| x.into_inner()))
            .collect()
    }
}

fn choices(reg: &dyn Regularizer, y: &[DVector<f64>]) -> Vec<DVector<f64>> {
    y.iter()
        .map(|yi| {
            let mut x = DVector::zeros(yi.len());
            reg.choice(yi.as_slice(), x.as_mut_slice());
            x
        })
        .collect()
}

/// `ẏ_i = v_i(Q(y), t)`.
pub fn ftrl_field(
    game: &PolymatrixGame,
    reg: &dyn Regularizer,
    t: f64,
    s: &FtrlState,
) -> Result<FtrlState> {
    let x = s.strategies(reg)?;
    game.payoff_vectors(t, &x).map(FtrlState::new)
}

/// `ẋ_ia = x_ia (v_ia - <v_i, x_i>)`; zero entries stay zero.
pub fn replicator_field(
    game: &PolymatrixGame,
    t: f64,
    x: &[DVector<f64>],
) -> Result<Vec<DVector<f64>>> {
    let v = game.payoff_vectors(t, x)?;
    Ok(replicator_from_payoffs(x, &v))
}

fn replicator_from_payoffs(x: &[DVector<f64>], v: &[DVector<f64>]) -> Vec<DVector<f64>> {
    x.iter()
        .zip(v)
        .map(|(xi, vi)| {
            let u = vi.dot(xi);
            xi.zip_map(vi, |p, w| p * (w - u))
        })
        .collect()
}

/// Utility differences `z_ia = y_ia - y_ib` against a benchmark action `b` per player.
#[derive(Debug, Clone, PartialEq)]
pub struct ZState {
    pub z: Vec<DVector<f64>>,
    pub benchmark: Vec<usize>,
}

impl ZState {
    pub fn to_flat(&self) -> Vec<f64> {
        flatten_blocks(&self.z)
    }

    pub fn from_flat(actions: &[usize], benchmark: Vec<usize>, flat: &[f64]) -> Result<Self> {
        let sizes: Vec<usize> = actions.iter().map(|&n| n - 1).collect();
        Ok(Self {
            z: split_blocks(&sizes, flat)?,
            benchmark,
        })
    }

    /// A representative `y` with zero in every benchmark slot.
    pub fn lift(&self) -> FtrlState {
        FtrlState::new(
            self.z
                .iter()
                .zip(&self.benchmark)
                .map(|(zi, &b)| z_lift(zi.as_slice(), b))
                .collect(),
        )
    }

    /// Reduced choice map `Q̂(z)`.
    pub fn strategies(&self, reg: &dyn Regularizer) -> Result<Vec<DVector<f64>>> {
        self.lift().strategies(reg)
    }
}

/// Benchmark defaulting to each player's last action.
pub fn last_action_benchmarks(actions: &[usize]) -> Vec<usize> {
    actions.iter().map(|&n| n - 1).collect()
}

fn check_benchmarks(
    sizes: impl ExactSizeIterator<Item = usize>,
    benchmarks: &[usize],
) -> Result<()> {
    if sizes.len() != benchmarks.len() {
        return Err(Error::shape("one benchmark action per player is required"));
    }
    for (i, (n, &b)) in sizes.zip(benchmarks).enumerate() {
        if b >= n {
            return Err(Error::arg(format!(
                "benchmark {b} out of range for player {i} with {n} actions"
            )));
        }
    }
    Ok(())
}

pub fn z_reduce(s: &FtrlState, benchmarks: &[usize]) -> Result<ZState> {
    check_benchmarks(s.y.iter().map(|y| y.len()), benchmarks)?;
    let z =
        s.y.iter()
            .zip(benchmarks)
            .map(|(yi, &b)| {
                let yb = yi[b];
                DVector::from_iterator(
                    yi.len() - 1,
                    yi.iter()
                        .enumerate()
                        .filter(|&(a, _)| a != b)
                        .map(|(_, &v)| v - yb),
                )
            })
            .collect();
    Ok(ZState {
        z,
        benchmark: benchmarks.to_vec(),
    })
}

/// Inserts a zero at position `b`.
pub fn z_lift(z: &[f64], b: usize) -> DVector<f64> {
    let mut y = Vec::with_capacity(z.len() + 1);
    y.extend_from_slice(&z[..b]);
    y.push(0.0);
    y.extend_from_slice(&z[b..]);
    DVector::from_vec(y)
}

/// `z` of an interior strategy profile under the entropic choice map: `ln x_ia - ln x_ib`.
pub fn z_from_interior(x: &[DVector<f64>], benchmarks: &[usize]) -> Result<ZState> {
    if x.iter().any(|xi| xi.iter().any(|&p| !(p > 0.0))) {
        return Err(Error::Domain("strategy profile is not interior".into()));
    }
    z_reduce(
        &FtrlState::new(x.iter().map(|xi| xi.map(f64::ln)).collect()),
        benchmarks,
    )
}

fn reduce_payoffs(v: &[DVector<f64>], benchmarks: &[usize], out: &mut [f64]) {
    let mut at = 0;
    for (vi, &b) in v.iter().zip(benchmarks) {
        for (a, &w) in vi.iter().enumerate() {
            if a != b {
                out[at] = w - vi[b];
                at += 1;
            }
        }
    }
}

/// `ż_ia = v_ia(Q̂(z), t) - v_ib(Q̂(z), t)`.
pub fn z_field(game: &PolymatrixGame, reg: &dyn Regularizer, t: f64, s: &ZState) -> Result<ZState> {
    check_benchmarks(game.actions().iter().copied(), &s.benchmark)?;
    let x = s.strategies(reg)?;
    let v = game.payoff_vectors(t, &x)?;
    let mut flat = vec![0.0; s.z.iter().map(|z| z.len()).sum()];
    reduce_payoffs(&v, &s.benchmark, &mut flat);
    ZState::from_flat(game.actions(), s.benchmark.clone(), &flat)
}

fn block_labels(prefix: &str, actions: &[usize], skip: Option<&[usize]>) -> Vec<String> {
    let mut out = Vec::new();
    for (i, &n) in actions.iter().enumerate() {
        for a in 0..n {
            if skip.is_none_or(|b| b[i] != a) {
                out.push(format!("{prefix}{i}_{a}"));
            }
        }
    }
    out
}

/// FTRL over the flat `y` state.
#[derive(Debug, Clone)]
pub struct FtrlField {
    game: Arc<PolymatrixGame>,
    reg: Arc<dyn Regularizer>,
}

impl FtrlField {
    pub fn new(game: Arc<PolymatrixGame>, reg: Arc<dyn Regularizer>) -> Self {
        Self { game, reg }
    }
}

impl VectorField for FtrlField {
    fn dim(&self) -> usize {
        self.game.total_actions()
    }

    fn eval(&self, t: f64, s: &[f64], out: &mut [f64]) -> Result<()> {
        self.eval_anchored(t, t, s, out)
    }

    fn eval_anchored(&self, t: f64, anchor: f64, s: &[f64], out: &mut [f64]) -> Result<()> {
        let y = split_blocks(self.game.actions(), s)?;
        let x = choices(self.reg.as_ref(), &y);
        let v = self.game.payoff_vectors_anchored(t, anchor, &x)?;
        out.copy_from_slice(&flatten_blocks(&v));
        Ok(())
    }

    fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        self.game.breakpoints(t0, t1)
    }

    fn labels(&self) -> Vec<String> {
        block_labels("y", self.game.actions(), None)
    }
}

/// Replicator dynamics over the flat strategy state `x`.
#[derive(Debug, Clone)]
pub struct ReplicatorField {
    game: Arc<PolymatrixGame>,
}

impl ReplicatorField {
    pub fn new(game: Arc<PolymatrixGame>) -> Self {
        Self { game }
    }
}

impl VectorField for ReplicatorField {
    fn dim(&self) -> usize {
        self.game.total_actions()
    }

    fn eval(&self, t: f64, s: &[f64], out: &mut [f64]) -> Result<()> {
        self.eval_anchored(t, t, s, out)
    }

    fn eval_anchored(&self, t: f64, anchor: f64, s: &[f64], out: &mut [f64]) -> Result<()> {
        let x = split_blocks(self.game.actions(), s)?;
        let v = self.game.payoff_vectors_anchored(t, anchor, &x)?;
        out.copy_from_slice(&flatten_blocks(&replicator_from_payoffs(&x, &v)));
        Ok(())
    }

    fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        self.game.breakpoints(t0, t1)
    }

    fn labels(&self) -> Vec<String> {
        block_labels("x", self.game.actions(), None)
    }
}

/// FTRL reduced to utility differences over the flat `z` state.
#[derive(Debug, Clone)]
pub struct ZField {
    game: Arc<PolymatrixGame>,
    reg: Arc<dyn Regularizer>,
    benchmark: Vec<usize>,
}

impl ZField {
    pub fn new(
        game: Arc<PolymatrixGame>,
        reg: Arc<dyn Regularizer>,
        benchmark: Vec<usize>,
    ) -> Result<Self> {
        check_benchmarks(game.actions().iter().copied(), &benchmark)?;
        Ok(Self {
            game,
            reg,
            benchmark,
        })
    }

    /// Benchmarks at each player's last action.
    pub fn with_last_benchmarks(game: Arc<PolymatrixGame>, reg: Arc<dyn Regularizer>) -> Self {
        let benchmark = last_action_benchmarks(game.actions());
        Self {
            game,
            reg,
            benchmark,
        }
    }

    pub fn benchmark(&self) -> &[usize] {
        &self.benchmark
    }

    /// Strategy profile `Q̂(z)` for a flat `z`.
    pub fn strategies(&self, flat: &[f64]) -> Result<Vec<DVector<f64>>> {
        let z = ZState::from_flat(self.game.actions(), self.benchmark.clone(), flat)?;
        Ok(choices(self.reg.as_ref(), &z.lift().y))
    }
}

impl VectorField for ZField {
    fn dim(&self) -> usize {
        self.game.total_actions() - self.game.num_players()
    }

    fn eval(&self, t: f64, s: &[f64], out: &mut [f64]) -> Result<()> {
        self.eval_anchored(t, t, s, out)
    }

    fn eval_anchored(&self, t: f64, anchor: f64, s: &[f64], out: &mut [f64]) -> Result<()> {
        let x = self.strategies(s)?;
        let v = self.game.payoff_vectors_anchored(t, anchor, &x)?;
        reduce_payoffs(&v, &self.benchmark, out);
        Ok(())
    }

    fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        self.game.breakpoints(t0, t1)
    }

    fn labels(&self) -> Vec<String> {
        block_labels("z", self.game.actions(), Some(&self.benchmark))
    }
}
