use nalgebra::{DMatrix, DVector};

use super::{Modulation, PayoffSchedule};
use crate::{Error, Result};

/// The Matching Pennies payoff matrix `[[1, -1], [-1, 1]]`.
pub fn matching_pennies() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0])
}

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedStrategy(DVector<f64>);

impl MixedStrategy {
    pub const SUM_TOLERANCE: f64 = 1e-12;

    pub fn new(probs: DVector<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::arg("empty mixed strategy"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Domain(format!(
                "mixed strategy has negative or non-finite entries: {:?}",
                probs.as_slice()
            )));
        }
        let sum = probs.sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::Domain(format!(
                "mixed strategy sums to {sum}, not 1"
            )));
        }
        Ok(MixedStrategy(probs))
    }

    pub fn from_slice(probs: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(probs))
    }

    pub fn uniform(n: usize) -> Self {
        MixedStrategy(DVector::from_element(n, 1.0 / n as f64))
    }

    /// Wraps a vector already known to lie on the simplex (e.g. a choice-map output).
    pub(crate) fn from_unchecked(probs: DVector<f64>) -> Self {
        MixedStrategy(probs)
    }

    pub fn probs(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_interior(&self) -> bool {
        self.0.iter().all(|p| *p > 0.0)
    }
}

/// An undirected edge `{i, j}` carrying `A^{ij}(t)` (n_i x n_j) and `A^{ji}(t)` (n_j x n_i).
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub forward: PayoffSchedule,
    pub backward: PayoffSchedule,
}

impl Edge {
    pub fn new(i: usize, j: usize, forward: PayoffSchedule, backward: PayoffSchedule) -> Self {
        Edge {
            i,
            j,
            forward,
            backward,
        }
    }

    /// The zero-sum pair `{A(t), -A(t)^T}`.
    pub fn zero_sum(i: usize, j: usize, schedule: PayoffSchedule) -> Self {
        let backward = schedule.negated_transpose();
        Edge::new(i, j, schedule, backward)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Incidence {
    edge: usize,
    forward: bool,
}

/// Periodic polymatrix game with a declared common interior equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct PolymatrixGame {
    actions: Vec<usize>,
    edges: Vec<Edge>,
    equilibrium: Vec<MixedStrategy>,
    period: f64,
    incidence: Vec<Vec<Incidence>>,
}

impl PolymatrixGame {
    pub fn new(
        actions: Vec<usize>,
        edges: Vec<Edge>,
        equilibrium: Vec<MixedStrategy>,
    ) -> Result<Self> {
        let n = actions.len();
        if n < 2 {
            return Err(Error::arg(format!("need at least 2 players, got {n}")));
        }
        if actions.contains(&0) {
            return Err(Error::arg("every player needs at least one action"));
        }
        if edges.is_empty() {
            return Err(Error::arg("polymatrix game has no edges"));
        }
        let period = edges[0].forward.period();
        let mut incidence = vec![Vec::new(); n];
        for (k, e) in edges.iter().enumerate() {
            if e.i >= n || e.j >= n || e.i == e.j {
                return Err(Error::arg(format!("invalid edge ({}, {})", e.i, e.j)));
            }
            if e.forward.shape() != (actions[e.i], actions[e.j])
                || e.backward.shape() != (actions[e.j], actions[e.i])
            {
                return Err(Error::shape(format!(
                    "edge ({}, {}) payoffs {:?}/{:?} do not match action counts {}/{}",
                    e.i,
                    e.j,
                    e.forward.shape(),
                    e.backward.shape(),
                    actions[e.i],
                    actions[e.j]
                )));
            }
            for p in [e.forward.period(), e.backward.period()] {
                if (p - period).abs() > 1e-12 * period.max(1.0) {
                    return Err(Error::ScheduleMalformed(format!(
                        "edge ({}, {}) has period {p}, expected common period {period}",
                        e.i, e.j
                    )));
                }
            }
            incidence[e.i].push(Incidence {
                edge: k,
                forward: true,
            });
            incidence[e.j].push(Incidence {
                edge: k,
                forward: false,
            });
        }
        if equilibrium.len() != n {
            return Err(Error::shape(format!(
                "equilibrium has {} players, game has {n}",
                equilibrium.len()
            )));
        }
        for (i, x) in equilibrium.iter().enumerate() {
            if x.len() != actions[i] {
                return Err(Error::shape(format!(
                    "equilibrium of player {i} has {} entries, expected {}",
                    x.len(),
                    actions[i]
                )));
            }
            if !x.is_interior() {
                return Err(Error::Domain(format!(
                    "declared equilibrium of player {i} is not interior"
                )));
            }
        }
        Ok(PolymatrixGame {
            actions,
            edges,
            equilibrium,
            period,
            incidence,
        })
    }

    pub fn num_players(&self) -> usize {
        self.actions.len()
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn equilibrium(&self) -> &[MixedStrategy] {
        &self.equilibrium
    }

    /// The declared equilibrium as plain vectors.
    pub fn equilibrium_vectors(&self) -> Vec<DVector<f64>> {
        self.equilibrium.iter().map(|x| x.probs().clone()).collect()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Total number of strategy coordinates, `sum_i n_i`.
    pub fn total_actions(&self) -> usize {
        self.actions.iter().sum()
    }

    pub fn check_joint(&self, x: &[DVector<f64>]) -> Result<()> {
        if x.len() != self.num_players() {
            return Err(Error::shape(format!(
                "joint strategy has {} players, game has {}",
                x.len(),
                self.num_players()
            )));
        }
        for (i, (xi, &n)) in x.iter().zip(&self.actions).enumerate() {
            if xi.len() != n {
                return Err(Error::shape(format!(
                    "player {i} strategy has {} entries, expected {n}",
                    xi.len()
                )));
            }
        }
        Ok(())
    }

    /// Payoff vectors `v_i(x, t) = sum_j A^{ij}(t) x_j` for every player.
    pub fn payoff_vectors(&self, t: f64, x: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
        self.payoff_vectors_anchored(t, t, x)
    }

    /// Payoff vectors with schedule pieces chosen by `anchor` (see
    /// [`PayoffSchedule::piece_anchored`]).
    pub fn payoff_vectors_anchored(
        &self,
        t: f64,
        anchor: f64,
        x: &[DVector<f64>],
    ) -> Result<Vec<DVector<f64>>> {
        self.check_joint(x)?;
        let mut v: Vec<DVector<f64>> = self.actions.iter().map(|&n| DVector::zeros(n)).collect();
        for e in &self.edges {
            let (m, base) = e.forward.piece_anchored(t, anchor)?;
            v[e.i].gemv(m, base, &x[e.j], 1.0);
            let (m, base) = e.backward.piece_anchored(t, anchor)?;
            v[e.j].gemv(m, base, &x[e.i], 1.0);
        }
        Ok(v)
    }

    /// Payoff vector of a single player.
    pub fn payoff_vector(&self, player: usize, t: f64, x: &[DVector<f64>]) -> Result<DVector<f64>> {
        if player >= self.num_players() {
            return Err(Error::arg(format!(
                "unknown player {player}; game has {} players",
                self.num_players()
            )));
        }
        self.check_joint(x)?;
        let mut v = DVector::zeros(self.actions[player]);
        for inc in &self.incidence[player] {
            let e = &self.edges[inc.edge];
            if inc.forward {
                let (m, base) = e.forward.piece_at(t)?;
                v.gemv(m, base, &x[e.j], 1.0);
            } else {
                let (m, base) = e.backward.piece_at(t)?;
                v.gemv(m, base, &x[e.i], 1.0);
            }
        }
        Ok(v)
    }

    /// Utilities `u_i(x, t) = <v_i(x, t), x_i>` of all players.
    pub fn utilities(&self, t: f64, x: &[DVector<f64>]) -> Result<Vec<f64>> {
        self.utilities_anchored(t, t, x)
    }

    pub fn utilities_anchored(&self, t: f64, anchor: f64, x: &[DVector<f64>]) -> Result<Vec<f64>> {
        let v = self.payoff_vectors_anchored(t, anchor, x)?;
        Ok(v.iter().zip(x).map(|(vi, xi)| vi.dot(xi)).collect())
    }

    /// `|sum_i u_i(x, t)|`; zero for a zero-sum game.
    pub fn zero_sum_residual(&self, t: f64, x: &[DVector<f64>]) -> Result<f64> {
        Ok(self.utilities(t, x)?.iter().sum::<f64>().abs())
    }

    /// Largest spread `|v_{ia}(x*, t) - v_{ib}(x*, t)|` over players and action pairs.
    ///
    /// Against an interior equilibrium every pure strategy earns the same payoff, so this
    /// vanishes for a correctly declared `x*`.
    pub fn equilibrium_residual(&self, t: f64) -> Result<f64> {
        let v = self.payoff_vectors(t, &self.equilibrium_vectors())?;
        Ok(v.iter().map(|vi| vi.max() - vi.min()).fold(0.0, f64::max))
    }

    /// Value `V(t) = u_1(x*, t)` of a two-player game.
    pub fn game_value(&self, t: f64) -> Result<f64> {
        if self.num_players() != 2 {
            return Err(Error::Unsupported(format!(
                "game value is only defined for two-player games, this one has {} players",
                self.num_players()
            )));
        }
        Ok(self.utilities(t, &self.equilibrium_vectors())?[0])
    }

    /// Period average `(1/T) int_0^T V(t) dt` by composite Simpson on each smooth piece.
    pub fn mean_game_value(&self, intervals_per_piece: usize) -> Result<f64> {
        if self.num_players() != 2 {
            return Err(Error::Unsupported(
                "mean game value needs two players".into(),
            ));
        }
        let n = (intervals_per_piece.max(2) + 1) & !1;
        let xs = self.equilibrium_vectors();
        let mut knots = vec![0.0];
        knots.extend(self.breakpoints(0.0, self.period));
        knots.push(self.period);
        let mut total = 0.0;
        for w in knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            let h = (b - a) / n as f64;
            let mut acc = 0.0;
            for k in 0..=n {
                let t = if k == n { b } else { a + k as f64 * h };
                let u = self.utilities_anchored(t, mid, &xs)?[0];
                let weight = if k == 0 || k == n {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                acc += weight * u;
            }
            total += acc * h / 3.0;
        }
        Ok(total / self.period)
    }

    /// Merged schedule boundaries of all edges in the open interval `(t0, t1)`.
    pub fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut all: Vec<f64> = self
            .edges
            .iter()
            .flat_map(|e| {
                let mut b = e.forward.breakpoints(t0, t1);
                b.extend(e.backward.breakpoints(t0, t1));
                b
            })
            .collect();
        merge_times(&mut all);
        all
    }
}

/// Sorts and removes near-duplicate times.
pub(crate) fn merge_times(times: &mut Vec<f64>) {
    times.sort_by(f64::total_cmp);
    times.dedup_by(|b, a| (*b - *a).abs() <= 1e-12 * a.abs().max(1.0));
}

/// Cycle graph `i -- (i+1 mod N)`; edge `e` carries `{m_e(t) base, -m_e(t) base^T}`.
///
/// The declared equilibrium is uniform on every simplex, which is correct whenever `base`
/// nulls the uniform strategy (as Matching Pennies does).
pub fn build_cycle_chain(
    num_players: usize,
    modulations: &[Modulation],
    base: &DMatrix<f64>,
    period: f64,
) -> Result<PolymatrixGame> {
    if num_players < 3 {
        return Err(Error::arg(format!(
            "a cycle chain needs at least 3 players, got {num_players}"
        )));
    }
    if modulations.len() != num_players {
        return Err(Error::arg(format!(
            "need one modulation per edge ({num_players}), got {}",
            modulations.len()
        )));
    }
    if !base.is_square() {
        return Err(Error::shape("cycle chain base matrix must be square"));
    }
    let n = base.nrows();
    let edges = modulations
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let s = PayoffSchedule::single(base.clone(), *m, period)?;
            Ok(Edge::zero_sum(i, (i + 1) % num_players, s))
        })
        .collect::<Result<Vec<_>>>()?;
    PolymatrixGame::new(
        vec![n; num_players],
        edges,
        vec![MixedStrategy::uniform(n); num_players],
    )
}
