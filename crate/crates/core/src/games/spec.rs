//! JSON game-spec format.
//!
//! ```json
//! {"type": "polymatrix", "period": 6.283185307179586, "players": 2,
//!  "edges": [{"i": 0, "j": 1, "base": [[1, -1], [-1, 1]],
//!             "segments": [{"start": 0, "end": 6.283185307179586,
//!                           "mod": {"kind": "sine", "amplitude": 1,
//!                                   "angular_frequency": 1, "phase": 0}}]}],
//!  "equilibrium": [[0.5, 0.5], [0.5, 0.5]]}
//! ```
//!
//! Each edge describes `A^{ij}(t)`; the opposite side defaults to `-A^{ij}(t)^T`. Two optional
//! extensions exist: `base_ji`/`segments_ji` give the opposite side explicitly (so non-zero-sum
//! edges can be written down and rejected by `check`), and a segment may carry its own `base`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{
    BilinearGame, Edge, MixedStrategy, Modulation, PayoffSchedule, PolymatrixGame, Segment,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameKind {
    Bilinear,
    Polymatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub start: f64,
    pub end: f64,
    #[serde(rename = "mod")]
    pub modulation: Modulation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub i: usize,
    pub j: usize,
    pub base: Vec<Vec<f64>>,
    pub segments: Vec<SegmentSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_ji: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments_ji: Option<Vec<SegmentSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    #[serde(rename = "type")]
    pub kind: GameKind,
    pub period: f64,
    pub players: usize,
    pub edges: Vec<EdgeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<Vec<Vec<f64>>>,
}

/// A game built from a [`GameSpec`].
#[derive(Debug, Clone, PartialEq)]
pub enum Game {
    Bilinear(BilinearGame),
    Polymatrix(PolymatrixGame),
}

impl Game {
    pub fn period(&self) -> Option<f64> {
        match self {
            Game::Bilinear(g) => g.period(),
            Game::Polymatrix(g) => Some(g.period()),
        }
    }

    pub fn as_polymatrix(&self) -> Result<&PolymatrixGame> {
        match self {
            Game::Polymatrix(g) => Ok(g),
            Game::Bilinear(_) => Err(Error::Unsupported(
                "operation needs a polymatrix game, got a bilinear one".into(),
            )),
        }
    }

    pub fn as_bilinear(&self) -> Result<&BilinearGame> {
        match self {
            Game::Bilinear(g) => Ok(g),
            Game::Polymatrix(_) => Err(Error::Unsupported(
                "operation needs a bilinear game, got a polymatrix one".into(),
            )),
        }
    }
}

fn matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let r = rows.len();
    if r == 0 {
        return Err(Error::shape("empty payoff matrix"));
    }
    let c = rows[0].len();
    if c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(Error::shape("payoff matrix rows are empty or ragged"));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn schedule(base: DMatrix<f64>, segs: &[SegmentSpec], period: f64) -> Result<PayoffSchedule> {
    let segments = segs
        .iter()
        .map(|s| {
            let seg = Segment::new(s.start, s.end, s.modulation);
            Ok(match &s.base {
                Some(b) => seg.with_base(matrix(b)?),
                None => seg,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    PayoffSchedule::new(base, segments, period)
}

fn segment_specs(s: &PayoffSchedule) -> Vec<SegmentSpec> {
    s.segments()
        .iter()
        .map(|seg| SegmentSpec {
            start: seg.start,
            end: seg.end,
            modulation: seg.modulation,
            base: seg.base.as_ref().map(rows),
        })
        .collect()
}

impl GameSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn build(&self) -> Result<Game> {
        match self.kind {
            GameKind::Bilinear => self.build_bilinear().map(Game::Bilinear),
            GameKind::Polymatrix => self.build_polymatrix().map(Game::Polymatrix),
        }
    }

    fn build_bilinear(&self) -> Result<BilinearGame> {
        if self.players != 2 || self.edges.len() != 1 {
            return Err(Error::arg(
                "a bilinear game spec needs exactly 2 players and one edge",
            ));
        }
        let e = &self.edges[0];
        if (e.i, e.j) != (0, 1) {
            return Err(Error::arg("bilinear edge must be (0, 1)"));
        }
        if e.base_ji.is_some() || e.segments_ji.is_some() {
            return Err(Error::arg(
                "bilinear games are zero-sum by construction; base_ji is not accepted",
            ));
        }
        Ok(BilinearGame::periodic(schedule(
            matrix(&e.base)?,
            &e.segments,
            self.period,
        )?))
    }

    fn build_polymatrix(&self) -> Result<PolymatrixGame> {
        let mut actions: Vec<Option<usize>> = vec![None; self.players];
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            if e.i >= self.players || e.j >= self.players {
                return Err(Error::arg(format!("edge ({}, {}) out of range", e.i, e.j)));
            }
            let forward = schedule(matrix(&e.base)?, &e.segments, self.period)?;
            let backward = match (&e.base_ji, &e.segments_ji) {
                (None, None) => forward.negated_transpose(),
                (Some(b), segs) => schedule(
                    matrix(b)?,
                    segs.as_deref().unwrap_or(&e.segments),
                    self.period,
                )?,
                (None, Some(_)) => {
                    return Err(Error::arg("segments_ji given without base_ji"));
                }
            };
            let (ni, nj) = forward.shape();
            for (p, n) in [(e.i, ni), (e.j, nj)] {
                match actions[p] {
                    None => actions[p] = Some(n),
                    Some(m) if m != n => {
                        return Err(Error::shape(format!(
                            "player {p} has {m} actions in one edge and {n} in another"
                        )))
                    }
                    _ => {}
                }
            }
            edges.push(Edge::new(e.i, e.j, forward, backward));
        }
        let actions = actions
            .into_iter()
            .enumerate()
            .map(|(p, a)| a.ok_or_else(|| Error::arg(format!("player {p} is on no edge"))))
            .collect::<Result<Vec<_>>>()?;
        let equilibrium = match &self.equilibrium {
            Some(eq) => eq
                .iter()
                .map(|x| MixedStrategy::from_slice(x))
                .collect::<Result<Vec<_>>>()?,
            None => actions.iter().map(|&n| MixedStrategy::uniform(n)).collect(),
        };
        PolymatrixGame::new(actions, edges, equilibrium)
    }

    pub fn from_polymatrix(game: &PolymatrixGame) -> Self {
        let edges = game
            .edges()
            .iter()
            .map(|e| {
                let default_back = e.forward.negated_transpose();
                let explicit = e.backward != default_back;
                EdgeSpec {
                    i: e.i,
                    j: e.j,
                    base: rows(e.forward.base()),
                    segments: segment_specs(&e.forward),
                    base_ji: explicit.then(|| rows(e.backward.base())),
                    segments_ji: explicit.then(|| segment_specs(&e.backward)),
                }
            })
            .collect();
        GameSpec {
            kind: GameKind::Polymatrix,
            period: game.period(),
            players: game.num_players(),
            edges,
            equilibrium: Some(
                game.equilibrium()
                    .iter()
                    .map(|x| x.as_slice().to_vec())
                    .collect(),
            ),
        }
    }

    /// Spec of a periodic bilinear game; `None` for non-periodic payoffs.
    pub fn from_bilinear(game: &BilinearGame) -> Option<Self> {
        let s = game.schedule()?;
        Some(GameSpec {
            kind: GameKind::Bilinear,
            period: s.period(),
            players: 2,
            edges: vec![EdgeSpec {
                i: 0,
                j: 1,
                base: rows(s.base()),
                segments: segment_specs(s),
                base_ji: None,
                segments_ji: None,
            }],
            equilibrium: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIN_MP: &str = r#"{
        "type": "polymatrix", "period": 6.283185307179586, "players": 2,
        "edges": [{"i": 0, "j": 1, "base": [[1, -1], [-1, 1]],
                   "segments": [{"start": 0, "end": 6.283185307179586,
                                 "mod": {"kind": "sine", "amplitude": 1, "angular_frequency": 1, "phase": 0}}]}],
        "equilibrium": [[0.5, 0.5], [0.5, 0.5]]
    }"#;

    #[test]
    fn parses_and_builds_polymatrix() {
        let spec = GameSpec::from_json(SIN_MP).unwrap();
        let game = spec.build().unwrap();
        let g = game.as_polymatrix().unwrap();
        assert_eq!(g.num_players(), 2);
        assert!(g.equilibrium_residual(1.0).unwrap() < 1e-15);
    }

    #[test]
    fn spec_round_trips_through_game() {
        let spec = GameSpec::from_json(SIN_MP).unwrap();
        let game = spec.build().unwrap();
        let back = GameSpec::from_polymatrix(game.as_polymatrix().unwrap());
        assert_eq!(back, spec);
        let again = GameSpec::from_json(&back.to_json().unwrap()).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn explicit_opposite_side_is_kept() {
        let text = SIN_MP.replace(
            r#""segments": [{"#,
            r#""base_ji": [[-1, 1.1], [1, -1]], "segments": [{"#,
        );
        let g = GameSpec::from_json(&text).unwrap().build().unwrap();
        let g = g.as_polymatrix().unwrap();
        let x = [
            nalgebra::DVector::from_column_slice(&[0.5, 0.5]),
            nalgebra::DVector::from_column_slice(&[0.3, 0.7]),
        ];
        assert!(g.zero_sum_residual(1.0, &x).unwrap() > 1e-3);
    }

    #[test]
    fn bilinear_spec() {
        let text = SIN_MP
            .replace(r#""polymatrix""#, r#""bilinear""#)
            .replace(r#","equilibrium": [[0.5, 0.5], [0.5, 0.5]]"#, "");
        let g = GameSpec::from_json(&text).unwrap().build().unwrap();
        assert_eq!(g.as_bilinear().unwrap().dims(), (2, 2));
    }

    #[test]
    fn ragged_matrix_is_a_shape_error() {
        let text = SIN_MP.replace("[[1, -1], [-1, 1]]", "[[1, -1], [-1]]");
        let err = GameSpec::from_json(&text).unwrap().build().unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn uncovered_period_is_rejected() {
        let text = SIN_MP.replace(r#""end": 6.283185307179586"#, r#""end": 3.0"#);
        let err = GameSpec::from_json(&text).unwrap().build().unwrap_err();
        assert!(matches!(err, Error::ScheduleMalformed(_)));
    }
}
