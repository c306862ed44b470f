//! Vector fields for gradient descent-ascent, FTRL, replicator and reduced FTRL dynamics.

mod ftrl;
mod gda;
mod regularizer;

use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use ftrl::{
    flatten_blocks, ftrl_field, last_action_benchmarks, replicator_field, split_blocks, z_field,
    z_from_interior, z_lift, z_reduce, FtrlField, FtrlState, ReplicatorField, ZField, ZState,
};
pub use gda::{gda_field, GdaField, GdaState};
pub use regularizer::{
    choice_map, project_simplex, regularizer, Entropic, Euclidean, Regularizer, RegularizerKind,
    REGULARIZERS,
};

use crate::games::{BilinearGame, Game};
use crate::integrate::VectorField;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DynamicsKind {
    Gda,
    Ftrl,
    Replicator,
    /// FTRL in utility-difference coordinates.
    Z,
}

pub const DYNAMICS: &[&str] = &["gda", "ftrl", "replicator", "z"];

impl DynamicsKind {
    pub fn name(self) -> &'static str {
        match self {
            DynamicsKind::Gda => "gda",
            DynamicsKind::Ftrl => "ftrl",
            DynamicsKind::Replicator => "replicator",
            DynamicsKind::Z => "z",
        }
    }
}

impl FromStr for DynamicsKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gda" => Ok(DynamicsKind::Gda),
            "ftrl" => Ok(DynamicsKind::Ftrl),
            "replicator" => Ok(DynamicsKind::Replicator),
            "z" => Ok(DynamicsKind::Z),
            _ => Err(Error::UnknownName {
                kind: "dynamics",
                name: s.to_string(),
                registered: DYNAMICS.iter().map(|d| d.to_string()).collect(),
            }),
        }
    }
}

/// GDA view of a game: a bilinear game as is, or a two-player polymatrix game with one edge.
pub fn as_bilinear(game: &Game) -> Result<BilinearGame> {
    match game {
        Game::Bilinear(g) => Ok(g.clone()),
        Game::Polymatrix(g) => match g.edges() {
            [e] if g.num_players() == 2 && (e.i, e.j) == (0, 1) => {
                Ok(BilinearGame::periodic(e.forward.clone()))
            }
            _ => Err(Error::Unsupported(
                "gda needs a bilinear game or a two-player polymatrix game with a single edge"
                    .into(),
            )),
        },
    }
}

/// Builds the field registered under `name` for `game`.
pub fn dynamics(name: &str, game: &Game, reg: RegularizerKind) -> Result<Box<dyn VectorField>> {
    let poly = || game.as_polymatrix().map(|g| Arc::new(g.clone()));
    let reg: Arc<dyn Regularizer> = Arc::from(reg.build());
    Ok(match name.parse::<DynamicsKind>()? {
        DynamicsKind::Gda => Box::new(GdaField::new(as_bilinear(game)?)),
        DynamicsKind::Ftrl => Box::new(FtrlField::new(poly()?, reg)),
        DynamicsKind::Replicator => Box::new(ReplicatorField::new(poly()?)),
        DynamicsKind::Z => Box::new(ZField::with_last_benchmarks(poly()?, reg)),
    })
}

#[cfg(test)]
mod tests;
