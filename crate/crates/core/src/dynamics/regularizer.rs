use std::fmt::Debug;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::games::MixedStrategy;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegularizerKind {
    Entropic,
    Euclidean,
}

impl RegularizerKind {
    pub fn name(self) -> &'static str {
        match self {
            RegularizerKind::Entropic => "entropic",
            RegularizerKind::Euclidean => "euclidean",
        }
    }

    pub fn build(self) -> Box<dyn Regularizer> {
        match self {
            RegularizerKind::Entropic => Box::new(Entropic),
            RegularizerKind::Euclidean => Box::new(Euclidean),
        }
    }
}

impl FromStr for RegularizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entropic" => Ok(RegularizerKind::Entropic),
            "euclidean" => Ok(RegularizerKind::Euclidean),
            _ => Err(Error::UnknownName {
                kind: "regularizer",
                name: s.to_string(),
                registered: REGULARIZERS.iter().map(|r| r.to_string()).collect(),
            }),
        }
    }
}

pub const REGULARIZERS: &[&str] = &["entropic", "euclidean"];

pub fn regularizer(name: &str) -> Result<Box<dyn Regularizer>> {
    Ok(name.parse::<RegularizerKind>()?.build())
}

/// Strictly convex penalty `h` on the simplex together with its choice map
/// `Q(y) = argmax_x <x, y> - h(x)` and conjugate `h*(y) = max_x <x, y> - h(x)`.
pub trait Regularizer: Debug + Send + Sync {
    fn kind(&self) -> RegularizerKind;

    fn name(&self) -> &'static str {
        self.kind().name()
    }

    fn penalty(&self, x: &[f64]) -> f64;

    /// Writes `Q(y)` into `out`.
    fn choice(&self, y: &[f64], out: &mut [f64]);

    fn conjugate(&self, y: &[f64]) -> f64;

    /// `max h - min h` over the simplex with `n` actions.
    fn range(&self, n: usize) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub struct Entropic;

impl Regularizer for Entropic {
    fn kind(&self) -> RegularizerKind {
        RegularizerKind::Entropic
    }

    fn penalty(&self, x: &[f64]) -> f64 {
        x.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum()
    }

    fn choice(&self, y: &[f64], out: &mut [f64]) {
        let m = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (o, &v) in out.iter_mut().zip(y) {
            *o = (v - m).exp();
            total += *o;
        }
        for o in out.iter_mut() {
            *o /= total;
        }
    }

    fn conjugate(&self, y: &[f64]) -> f64 {
        let m = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        m + y.iter().map(|&v| (v - m).exp()).sum::<f64>().ln()
    }

    fn range(&self, n: usize) -> f64 {
        (n as f64).ln()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Euclidean;

/// Euclidean projection onto the probability simplex (sort and threshold).
pub fn project_simplex(y: &[f64], out: &mut [f64]) {
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cum += uk;
        let cand = (cum - 1.0) / (k + 1) as f64;
        if uk - cand > 0.0 {
            theta = cand;
        }
    }
    for (o, &v) in out.iter_mut().zip(y) {
        *o = (v - theta).max(0.0);
    }
}

impl Regularizer for Euclidean {
    fn kind(&self) -> RegularizerKind {
        RegularizerKind::Euclidean
    }

    fn penalty(&self, x: &[f64]) -> f64 {
        0.5 * x.iter().map(|v| v * v).sum::<f64>()
    }

    fn choice(&self, y: &[f64], out: &mut [f64]) {
        project_simplex(y, out);
    }

    fn conjugate(&self, y: &[f64]) -> f64 {
        let mut x = vec![0.0; y.len()];
        project_simplex(y, &mut x);
        x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() - self.penalty(&x)
    }

    fn range(&self, n: usize) -> f64 {
        0.5 - 0.5 / n as f64
    }
}

/// `Q(y)` as a validated mixed strategy.
pub fn choice_map(reg: &dyn Regularizer, y: &[f64]) -> Result<MixedStrategy> {
    if y.is_empty() {
        return Err(Error::shape("empty payoff vector"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite cumulative payoff vector".into()));
    }
    let mut x = vec![0.0; y.len()];
    reg.choice(y, &mut x);
    Ok(MixedStrategy::from_unchecked(DVector::from_vec(x)))
}
