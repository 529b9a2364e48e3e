//! Devices queried once per quintuplet.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mermin::{ghz_correlations, LocalStrategy};
use crate::polytope::{is_nonsignalling, ConditionalDistribution};
use crate::protocol::QUINTUPLET;

const NONSIGNALLING_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoxModel {
    /// Measurements on a five-qubit GHZ state.
    IdealQuantum,
    /// Fixed per-party response tables.
    LocalDeterministic { strategy: LocalStrategy },
    /// Fresh independent draw from a no-signalling box per quintuplet.
    Custom {
        distribution: ConditionalDistribution,
    },
}

impl BoxModel {
    pub fn all_zero() -> Self {
        BoxModel::LocalDeterministic {
            strategy: LocalStrategy::constant(QUINTUPLET, 0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BoxModel::IdealQuantum => Ok(()),
            BoxModel::LocalDeterministic { strategy } => {
                if strategy.parties() != QUINTUPLET {
                    return Err(Error::DimensionMismatch {
                        expected: QUINTUPLET,
                        found: strategy.parties(),
                    });
                }
                if strategy.outputs.iter().flatten().any(|&b| b > 1) {
                    return Err(Error::InvalidArgument(
                        "strategy outputs must be bits".into(),
                    ));
                }
                Ok(())
            }
            BoxModel::Custom { distribution } => {
                if distribution.parties() != QUINTUPLET {
                    return Err(Error::DimensionMismatch {
                        expected: QUINTUPLET,
                        found: distribution.parties(),
                    });
                }
                if !is_nonsignalling(distribution, NONSIGNALLING_TOLERANCE) {
                    return Err(Error::InvalidDistribution("custom box signals".into()));
                }
                Ok(())
            }
        }
    }

    pub fn sampler(&self) -> Result<BoxSampler> {
        self.validate()?;
        match self {
            BoxModel::IdealQuantum => Ok(BoxSampler::Table(cumulative(&ghz_correlations(
                QUINTUPLET,
            )?))),
            BoxModel::LocalDeterministic { strategy } => Ok(BoxSampler::Fixed(strategy.clone())),
            BoxModel::Custom { distribution } => Ok(BoxSampler::Table(cumulative(distribution))),
        }
    }
}

fn cumulative(p: &ConditionalDistribution) -> Vec<Vec<f64>> {
    let outcomes = 1usize << p.parties();
    (0..outcomes)
        .map(|x| {
            let mut acc = 0.0;
            p.row(x)
                .iter()
                .map(|v| {
                    acc += v;
                    acc
                })
                .collect()
        })
        .collect()
}

/// Precomputed sampling tables for a [`BoxModel`].
#[derive(Debug, Clone)]
pub enum BoxSampler {
    Table(Vec<Vec<f64>>),
    Fixed(LocalStrategy),
}

impl BoxSampler {
    pub fn query(&self, x: usize, rng: &mut impl Rng) -> usize {
        match self {
            BoxSampler::Fixed(s) => s.respond(x),
            BoxSampler::Table(rows) => {
                let row = &rows[x];
                let u = rng.gen::<f64>() * row[row.len() - 1];
                row.partition_point(|&c| c <= u).min(row.len() - 1)
            }
        }
    }
}
