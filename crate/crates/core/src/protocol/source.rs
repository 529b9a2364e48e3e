//! ε-sources: every emitted bit has conditional probability in `[ε, 1−ε]`
//! given everything emitted before it.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::QUINTUPLET;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SourceStrategy {
    /// Independent bits with `P(1) = p_one`.
    HonestIid { p_one: f64 },
    /// Every bit leans as far as allowed toward `toward`.
    ConstantBias { toward: u8 },
    /// Reads the emitted history and steers each group of five bits
    /// toward a setting with an odd number of zeros.
    DiscardSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSource {
    pub epsilon: f64,
    pub strategy: SourceStrategy,
}

impl EpsilonSource {
    pub fn new(epsilon: f64, strategy: SourceStrategy) -> Result<Self> {
        let s = EpsilonSource { epsilon, strategy };
        s.validate()?;
        Ok(s)
    }

    pub fn uniform() -> Self {
        EpsilonSource {
            epsilon: 0.5,
            strategy: SourceStrategy::HonestIid { p_one: 0.5 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let e = self.epsilon;
        if !(e > 0.0 && e <= 0.5) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in (0, 1/2], got {e}"
            )));
        }
        match self.strategy {
            SourceStrategy::HonestIid { p_one } if !(e..=1.0 - e).contains(&p_one) => Err(
                Error::InvalidArgument(format!("bias {p_one} outside [{e}, {}]", 1.0 - e)),
            ),
            SourceStrategy::ConstantBias { toward } if toward > 1 => {
                Err(Error::InvalidArgument("bias target must be 0 or 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// `P(next bit = 1 | history)`.
    pub fn next_bias(&self, history: &[u8]) -> f64 {
        let (lo, hi) = (self.epsilon, 1.0 - self.epsilon);
        match self.strategy {
            SourceStrategy::HonestIid { p_one } => p_one,
            SourceStrategy::ConstantBias { toward } => {
                if toward == 1 {
                    hi
                } else {
                    lo
                }
            }
            SourceStrategy::DiscardSettings => {
                let pos = history.len() % QUINTUPLET;
                if pos + 1 < QUINTUPLET {
                    return hi;
                }
                let start = history.len() - pos;
                let zeros = history[start..].iter().filter(|&&b| b == 0).count();
                // an odd total zero count puts the setting outside the support
                if zeros % 2 == 0 {
                    lo
                } else {
                    hi
                }
            }
        }
        .clamp(lo, hi)
    }

    pub fn stream(&self, rng: ChaCha8Rng) -> SourceStream<'_> {
        SourceStream {
            source: self,
            rng,
            history: Vec::new(),
        }
    }
}

/// A running source: draws bits and keeps the emitted history.
pub struct SourceStream<'a> {
    source: &'a EpsilonSource,
    rng: ChaCha8Rng,
    history: Vec<u8>,
}

impl SourceStream<'_> {
    pub fn next_bit(&mut self) -> u8 {
        let p = self.source.next_bias(&self.history);
        let bit = u8::from(self.rng.gen::<f64>() < p);
        self.history.push(bit);
        bit
    }

    pub fn take(&mut self, count: usize) -> Vec<u8> {
        (0..count).map(|_| self.next_bit()).collect()
    }

    pub fn consumed(&self) -> usize {
        self.history.len()
    }
}

pub fn sample_source(source: &EpsilonSource, count: usize, seed: u64) -> Result<Vec<u8>> {
    source.validate()?;
    Ok(source.stream(ChaCha8Rng::seed_from_u64(seed)).take(count))
}

/// Probability that the source emits exactly `bits` as its first bits.
pub fn sequence_probability(source: &EpsilonSource, bits: &[u8]) -> f64 {
    (0..bits.len())
        .map(|i| {
            let p = source.next_bias(&bits[..i]);
            if bits[i] == 1 {
                p
            } else {
                1.0 - p
            }
        })
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(EpsilonSource::new(0.0, SourceStrategy::DiscardSettings).is_err());
        assert!(EpsilonSource::new(0.6, SourceStrategy::DiscardSettings).is_err());
        assert!(EpsilonSource::new(0.2, SourceStrategy::HonestIid { p_one: 0.9 }).is_err());
        assert!(EpsilonSource::new(0.2, SourceStrategy::ConstantBias { toward: 2 }).is_err());
    }

    #[test]
    fn discard_strategy_targets_odd_zero_count() {
        let s = EpsilonSource::new(0.01, SourceStrategy::DiscardSettings).unwrap();
        assert_eq!(s.next_bias(&[1, 1, 1, 1]), 0.01);
        assert_eq!(s.next_bias(&[1, 0, 1, 1]), 0.99);
        assert_eq!(s.next_bias(&[0, 0, 0, 0, 0, 1]), 0.99);
    }

    #[test]
    fn same_seed_same_bits() {
        let s = EpsilonSource::uniform();
        assert_eq!(
            sample_source(&s, 100, 9).unwrap(),
            sample_source(&s, 100, 9).unwrap()
        );
        assert_ne!(
            sample_source(&s, 100, 9).unwrap(),
            sample_source(&s, 100, 10).unwrap()
        );
    }
}
