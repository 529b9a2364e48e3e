//! Mermin functionals for odd party counts, their GHZ quantum optimum, and
//! local deterministic strategies.
//!
//! A setting `x` enters the inequality when its number of zero bits is
//! even; the GHZ state then has definite outcome parity
//! `(zeros(x) / 2) mod 2`. The functional `I(a,x)` is `1` on supported
//! settings whose outcome parity is wrong and `0` elsewhere, so the
//! maximal violation is `I·P = 0`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::polytope::{
    bits_to_string, index, parity, split_index, ConditionalDistribution, LinearFunctional,
};

pub const MAX_GHZ_PARTIES: usize = 9;

#[derive(Debug, Clone, PartialEq)]
pub struct BellFunctional {
    parties: usize,
    functional: LinearFunctional,
    x0: Vec<usize>,
    x1: Vec<usize>,
    parity_target: BTreeMap<usize, u8>,
}

impl BellFunctional {
    /// Builds the wrong-parity functional from explicit setting sets:
    /// settings in `x0` require even outcome parity, those in `x1` odd.
    pub fn from_sets(parties: usize, x0: &[usize], x1: &[usize]) -> Result<Self> {
        let settings = 1usize << parties;
        let mut parity_target = BTreeMap::new();
        for (&x, t) in x0
            .iter()
            .map(|x| (x, 0u8))
            .chain(x1.iter().map(|x| (x, 1u8)))
        {
            if x >= settings {
                return Err(Error::InvalidArgument(format!("setting {x} out of range")));
            }
            if parity_target.insert(x, t).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "setting {} listed twice",
                    bits_to_string(x, parties)
                )));
            }
        }
        let mut coefficients = vec![0.0; settings * settings];
        for (&x, &t) in &parity_target {
            for a in 0..settings {
                if parity(a) != t {
                    coefficients[index(parties, a, x)] = 1.0;
                }
            }
        }
        let mut x0: Vec<usize> = x0.to_vec();
        let mut x1: Vec<usize> = x1.to_vec();
        x0.sort_unstable();
        x1.sort_unstable();
        Ok(BellFunctional {
            parties,
            functional: LinearFunctional::new(parties, coefficients)?,
            x0,
            x1,
            parity_target,
        })
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn functional(&self) -> &LinearFunctional {
        &self.functional
    }

    /// Settings requiring even parity, ascending.
    pub fn x0(&self) -> &[usize] {
        &self.x0
    }

    /// Settings requiring odd parity, ascending.
    pub fn x1(&self) -> &[usize] {
        &self.x1
    }

    /// `X₀ ∪ X₁`, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.parity_target.keys().copied().collect()
    }

    pub fn is_supported(&self, x: usize) -> bool {
        self.parity_target.contains_key(&x)
    }

    pub fn parity_target(&self, x: usize) -> Option<u8> {
        self.parity_target.get(&x).copied()
    }

    /// `I(a,x)`.
    pub fn coefficient(&self, a: usize, x: usize) -> f64 {
        self.functional.coefficient(a, x)
    }

    pub fn export(&self) -> BellFunctionalExport {
        let n = self.parties;
        let coefficients = self
            .functional
            .coefficients()
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(idx, _)| {
                let (a, x) = split_index(n, idx);
                [bits_to_string(a, n), bits_to_string(x, n)]
            })
            .collect();
        BellFunctionalExport {
            parties: n,
            x0: self.x0.iter().map(|&x| bits_to_string(x, n)).collect(),
            x1: self.x1.iter().map(|&x| bits_to_string(x, n)).collect(),
            coefficients,
        }
    }
}

/// JSON export shape: settings and nonzero `[a, x]` pairs as bitstrings.
#[derive(Debug, Clone, Serialize)]
pub struct BellFunctionalExport {
    pub parties: usize,
    #[serde(rename = "X0")]
    pub x0: Vec<String>,
    #[serde(rename = "X1")]
    pub x1: Vec<String>,
    pub coefficients: Vec<[String; 2]>,
}

fn check_odd(parties: usize, max: usize) -> Result<()> {
    if parties < 3 || parties % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "Mermin functionals need an odd party count >= 3, got {parties}"
        )));
    }
    if parties > max {
        return Err(Error::ResourceLimit(format!(
            "{parties} parties exceeds the limit of {max}"
        )));
    }
    Ok(())
}

#[inline]
fn zero_count(x: usize, parties: usize) -> u32 {
    parties as u32 - x.count_ones()
}

/// The `n`-party Mermin functional.
pub fn mermin_coefficients(parties: usize) -> Result<BellFunctional> {
    check_odd(parties, crate::polytope::MAX_DENSE_PARTIES)?;
    let (mut x0, mut x1) = (Vec::new(), Vec::new());
    for x in 0..1usize << parties {
        let zeros = zero_count(x, parties);
        if zeros % 2 == 0 {
            if (zeros / 2) % 2 == 0 {
                x0.push(x);
            } else {
                x1.push(x);
            }
        }
    }
    BellFunctional::from_sets(parties, &x0, &x1)
}

/// Correlations of `(|0…0⟩ + |1…1⟩)/√2` when setting `1` measures Pauli X
/// and setting `0` measures Pauli Y.
pub fn ghz_correlations(parties: usize) -> Result<ConditionalDistribution> {
    check_odd(parties, MAX_GHZ_PARTIES)?;
    let n = parties;
    let definite = 0.5f64.powi(n as i32 - 1);
    let uniform = 0.5f64.powi(n as i32);
    ConditionalDistribution::from_fn(n, |a, x| {
        let y_count = zero_count(x, n);
        if y_count % 2 == 1 {
            uniform
        } else if parity(a) as u32 == (y_count / 2) % 2 {
            definite
        } else {
            0.0
        }
    })
}

/// One response function per party: `outputs[i][x_i]` is party `i`'s bit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct LocalStrategy {
    pub outputs: Vec<[u8; 2]>,
}

impl LocalStrategy {
    /// Strategy number `code ∈ [0, 4ⁿ)`: party `i` uses bits `2i, 2i+1`
    /// of `code` as its outputs on settings `0, 1`.
    pub fn from_code(parties: usize, code: usize) -> Self {
        let outputs = (0..parties)
            .map(|i| {
                let r = (code >> (2 * i)) & 3;
                [(r & 1) as u8, ((r >> 1) & 1) as u8]
            })
            .collect();
        LocalStrategy { outputs }
    }

    pub fn constant(parties: usize, bit: u8) -> Self {
        LocalStrategy {
            outputs: vec![[bit, bit]; parties],
        }
    }

    pub fn parties(&self) -> usize {
        self.outputs.len()
    }

    /// Joint outcome for a setting.
    pub fn respond(&self, x: usize) -> usize {
        self.outputs.iter().enumerate().fold(0usize, |acc, (i, o)| {
            acc | ((o[(x >> i) & 1] as usize) << i)
        })
    }

    pub fn distribution(&self) -> Result<ConditionalDistribution> {
        let n = self.parties();
        ConditionalDistribution::from_fn(n, |a, x| if self.respond(x) == a { 1.0 } else { 0.0 })
    }
}

/// Bell value `Σ I(a,x) P(a|x)` of the deterministic box.
pub fn deterministic_strategy_value(strategy: &LocalStrategy, f: &BellFunctional) -> Result<f64> {
    if strategy.parties() != f.parties() {
        return Err(Error::DimensionMismatch {
            expected: f.parties(),
            found: strategy.parties(),
        });
    }
    Ok(f.support()
        .into_iter()
        .map(|x| f.coefficient(strategy.respond(x), x))
        .sum())
}

/// Exhaustive minimum over all `4ⁿ` local deterministic strategies,
/// returning the value and the first minimizing strategy code.
pub fn classical_minimum(f: &BellFunctional) -> Result<(f64, usize)> {
    let n = f.parties();
    let mut best = (f64::INFINITY, 0usize);
    for code in 0..1usize << (2 * n) {
        let v = deterministic_strategy_value(&LocalStrategy::from_code(n, code), f)?;
        if v < best.0 {
            best = (v, code);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::{functional_value, is_nonsignalling, parse_bits, uniform_distribution};

    fn settings(list: &[&str]) -> Vec<usize> {
        let mut v: Vec<usize> = list.iter().map(|s| parse_bits(s).unwrap().0).collect();
        v.sort_unstable();
        v
    }

    #[test]
    fn five_party_sets_match_listing() {
        let f = mermin_coefficients(5).unwrap();
        assert_eq!(
            f.x0(),
            settings(&["10000", "01000", "00100", "00010", "00001", "11111"])
        );
        assert_eq!(
            f.x1(),
            settings(&[
                "00111", "01011", "01101", "01110", "10011", "10101", "10110", "11001", "11010",
                "11100"
            ])
        );
        assert_eq!(f.support().len(), 16);
        assert_eq!(f.parity_target(0b11111), Some(0));
    }

    #[test]
    fn functional_counts_wrong_parity() {
        for n in [3, 5, 7] {
            let f = mermin_coefficients(n).unwrap();
            assert_eq!(f.support().len(), 1 << (n - 1));
            for (idx, &c) in f.functional().coefficients().iter().enumerate() {
                let (a, x) = split_index(n, idx);
                let expect = match f.parity_target(x) {
                    Some(t) if parity(a) != t => 1.0,
                    _ => 0.0,
                };
                assert_eq!(c, expect);
            }
        }
    }

    #[test]
    fn rejects_even_or_small() {
        assert!(mermin_coefficients(4).is_err());
        assert!(mermin_coefficients(1).is_err());
        assert!(ghz_correlations(2).is_err());
        assert!(ghz_correlations(11).is_err());
    }

    #[test]
    fn three_party_test_is_standard_mermin() {
        let f = mermin_coefficients(3).unwrap();
        assert_eq!(f.x0(), &[0b111]);
        assert_eq!(f.x1(), settings(&["100", "010", "001"]).as_slice());
        assert_eq!(classical_minimum(&f).unwrap().0, 1.0);
    }

    #[test]
    fn ghz_closed_form_examples() {
        let p = ghz_correlations(5).unwrap();
        let all_x = 0b11111;
        assert_eq!(p.prob(0, all_x), 1.0 / 16.0);
        assert_eq!(p.prob(1, all_x), 0.0);
        let odd_y = parse_bits("11000").unwrap().0;
        assert!(p.row(odd_y).iter().all(|&v| v == 1.0 / 32.0));
        for n in [3, 5, 7] {
            let f = mermin_coefficients(n).unwrap();
            let g = ghz_correlations(n).unwrap();
            assert!(functional_value(f.functional(), &g).unwrap().abs() < 1e-12);
            assert!(is_nonsignalling(&g, 1e-12));
        }
    }

    #[test]
    fn uniform_box_scores_eight() {
        let f = mermin_coefficients(5).unwrap();
        let v = functional_value(f.functional(), &uniform_distribution(5).unwrap()).unwrap();
        assert!((v - 8.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_values() {
        let f = mermin_coefficients(5).unwrap();
        let zeros = LocalStrategy::constant(5, 0);
        assert_eq!(deterministic_strategy_value(&zeros, &f).unwrap(), 10.0);
        let (min, code) = classical_minimum(&f).unwrap();
        assert_eq!(min, 6.0);
        let s = LocalStrategy::from_code(5, code);
        let via_dist = functional_value(f.functional(), &s.distribution().unwrap()).unwrap();
        assert_eq!(via_dist, 6.0);
        for code in (0..1024).step_by(37) {
            let v = deterministic_strategy_value(&LocalStrategy::from_code(5, code), &f).unwrap();
            assert!(v >= 0.0 && v.fract() == 0.0);
        }
    }

    #[test]
    fn export_lists_sets_and_sparse_pairs() {
        let e = mermin_coefficients(3).unwrap().export();
        assert_eq!(e.x0, vec!["111"]);
        assert_eq!(e.coefficients.len(), 4 * 4);
        let json = serde_json::to_value(&e).unwrap();
        assert!(json.get("X1").is_some());
    }
}
