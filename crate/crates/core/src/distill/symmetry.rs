//! Relabellings of `(a, x)` that carry the distillation problem for one
//! setting onto the problem for another.
//!
//! Flipping the settings of an even set `S` of parties changes the number of
//! zero settings by `2·Σ_{i∈S} x_i − |S|`, so the Mermin parity target moves
//! by `Σ_{i∈S} x_i + |S|/2 (mod 2)`. The local outcome relabelling
//! `a_i ↦ a_i ⊕ x_i ⊕ x₀_i` on `S`, plus a constant flip of party 4 when
//! needed, absorbs that change and leaves every outcome untouched at `x₀`.
//! Local relabellings keep the no-signalling subspace, and the majority
//! indicator only lives at `x₀`, so every supported setting is equivalent.

use crate::polytope::{index, parity, split_index};

use super::lambda::QUINTUPLET;

/// The outcome bit that absorbs the constant part of the parity change;
/// outside the three majority bits.
const SPARE_BIT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Symmetry {
    from: usize,
    to: usize,
}

impl Symmetry {
    /// The relabelling taking setting `from` to `to`; both must have an even
    /// number of zeros.
    pub fn between(from: usize, to: usize) -> Symmetry {
        Symmetry { from, to }
    }

    pub fn apply_pair(&self, a: usize, x: usize) -> (usize, usize) {
        let s = self.from ^ self.to;
        let flips = (x ^ self.from) & s;
        let constant = parity(self.from & s) ^ ((s.count_ones() as u8 / 2) & 1);
        (a ^ flips ^ ((constant as usize) << SPARE_BIT), x ^ s)
    }

    /// Image of a component index of a five-party table.
    pub fn apply(&self, c: usize) -> usize {
        let (a, x) = split_index(QUINTUPLET, c);
        let (a, x) = self.apply_pair(a, x);
        index(QUINTUPLET, a, x)
    }

    /// `v'[g(c)] = v[c]`.
    pub fn transport(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (c, &value) in v.iter().enumerate() {
            out[self.apply(c)] = value;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distill::lambda::majority_indicator;
    use crate::mermin::{mermin_coefficients, LocalStrategy};
    use crate::polytope::{is_nonsignalling, ConditionalDistribution};

    #[test]
    fn preserves_the_mermin_indicator() {
        let bell = mermin_coefficients(QUINTUPLET).unwrap();
        for &from in &bell.support() {
            for &to in &bell.support() {
                let g = Symmetry::between(from, to);
                for a in 0..32 {
                    for x in 0..32 {
                        let (b, y) = g.apply_pair(a, x);
                        assert_eq!(
                            bell.coefficient(a, x),
                            bell.coefficient(b, y),
                            "{from:b} -> {to:b}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn carries_the_majority_indicator() {
        let bell = mermin_coefficients(QUINTUPLET).unwrap();
        for &from in &bell.support() {
            for &to in &bell.support() {
                let g = Symmetry::between(from, to);
                for w in 0..2 {
                    assert_eq!(
                        g.transport(&majority_indicator(from, w)),
                        majority_indicator(to, w)
                    );
                }
            }
        }
    }

    #[test]
    fn maps_local_boxes_to_nosignalling_boxes() {
        // local deterministic boxes span the no-signalling subspace
        let bell = mermin_coefficients(QUINTUPLET).unwrap();
        for &to in bell.support().iter().step_by(3) {
            let g = Symmetry::between(0b11111, to);
            for code in [0, 1, 77, 300, 513, 1023] {
                let p = LocalStrategy::from_code(QUINTUPLET, code)
                    .distribution()
                    .unwrap();
                let moved =
                    ConditionalDistribution::new(QUINTUPLET, g.transport(p.values())).unwrap();
                assert!(is_nonsignalling(&moved, 1e-12));
            }
        }
    }
}
