//! Conditional distributions `P(a|x)` over `n` binary-input, binary-output
//! parties, linear functionals on them, and the no-signalling constraints.
//!
//! Every vector of length `4ⁿ` is indexed as `a + 2ⁿ·x` where bit `i` of
//! `a` (resp. `x`) is the outcome (resp. setting) of party `i`. Bitstrings
//! are written with party 1 leftmost, i.e. least significant bit first.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{ConstraintMatrix, SparseRow};

/// Largest party count for which dense `4ⁿ` vectors are materialized.
pub const MAX_DENSE_PARTIES: usize = 10;
pub const NONNEGATIVITY_TOLERANCE: f64 = 1e-12;
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[inline]
pub fn index(parties: usize, a: usize, x: usize) -> usize {
    a | (x << parties)
}

/// Inverse of [`index`].
#[inline]
pub fn split_index(parties: usize, idx: usize) -> (usize, usize) {
    (idx & ((1 << parties) - 1), idx >> parties)
}

/// Parity of the set bits.
#[inline]
pub fn parity(v: usize) -> u8 {
    (v.count_ones() & 1) as u8
}

/// Inserts `bit` at position `pos`, shifting the higher bits up.
#[inline]
pub fn insert_bit(v: usize, pos: usize, bit: usize) -> usize {
    let low = v & ((1 << pos) - 1);
    let high = v >> pos;
    low | (bit << pos) | (high << (pos + 1))
}

/// `"10000"` for party 1 holding a one and everyone else zero.
pub fn bits_to_string(v: usize, width: usize) -> String {
    (0..width)
        .map(|i| if (v >> i) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Parses a bitstring written party-1-first.
pub fn parse_bits(s: &str) -> Result<(usize, usize)> {
    let s = s.trim();
    if s.is_empty() || s.len() > 63 {
        return Err(Error::InvalidArgument(format!("bad bitstring {s:?}")));
    }
    let mut v = 0usize;
    for (i, ch) in s.chars().enumerate() {
        match ch {
            '0' => {}
            '1' => v |= 1 << i,
            _ => return Err(Error::InvalidArgument(format!("bad bitstring {s:?}"))),
        }
    }
    Ok((v, s.len()))
}

fn check_parties(parties: usize) -> Result<()> {
    if parties == 0 {
        return Err(Error::InvalidArgument(
            "party count must be at least 1".into(),
        ));
    }
    if parties > MAX_DENSE_PARTIES {
        return Err(Error::ResourceLimit(format!(
            "{parties} parties exceeds the dense limit of {MAX_DENSE_PARTIES}"
        )));
    }
    Ok(())
}

#[derive(Deserialize)]
struct RawDistribution {
    parties: usize,
    values: Vec<f64>,
}

/// `P(a|x)` stored densely; invariants are checked at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution")]
pub struct ConditionalDistribution {
    parties: usize,
    values: Vec<f64>,
}

impl TryFrom<RawDistribution> for ConditionalDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        ConditionalDistribution::new(raw.parties, raw.values)
    }
}

impl ConditionalDistribution {
    pub fn new(parties: usize, values: Vec<f64>) -> Result<Self> {
        check_parties(parties)?;
        let len = 1usize << (2 * parties);
        if values.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: values.len(),
            });
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < -NONNEGATIVITY_TOLERANCE)
        {
            return Err(Error::InvalidDistribution(format!(
                "component {i} has value {v}"
            )));
        }
        let outcomes = 1usize << parties;
        for x in 0..outcomes {
            let total: f64 = values[x * outcomes..(x + 1) * outcomes].iter().sum();
            if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
                return Err(Error::InvalidDistribution(format!(
                    "setting {} sums to {total}",
                    bits_to_string(x, parties)
                )));
            }
        }
        Ok(ConditionalDistribution { parties, values })
    }

    /// Builds `P(a|x) = f(a, x)` and validates it.
    pub fn from_fn(parties: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        check_parties(parties)?;
        let len = 1usize << (2 * parties);
        let values = (0..len)
            .map(|idx| {
                let (a, x) = split_index(parties, idx);
                f(a, x)
            })
            .collect();
        Self::new(parties, values)
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn prob(&self, a: usize, x: usize) -> f64 {
        self.values[index(self.parties, a, x)]
    }

    /// Outcome distribution for one setting.
    pub fn row(&self, x: usize) -> &[f64] {
        let k = 1usize << self.parties;
        &self.values[x * k..(x + 1) * k]
    }

    /// Convex combination `w·self + (1−w)·other`.
    pub fn mix(&self, w: f64, other: &Self) -> Result<Self> {
        if self.parties != other.parties {
            return Err(Error::DimensionMismatch {
                expected: self.parties,
                found: other.parties,
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(p, q)| w * p + (1.0 - w) * q)
            .collect();
        Self::new(self.parties, values)
    }

    /// Permutes party labels: party `i` of `self` becomes party `perm[i]`.
    pub fn permute_parties(&self, perm: &[usize]) -> Result<Self> {
        let n = self.parties;
        let mut seen = vec![false; n];
        if perm.len() != n
            || perm
                .iter()
                .any(|&p| p >= n || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::InvalidArgument("not a permutation".into()));
        }
        let map = |v: usize| (0..n).fold(0usize, |acc, i| acc | (((v >> i) & 1) << perm[i]));
        let mut values = vec![0.0; self.values.len()];
        for (idx, &p) in self.values.iter().enumerate() {
            let (a, x) = split_index(n, idx);
            values[index(n, map(a), map(x))] = p;
        }
        Ok(ConditionalDistribution { parties: n, values })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// CSV with header `a,x,p`, bitstrings party-1-first, settings major.
    pub fn to_csv(&self) -> String {
        let n = self.parties;
        let mut out = String::from("a,x,p\n");
        for (idx, p) in self.values.iter().enumerate() {
            let (a, x) = split_index(n, idx);
            out.push_str(&format!(
                "{},{},{}\n",
                bits_to_string(a, n),
                bits_to_string(x, n),
                p
            ));
        }
        out
    }

    /// Parses CSV rows `a,x,p`; missing `(a, x)` pairs are zero.
    pub fn from_csv(s: &str) -> Result<Self> {
        let mut parties = None;
        let mut entries = Vec::new();
        for (lineno, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with('a')) {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::InvalidArgument(format!(
                    "line {}: expected 3 fields",
                    lineno + 1
                )));
            }
            let (a, na) = parse_bits(fields[0])?;
            let (x, nx) = parse_bits(fields[1])?;
            if na != nx || parties.is_some_and(|n| n != na) {
                return Err(Error::InvalidArgument(format!(
                    "line {}: inconsistent party count",
                    lineno + 1
                )));
            }
            parties = Some(na);
            let p: f64 = fields[2].parse().map_err(|_| {
                Error::InvalidArgument(format!("line {}: bad probability", lineno + 1))
            })?;
            entries.push((a, x, p));
        }
        let n = parties.ok_or_else(|| Error::InvalidArgument("empty CSV".into()))?;
        check_parties(n)?;
        let mut values = vec![0.0; 1 << (2 * n)];
        for (a, x, p) in entries {
            values[index(n, a, x)] = p;
        }
        Self::new(n, values)
    }
}

/// Every component equal to `2⁻ⁿ`.
pub fn uniform_distribution(parties: usize) -> Result<ConditionalDistribution> {
    check_parties(parties)?;
    let v = 0.5f64.powi(parties as i32);
    ConditionalDistribution::new(parties, vec![v; 1 << (2 * parties)])
}

/// `P ⊗ Q` with `P`'s parties first.
pub fn tensor_product(
    p: &ConditionalDistribution,
    q: &ConditionalDistribution,
) -> Result<ConditionalDistribution> {
    let (n, m) = (p.parties, q.parties);
    check_parties(n + m)?;
    let mut values = vec![0.0; 1 << (2 * (n + m))];
    for (i, &pv) in p.values.iter().enumerate() {
        let (a1, x1) = split_index(n, i);
        for (j, &qv) in q.values.iter().enumerate() {
            let (a2, x2) = split_index(m, j);
            values[index(n + m, a1 | (a2 << n), x1 | (x2 << n))] = pv * qv;
        }
    }
    ConditionalDistribution::new(n + m, values)
}

/// Coefficient vector `F(a,x)` using the same indexing as distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFunctional {
    parties: usize,
    coefficients: Vec<f64>,
}

impl LinearFunctional {
    pub fn new(parties: usize, coefficients: Vec<f64>) -> Result<Self> {
        check_parties(parties)?;
        let len = 1usize << (2 * parties);
        if coefficients.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: coefficients.len(),
            });
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        Ok(LinearFunctional {
            parties,
            coefficients,
        })
    }

    pub fn zero(parties: usize) -> Result<Self> {
        check_parties(parties)?;
        Self::new(parties, vec![0.0; 1 << (2 * parties)])
    }

    /// `C(a,x) = 2⁻ⁿ`, so that `C·P = 1` for every normalized `P`.
    pub fn normalization(parties: usize) -> Result<Self> {
        check_parties(parties)?;
        let v = 0.5f64.powi(parties as i32);
        Self::new(parties, vec![v; 1 << (2 * parties)])
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficient(&self, a: usize, x: usize) -> f64 {
        self.coefficients[index(self.parties, a, x)]
    }

    /// `s·self + t·other`.
    pub fn combine(&self, s: f64, other: &Self, t: f64) -> Result<Self> {
        if self.parties != other.parties {
            return Err(Error::DimensionMismatch {
                expected: self.parties,
                found: other.parties,
            });
        }
        let coefficients = self
            .coefficients
            .iter()
            .zip(&other.coefficients)
            .map(|(u, v)| s * u + t * v)
            .collect();
        Self::new(self.parties, coefficients)
    }
}

/// `Σ F(a,x) P(a|x)`.
pub fn functional_value(f: &LinearFunctional, p: &ConditionalDistribution) -> Result<f64> {
    if f.parties != p.parties {
        return Err(Error::DimensionMismatch {
            expected: f.parties,
            found: p.parties,
        });
    }
    Ok(f.coefficients
        .iter()
        .zip(&p.values)
        .map(|(c, v)| c * v)
        .sum())
}

/// `F^{⊗N_d} · P(B|Y)` for an explicit block of `block_size ≤ 2` slots.
///
/// The block distribution has `block_size · F.parties()` parties with slot
/// `i` occupying parties `i·n .. (i+1)·n`.
pub fn block_functional_value(
    f: &LinearFunctional,
    block: &ConditionalDistribution,
    block_size: usize,
) -> Result<f64> {
    if block_size == 0 || block_size > 2 {
        return Err(Error::InvalidArgument(format!(
            "explicit block evaluation supports block sizes 1 and 2, got {block_size}"
        )));
    }
    let n = f.parties;
    if block.parties != n * block_size {
        return Err(Error::DimensionMismatch {
            expected: n * block_size,
            found: block.parties,
        });
    }
    let mask = (1usize << n) - 1;
    let total = block.parties;
    Ok(block
        .values
        .iter()
        .enumerate()
        .filter(|(_, p)| **p != 0.0)
        .map(|(idx, p)| {
            let (a, x) = split_index(total, idx);
            let coeff: f64 = (0..block_size)
                .map(|s| f.coefficient((a >> (s * n)) & mask, (x >> (s * n)) & mask))
                .product();
            coeff * p
        })
        .sum())
}

/// Marginal-equality rows followed by one normalization row per setting.
///
/// For each party `i` (ascending), each setting `x_rest` and outcome
/// `a_rest` of the other parties (ascending): `Σ_{a_i} P(a | x_i = 0) −
/// Σ_{a_i} P(a | x_i = 1) = 0`. Then `Σ_a P(a|x) = 1` for every `x`.
/// The solution set of all rows is the no-signalling affine subspace.
pub fn nosignalling_constraints(parties: usize) -> Result<ConstraintMatrix> {
    if parties < 2 {
        return Err(Error::InvalidArgument(
            "no-signalling constraints need at least 2 parties".into(),
        ));
    }
    check_parties(parties)?;
    let mut m = marginal_rows(parties);
    let outcomes = 1usize << parties;
    for x in 0..outcomes {
        let row = SparseRow((0..outcomes).map(|a| (index(parties, a, x), 1.0)).collect());
        m.push(row, 1.0);
    }
    Ok(m)
}

/// Number of marginal-equality rows in [`nosignalling_constraints`].
pub fn marginal_row_count(parties: usize) -> usize {
    parties << (2 * (parties - 1))
}

/// The marginal-equality rows alone; valid for any `parties ≥ 2` that fits
/// in memory (no dense vectors are built).
pub fn marginal_rows(parties: usize) -> ConstraintMatrix {
    let n = parties;
    let half = 1usize << (n - 1);
    let mut m = ConstraintMatrix::new(1 << (2 * n));
    for i in 0..n {
        for rest_x in 0..half {
            let x0 = insert_bit(rest_x, i, 0);
            let x1 = insert_bit(rest_x, i, 1);
            for rest_a in 0..half {
                let a0 = insert_bit(rest_a, i, 0);
                let a1 = insert_bit(rest_a, i, 1);
                let row = SparseRow::new(vec![
                    (index(n, a0, x0), 1.0),
                    (index(n, a1, x0), 1.0),
                    (index(n, a0, x1), -1.0),
                    (index(n, a1, x1), -1.0),
                ]);
                m.push(row, 0.0);
            }
        }
    }
    m
}

/// Residuals of the marginal-equality rows, in canonical row order.
pub fn nosignalling_residuals(p: &ConditionalDistribution) -> Vec<f64> {
    if p.parties < 2 {
        return Vec::new();
    }
    marginal_rows(p.parties).residuals(&p.values)
}

/// True iff `P` is non-negative, normalized, and every marginal-equality
/// residual is at most `tol` in magnitude.
pub fn is_nonsignalling(p: &ConditionalDistribution, tol: f64) -> bool {
    let nonneg = p.values.iter().all(|v| *v >= -NONNEGATIVITY_TOLERANCE);
    let normalized = (0..1usize << p.parties)
        .all(|x| (p.row(x).iter().sum::<f64>() - 1.0).abs() <= NORMALIZATION_TOLERANCE);
    nonneg && normalized && nosignalling_residuals(p).iter().all(|r| r.abs() <= tol)
}

/// Rows spanning the linear hull of no-signalling distributions.
///
/// Row `s ∈ {0,1,2}ⁿ` (base 3, party 1 least significant) is the local
/// deterministic box where party `i` outputs `0`, `x_i`, or `¬x_i` for
/// digit `0`, `1`, `2`. These `3ⁿ` tensor-product vectors are a basis of
/// the span, so `D·Λ = 0` says `Λ` annihilates every no-signalling box.
pub fn nosignalling_span_basis(parties: usize) -> Result<ConstraintMatrix> {
    check_parties(parties)?;
    let n = parties;
    let count = 3usize.pow(n as u32);
    let mut m = ConstraintMatrix::new(1 << (2 * n));
    for s in 0..count {
        let mut digits = Vec::with_capacity(n);
        let mut t = s;
        for _ in 0..n {
            digits.push(t % 3);
            t /= 3;
        }
        let row = (0..1usize << n)
            .map(|x| {
                let a = digits.iter().enumerate().fold(0usize, |acc, (i, &d)| {
                    let xi = (x >> i) & 1;
                    let ai = match d {
                        0 => 0,
                        1 => xi,
                        _ => 1 - xi,
                    };
                    acc | (ai << i)
                });
                (index(n, a, x), 1.0)
            })
            .collect::<Vec<_>>();
        m.push(SparseRow::new(row), 0.0);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn signalling_example() -> ConditionalDistribution {
        // party 1 outputs party 2's setting, party 2 uniform
        ConditionalDistribution::from_fn(2, |a, x| {
            let x2 = (x >> 1) & 1;
            if a & 1 == x2 {
                0.5
            } else {
                0.0
            }
        })
        .unwrap()
    }

    /// Nullity of a dense matrix by Gaussian elimination with partial pivoting.
    fn nullity(rows: &[Vec<f64>], cols: usize) -> usize {
        let mut m: Vec<Vec<f64>> = rows.to_vec();
        let mut rank = 0;
        for c in 0..cols {
            let Some(p) = (rank..m.len()).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))
            else {
                break;
            };
            if m[p][c].abs() < 1e-9 {
                continue;
            }
            m.swap(rank, p);
            for i in 0..m.len() {
                if i != rank {
                    let f = m[i][c] / m[rank][c];
                    for k in 0..cols {
                        m[i][k] -= f * m[rank][k];
                    }
                }
            }
            rank += 1;
        }
        cols - rank
    }

    #[test]
    fn uniform_examples() {
        let p5 = uniform_distribution(5).unwrap();
        assert!(p5.values().iter().all(|&v| v == 1.0 / 32.0));
        let c = LinearFunctional::normalization(5).unwrap();
        assert!((functional_value(&c, &p5).unwrap() - 1.0).abs() < 1e-15);
        assert!(uniform_distribution(1)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.5));
        let p3 = uniform_distribution(3).unwrap();
        for x in 0..8 {
            assert!((p3.row(x).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
        assert!(uniform_distribution(0).is_err());
    }

    #[test]
    fn uniform_satisfies_bipartite_rows_exactly() {
        let m = nosignalling_constraints(2).unwrap();
        let p = uniform_distribution(2).unwrap();
        assert!(m.residuals(p.values()).iter().all(|&r| r == 0.0));
        assert!(is_nonsignalling(&uniform_distribution(5).unwrap(), 1e-12));
    }

    #[test]
    fn signalling_box_is_detected() {
        let p = signalling_example();
        let worst = nosignalling_residuals(&p)
            .into_iter()
            .map(f64::abs)
            .fold(0.0, f64::max);
        assert!(worst >= 0.5);
        assert!(!is_nonsignalling(&p, 1e-9));
    }

    #[test]
    fn constraint_rows_need_two_parties() {
        assert!(nosignalling_constraints(1).is_err());
        assert_eq!(
            nosignalling_constraints(3).unwrap().len(),
            marginal_row_count(3) + 8
        );
    }

    #[test]
    fn bipartite_kernel_has_dimension_eight() {
        let m = nosignalling_constraints(2).unwrap();
        let dense: Vec<Vec<f64>> = m.rows.iter().map(|r| r.to_dense(16)).collect();
        assert_eq!(nullity(&dense, 16), 8);
    }

    #[test]
    fn span_basis_has_full_rank_and_is_nonsignalling() {
        for n in 1..=3 {
            let d = nosignalling_span_basis(n).unwrap();
            assert_eq!(d.len(), 3usize.pow(n as u32));
            let len = 1 << (2 * n);
            let dense: Vec<Vec<f64>> = d.rows.iter().map(|r| r.to_dense(len)).collect();
            assert_eq!(len - nullity(&dense, len), d.len());
            if n >= 2 {
                let marg = marginal_rows(n);
                for row in &d.rows {
                    let v = row.to_dense(len);
                    assert!(marg.residuals(&v).iter().all(|r| r.abs() < 1e-15));
                }
            }
        }
    }

    #[test]
    fn functional_value_examples() {
        let p = uniform_distribution(4).unwrap();
        let z = LinearFunctional::zero(4).unwrap();
        assert_eq!(functional_value(&z, &p).unwrap(), 0.0);
        let c3 = LinearFunctional::normalization(3).unwrap();
        assert!(matches!(
            functional_value(&c3, &p),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn block_values() {
        let p = uniform_distribution(2).unwrap();
        let f = LinearFunctional::new(2, (0..16).map(|i| (i % 5) as f64).collect()).unwrap();
        let single = block_functional_value(&f, &p, 1).unwrap();
        assert!((single - functional_value(&f, &p).unwrap()).abs() < 1e-15);
        let pp = tensor_product(&p, &p).unwrap();
        let double = block_functional_value(&f, &pp, 2).unwrap();
        assert!((double - single * single).abs() < 1e-10);
        let ppp = tensor_product(&pp, &p).unwrap();
        assert!(block_functional_value(&f, &ppp, 3).is_err());
    }

    #[test]
    fn json_and_csv_formats() {
        let p = signalling_example();
        let back = ConditionalDistribution::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(back, p);
        let csv = p.to_csv();
        assert!(csv.starts_with("a,x,p\n00,00,0.5\n"));
        assert_eq!(ConditionalDistribution::from_csv(&csv).unwrap(), p);
        assert!(ConditionalDistribution::from_json(r#"{"parties":1,"values":[1,1,0,0]}"#).is_err());
    }

    #[test]
    fn bitstrings_are_party_one_first() {
        assert_eq!(bits_to_string(1, 5), "10000");
        assert_eq!(parse_bits("00111").unwrap(), (0b11100, 5));
        assert!(parse_bits("0120").is_err());
    }

    fn arb_distribution(n: usize) -> impl Strategy<Value = ConditionalDistribution> {
        let k = 1usize << n;
        proptest::collection::vec(0.01f64..1.0, k * k).prop_map(move |raw| {
            let mut v = raw;
            for x in 0..k {
                let s: f64 = v[x * k..(x + 1) * k].iter().sum();
                v[x * k..(x + 1) * k].iter_mut().for_each(|e| *e /= s);
            }
            ConditionalDistribution::new(n, v).unwrap()
        })
    }

    proptest! {
        #[test]
        fn functional_value_is_linear(
            p in arb_distribution(3),
            q in arb_distribution(3),
            w in 0.0f64..1.0,
            coeffs in proptest::collection::vec(-2.0f64..2.0, 64),
        ) {
            let f = LinearFunctional::new(3, coeffs).unwrap();
            let mixed = functional_value(&f, &p.mix(w, &q).unwrap()).unwrap();
            let split = w * functional_value(&f, &p).unwrap()
                + (1.0 - w) * functional_value(&f, &q).unwrap();
            prop_assert!((mixed - split).abs() < 1e-12);
        }

        #[test]
        fn block_value_factorizes(
            p in arb_distribution(2),
            q in arb_distribution(2),
            coeffs in proptest::collection::vec(-1.0f64..1.0, 16),
        ) {
            let f = LinearFunctional::new(2, coeffs).unwrap();
            let pq = tensor_product(&p, &q).unwrap();
            let lhs = block_functional_value(&f, &pq, 2).unwrap();
            let rhs = functional_value(&f, &p).unwrap() * functional_value(&f, &q).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }

        #[test]
        fn residuals_permute_with_parties(p in arb_distribution(3), perm_id in 0usize..6) {
            let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            let q = p.permute_parties(&perms[perm_id]).unwrap();
            let mut r1 = nosignalling_residuals(&p).into_iter().map(|r| r.abs()).collect::<Vec<_>>();
            let mut r2 = nosignalling_residuals(&q).into_iter().map(|r| r.abs()).collect::<Vec<_>>();
            r1.sort_by(f64::total_cmp);
            r2.sort_by(f64::total_cmp);
            for (u, v) in r1.iter().zip(&r2) {
                prop_assert!((u - v).abs() < 1e-12);
            }
        }
    }
}
