//! Randomized search for the distilling function `f: {0,1}^{N_d} → {0,1}`.
//!
//! Each slot `i` of a block carries a finite table of coefficient pairs
//! `(Γ₀ⁱ, Γ₁ⁱ)`. A function is accepted when, for every sequence of one
//! point per slot,
//!
//! ```text
//! |Σ_w (δ_{f(w)}^k − ½) Π_i Γ_{w_i}^i| ≤ μ̃ Π_i Ωᵢ,   Ωᵢ = √(Γ₀ⁱ² + Γ₁ⁱ²)
//! ```
//!
//! The two values of `k` give the same absolute value, so one check covers
//! both. Candidates are uniform random tables drawn from a ChaCha stream
//! keyed by `(seed, attempt)`.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

use super::lambda::DistillationVectors;

/// Largest number of `(sequence, w)` products a verification may visit.
pub const DEFAULT_MAX_WORK: u64 = 1 << 32;

/// Truth table of `f`, input `w` with bit `i` = majority bit of slot `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionTable {
    arity: usize,
    bits: Vec<u8>,
}

impl FunctionTable {
    pub fn from_bits(arity: usize, bits: Vec<u8>) -> Result<Self> {
        if arity == 0 || arity > 24 {
            return Err(Error::InvalidArgument(format!(
                "arity {arity} out of range 1..=24"
            )));
        }
        if bits.len() != 1 << arity {
            return Err(Error::DimensionMismatch {
                expected: 1 << arity,
                found: bits.len(),
            });
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidArgument("table entries must be bits".into()));
        }
        Ok(FunctionTable { arity, bits })
    }

    /// Parses a `'0'/'1'` string of length `2^arity`, input `0` first.
    pub fn from_bitstring(s: &str) -> Result<Self> {
        let bits: Vec<u8> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(Error::InvalidArgument(format!("bad table character {c:?}"))),
            })
            .collect::<Result<_>>()?;
        if !bits.len().is_power_of_two() || bits.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "table length {} is not a power of two >= 2",
                bits.len()
            )));
        }
        Self::from_bits(bits.len().trailing_zeros() as usize, bits)
    }

    /// Parity of all inputs; balanced for every arity.
    pub fn parity(arity: usize) -> Result<Self> {
        let bits = (0..1usize << arity.min(24))
            .map(|w| (w.count_ones() & 1) as u8)
            .collect();
        Self::from_bits(arity, bits)
    }

    pub fn random(arity: usize, rng: &mut impl Rng) -> Result<Self> {
        let bits = (0..1usize << arity.min(24))
            .map(|_| rng.gen_range(0..2u8))
            .collect();
        Self::from_bits(arity, bits)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn eval(&self, w: usize) -> u8 {
        self.bits[w]
    }

    pub fn is_balanced(&self) -> bool {
        2 * self.bits.iter().filter(|&&b| b == 1).count() == self.bits.len()
    }

    pub fn to_bitstring(&self) -> String {
        self.bits
            .iter()
            .map(|b| if *b == 1 { '1' } else { '0' })
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct FunctionTableFile {
    nd: usize,
    table: String,
}

impl Serialize for FunctionTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FunctionTableFile {
            nd: self.arity,
            table: self.to_bitstring(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FunctionTable {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = FunctionTableFile::deserialize(d)?;
        let t = FunctionTable::from_bitstring(&raw.table).map_err(serde::de::Error::custom)?;
        if t.arity != raw.nd {
            return Err(serde::de::Error::custom(format!(
                "nd = {} but table has arity {}",
                raw.nd, t.arity
            )));
        }
        Ok(t)
    }
}

/// Distinct `(Γ₀, Γ₁)` pairs available to one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotCoefficients {
    points: Vec<[f64; 2]>,
}

impl SlotCoefficients {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument(
                "a slot needs at least one point".into(),
            ));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        Ok(SlotCoefficients { points })
    }

    /// Collapses `Γ₀, Γ₁` over the given components to distinct pairs
    /// (values equal to 12 decimal places are merged).
    pub fn from_vectors(v: &DistillationVectors, components: &[usize]) -> Result<Self> {
        let g0 = v.gamma_vector(0);
        let g1 = v.gamma_vector(1);
        let key = |x: f64| (x * 1e12).round() as i64;
        let mut seen = BTreeSet::new();
        let mut points = Vec::new();
        for &c in components {
            if seen.insert((key(g0[c]), key(g1[c]))) {
                points.push([g0[c], g1[c]]);
            }
        }
        Self::new(points)
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `max_w |Γ_w| / Ω` over points with `Ω > 0`.
    pub fn max_ratio(&self) -> (f64, usize) {
        self.points
            .iter()
            .enumerate()
            .filter_map(|(i, p)| {
                let omega = p[0].hypot(p[1]);
                (omega > 0.0).then(|| (p[0].abs().max(p[1].abs()) / omega, i))
            })
            .fold(
                (0.0, 0),
                |best, cur| if cur.0 > best.0 { cur } else { best },
            )
    }
}

/// `points − 1` random pairs with `max(|Γ₀|, |Γ₁|) ≤ max_ratio·Ω` and
/// `Ω ∈ (0, 1]`, plus the zero pair, for each of `block_size` slots.
pub fn synthetic_slots(
    block_size: usize,
    points: usize,
    max_ratio: f64,
    seed: u64,
) -> Result<Vec<SlotCoefficients>> {
    if points < 2 {
        return Err(Error::InvalidArgument(
            "need at least two points per slot".into(),
        ));
    }
    if !(max_ratio >= std::f64::consts::FRAC_1_SQRT_2 && max_ratio <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "max ratio {max_ratio} must lie in [1/sqrt(2), 1]"
        )));
    }
    // angles whose larger coordinate stays within max_ratio of the radius
    let half_width = std::f64::consts::FRAC_PI_4 - max_ratio.acos();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..block_size)
        .map(|_| {
            let mut pts: Vec<[f64; 2]> = (1..points)
                .map(|_| {
                    let quadrant = rng.gen_range(0..4) as f64 * std::f64::consts::FRAC_PI_2;
                    let phi = quadrant
                        + std::f64::consts::FRAC_PI_4
                        + rng.gen_range(-half_width..=half_width);
                    let r = 1.0 - rng.gen::<f64>();
                    [r * phi.cos(), r * phi.sin()]
                })
                .collect();
            pts.push([0.0, 0.0]);
            SlotCoefficients::new(pts)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HashSearchConfig {
    pub block_size: usize,
    /// `μ̃`; defaults to `3√N_d`.
    pub slack: f64,
    pub seed: u64,
    pub max_attempts: u64,
    /// Require `|Γ_w| ≤ μ̃^{−1/N_d} Ω` on every point before searching;
    /// with the default slack this is `(3√N_d)^{−1/N_d}`.
    pub check_premise: bool,
    /// Refuse to search when the union bound on the per-draw failure
    /// probability is not below one.
    pub require_union_bound: bool,
    pub max_work: u64,
}

impl HashSearchConfig {
    pub fn new(block_size: usize) -> Self {
        HashSearchConfig {
            block_size,
            slack: 3.0 * (block_size as f64).sqrt(),
            seed: 0,
            max_attempts: 100,
            check_premise: true,
            require_union_bound: true,
            max_work: DEFAULT_MAX_WORK,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_size == 0 {
            return Err(Error::InvalidArgument(
                "block size must be at least 1".into(),
            ));
        }
        if !(self.slack > 0.0 && self.slack.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "slack must be positive, got {}",
                self.slack
            )));
        }
        Ok(())
    }

    /// `μ̃^{−1/N_d}`.
    pub fn premise_limit(&self) -> f64 {
        self.slack.powf(-1.0 / self.block_size as f64)
    }
}

/// Upper bound `2·D·e^{−μ̃²}` on the probability that a uniform random
/// table fails on some of the `D` sequences.
pub fn union_bound(domain_size: f64, slack: f64) -> f64 {
    2.0 * domain_size * (-slack * slack).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HashVerification {
    /// Sequences with `Π Ω > 0`, all of which were checked.
    pub checked: u64,
    /// Sequences with a zero slot (both sides vanish).
    pub vacuous: u64,
    /// `max |Σ_w F_w Π Γ| / Π Ω` over checked sequences.
    pub worst_ratio: f64,
    /// Set when verification stopped at the first failing sequence.
    pub stopped_early: bool,
}

impl HashVerification {
    pub fn passes(&self, slack: f64) -> bool {
        !self.stopped_early && self.worst_ratio <= slack
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HashSearchOutcome {
    pub table: FunctionTable,
    pub attempts: u64,
    pub union_bound: f64,
    pub verification: HashVerification,
}

fn domain_size(slots: &[SlotCoefficients]) -> f64 {
    slots.iter().map(|s| s.len() as f64).product()
}

struct Walker<'a> {
    slots: &'a [SlotCoefficients],
    signs: Vec<f64>,
    stop_above: Option<f64>,
    out: HashVerification,
}

impl Walker<'_> {
    /// `prod[w] = Π_{j<depth} Γ_{w_j}^j`, `omega = Π_{j<depth} Ω_j`.
    fn visit(&mut self, depth: usize, prod: &[f64], omega: f64) -> bool {
        if depth == self.slots.len() {
            if omega == 0.0 {
                self.out.vacuous += 1;
                return true;
            }
            let s: f64 = prod.iter().zip(&self.signs).map(|(p, f)| p * f).sum();
            let ratio = s.abs() / omega;
            self.out.checked += 1;
            self.out.worst_ratio = self.out.worst_ratio.max(ratio);
            if self.stop_above.is_some_and(|lim| ratio > lim) {
                self.out.stopped_early = true;
                return false;
            }
            return true;
        }
        let width = prod.len();
        let mut next = vec![0.0; width * 2];
        for p in self.slots[depth].points() {
            let om = p[0].hypot(p[1]);
            if om == 0.0 {
                // every completion of this prefix is vacuous
                let rest: f64 = self.slots[depth + 1..]
                    .iter()
                    .map(|s| s.len() as f64)
                    .product();
                self.out.vacuous += rest as u64;
                continue;
            }
            // bit `depth` of w selects Γ₀ or Γ₁
            next[..width]
                .iter_mut()
                .zip(prod)
                .for_each(|(n, q)| *n = q * p[0]);
            next[width..]
                .iter_mut()
                .zip(prod)
                .for_each(|(n, q)| *n = q * p[1]);
            if !self.visit(depth + 1, &next, omega * om) {
                return false;
            }
        }
        true
    }
}

fn walk(
    slots: &[SlotCoefficients],
    table: &FunctionTable,
    stop_above: Option<f64>,
    max_work: u64,
) -> Result<HashVerification> {
    if slots.len() != table.arity() {
        return Err(Error::ArityMismatch {
            expected: slots.len(),
            found: table.arity(),
        });
    }
    let work = domain_size(slots) * (1u64 << table.arity()) as f64;
    if work > max_work as f64 {
        return Err(Error::ResourceLimit(format!(
            "verification needs {work:.3e} products, limit is {max_work}"
        )));
    }
    let signs = table
        .bits()
        .iter()
        .map(|&b| if b == 0 { 0.5 } else { -0.5 })
        .collect();
    let mut walker = Walker {
        slots,
        signs,
        stop_above,
        out: HashVerification {
            checked: 0,
            vacuous: 0,
            worst_ratio: 0.0,
            stopped_early: false,
        },
    };
    walker.visit(0, &[1.0], 1.0);
    Ok(walker.out)
}

/// Exhaustive check of every sequence in the slot domain.
pub fn verify_hash_function(
    slots: &[SlotCoefficients],
    table: &FunctionTable,
) -> Result<HashVerification> {
    walk(slots, table, None, DEFAULT_MAX_WORK)
}

/// Draws random tables until one passes exhaustive verification.
pub fn find_hash_function(
    slots: &[SlotCoefficients],
    cfg: &HashSearchConfig,
) -> Result<HashSearchOutcome> {
    cfg.validate()?;
    if slots.len() != cfg.block_size {
        return Err(Error::ArityMismatch {
            expected: cfg.block_size,
            found: slots.len(),
        });
    }
    if cfg.check_premise {
        let limit = cfg.premise_limit();
        for (i, slot) in slots.iter().enumerate() {
            let (ratio, point) = slot.max_ratio();
            if ratio > limit {
                return Err(Error::PremiseViolated {
                    slot: i,
                    point,
                    ratio,
                    limit,
                });
            }
        }
    }
    let bound = union_bound(domain_size(slots), cfg.slack);
    if cfg.require_union_bound && bound >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "union bound {bound:.3e} is not below 1 for this domain and slack"
        )));
    }
    for attempt in 0..cfg.max_attempts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(attempt);
        let table = FunctionTable::random(cfg.block_size, &mut rng)?;
        let v = walk(slots, &table, Some(cfg.slack), cfg.max_work)?;
        log::debug!("attempt {attempt}: worst ratio {}", v.worst_ratio);
        if v.passes(cfg.slack) {
            return Ok(HashSearchOutcome {
                table,
                attempts: attempt + 1,
                union_bound: bound,
                verification: v,
            });
        }
    }
    Err(Error::SearchExhausted {
        attempts: cfg.max_attempts,
    })
}
