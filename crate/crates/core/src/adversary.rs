//! Adversarial predictability of a function of the outcomes over the
//! no-signalling polytope restricted to the maximal Mermin violation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{self, LPSolution, LinearProgramSpec, LpStatus, Sense, VarBounds};
use crate::mermin::{mermin_coefficients, BellFunctional};
use crate::polytope::{bits_to_string, index, nosignalling_constraints, parse_bits};

/// A boolean function of selected outcome bits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputFunction {
    /// `table[j]` is the value on input `j`, where bit `k` of `j` is the
    /// outcome of party `selector[k]`.
    table: Vec<u8>,
    selector: Vec<usize>,
}

impl OutputFunction {
    pub fn new(table: Vec<u8>, selector: Vec<usize>) -> Result<Self> {
        if selector.is_empty() || selector.len() > 16 {
            return Err(Error::InvalidArgument("arity must be in 1..=16".into()));
        }
        if table.len() != 1 << selector.len() {
            return Err(Error::DimensionMismatch {
                expected: 1 << selector.len(),
                found: table.len(),
            });
        }
        if table.iter().any(|&b| b > 1) {
            return Err(Error::InvalidArgument("table entries must be bits".into()));
        }
        Ok(OutputFunction { table, selector })
    }

    /// Function on the first `arity` outcomes given as a bitmask (bit `j`
    /// of `mask` is the value on input `j`).
    pub fn from_mask(arity: usize, mask: u64) -> Result<Self> {
        if arity == 0 || arity > 6 {
            return Err(Error::InvalidArgument(
                "mask tables support arity 1..=6".into(),
            ));
        }
        let table = (0..1usize << arity)
            .map(|j| ((mask >> j) & 1) as u8)
            .collect();
        Self::new(table, (0..arity).collect())
    }

    /// Majority of the first three outcomes.
    pub fn majority3() -> Self {
        let table = (0..8usize).map(|j| u8::from(j.count_ones() >= 2)).collect();
        OutputFunction {
            table,
            selector: vec![0, 1, 2],
        }
    }

    /// The 5-bit function that is `0` exactly on `00000`, `01111`, `00111`.
    pub fn seven_party_target() -> Self {
        let zeros: Vec<usize> = ["00000", "01111", "00111"]
            .iter()
            .map(|s| parse_bits(s).expect("literal bitstring").0)
            .collect();
        let table = (0..32).map(|j| u8::from(!zeros.contains(&j))).collect();
        OutputFunction {
            table,
            selector: (0..5).collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.selector.len()
    }

    pub fn selector(&self) -> &[usize] {
        &self.selector
    }

    pub fn table(&self) -> &[u8] {
        &self.table
    }

    pub fn eval(&self, a: usize) -> u8 {
        let j = self
            .selector
            .iter()
            .enumerate()
            .fold(0usize, |acc, (k, &pos)| acc | (((a >> pos) & 1) << k));
        self.table[j]
    }

    pub fn is_constant(&self) -> bool {
        self.table.iter().all(|&b| b == self.table[0])
    }

    /// Table as a bitstring, input `0` first.
    pub fn table_string(&self) -> String {
        self.table
            .iter()
            .map(|b| if *b == 1 { '1' } else { '0' })
            .collect()
    }
}

/// All functions `{0,1}^m → {0,1}` on the first `m` outcomes with exactly
/// `2^{m-1}` zeros, in increasing mask order.
pub fn enumerate_unbiased_functions(arity: usize) -> Result<impl Iterator<Item = OutputFunction>> {
    if arity == 0 || arity > 5 {
        return Err(Error::InvalidArgument(format!(
            "unbiased enumeration supports arity 1..=5, got {arity}"
        )));
    }
    let width = 1u32 << arity;
    let ones = width / 2;
    let first: u64 = (1u64 << ones) - 1;
    let limit: u64 = 1u64 << width;
    // Gosper's hack: next mask with the same popcount
    let masks = std::iter::successors(Some(first), move |&m| {
        let c = m & m.wrapping_neg();
        let r = m + c;
        let next = (((r ^ m) >> 2) / c) | r;
        (next < limit).then_some(next)
    });
    Ok(masks.map(move |m| OutputFunction::from_mask(arity, m).expect("arity checked")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdversaryOptions {
    /// Force every wrong-parity supported component to zero.
    pub enforce_violation: bool,
    /// Largest LP (in variables) that will be built.
    pub max_variables: usize,
}

impl Default for AdversaryOptions {
    fn default() -> Self {
        AdversaryOptions {
            enforce_violation: true,
            max_variables: 1 << 12,
        }
    }
}

impl AdversaryOptions {
    /// Allows the 7-party instance (`4⁷` variables).
    pub fn large() -> Self {
        AdversaryOptions {
            max_variables: 1 << 14,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PredictabilityResult {
    pub setting: usize,
    pub target: u8,
    pub optimum: f64,
    pub certificate: LPSolution,
}

impl PredictabilityResult {
    pub fn setting_string(&self, parties: usize) -> String {
        bits_to_string(self.setting, parties)
    }
}

/// `max P(g(a) = v | x₀)` over no-signalling `P` with `I·P = 0`.
pub fn max_predictability(
    f: &BellFunctional,
    g: &OutputFunction,
    setting: usize,
    target: u8,
) -> Result<PredictabilityResult> {
    max_predictability_with(f, g, setting, target, &AdversaryOptions::default())
}

pub fn max_predictability_with(
    f: &BellFunctional,
    g: &OutputFunction,
    setting: usize,
    target: u8,
    opts: &AdversaryOptions,
) -> Result<PredictabilityResult> {
    let n = f.parties();
    if !f.is_supported(setting) {
        return Err(Error::InvalidArgument(format!(
            "setting {} is not in the support of the functional",
            bits_to_string(setting, n)
        )));
    }
    if target > 1 {
        return Err(Error::InvalidArgument("target must be 0 or 1".into()));
    }
    if g.selector().iter().any(|&p| p >= n) {
        return Err(Error::InvalidArgument(format!(
            "function reads an outcome beyond party {n}"
        )));
    }
    let vars = 1usize << (2 * n);
    if vars > opts.max_variables {
        return Err(Error::ResourceLimit(format!(
            "{vars} LP variables exceeds the configured limit of {}",
            opts.max_variables
        )));
    }

    let outcomes = 1usize << n;
    let mut objective = vec![0.0; vars];
    for a in 0..outcomes {
        if g.eval(a) == target {
            objective[index(n, a, setting)] = 1.0;
        }
    }
    let mut spec = LinearProgramSpec::new(Sense::Maximize, objective);
    spec.equalities = nosignalling_constraints(n)?;
    let coeffs = f.functional().coefficients();
    spec.bounds = Some(
        (0..vars)
            .map(|i| {
                if opts.enforce_violation && coeffs[i] != 0.0 {
                    VarBounds::ZERO
                } else {
                    VarBounds::NONNEGATIVE
                }
            })
            .collect(),
    );

    let sol = lp::solve(&spec)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Solver(sol.status.to_string()));
    }
    Ok(PredictabilityResult {
        setting,
        target,
        optimum: sol.value,
        certificate: sol,
    })
}

/// The 7-party instance: the function `0` on `00000, 01111, 00111` of the
/// first five outcomes, target `1`, at the all-X setting unless given.
pub fn seven_party_predictability(
    setting: Option<usize>,
    opts: &AdversaryOptions,
) -> Result<PredictabilityResult> {
    let f = mermin_coefficients(7)?;
    let setting = setting.unwrap_or((1 << 7) - 1);
    max_predictability_with(&f, &OutputFunction::seven_party_target(), setting, 1, opts)
}
