//! The closed-form security bound and the block-count rule, evaluated as
//! sums of logarithms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `N_b = 2^log2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlockCount {
    pub log2: u64,
}

impl BlockCount {
    pub fn from_value(nb: u64) -> Result<Self> {
        if !nb.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "block count {nb} is not a power of two"
            )));
        }
        Ok(BlockCount {
            log2: nb.trailing_zeros() as u64,
        })
    }

    /// The integer value, when it fits in 63 bits.
    pub fn value(&self) -> Option<u64> {
        (self.log2 <= 62).then(|| 1u64 << self.log2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityParams {
    pub epsilon: f64,
    pub nd: u64,
    pub nb: BlockCount,
    pub alpha: f64,
    pub beta: f64,
}

impl SecurityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 0.5) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in (0, 1/2], got {}",
                self.epsilon
            )));
        }
        if self.nd == 0 {
            return Err(Error::InvalidArgument(
                "block size must be at least 1".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0 && self.beta > 1.0 && self.beta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < alpha < 1 < beta, got alpha = {}, beta = {}",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }
}

/// `½ + excess` with the excess also kept as a logarithm, so that bounds
/// closer to `½` than `f64` can resolve still compare correctly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityBound {
    pub value: f64,
    /// `ln(bound − ½)`.
    pub ln_excess: f64,
    /// `ln` of the `α^{N_d}` contribution.
    pub ln_alpha_term: f64,
    /// `ln` of the block-count contribution.
    pub ln_block_term: f64,
}

fn log_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `½ + (3√N_d/2)·[α^{N_d} + 2·N_b^{log₂(1−ε)}·(32β/ε⁵)^{N_d}]`.
pub fn security_bound(p: &SecurityParams) -> Result<SecurityBound> {
    p.validate()?;
    let nd = p.nd as f64;
    let prefactor = (1.5 * nd.sqrt()).ln();
    let ln_alpha_term = prefactor + nd * p.alpha.ln();
    // N_b^{log₂(1−ε)} = (1−ε)^{log₂ N_b}
    let ln_block_term = prefactor
        + std::f64::consts::LN_2
        + p.nb.log2 as f64 * (1.0 - p.epsilon).ln()
        + nd * ((32.0 * p.beta).ln() - 5.0 * p.epsilon.ln());
    let ln_excess = log_add(ln_alpha_term, ln_block_term);
    Ok(SecurityBound {
        value: 0.5 + ln_excess.exp(),
        ln_excess,
        ln_alpha_term,
        ln_block_term,
    })
}

/// Direct floating-point evaluation; `None` when `N_b` or an intermediate
/// is not finite.
pub fn security_bound_naive(p: &SecurityParams) -> Result<Option<f64>> {
    p.validate()?;
    let Some(nb) = p.nb.value() else {
        return Ok(None);
    };
    let nd = p.nd as f64;
    let block = (nb as f64).powf((1.0 - p.epsilon).log2());
    let growth = (32.0 * p.beta * p.epsilon.powi(-5)).powf(nd);
    let v = 0.5 + 1.5 * nd.sqrt() * (p.alpha.powf(nd) + 2.0 * block * growth);
    Ok(v.is_finite().then_some(v))
}

/// `log₂` of `(32β/ε⁵)^{2N_d/|log₂(1−ε)|}` before rounding up.
pub fn block_count_exponent(epsilon: f64, nd: u64, beta: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in (0, 1/2], got {epsilon}"
        )));
    }
    if nd == 0 {
        return Err(Error::InvalidArgument(
            "block size must be at least 1".into(),
        ));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "beta must be positive, got {beta}"
        )));
    }
    let growth = (32.0 * beta).log2() - 5.0 * epsilon.log2();
    Ok(2.0 * nd as f64 * growth / (1.0 - epsilon).log2().abs())
}

/// The block-count rule rounded up to a power of two.
pub fn recommended_block_count(epsilon: f64, nd: u64, beta: f64) -> Result<BlockCount> {
    let e = block_count_exponent(epsilon, nd, beta)?;
    if e > u64::MAX as f64 {
        return Err(Error::ResourceLimit(format!(
            "log2 N_b = {e:.6e} does not fit in 64 bits"
        )));
    }
    Ok(BlockCount {
        log2: e.max(0.0).ceil() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(epsilon: f64, nd: u64, log2: u64) -> SecurityParams {
        SecurityParams {
            epsilon,
            nd,
            nb: BlockCount { log2 },
            alpha: 0.8842,
            beta: 1.260,
        }
    }

    #[test]
    fn block_count_examples() {
        assert_eq!(recommended_block_count(0.5, 1, 1.260).unwrap().log2, 21);
        assert_eq!(recommended_block_count(0.5, 130, 1.260).unwrap().log2, 2687);
        assert_eq!(BlockCount { log2: 21 }.value(), Some(1 << 21));
        assert_eq!(BlockCount { log2: 63 }.value(), None);
        assert!(BlockCount::from_value(12).is_err());
    }

    #[test]
    fn log_and_naive_agree_on_small_case() {
        let p = params(0.5, 1, 21);
        let a = security_bound(&p).unwrap().value;
        let b = security_bound_naive(&p).unwrap().unwrap();
        assert!(((a - b) / b).abs() < 1e-12);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(security_bound(&params(0.5, 0, 1)).is_err());
        assert!(security_bound(&params(0.0, 1, 1)).is_err());
        let mut p = params(0.5, 1, 1);
        p.beta = 0.9;
        assert!(security_bound(&p).is_err());
    }
}
