//! Numerical check of the block estimation inequality on explicit boxes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mermin::mermin_coefficients;
use crate::polytope::{split_index, ConditionalDistribution};
use crate::protocol::QUINTUPLET;

pub const MAX_ORACLE_BLOCK: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub block_size: usize,
    /// `max_{a,x} Π_i(α/32 + β I_i) − [(α/32)^{N_d} + (2β)^{N_d} δ_{r,0}]`.
    pub componentwise_violation: f64,
    /// `(αC + βI)^{⊗N_d} · P`.
    pub block_value: f64,
    /// `α^{N_d} + (2β)^{N_d} Σ_y P(r = 0 | y)`.
    pub block_bound: f64,
    /// `Σ_y P(r = 0 | y)`.
    pub wrong_mass: f64,
}

impl EstimationReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.componentwise_violation <= tol && self.block_value - self.block_bound <= tol
    }
}

/// Evaluates both sides on a `5·N_d`-party box, one quintuplet per five
/// consecutive parties.
pub fn estimation_oracle(
    block: &ConditionalDistribution,
    alpha: f64,
    beta: f64,
) -> Result<EstimationReport> {
    if !(alpha > 0.0 && alpha < 1.0 && beta > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < alpha < 1 < beta, got {alpha}, {beta}"
        )));
    }
    let parties = block.parties();
    if parties % QUINTUPLET != 0
        || parties / QUINTUPLET == 0
        || parties / QUINTUPLET > MAX_ORACLE_BLOCK
    {
        return Err(Error::InvalidArgument(format!(
            "block must cover 1..={MAX_ORACLE_BLOCK} quintuplets, got {parties} parties"
        )));
    }
    let nd = parties / QUINTUPLET;
    let bell = mermin_coefficients(QUINTUPLET)?;
    let base = alpha / 32.0;
    let first = base.powi(nd as i32);
    let second = (2.0 * beta).powi(nd as i32);
    let mask = (1usize << QUINTUPLET) - 1;

    let mut worst = f64::NEG_INFINITY;
    let mut value = 0.0;
    let mut wrong = 0.0;
    for (idx, &p) in block.values().iter().enumerate() {
        let (a, x) = split_index(parties, idx);
        let mut prod = 1.0;
        let mut right = true;
        for i in 0..nd {
            let ai = (a >> (QUINTUPLET * i)) & mask;
            let xi = (x >> (QUINTUPLET * i)) & mask;
            let v = bell.coefficient(ai, xi);
            right &= v == 0.0;
            prod *= base + beta * v;
        }
        let rhs = first + if right { 0.0 } else { second };
        worst = worst.max(prod - rhs);
        value += prod * p;
        if !right {
            wrong += p;
        }
    }
    Ok(EstimationReport {
        block_size: nd,
        componentwise_violation: worst,
        block_value: value,
        block_bound: alpha.powi(nd as i32) + second * wrong,
        wrong_mass: wrong,
    })
}
