//! Composable-security quantities: the guessing probability of finite
//! behaviours, the closed-form bound and block-count rule, and a small
//! estimation-inequality oracle.

pub mod behavior;
pub mod bound;
pub mod estimation;

pub use behavior::{guessing_probability, Alphabets, JointBehavior};
pub use bound::{
    block_count_exponent, recommended_block_count, security_bound, security_bound_naive,
    BlockCount, SecurityBound, SecurityParams,
};
pub use estimation::{estimation_oracle, EstimationReport};

use crate::error::{Error, Result};

/// Quality `ε_i = 1 − p` of a bit predictable with probability `p`.
pub fn min_entropy_report(predictability: f64) -> Result<f64> {
    if !(0.5..=1.0).contains(&predictability) {
        return Err(Error::InvalidArgument(format!(
            "predictability must lie in [1/2, 1], got {predictability}"
        )));
    }
    Ok(1.0 - predictability)
}
