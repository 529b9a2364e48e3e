//! Distillation: majority bits per quintuplet, the Λ-vector LPs, the
//! block-size threshold, and the hash function search.

pub mod hash;
pub mod lambda;
pub mod symmetry;

pub use hash::{
    find_hash_function, synthetic_slots, verify_hash_function, FunctionTable, HashSearchConfig,
    HashSearchOutcome, HashVerification, SlotCoefficients,
};
pub use lambda::{
    solve_all_lambda_vectors, solve_lambda_vectors, solve_lambda_vectors_with, DistillationVectors,
    LambdaOptions, Stage, VectorReport, BETA_FLOOR,
};

use crate::error::{Error, Result};

/// Majority of the first three outcome bits; higher bits are ignored.
#[inline]
pub fn majority(a: usize) -> u8 {
    u8::from((a & 0b111).count_ones() >= 2)
}

/// `(3√N_d)^{−1/N_d} ≥ γ`.
pub fn gamma_threshold(block_size: usize, gamma: f64) -> Result<bool> {
    if block_size == 0 {
        return Err(Error::InvalidArgument(
            "block size must be at least 1".into(),
        ));
    }
    let nd = block_size as f64;
    Ok(-(3.0 * nd.sqrt()).ln() / nd >= gamma.ln())
}

/// `k = f(maj(a₁), …, maj(a_{N_d}))`.
pub fn extract_bit(block_outputs: &[usize], f: &FunctionTable) -> Result<u8> {
    if block_outputs.len() != f.arity() {
        return Err(Error::ArityMismatch {
            expected: block_outputs.len(),
            found: f.arity(),
        });
    }
    let w = block_outputs
        .iter()
        .enumerate()
        .fold(0usize, |acc, (i, &a)| acc | ((majority(a) as usize) << i));
    Ok(f.eval(w))
}
