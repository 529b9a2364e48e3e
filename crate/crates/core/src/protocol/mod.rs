//! End-to-end simulation of the amplification protocol: draw settings from
//! an ε-source, query the boxes, keep supported quintuplets, split them into
//! blocks, check all but one block, and distill a bit from the remaining one.

pub mod boxes;
pub mod monte_carlo;
pub mod source;

pub use boxes::{BoxModel, BoxSampler};
pub use monte_carlo::{for_each_run, monte_carlo, MonteCarloSummary};
pub use source::{sample_source, sequence_probability, EpsilonSource, SourceStrategy};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distill::{extract_bit, majority, FunctionTable};
use crate::error::{Error, Result};
use crate::mermin::{mermin_coefficients, BellFunctional};
use crate::polytope::parity;

/// Boxes per quintuplet.
pub const QUINTUPLET: usize = 5;

/// `I(a, x) = 0`: the outcome parity matches the setting's target.
pub fn check_quintuplet(a: usize, x: usize, f: &BellFunctional) -> Result<bool> {
    match f.parity_target(x) {
        Some(t) => Ok(parity(a) == t),
        None => Err(Error::InvalidArgument(format!(
            "setting {x:0width$b} is outside the support",
            width = f.parties()
        ))),
    }
}

/// Step 2 goes on iff at least `N/3` quintuplets survive, compared exactly.
pub fn step2_proceeds(survivors: usize, n: usize) -> bool {
    3 * survivors >= n
}

/// The distilling function; its arity must equal the realized block size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistillFunction {
    /// XOR of the majority bits, defined for every block size.
    Parity,
    Table(FunctionTable),
}

impl DistillFunction {
    fn apply(&self, block_outputs: &[usize]) -> Result<u8> {
        match self {
            DistillFunction::Parity => Ok(block_outputs.iter().fold(0, |k, &a| k ^ majority(a))),
            DistillFunction::Table(t) => extract_bit(block_outputs, t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// Number of quintuplets `N`.
    pub n: usize,
    /// Number of blocks `N_b`, a power of two.
    pub nb: usize,
    pub function: DistillFunction,
    pub source: EpsilonSource,
    pub boxes: BoxModel,
    #[serde(default)]
    pub seed: u64,
}

impl ProtocolConfig {
    pub fn honest(n: usize, nb: usize, seed: u64) -> Self {
        ProtocolConfig {
            n,
            nb,
            function: DistillFunction::Parity,
            source: EpsilonSource::uniform(),
            boxes: BoxModel::IdealQuantum,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidArgument(format!(
                "need at least 3 quintuplets, got {}",
                self.n
            )));
        }
        if !self.nb.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "block count {} is not a power of two",
                self.nb
            )));
        }
        // a run that survives step 2 keeps at least N/3 quintuplets
        if self.n < 3 * self.nb {
            return Err(Error::InvalidArgument(format!(
                "N = {} cannot fill {} blocks after step 2 (need N >= 3 N_b)",
                self.n, self.nb
            )));
        }
        self.source.validate()?;
        self.boxes.validate()
    }

    pub fn index_bits(&self) -> usize {
        self.nb.trailing_zeros() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AbortStage {
    None,
    Step2,
    Step4,
}

/// Settings and outcomes of one block, as seen by the adversary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub block: usize,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
}

/// `t`: the distillation index and the contents of every other block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideInfo {
    pub l: usize,
    pub blocks: Vec<BlockRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTranscript {
    pub run: u64,
    /// Settings `x_j` of all `N` quintuplets.
    pub inputs: Vec<usize>,
    /// Outcomes `a_j` of all `N` quintuplets.
    pub outputs: Vec<usize>,
    /// Indices of the quintuplets kept in step 2.
    pub survivors: Vec<usize>,
    /// `N_d`; zero when the run stopped in step 2.
    pub block_size: usize,
    pub l: Option<usize>,
    /// `r` per block (product over its quintuplets), including block `l`.
    pub r: Vec<u8>,
    pub g: Option<u8>,
    pub abort: AbortStage,
    pub k: Option<u8>,
    pub source_bits: usize,
}

impl ProtocolTranscript {
    /// Raw indices of block `b`: contiguous in surviving order.
    pub fn block(&self, b: usize) -> &[usize] {
        &self.survivors[b * self.block_size..(b + 1) * self.block_size]
    }

    pub fn block_count(&self) -> usize {
        self.r.len()
    }

    /// `g` recomputed from `r`, skipping the distillation block.
    pub fn recompute_g(&self) -> Option<u8> {
        let l = self.l?;
        Some(
            self.r
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != l)
                .fold(1, |g, (_, &r)| g & r),
        )
    }

    pub fn side_info(&self) -> Option<SideInfo> {
        let l = self.l?;
        let blocks = (0..self.block_count())
            .filter(|&b| b != l)
            .map(|b| {
                let idx = self.block(b);
                BlockRecord {
                    block: b,
                    inputs: idx.iter().map(|&j| self.inputs[j]).collect(),
                    outputs: idx.iter().map(|&j| self.outputs[j]).collect(),
                }
            })
            .collect();
        Some(SideInfo { l, blocks })
    }
}

fn pack(bits: &[u8]) -> usize {
    bits.iter()
        .enumerate()
        .fold(0, |acc, (i, &b)| acc | ((b as usize) << i))
}

pub(crate) struct Prepared {
    bell: BellFunctional,
    sampler: BoxSampler,
}

impl Prepared {
    pub(crate) fn new(cfg: &ProtocolConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Prepared {
            bell: mermin_coefficients(QUINTUPLET)?,
            sampler: cfg.boxes.sampler()?,
        })
    }
}

pub fn run_protocol(cfg: &ProtocolConfig) -> Result<ProtocolTranscript> {
    run_indexed(cfg, &Prepared::new(cfg)?, 0)
}

/// Run number `run`: source and boxes draw from streams `2·run` and
/// `2·run + 1` of the generator keyed by `cfg.seed`.
pub fn run_protocol_indexed(cfg: &ProtocolConfig, run: u64) -> Result<ProtocolTranscript> {
    run_indexed(cfg, &Prepared::new(cfg)?, run)
}

pub(crate) fn run_indexed(
    cfg: &ProtocolConfig,
    prep: &Prepared,
    run: u64,
) -> Result<ProtocolTranscript> {
    let mut source_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    source_rng.set_stream(2 * run);
    let mut box_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    box_rng.set_stream(2 * run + 1);
    let mut source = cfg.source.stream(source_rng);

    // step 1
    let inputs: Vec<usize> = (0..cfg.n).map(|_| pack(&source.take(QUINTUPLET))).collect();
    let outputs: Vec<usize> = inputs
        .iter()
        .map(|&x| prep.sampler.query(x, &mut box_rng))
        .collect();

    // step 2
    let mut survivors: Vec<usize> = (0..cfg.n)
        .filter(|&j| prep.bell.is_supported(inputs[j]))
        .collect();
    let mut t = ProtocolTranscript {
        run,
        inputs,
        outputs,
        survivors: Vec::new(),
        block_size: 0,
        l: None,
        r: Vec::new(),
        g: None,
        abort: AbortStage::Step2,
        k: None,
        source_bits: 0,
    };
    if !step2_proceeds(survivors.len(), cfg.n) {
        t.survivors = survivors;
        t.source_bits = source.consumed();
        return Ok(t);
    }

    // step 3
    let nd = survivors.len() / cfg.nb;
    survivors.truncate(nd * cfg.nb);
    t.survivors = survivors;
    t.block_size = nd;
    let l = source
        .take(cfg.index_bits())
        .iter()
        .fold(0usize, |acc, &b| (acc << 1) | b as usize);
    t.l = Some(l);
    t.source_bits = source.consumed();

    // step 4
    let mut r = Vec::with_capacity(cfg.nb);
    for b in 0..cfg.nb {
        let mut ok = 1u8;
        for &j in t.block(b) {
            if !check_quintuplet(t.outputs[j], t.inputs[j], &prep.bell)? {
                ok = 0;
            }
        }
        r.push(ok);
    }
    t.r = r;
    let g = t.recompute_g().expect("l is set");
    t.g = Some(g);
    if g == 0 {
        t.abort = AbortStage::Step4;
        return Ok(t);
    }

    // step 5
    let block: Vec<usize> = t.block(l).iter().map(|&j| t.outputs[j]).collect();
    t.k = Some(cfg.function.apply(&block)?);
    t.abort = AbortStage::None;
    Ok(t)
}
