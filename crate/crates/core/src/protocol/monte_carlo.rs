//! Repeated protocol runs with per-run generator streams.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distill::majority;
use crate::error::{Error, Result};
use crate::protocol::{
    check_quintuplet, run_indexed, AbortStage, Prepared, ProtocolConfig, ProtocolTranscript,
};

const CHUNK: u64 = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub runs: u64,
    pub seed: u64,
    pub completed: u64,
    pub step2_aborts: u64,
    pub step4_aborts: u64,
    pub step2_abort_rate: f64,
    pub step4_abort_rate: f64,
    /// Counts of `k = 0` and `k = 1` over completed runs.
    pub k_counts: [u64; 2],
    /// `P(k = 1 | no abort)`, absent when no run completed.
    pub k1_rate: Option<f64>,
    /// Majority bits over all supported quintuplets.
    pub maj_counts: [u64; 2],
    pub maj0_rate: Option<f64>,
    /// Supported quintuplets whose outcome parity is wrong.
    pub wrong_parity: u64,
    pub min_survivors: usize,
    pub mean_survivors: f64,
    /// Runs whose stored `g` differs from its recomputation.
    pub inconsistent: u64,
}

#[derive(Default, Clone, Copy)]
struct Tally {
    completed: u64,
    step2: u64,
    step4: u64,
    k: [u64; 2],
    maj: [u64; 2],
    wrong: u64,
    survivors_min: usize,
    survivors_sum: u64,
    inconsistent: u64,
}

impl Tally {
    fn merge(mut self, o: Tally) -> Tally {
        self.completed += o.completed;
        self.step2 += o.step2;
        self.step4 += o.step4;
        self.k[0] += o.k[0];
        self.k[1] += o.k[1];
        self.maj[0] += o.maj[0];
        self.maj[1] += o.maj[1];
        self.wrong += o.wrong;
        self.survivors_min = self.survivors_min.min(o.survivors_min);
        self.survivors_sum += o.survivors_sum;
        self.inconsistent += o.inconsistent;
        self
    }
}

fn tally(t: &ProtocolTranscript, prep: &Prepared) -> Result<Tally> {
    let mut out = Tally {
        survivors_min: usize::MAX,
        ..Tally::default()
    };
    match t.abort {
        AbortStage::None => out.completed = 1,
        AbortStage::Step2 => out.step2 = 1,
        AbortStage::Step4 => out.step4 = 1,
    }
    if let Some(k) = t.k {
        out.k[k as usize] += 1;
    }
    let supported = (0..t.inputs.len()).filter(|&j| prep.bell.is_supported(t.inputs[j]));
    let mut count = 0;
    for j in supported {
        count += 1;
        out.maj[majority(t.outputs[j]) as usize] += 1;
        if !check_quintuplet(t.outputs[j], t.inputs[j], &prep.bell)? {
            out.wrong += 1;
        }
    }
    out.survivors_min = count;
    out.survivors_sum = count as u64;
    out.inconsistent = u64::from(t.g != t.recompute_g());
    Ok(out)
}

/// Runs `0..runs` in parallel chunks and hands transcripts to `sink` in
/// run order.
pub fn for_each_run(
    cfg: &ProtocolConfig,
    runs: u64,
    mut sink: impl FnMut(&ProtocolTranscript) -> Result<()>,
) -> Result<()> {
    let prep = Prepared::new(cfg)?;
    let mut start = 0;
    while start < runs {
        let end = (start + CHUNK).min(runs);
        let batch: Vec<ProtocolTranscript> = (start..end)
            .into_par_iter()
            .map(|run| run_indexed(cfg, &prep, run))
            .collect::<Result<_>>()?;
        batch.iter().try_for_each(&mut sink)?;
        start = end;
    }
    Ok(())
}

pub fn monte_carlo(cfg: &ProtocolConfig, runs: u64) -> Result<MonteCarloSummary> {
    if runs == 0 {
        return Err(Error::InvalidArgument("need at least one run".into()));
    }
    let prep = Prepared::new(cfg)?;
    let empty = Tally {
        survivors_min: usize::MAX,
        ..Tally::default()
    };
    let t = (0..runs)
        .into_par_iter()
        .map(|run| run_indexed(cfg, &prep, run).and_then(|t| tally(&t, &prep)))
        .try_reduce(|| empty, |a, b| Ok(a.merge(b)))?;
    let rate = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    Ok(MonteCarloSummary {
        runs,
        seed: cfg.seed,
        completed: t.completed,
        step2_aborts: t.step2,
        step4_aborts: t.step4,
        step2_abort_rate: t.step2 as f64 / runs as f64,
        step4_abort_rate: t.step4 as f64 / runs as f64,
        k_counts: t.k,
        k1_rate: rate(t.k[1], t.completed),
        maj_counts: t.maj,
        maj0_rate: rate(t.maj[0], t.maj[0] + t.maj[1]),
        wrong_parity: t.wrong,
        min_survivors: t.survivors_min,
        mean_survivors: t.survivors_sum as f64 / runs as f64,
        inconsistent: t.inconsistent,
    })
}
