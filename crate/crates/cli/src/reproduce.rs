//! The headline checks behind `randamp reproduce`.

use std::time::Instant;

use clap::Args;
use serde::Serialize;

use randamp::adversary::{
    enumerate_unbiased_functions, max_predictability, seven_party_predictability, AdversaryOptions,
    OutputFunction,
};
use randamp::distill::{
    find_hash_function, gamma_threshold, solve_all_lambda_vectors, solve_lambda_vectors,
    synthetic_slots, verify_hash_function, FunctionTable, HashSearchConfig, LambdaOptions,
};
use randamp::mermin::{classical_minimum, ghz_correlations, mermin_coefficients, BellFunctional};
use randamp::polytope::{functional_value, parse_bits};
use randamp::protocol::{monte_carlo, BoxModel, ProtocolConfig};
use randamp::security::{
    recommended_block_count, security_bound, security_bound_naive, BlockCount, SecurityParams,
};

use crate::commands::{DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_GAMMA};
use crate::output::{emit, g17, to_json};
use crate::{CliError, Format, Global};

const GROUPS: &[&str] = &[
    "mermin",
    "quantum",
    "classical",
    "adversary",
    "attack3",
    "vectors",
    "threshold",
    "hash",
    "protocol",
    "security",
    "seven",
];

#[derive(Debug, Args)]
pub struct Reproduce {
    /// Run only these groups (repeatable).
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(GROUPS))]
    only: Vec<String>,
    /// Include the seven-party LP, which needs several minutes.
    #[arg(long)]
    stretch: bool,
    /// Negative control: move one X₁ setting into X₀.
    #[arg(long, hide = true)]
    corrupt_x1: bool,
}

#[derive(Debug, Serialize)]
struct Check {
    group: &'static str,
    claim: &'static str,
    pass: bool,
    detail: String,
    seconds: f64,
}

type Outcome = Result<(bool, String), CliError>;

fn bits(s: &str) -> usize {
    parse_bits(s).expect("literal bitstring").0
}

fn expected_sets() -> (Vec<usize>, Vec<usize>) {
    let mut x0: Vec<usize> = ["10000", "01000", "00100", "00010", "00001", "11111"]
        .iter()
        .map(|s| bits(s))
        .collect();
    let mut x1: Vec<usize> = [
        "11100", "11010", "11001", "10110", "10101", "10011", "01110", "01101", "01011", "00111",
    ]
    .iter()
    .map(|s| bits(s))
    .collect();
    x0.sort_unstable();
    x1.sort_unstable();
    (x0, x1)
}

fn check_mermin(f: &BellFunctional) -> Outcome {
    let (x0, x1) = expected_sets();
    let ok = f.x0() == x0.as_slice() && f.x1() == x1.as_slice();
    Ok((
        ok,
        format!("|X0| = {}, |X1| = {}", f.x0().len(), f.x1().len()),
    ))
}

fn check_quantum(f: &BellFunctional) -> Outcome {
    let v = functional_value(f.functional(), &ghz_correlations(5)?)?;
    let v3 = functional_value(mermin_coefficients(3)?.functional(), &ghz_correlations(3)?)?;
    Ok((
        v.abs() <= 1e-12 && v3.abs() <= 1e-12,
        format!("I5 = {}, I3 = {}", g17(v), g17(v3)),
    ))
}

fn check_classical(f: &BellFunctional) -> Outcome {
    let (v, code) = classical_minimum(f)?;
    Ok((v == 6.0, format!("minimum {} at strategy {code}", g17(v))))
}

fn check_adversary(f: &BellFunctional) -> Outcome {
    let g = OutputFunction::majority3();
    let (mut worst_dev, mut worst_gap) = (0.0f64, 0.0f64);
    for x in f.support() {
        for v in 0..2 {
            let r = max_predictability(f, &g, x, v)?;
            worst_dev = worst_dev.max((r.optimum - 0.75).abs());
            let gap = r
                .certificate
                .certificate
                .map_or(f64::INFINITY, |c| c.relative_gap);
            worst_gap = worst_gap.max(gap);
        }
    }
    Ok((
        worst_dev <= 1e-6 && worst_gap <= 1e-7,
        format!("max |P - 3/4| = {worst_dev:.2e}, max gap = {worst_gap:.2e}"),
    ))
}

fn check_attack3() -> Outcome {
    let f = mermin_coefficients(3)?;
    let mut worst = 0.0f64;
    let mut count = 0;
    for g in enumerate_unbiased_functions(3)? {
        count += 1;
        for x in f.support() {
            // the better of the two values is certain
            let mut best = 0.0f64;
            for v in 0..2 {
                best = best.max(max_predictability(&f, &g, x, v)?.optimum);
            }
            worst = worst.max((best - 1.0).abs());
        }
    }
    Ok((
        count == 70 && worst <= 1e-6,
        format!("{count} functions, max |P - 1| = {worst:.2e}"),
    ))
}

fn check_vectors(f: &BellFunctional) -> Outcome {
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    let mut residual = 0.0f64;
    let all = match solve_all_lambda_vectors(DEFAULT_GAMMA, &LambdaOptions::default()) {
        Ok(v) => v,
        Err(e) => return Ok((false, format!("gamma = {DEFAULT_GAMMA}: {e}"))),
    };
    for v in &all {
        let r = v.verify(f)?;
        residual = residual.max(r.circle).max(r.ratio).max(r.orthogonality);
        alphas.push(v.alpha);
        betas.push(v.beta);
    }
    let spread = |v: &[f64]| {
        v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - v.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let amax = alphas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let bmax = betas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let infeasible_low = solve_lambda_vectors((1 << 5) - 1, 0.95).is_err();
    let ok = amax <= 0.8852
        && bmax <= 1.261
        && spread(&alphas) <= 1e-4
        && spread(&betas) <= 1e-4
        && residual <= 1e-9
        && infeasible_low;
    Ok((
        ok,
        format!(
            "alpha <= {amax:.6}, beta <= {bmax:.6}, spreads {:.1e}/{:.1e}, residual {residual:.1e}, gamma 0.95 infeasible: {infeasible_low}",
            spread(&alphas),
            spread(&betas)
        ),
    ))
}

fn check_threshold() -> Outcome {
    let at130 = gamma_threshold(130, DEFAULT_GAMMA)?;
    let at129 = gamma_threshold(129, DEFAULT_GAMMA)?;
    Ok((
        at130 && !at129,
        format!("N_d = 130: {at130}, N_d = 129: {at129}"),
    ))
}

fn check_hash(seed: u64) -> Outcome {
    let slots = synthetic_slots(3, 8, DEFAULT_GAMMA, seed)?;
    let mut cfg = HashSearchConfig::new(3);
    cfg.seed = seed;
    cfg.check_premise = false;
    let found = find_hash_function(&slots, &cfg)?;
    let v = verify_hash_function(&slots, &found.table)?;
    let valid = (0..256u32)
        .filter(|m| {
            let t = FunctionTable::from_bits(3, (0..8).map(|i| ((m >> i) & 1) as u8).collect())
                .expect("arity 3");
            verify_hash_function(&slots, &t).is_ok_and(|r| r.passes(cfg.slack))
        })
        .count();
    Ok((
        found.attempts <= 100 && v.passes(cfg.slack) && v.checked + v.vacuous == 512 && valid > 0,
        format!(
            "{} attempt(s), worst ratio {:.4} <= {:.4}, {valid}/256 valid",
            found.attempts, v.worst_ratio, cfg.slack
        ),
    ))
}

fn check_protocol(seed: u64) -> Outcome {
    let honest = ProtocolConfig::honest(64, 4, seed);
    let h = monte_carlo(&honest, 10_000)?;
    let k1 = h.k1_rate.unwrap_or(f64::NAN);
    let mut attacked = honest.clone();
    attacked.boxes = BoxModel::all_zero();
    let a = monte_carlo(&attacked, 10_000)?;
    let ok = h.step4_aborts == 0
        && h.step2_abort_rate < 0.01
        && (k1 - 0.5).abs() <= 0.02
        && a.step4_abort_rate > 0.99;
    Ok((
        ok,
        format!(
            "honest: step4 {} step2 {:.4} P(k=1) {:.4}; all-zero boxes: step4 {:.4}",
            h.step4_aborts, h.step2_abort_rate, k1, a.step4_abort_rate
        ),
    ))
}

fn check_security() -> Outcome {
    let bound_at = |nd: u64| -> Result<_, CliError> {
        let p = SecurityParams {
            epsilon: 0.5,
            nd,
            nb: recommended_block_count(0.5, nd, DEFAULT_BETA)?,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
        };
        Ok(security_bound(&p)?)
    };
    let b130 = bound_at(130)?;
    let b260 = bound_at(260)?;
    let b520 = bound_at(520)?;
    let decreasing = b130.ln_excess > b260.ln_excess && b260.ln_excess > b520.ln_excess;
    let mut worst = 0.0f64;
    for eps in [0.2, 0.3, 0.4, 0.5] {
        for nd in 1..=20 {
            for log2 in [0, 1, 10, 30, 62] {
                let p = SecurityParams {
                    epsilon: eps,
                    nd,
                    nb: BlockCount { log2 },
                    alpha: DEFAULT_ALPHA,
                    beta: DEFAULT_BETA,
                };
                if let Some(naive) = security_bound_naive(&p)? {
                    let lg = security_bound(&p)?.value;
                    worst = worst.max(((lg - naive) / naive).abs());
                }
            }
        }
    }
    let ok = b130.value > 0.5 && b130.value <= 0.5 + 1e-5 && decreasing && worst <= 1e-10;
    Ok((
        ok,
        format!(
            "bound(130) = {}, ln excess {:.2}/{:.2}/{:.2}, log vs naive {worst:.1e}",
            g17(b130.value),
            b130.ln_excess,
            b260.ln_excess,
            b520.ln_excess
        ),
    ))
}

fn check_seven() -> Outcome {
    let r = seven_party_predictability(None, &AdversaryOptions::large())?;
    Ok((
        (r.optimum - 2.0 / 3.0).abs() <= 1e-5,
        format!("optimum {}", g17(r.optimum)),
    ))
}

impl Reproduce {
    fn selected(&self, group: &str) -> bool {
        if self.only.is_empty() {
            group != "seven" || self.stretch
        } else {
            self.only.iter().any(|g| g == group)
        }
    }

    pub fn run(self, g: &Global) -> Result<(), CliError> {
        let seed = g.seed.unwrap_or(0);
        let mut bell = mermin_coefficients(5)?;
        if self.corrupt_x1 {
            // move one setting to the wrong parity class
            let mut x0 = bell.x0().to_vec();
            x0.push(bell.x1()[0]);
            let x1 = bell.x1()[1..].to_vec();
            bell = BellFunctional::from_sets(5, &x0, &x1)?;
        }
        let plan: Vec<(&'static str, &'static str, Box<dyn Fn() -> Outcome + '_>)> = vec![
            (
                "mermin",
                "X0 and X1 match the listed settings",
                Box::new(|| check_mermin(&bell)),
            ),
            (
                "quantum",
                "GHZ correlations reach I = 0",
                Box::new(|| check_quantum(&bell)),
            ),
            (
                "classical",
                "local deterministic minimum is 6",
                Box::new(|| check_classical(&bell)),
            ),
            (
                "adversary",
                "maj3 predictability is 3/4 on every setting",
                Box::new(|| check_adversary(&bell)),
            ),
            (
                "attack3",
                "every unbiased 3-bit function is fixable",
                Box::new(check_attack3),
            ),
            (
                "vectors",
                "two-stage LP feasible at gamma = 0.9732",
                Box::new(|| check_vectors(&bell)),
            ),
            (
                "threshold",
                "N_d = 130 is the first block size for gamma = 0.9732",
                Box::new(check_threshold),
            ),
            (
                "hash",
                "random search finds a valid distilling function",
                Box::new(|| check_hash(seed)),
            ),
            (
                "protocol",
                "honest runs never abort at step 4, attacks do",
                Box::new(|| check_protocol(seed)),
            ),
            (
                "security",
                "bound near 1/2 and decreasing in N_d",
                Box::new(check_security),
            ),
            (
                "seven",
                "seven-party predictability is 2/3",
                Box::new(check_seven),
            ),
        ];
        let total = Instant::now();
        let mut checks = Vec::new();
        for (group, claim, f) in plan {
            if !self.selected(group) {
                continue;
            }
            let start = Instant::now();
            let (pass, detail) = match f() {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            let seconds = start.elapsed().as_secs_f64();
            eprintln!(
                "{} {group} ({seconds:.1}s)",
                if pass { "PASS" } else { "FAIL" }
            );
            checks.push(Check {
                group,
                claim,
                pass,
                detail,
                seconds,
            });
        }
        let failed = checks.iter().filter(|c| !c.pass).count();
        let body = match g.format {
            Format::Json => to_json(&serde_json::json!({
                "checks": checks,
                "failed": failed,
                "seconds": total.elapsed().as_secs_f64(),
            }))?,
            _ => {
                let mut s = String::new();
                for c in &checks {
                    s.push_str(&format!(
                        "{:<4}  {:<9}  {:>7.1}s  {}  [{}]\n",
                        if c.pass { "PASS" } else { "FAIL" },
                        c.group,
                        c.seconds,
                        c.claim,
                        c.detail
                    ));
                }
                s.push_str(&format!(
                    "total {:.1}s, {failed} failed",
                    total.elapsed().as_secs_f64()
                ));
                s
            }
        };
        emit(g.out.as_deref(), &body)?;
        if failed > 0 {
            return Err(CliError::ChecksFailed(failed));
        }
        Ok(())
    }
}
