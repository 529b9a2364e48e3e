use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use randamp::adversary::{max_predictability_with, AdversaryOptions, OutputFunction};
use randamp::distill::lambda::supported_components;
use randamp::distill::{
    find_hash_function, solve_all_lambda_vectors, solve_lambda_vectors, synthetic_slots,
    DistillationVectors, HashSearchConfig, LambdaOptions, SlotCoefficients,
};
use randamp::mermin::{ghz_correlations, mermin_coefficients, LocalStrategy};
use randamp::polytope::{
    bits_to_string, functional_value, parse_bits, uniform_distribution, ConditionalDistribution,
};
use randamp::protocol::{for_each_run, monte_carlo, ProtocolConfig};
use randamp::security::{
    recommended_block_count, security_bound, BlockCount, SecurityBound as BoundValue,
    SecurityParams,
};

use crate::output::{emit, g17, to_json};
use crate::{CliError, Format, Global};

pub const DEFAULT_ALPHA: f64 = 0.8842;
pub const DEFAULT_BETA: f64 = 1.260;
pub const DEFAULT_GAMMA: f64 = 0.9732;

fn parse_setting(s: &str, parties: usize) -> Result<usize, CliError> {
    let (v, width) = parse_bits(s)?;
    if width != parties {
        return Err(CliError::Usage(format!(
            "setting {s:?} has {width} bits, expected {parties}"
        )));
    }
    Ok(v)
}

fn load_distribution(spec: &str, parties: usize) -> Result<ConditionalDistribution, CliError> {
    let p = match spec {
        "ghz" => ghz_correlations(parties)?,
        "uniform" => uniform_distribution(parties)?,
        _ => {
            if let Some(code) = spec.strip_prefix("local:") {
                let code: usize = code
                    .parse()
                    .map_err(|_| CliError::Usage(format!("bad strategy code {code:?}")))?;
                if code >= 1 << (2 * parties) {
                    return Err(CliError::Usage(format!(
                        "strategy code {code} out of range"
                    )));
                }
                LocalStrategy::from_code(parties, code).distribution()?
            } else {
                let body = fs::read_to_string(spec)?;
                if spec.ends_with(".csv") {
                    ConditionalDistribution::from_csv(&body)?
                } else {
                    ConditionalDistribution::from_json(&body)?
                }
            }
        }
    };
    if p.parties() != parties {
        return Err(CliError::Usage(format!(
            "distribution has {} parties, expected {parties}",
            p.parties()
        )));
    }
    Ok(p)
}

#[derive(Debug, Args)]
pub struct MerminValue {
    #[arg(long, default_value_t = 5)]
    parties: usize,
    /// `ghz`, `uniform`, `local:<code>`, or a JSON/CSV distribution file.
    #[arg(long, default_value = "ghz")]
    dist: String,
}

impl MerminValue {
    pub fn run(self, g: &Global) -> Result<(), CliError> {
        let f = mermin_coefficients(self.parties)?;
        let p = load_distribution(&self.dist, self.parties)?;
        let value = functional_value(f.functional(), &p)?;
        let body = match g.format {
            Format::Json => to_json(&serde_json::json!({
                "parties": self.parties,
                "dist": self.dist,
                "value": value,
            }))?,
            _ => g17(value),
        };
        Ok(emit(g.out.as_deref(), &body)?)
    }
}

#[derive(Debug, Args)]
pub struct Ghz {
    #[arg(long, default_value_t = 5)]
    parties: usize,
}

impl Ghz {
    pub fn run(self, g: &Global) -> Result<(), CliError> {
        let p = ghz_correlations(self.parties)?;
        let body = match g.format {
            Format::Json => to_json(&p)?,
            _ => p.to_csv().trim_end().to_string(),
        };
        Ok(emit(g.out.as_deref(), &body)?)
    }
}

fn parse_function(spec: &str) -> Result<OutputFunction, CliError> {
    match spec {
        "maj3" => Ok(OutputFunction::majority3()),
        "target7" => Ok(OutputFunction::seven_party_target()),
        _ => {
            let table = spec.strip_prefix("table:").ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown function {spec:?}; use maj3, target7 or table:<bits>"
                ))
            })?;
            let bits: Vec<u8> = table
                .chars()
                .map(|c| match c {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    _ => Err(CliError::Usage(format!("bad table character {c:?}"))),
                })
                .collect::<Result<_, _>>()?;
            if !bits.len().is_power_of_two() || bits.len() < 2 {
                return Err(CliError::Usage(
                    "table length must be a power of two".into(),
                ));
            }
            let arity = bits.len().trailing_zeros() as usize;
            Ok(OutputFunction::new(bits, (0..arity).collect())?)
        }
    }
}

#[derive(Serialize)]
struct PredictabilityRow {
    setting: String,
    target: u8,
    optimum: f64,
    relative_gap: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AdversaryBound {
    #[arg(long, default_value_t = 5)]
    parties: usize,
    /// `maj3`, `target7`, or `table:<bits>` on the first outcomes.
    #[arg(long, default_value = "maj3")]
    function: String,
    /// Measurement setting as a bitstring, party 1 first (default all ones).
    #[arg(long, conflicts_with = "all_settings")]
    setting: Option<String>,
    /// Evaluate every supported setting.
    #[arg(long)]
    all_settings: bool,
    /// Value of the function to predict (default: both).
    #[arg(long)]
    target: Option<u8>,
    /// Allow the LP to drop the maximal-violation constraint.
    #[arg(long)]
    no_violation: bool,
    #[arg(long)]
    max_variables: Option<usize>,
}

impl AdversaryBound {
    pub fn run(self, g: &Global) -> Result<(), CliError> {
        let n = self.parties;
        let f = mermin_coefficients(n)?;
        let func = parse_function(&self.function)?;
        let settings = if self.all_settings {
            f.support()
        } else {
            match &self.setting {
                Some(s) => vec![parse_setting(s, n)?],
                None => vec![(1 << n) - 1],
            }
        };
        let targets: Vec<u8> = match self.target {
            Some(t) if t <= 1 => vec![t],
            Some(t) => return Err(CliError::Usage(format!("target must be 0 or 1, got {t}"))),
            None => vec![0, 1],
        };
        let mut opts = if n >= 7 {
            AdversaryOptions::large()
        } else {
            AdversaryOptions::default()
        };
        opts.enforce_violation = !self.no_violation;
        if let Some(m) = self.max_variables {
            opts.max_variables = m;
        }
        let mut rows = Vec::new();
        for &x in &settings {
            for &t in &targets {
                let r = max_predictability_with(&f, &func, x, t, &opts)?;
                log::info!("setting {} target {t}: {}", bits_to_string(x, n), r.optimum);
                rows.push(PredictabilityRow {
                    setting: bits_to_string(x, n),
                    target: t,
                    optimum: r.optimum,
                    relative_gap: r.certificate.certificate.map(|c| c.relative_gap),
                });
            }
        }
        let max = rows
            .iter()
            .map(|r| r.optimum)
            .fold(f64::NEG_INFINITY, f64::max);
        let body = match g.format {
            Format::Json => to_json(&serde_json::json!({
                "parties": n,
                "function": func.table_string(),
                "results": rows,
                "max": max,
            }))?,
            Format::Csv => {
                let mut s = String::from("setting,target,optimum");
                for r in &rows {
                    s.push_str(&format!("\n{},{},{}", r.setting, r.target, g17(r.optimum)));
                }
                s
            }
            Format::Text => g17(max),
        };
        Ok(emit(g.out.as_deref(), &body)?)
    }
}

#[derive(Debug, Args)]
pub struct LemmaVectors {
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    gamma: f64,
    /// Five-bit setting, party 1 first.
    #[arg(long, default_value = "11111")]
    setting: String,
    /// Solve from several starting settings and carry the best vectors
    /// over, giving the constants shared by every setting.
    #[arg(long)]
    common: bool,
}

impl LemmaVectors {
    pub fn run(self, g: &Global) -> Result<(), CliError> {
        let x = parse_setting(&self.setting, 5)?;
        let v = if self.common {
            solve_all_lambda_vectors(self.gamma, &LambdaOptions::default())?
                .into_iter()
                .find(|v| v.setting == x)
                .expect("every supported setting is returned")
        } else {
            solve_lambda_vectors(x, self.gamma)?
        };
        let report = v.verify(&mermin_coefficients(5)?)?;
        let summary = serde_json::json!({
            "setting": v.setting_string(),
            "gamma": v.gamma,
            "alpha": v.alpha,
            "beta": v.beta,
            "stage1_alpha": v.stage1_alpha,
            "residuals": report,
        });
        match &g.out {
            Some(path) => {
                emit(Some(path), &to_json(&v)?)?;
                emit(None, &to_json(&summary)?)?;
            }
            None if g.format == Format::Json => emit(None, &to_json(&v)?)?,
            None => emit(None, &format!("{} {}", g17(v.alpha), g17(v.beta)))?,
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct FindHash {
    #[arg(long)]
    nd: usize,
    /// Defaults to 3·sqrt(nd).
    #[arg(long)]
    slack: Option<f64>,
    #[arg(long, default_value_t = 100)]
    max_attempts: u64,
    /// Distillation-vector files whose supported components form the slot
    /// domain; without them a synthetic domain is generated.
    #[arg(long)]
    vectors: Vec<PathBuf>,
    /// Points per synthetic slot (one of which is zero).
    #[arg(long, default_value_t = 8)]
    points: usize,
    /// Largest |Γ_w|/Ω in the synthetic domain.
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    ratio: f64,
    /// Refuse to search unless every point satisfies the per-slot premise.
    #[arg(long)]
    check_premise: bool,
}

impl FindHash {
    pub fn run(self, g: &Global) -> Result<(), CliError> {
        let seed = g.seed.unwrap_or(0);
        let slots = if self.vectors.is_empty() {
            synthetic_slots(self.nd, self.points, self.ratio, seed)?
        } else {
            let bell = mermin_coefficients(5)?;
            let comps = supported_components(&bell);
            let mut points: Vec<[f64; 2]> = Vec::new();
            for path in &self.vectors {
                let v: DistillationVectors = serde_json::from_str(&fs::read_to_string(path)?)?;
                points.extend_from_slice(SlotCoefficients::from_vectors(&v, &comps)?.points());
            }
            points.sort_by(|a, b| a.partial_cmp(b).expect("finite coefficients"));
            points.dedup_by(|a, b| (a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
            vec![SlotCoefficients::new(points)?; self.nd]
        };
        let mut cfg = HashSearchConfig::new(self.nd);
        if let Some(s) = self.slack {
            cfg.slack = s;
        }
        cfg.seed = seed;
        cfg.max_attempts = self.max_attempts;
        cfg.check_premise = self.check_premise;
        let found = find_hash_function(&slots, &cfg)?;
        log::info!("found after {} attempts", found.attempts);
        let summary = serde_json::json!({
            "nd": self.nd,
            "table": found.table.to_bitstring(),
            "attempts": found.attempts,
            "union_bound": found.union_bound,
            "worst_ratio": found.verification.worst_ratio,
            "slack": cfg.slack,
            "checked": found.verification.checked,
            "vacuous": found.verification.vacuous,
        });
        match &g.out {
            Some(path) => {
                emit(Some(path), &to_json(&found.table)?)?;
                emit(None, &to_json(&summary)?)?;
            }
            None => emit(None, &to_json(&summary)?)?,
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct Simulate {
    /// Protocol configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 1000)]
    runs: u64,
    /// Also write every transcript as one JSON object per line.
    #[arg(long)]
    transcripts: Option<PathBuf>,
}

impl Simulate {
    pub fn run(self, g: &Global) -> Result<(), CliError> {
        let mut cfg: ProtocolConfig = serde_json::from_str(&fs::read_to_string(&self.config)?)?;
        if let Some(s) = g.seed {
            cfg.seed = s;
        }
        if let Some(path) = &self.transcripts {
            let mut w = BufWriter::new(File::create(path)?);
            for_each_run(&cfg, self.runs, |t| {
                let line = to_json(t).map_err(randamp::Error::from)?;
                writeln!(w, "{line}").map_err(|e| randamp::Error::InvalidArgument(e.to_string()))
            })?;
            w.flush()?;
        }
        let summary = monte_carlo(&cfg, self.runs)?;
        Ok(emit(g.out.as_deref(), &to_json(&summary)?)?)
    }
}

fn parse_block_count(s: &str, epsilon: f64, nd: u64, beta: f64) -> Result<BlockCount, CliError> {
    if s == "auto" {
        return Ok(recommended_block_count(epsilon, nd, beta)?);
    }
    if let Some(e) = s.strip_prefix("2^") {
        let log2 = e
            .parse()
            .map_err(|_| CliError::Usage(format!("bad exponent in {s:?}")))?;
        return Ok(BlockCount { log2 });
    }
    let v: u64 = s
        .parse()
        .map_err(|_| CliError::Usage(format!("--nb takes auto, 2^k, or an integer, got {s:?}")))?;
    Ok(BlockCount::from_value(v)?)
}

#[derive(Serialize)]
struct BoundRow {
    epsilon: f64,
    nd: u64,
    log2_nb: u64,
    nb: Option<u64>,
    alpha: f64,
    beta: f64,
    bound: f64,
    ln_excess: f64,
    ln_alpha_term: f64,
    ln_block_term: f64,
}

impl BoundRow {
    fn new(p: &SecurityParams, b: &BoundValue) -> Self {
        BoundRow {
            epsilon: p.epsilon,
            nd: p.nd,
            log2_nb: p.nb.log2,
            nb: p.nb.value(),
            alpha: p.alpha,
            beta: p.beta,
            bound: b.value,
            ln_excess: b.ln_excess,
            ln_alpha_term: b.ln_alpha_term,
            ln_block_term: b.ln_block_term,
        }
    }
}

#[derive(Debug, Args)]
pub struct SecurityBound {
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    nd: u64,
    /// `auto` (block-count rule), `2^k`, or an integer power of two.
    #[arg(long, default_value = "auto")]
    nb: String,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    /// Same as `--format json`.
    #[arg(long)]
    json: bool,
}

impl SecurityBound {
    pub fn run(self, g: &Global) -> Result<(), CliError> {
        let nb = parse_block_count(&self.nb, self.epsilon, self.nd, self.beta)?;
        let p = SecurityParams {
            epsilon: self.epsilon,
            nd: self.nd,
            nb,
            alpha: self.alpha,
            beta: self.beta,
        };
        let b = security_bound(&p)?;
        let body = if self.json || g.format == Format::Json {
            to_json(&BoundRow::new(&p, &b))?
        } else {
            g17(b.value)
        };
        Ok(emit(g.out.as_deref(), &body)?)
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("bad {what} value {v:?}")))
        })
        .collect()
}

#[derive(Debug, Args)]
pub struct ParamSweep {
    /// Comma-separated ε values.
    #[arg(long, default_value = "0.5,0.4,0.3,0.2,0.1")]
    epsilon_grid: String,
    /// Comma-separated block sizes.
    #[arg(long, default_value = "130,260,520")]
    nd_grid: String,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
}

impl ParamSweep {
    pub fn run(self, g: &Global) -> Result<(), CliError> {
        let eps: Vec<f64> = parse_list(&self.epsilon_grid, "epsilon")?;
        let nds: Vec<u64> = parse_list(&self.nd_grid, "nd")?;
        let mut rows = Vec::new();
        for &epsilon in &eps {
            for &nd in &nds {
                let p = SecurityParams {
                    epsilon,
                    nd,
                    nb: recommended_block_count(epsilon, nd, self.beta)?,
                    alpha: self.alpha,
                    beta: self.beta,
                };
                rows.push(BoundRow::new(&p, &security_bound(&p)?));
            }
        }
        let body = match g.format {
            Format::Json => to_json(&rows)?,
            _ => {
                let mut s = String::from("epsilon,nd,log2_nb,bound");
                for r in &rows {
                    s.push_str(&format!(
                        "\n{},{},{},{}",
                        g17(r.epsilon),
                        r.nd,
                        r.log2_nb,
                        g17(r.bound)
                    ));
                }
                s
            }
        };
        Ok(emit(g.out.as_deref(), &body)?)
    }
}
