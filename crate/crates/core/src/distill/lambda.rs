//! Distillation vectors: `Γ_w = M_w + Λ_w` with `Λ_w` orthogonal to every
//! no-signalling box, bounded inside the circle of radius
//! `αC + βI + Λ₂` and with the ratio bound `|Γ_w| ≤ γ·Ω`.
//!
//! Two LP stages, each minimizing `α` over `(α, β, Λ₀, Λ₁, Λ₂)`:
//!
//! 1. the circle is replaced by the inscribed octagon (eight half-planes
//!    at angles `(2k+1)π/8`, scaled by `η = 1/cos(π/8)`);
//! 2. the signs `σ_w` of `Γ_w` from stage 1 are frozen and the ratio bound
//!    is linearized as `0 ≤ σ_w Γ_w ≤ κ·σ_w̄ Γ_w̄`, `κ = √(γ²/(1−γ²))`.
//!
//! `α` alone does not pin `β` (raising `β` only loosens the rows with
//! `I = 1`), so each stage is solved lexicographically: minimize `α`,
//! then minimize `β` with `α` held at its optimum.
//!
//! Stage-1 optima are degenerate and their signs regularly make stage 2
//! infeasible. When that happens the signs are repaired: an elastic copy of
//! stage 2 adds one nonnegative slack per ratio row, minimizes
//! `α + ρ·Σ slack`, and re-reads the signs until the slack vanishes, raising
//! `ρ` each round. A second elastic search then minimizes `β + ρ·Σ slack`
//! with `α` capped at the repaired optimum, keeping any sign pattern whose
//! exact program lowers `β`. Every returned vector is re-verified.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{
    self, ConstraintMatrix, LinearProgramSpec, LpStatus, Method, Sense, SparseRow, VarBounds,
};
use crate::mermin::{mermin_coefficients, BellFunctional};
use crate::polytope::{
    bits_to_string, index, nosignalling_span_basis, split_index, LinearFunctional,
};

use super::majority;
use super::symmetry::Symmetry;

pub const QUINTUPLET: usize = 5;
const COMPONENTS: usize = 1 << (2 * QUINTUPLET);
/// Post-solve tolerance for orthogonality and the circle/ratio bounds.
pub const VERIFY_TOLERANCE: f64 = 1e-9;
/// `Γ_w` at or above `-SIGN_ZERO` reads as sign `+1`.
pub const SIGN_ZERO: f64 = 1e-10;
/// Slack on the stage optimum of `α` while minimizing `β`.
const LEX_SLACK: f64 = 1e-9;
/// Total ratio violation, at interior-point accuracy, below which a
/// repaired sign pattern is tried in the exact stage-2 program.
const REPAIR_TOLERANCE: f64 = 1e-5;
/// The `β` search stops once a round improves `β` by less than this.
const BETA_PROGRESS: f64 = 1e-6;
/// The estimation bound needs `β > 1`; the programs keep `β` at least this.
pub const BETA_FLOOR: f64 = 1.0 + 1e-6;
/// Stage-2 `α` this far above the stage-1 optimum triggers a sign search.
const ALPHA_GAP: f64 = 1e-7;

/// `η = (cos π/8)⁻¹`.
pub fn octagon_scale() -> f64 {
    1.0 / (PI / 8.0).cos()
}

/// The eight octagon directions `(2k+1)π/8`.
pub fn octagon_angles() -> [f64; 8] {
    std::array::from_fn(|k| (2 * k + 1) as f64 * PI / 8.0)
}

/// `√(γ²/(1−γ²))`.
pub fn ratio_prefactor(gamma: f64) -> f64 {
    (gamma * gamma / (1.0 - gamma * gamma)).sqrt()
}

/// `M_w^{x₀}(a,x) = [maj(a) = w]·[x = x₀]`.
pub fn majority_indicator(setting: usize, w: u8) -> Vec<f64> {
    let mut m = vec![0.0; COMPONENTS];
    for a in 0..1usize << QUINTUPLET {
        if majority(a) == w {
            m[index(QUINTUPLET, a, setting)] = 1.0;
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Octagon,
    SignedRatio,
}

impl Stage {
    fn label(self) -> &'static str {
        match self {
            Stage::Octagon => "stage 1 (octagon)",
            Stage::SignedRatio => "stage 2 (signed ratio)",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistillationVectors {
    pub setting: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub lambda0: Vec<f64>,
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    /// Stage-1 optimum of `α`, for reference.
    pub stage1_alpha: f64,
    /// Penalty rounds needed to repair the stage-1 signs (0 if none).
    #[serde(default)]
    pub repair_rounds: usize,
}

/// Largest violation of each post-solve condition (`≤ 0` means satisfied,
/// orthogonality is an absolute residual).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VectorReport {
    pub orthogonality: f64,
    pub circle: f64,
    pub octagon: f64,
    pub ratio: f64,
    pub signed_ratio: f64,
}

impl VectorReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.orthogonality <= tol
            && self.circle <= tol
            && self.octagon <= tol
            && self.ratio <= tol
            && self.signed_ratio <= tol
    }
}

impl DistillationVectors {
    pub fn setting_string(&self) -> String {
        bits_to_string(self.setting, QUINTUPLET)
    }

    fn lambda(&self, w: usize) -> &[f64] {
        match w {
            0 => &self.lambda0,
            1 => &self.lambda1,
            _ => &self.lambda2,
        }
    }

    /// `Γ_w = M_w + Λ_w` for `w ∈ {0, 1}`.
    pub fn gamma_vector(&self, w: u8) -> Vec<f64> {
        majority_indicator(self.setting, w)
            .into_iter()
            .zip(self.lambda(w as usize))
            .map(|(m, l)| m + l)
            .collect()
    }

    pub fn gamma_functional(&self, w: u8) -> LinearFunctional {
        LinearFunctional::new(QUINTUPLET, self.gamma_vector(w)).expect("fixed dimension")
    }

    /// `Ω = √(Γ₀² + Γ₁²)` componentwise.
    pub fn omega(&self) -> Vec<f64> {
        let g0 = self.gamma_vector(0);
        let g1 = self.gamma_vector(1);
        g0.iter().zip(&g1).map(|(a, b)| a.hypot(*b)).collect()
    }

    /// `αC + βI + Λ₂` componentwise.
    pub fn radius(&self, bell: &BellFunctional) -> Vec<f64> {
        let c = 0.5f64.powi(QUINTUPLET as i32);
        bell.functional()
            .coefficients()
            .iter()
            .zip(&self.lambda2)
            .map(|(i, l2)| self.alpha * c + self.beta * i + l2)
            .collect()
    }

    /// Checks orthogonality, the circle bound, the octagon rows, the ratio
    /// bound `|Γ_w| ≤ γΩ`, and the linearized signed-ratio rows, each
    /// evaluated independently of the LP.
    pub fn verify(&self, bell: &BellFunctional) -> Result<VectorReport> {
        let d = nosignalling_span_basis(QUINTUPLET)?;
        let orthogonality = (0..3)
            .flat_map(|w| d.residuals(self.lambda(w)))
            .map(f64::abs)
            .fold(0.0, f64::max);
        let g0 = self.gamma_vector(0);
        let g1 = self.gamma_vector(1);
        let radius = self.radius(bell);
        let eta = octagon_scale();
        let angles = octagon_angles();
        let kappa = ratio_prefactor(self.gamma);
        let mut report = VectorReport {
            orthogonality,
            circle: f64::NEG_INFINITY,
            octagon: f64::NEG_INFINITY,
            ratio: f64::NEG_INFINITY,
            signed_ratio: f64::NEG_INFINITY,
        };
        for c in 0..COMPONENTS {
            let (u, v, r) = (g0[c], g1[c], radius[c]);
            let omega = u.hypot(v);
            report.circle = report.circle.max(omega - r);
            for &t in &angles {
                report.octagon = report.octagon.max(eta * (t.cos() * u + t.sin() * v) - r);
            }
            report.ratio = report
                .ratio
                .max(u.abs() - self.gamma * omega)
                .max(v.abs() - self.gamma * omega);
            report.signed_ratio = report
                .signed_ratio
                .max(u.abs() - kappa * v.abs())
                .max(v.abs() - kappa * u.abs());
        }
        Ok(report)
    }
}

/// Variable layout `[α, β, Λ₀, Λ₁, Λ₂]`.
const ALPHA: usize = 0;
const BETA: usize = 1;
fn lam(w: usize, c: usize) -> usize {
    2 + w * COMPONENTS + c
}
const NUM_VARS: usize = 2 + 3 * COMPONENTS;

struct ProblemData {
    bell: BellFunctional,
    basis: ConstraintMatrix,
    m: [Vec<f64>; 2],
}

fn base_program(data: &ProblemData) -> LinearProgramSpec {
    let mut objective = vec![0.0; NUM_VARS];
    objective[ALPHA] = 1.0;
    let mut spec = LinearProgramSpec::new(Sense::Minimize, objective);

    for w in 0..3 {
        for row in &data.basis.rows {
            let entries = row.entries().iter().map(|&(c, v)| (lam(w, c), v)).collect();
            spec.equalities.push(SparseRow(entries), 0.0);
        }
    }

    // η cosθ Γ₀ + η sinθ Γ₁ ≤ αC + βI + Λ₂
    let eta = octagon_scale();
    let cscale = 0.5f64.powi(QUINTUPLET as i32);
    let coeffs = data.bell.functional().coefficients();
    for c in 0..COMPONENTS {
        for t in octagon_angles() {
            let (p, q) = (eta * t.cos(), eta * t.sin());
            let mut entries = vec![
                (ALPHA, -cscale),
                (lam(0, c), p),
                (lam(1, c), q),
                (lam(2, c), -1.0),
            ];
            if coeffs[c] != 0.0 {
                entries.insert(1, (BETA, -coeffs[c]));
            }
            spec.inequalities
                .push(SparseRow(entries), -(p * data.m[0][c] + q * data.m[1][c]));
        }
    }
    let mut bounds = vec![VarBounds::FREE; NUM_VARS];
    bounds[BETA].lower = BETA_FLOOR;
    spec.bounds = Some(bounds);
    spec
}

/// Adds `0 ≤ σ_w Γ_w ≤ κ σ_w̄ Γ_w̄` for both `w`.
fn add_sign_rows(spec: &mut LinearProgramSpec, data: &ProblemData, signs: &[[f64; 2]], kappa: f64) {
    for (c, s) in signs.iter().enumerate() {
        for w in 0..2 {
            let wb = 1 - w;
            // −σ_w Λ_w ≤ σ_w M_w
            spec.inequalities
                .push(SparseRow(vec![(lam(w, c), -s[w])]), s[w] * data.m[w][c]);
            // σ_w Λ_w − κ σ_w̄ Λ_w̄ ≤ −σ_w M_w + κ σ_w̄ M_w̄
            let mut entries = vec![(lam(w, c), s[w]), (lam(wb, c), -kappa * s[wb])];
            entries.sort_by_key(|e| e.0);
            spec.inequalities.push(
                SparseRow(entries),
                -s[w] * data.m[w][c] + kappa * s[wb] * data.m[wb][c],
            );
        }
    }
}

/// Solver choices for the two stages and the sign repair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaOptions {
    /// Stage 1 and repair solves; an interior point reads signs off the
    /// relative interior of the optimal face instead of an arbitrary vertex.
    pub explore: Method,
    /// Final stage-2 solves.
    pub finish: Method,
    /// Rounds of elastic sign repair when the stage-1 signs are infeasible.
    pub repair_rounds: usize,
    /// Initial penalty on the ratio violation, relative to `α`.
    pub repair_penalty: f64,
    /// Factor applied to the penalty each round.
    pub repair_growth: f64,
    /// Rounds of sign search lowering `β` with `α` held at its optimum.
    pub beta_rounds: usize,
    /// Initial penalty on the ratio violation, relative to `β`.
    pub beta_penalty: f64,
    /// Starting settings tried by the all-settings solve.
    pub starts: usize,
}

impl Default for LambdaOptions {
    fn default() -> Self {
        LambdaOptions {
            explore: Method::InteriorPoint { crossover: false },
            finish: Method::InteriorPoint { crossover: true },
            repair_rounds: 60,
            repair_penalty: 1e-3,
            repair_growth: 1.5,
            beta_rounds: 20,
            beta_penalty: 0.01,
            starts: 4,
        }
    }
}

fn optimal(sol: lp::LPSolution, what: &str) -> Result<Option<lp::LPSolution>> {
    match sol.status {
        LpStatus::Optimal => Ok(Some(sol)),
        LpStatus::Infeasible => Ok(None),
        LpStatus::Unbounded => Err(Error::Solver(format!("{what} is unbounded below"))),
    }
}

fn lex_cap(alpha: f64) -> f64 {
    alpha + LEX_SLACK * alpha.abs().max(1.0)
}

/// Minimizes `α`, then `β` with `α` held at its optimum. Returns the final
/// primal point, or `None` if infeasible.
fn lexicographic(spec: &LinearProgramSpec, method: Method) -> Result<Option<Vec<f64>>> {
    let Some(first) = optimal(lp::solve_with(spec, method)?, "alpha")? else {
        return Ok(None);
    };
    let mut second = spec.clone();
    second
        .inequalities
        .push(SparseRow(vec![(ALPHA, 1.0)]), lex_cap(first.value));
    second.objective[ALPHA] = 0.0;
    second.objective[BETA] = 1.0;
    match optimal(lp::solve_with(&second, method)?, "beta")? {
        Some(sol) => Ok(Some(sol.primal)),
        None => Ok(Some(first.primal)),
    }
}

/// Objective of an elastic solve: `α_w α + β_w β + penalty·Σ t`, where `t`
/// is the per-component violation of the signed-ratio rows.
struct Elastic {
    alpha_weight: f64,
    beta_weight: f64,
    penalty: f64,
    alpha_cap: Option<f64>,
}

/// Returns the total violation and the `(α, β, Λ)` part of the optimum.
fn elastic(
    spec: &LinearProgramSpec,
    data: &ProblemData,
    signs: &[[f64; 2]],
    kappa: f64,
    how: &Elastic,
    method: Method,
) -> Result<(f64, Vec<f64>)> {
    let mut e = spec.clone();
    let n = NUM_VARS + COMPONENTS;
    e.objective = vec![0.0; n];
    e.objective[ALPHA] = how.alpha_weight;
    e.objective[BETA] = how.beta_weight;
    e.objective[NUM_VARS..].fill(how.penalty);
    e.equalities.num_cols = n;
    e.inequalities.num_cols = n;
    let mut bounds = spec
        .bounds
        .clone()
        .unwrap_or_else(|| vec![VarBounds::FREE; NUM_VARS]);
    bounds.extend(std::iter::repeat(VarBounds::NONNEGATIVE).take(COMPONENTS));
    if let Some(cap) = how.alpha_cap {
        bounds[ALPHA].upper = cap;
    }
    e.bounds = Some(bounds);
    for (c, s) in signs.iter().enumerate() {
        for w in 0..2 {
            let wb = 1 - w;
            let mut entries = vec![(lam(w, c), s[w]), (lam(wb, c), -kappa * s[wb])];
            entries.sort_by_key(|x| x.0);
            entries.push((NUM_VARS + c, -1.0));
            e.inequalities.push(
                SparseRow(entries),
                -s[w] * data.m[w][c] + kappa * s[wb] * data.m[wb][c],
            );
        }
    }
    let sol = optimal(lp::solve_with(&e, method)?, "elastic objective")?
        .ok_or_else(|| Error::Solver("elastic program reported infeasible".into()))?;
    let violation = sol.primal[NUM_VARS..].iter().sum();
    Ok((violation, sol.primal[..NUM_VARS].to_vec()))
}

fn read_signs(primal: &[f64], data: &ProblemData) -> Vec<[f64; 2]> {
    (0..COMPONENTS)
        .map(|c| {
            std::array::from_fn(|w| {
                let g = data.m[w][c] + primal[lam(w, c)];
                if g < -SIGN_ZERO {
                    -1.0
                } else {
                    1.0
                }
            })
        })
        .collect()
}

fn signed_program(
    spec: &LinearProgramSpec,
    data: &ProblemData,
    signs: &[[f64; 2]],
    kappa: f64,
) -> LinearProgramSpec {
    let mut signed = spec.clone();
    add_sign_rows(&mut signed, data, signs, kappa);
    signed
}

/// Penalty rounds: each minimizes `α` plus a growing multiple of the ratio
/// violation, then re-reads the signs from the optimum. Stops at the first
/// sign pattern whose stage-2 program is feasible.
fn repair_signs(
    spec: &LinearProgramSpec,
    data: &ProblemData,
    mut signs: Vec<[f64; 2]>,
    kappa: f64,
    opts: &LambdaOptions,
) -> Result<Option<(Vec<f64>, usize)>> {
    let mut penalty = opts.repair_penalty;
    for round in 1..=opts.repair_rounds {
        let how = Elastic {
            alpha_weight: 1.0,
            beta_weight: 0.0,
            penalty,
            alpha_cap: None,
        };
        let (violation, point) = elastic(spec, data, &signs, kappa, &how, opts.explore)?;
        signs = read_signs(&point, data);
        log::debug!(
            "repair round {round}: alpha {} violation {violation:e}",
            point[ALPHA]
        );
        if violation <= REPAIR_TOLERANCE {
            let signed = signed_program(spec, data, &signs, kappa);
            if let Some(sol) = lexicographic(&signed, opts.finish)? {
                return Ok(Some((sol, round)));
            }
        }
        penalty *= opts.repair_growth;
    }
    Ok(None)
}

/// With `α` capped at its stage-2 optimum, trades `β` against the ratio
/// violation to move to sign patterns with a smaller `β`. Keeps a pattern
/// only if its lexicographic optimum improves `β` without raising `α`.
fn lower_beta(
    spec: &LinearProgramSpec,
    data: &ProblemData,
    best: Vec<f64>,
    kappa: f64,
    opts: &LambdaOptions,
) -> Result<Vec<f64>> {
    let mut best = best;
    let cap = lex_cap(best[ALPHA]);
    let mut signs = read_signs(&best, data);
    let mut penalty = opts.beta_penalty;
    for round in 1..=opts.beta_rounds {
        if best[BETA] <= BETA_FLOOR + BETA_PROGRESS {
            break;
        }
        let how = Elastic {
            alpha_weight: 0.0,
            beta_weight: 1.0,
            penalty,
            alpha_cap: Some(cap),
        };
        let (violation, point) = elastic(spec, data, &signs, kappa, &how, opts.explore)?;
        penalty *= opts.repair_growth;
        let next_signs = read_signs(&point, data);
        let unchanged = next_signs == signs;
        signs = next_signs;
        log::debug!(
            "beta round {round}: beta {} violation {violation:e}",
            point[BETA]
        );
        if violation > REPAIR_TOLERANCE {
            continue;
        }
        let mut signed = signed_program(spec, data, &signs, kappa);
        signed.inequalities.push(SparseRow(vec![(ALPHA, 1.0)]), cap);
        signed.objective[ALPHA] = 0.0;
        signed.objective[BETA] = 1.0;
        let Some(next) = optimal(lp::solve_with(&signed, opts.finish)?, "beta")? else {
            continue;
        };
        log::debug!("beta round {round}: exact beta {}", next.value);
        let improved = next.value < best[BETA] - BETA_PROGRESS;
        if next.value < best[BETA] {
            best = next.primal;
        }
        if unchanged || !improved {
            break;
        }
    }
    Ok(best)
}

fn vectors_from(
    primal: &[f64],
    setting: usize,
    gamma: f64,
    stage1_alpha: f64,
) -> DistillationVectors {
    let slice = |w: usize| primal[lam(w, 0)..lam(w, 0) + COMPONENTS].to_vec();
    DistillationVectors {
        setting,
        gamma,
        alpha: primal[ALPHA],
        beta: primal[BETA],
        lambda0: slice(0),
        lambda1: slice(1),
        lambda2: slice(2),
        stage1_alpha,
        repair_rounds: 0,
    }
}

/// Runs both stages for setting `x₀` and verifies the result.
pub fn solve_lambda_vectors(setting: usize, gamma: f64) -> Result<DistillationVectors> {
    solve_lambda_vectors_with(setting, gamma, &LambdaOptions::default())
}

fn check_inputs(setting: usize, gamma: f64, bell: &BellFunctional) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "gamma must lie in (0, 1), got {gamma}"
        )));
    }
    if !bell.is_supported(setting) {
        return Err(Error::InvalidArgument(format!(
            "setting {} is not in the Mermin support",
            bits_to_string(setting, QUINTUPLET)
        )));
    }
    Ok(())
}

/// Solves both stages for `x₀` directly.
pub fn solve_lambda_vectors_with(
    setting: usize,
    gamma: f64,
    opts: &LambdaOptions,
) -> Result<DistillationVectors> {
    let bell = mermin_coefficients(QUINTUPLET)?;
    check_inputs(setting, gamma, &bell)?;
    solve_setting(setting, gamma, opts, bell)
}

/// Starting settings for the all-settings solve: one per number of zeros
/// among the three majority parties, where the sign search behaves
/// differently.
fn start_settings(bell: &BellFunctional, count: usize) -> Vec<usize> {
    let zeros = |x: usize| 3 - (x & 0b111).count_ones();
    let support = bell.support();
    let mut starts: Vec<usize> = Vec::new();
    for &x in &support {
        if !starts.iter().any(|&s| zeros(s) == zeros(x)) {
            starts.push(x);
        }
    }
    starts.extend(
        support
            .iter()
            .filter(|x| !starts.contains(x))
            .collect::<Vec<_>>(),
    );
    starts.truncate(count.max(1));
    starts
}

/// Vectors for every supported setting with common `α` and `β`, in
/// [`BellFunctional::support`] order. All settings are related by local
/// relabellings, so the best solve over a few starting settings, lowest
/// `α` then lowest `β`, is carried over to each of them.
pub fn solve_all_lambda_vectors(
    gamma: f64,
    opts: &LambdaOptions,
) -> Result<Vec<DistillationVectors>> {
    let bell = mermin_coefficients(QUINTUPLET)?;
    let support = bell.support();
    check_inputs(support[0], gamma, &bell)?;
    let mut best: Option<DistillationVectors> = None;
    for x in start_settings(&bell, opts.starts) {
        let v = solve_setting(x, gamma, opts, bell.clone())?;
        log::debug!(
            "start {}: alpha {} beta {}",
            v.setting_string(),
            v.alpha,
            v.beta
        );
        let better = best.as_ref().is_none_or(|b| {
            v.alpha < lex_cap(b.alpha) && (v.alpha < b.alpha - ALPHA_GAP || v.beta < b.beta)
        });
        if better {
            best = Some(v);
        }
    }
    let best = best.expect("at least one start");
    support
        .iter()
        .map(|&x| transported(&best, &Symmetry::between(best.setting, x), x, &bell))
        .collect()
}

fn transported(
    v: &DistillationVectors,
    g: &Symmetry,
    setting: usize,
    bell: &BellFunctional,
) -> Result<DistillationVectors> {
    let moved = DistillationVectors {
        setting,
        lambda0: g.transport(&v.lambda0),
        lambda1: g.transport(&v.lambda1),
        lambda2: g.transport(&v.lambda2),
        ..v.clone()
    };
    let report = moved.verify(bell)?;
    if !report.passes(VERIFY_TOLERANCE) {
        return Err(Error::Verification(format!("{report:?}")));
    }
    Ok(moved)
}

/// Stage 1 minimizes `α` over the octagon program and reads the signs of
/// `Γ_w`; stage 2 adds the signed-ratio rows and minimizes `α` then `β`.
/// If the stage-1 signs leave stage 2 infeasible, they are repaired by
/// penalty rounds before the final solve.
fn solve_setting(
    setting: usize,
    gamma: f64,
    opts: &LambdaOptions,
    bell: BellFunctional,
) -> Result<DistillationVectors> {
    let data = ProblemData {
        basis: nosignalling_span_basis(QUINTUPLET)?,
        m: [
            majority_indicator(setting, 0),
            majority_indicator(setting, 1),
        ],
        bell,
    };
    let kappa = ratio_prefactor(gamma);
    let spec = base_program(&data);

    let Some(stage1) = optimal(lp::solve_with(&spec, opts.explore)?, "alpha")? else {
        return Err(Error::Infeasible {
            stage: Stage::Octagon.label(),
            gamma,
        });
    };
    let stage1_alpha = stage1.value;
    log::debug!(
        "x0={} stage 1: alpha={stage1_alpha}",
        bits_to_string(setting, QUINTUPLET)
    );

    let signs = read_signs(&stage1.primal, &data);
    let mut repair_rounds = 0;
    let mut stage2 = lexicographic(&signed_program(&spec, &data, &signs, kappa), opts.finish)?;
    if stage2.is_none() {
        log::debug!("stage-1 signs infeasible, repairing");
        if let Some((sol, rounds)) = repair_signs(&spec, &data, signs, kappa, opts)? {
            repair_rounds = rounds;
            stage2 = Some(sol);
        }
    }
    let Some(stage2) = stage2 else {
        return Err(Error::Infeasible {
            stage: Stage::SignedRatio.label(),
            gamma,
        });
    };
    let mut stage2 = stage2;
    if stage2[ALPHA] > stage1_alpha + ALPHA_GAP {
        // feasible but above the stage-1 bound: look for better signs
        let signs = read_signs(&stage2, &data);
        if let Some((sol, rounds)) = repair_signs(&spec, &data, signs, kappa, opts)? {
            if sol[ALPHA] < stage2[ALPHA] {
                repair_rounds += rounds;
                stage2 = sol;
            }
        }
    }
    log::debug!("stage 2: alpha={} beta={}", stage2[ALPHA], stage2[BETA]);
    let stage2 = lower_beta(&spec, &data, stage2, kappa, opts)?;

    let mut vectors = vectors_from(&stage2, setting, gamma, stage1_alpha);
    vectors.repair_rounds = repair_rounds;
    let report = vectors.verify(&data.bell)?;
    if !report.passes(VERIFY_TOLERANCE) {
        return Err(Error::Verification(format!("{report:?}")));
    }
    Ok(vectors)
}

/// `(a, x)` components of the supported settings, used to collapse the
/// vectors onto a finite coefficient table.
pub fn supported_components(bell: &BellFunctional) -> Vec<usize> {
    (0..COMPONENTS)
        .filter(|&c| bell.is_supported(split_index(QUINTUPLET, c).1))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        assert!((octagon_scale() - 1.082).abs() < 1e-3);
        let angles = octagon_angles();
        assert!((angles[0] - PI / 8.0).abs() < 1e-15);
        assert!((angles[7] - 15.0 * PI / 8.0).abs() < 1e-15);
        // κ² / (1 + κ²) = γ²
        let k = ratio_prefactor(0.9732);
        assert!((k * k / (1.0 + k * k) - 0.9732f64.powi(2)).abs() < 1e-12);
    }

    #[test]
    fn octagon_lies_inside_circle() {
        // vertices of the octagon sit on the unit circle
        let eta = octagon_scale();
        for k in 0..8 {
            let phi = k as f64 * PI / 4.0;
            let (u, v) = (phi.cos(), phi.sin());
            let worst = octagon_angles()
                .iter()
                .map(|t| eta * (t.cos() * u + t.sin() * v))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((worst - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn majority_indicator_sums_to_setting_row() {
        let m0 = majority_indicator(0b11111, 0);
        let m1 = majority_indicator(0b11111, 1);
        assert_eq!(m0.iter().sum::<f64>(), 16.0);
        assert_eq!(m1.iter().sum::<f64>(), 16.0);
        assert!(m0.iter().zip(&m1).all(|(a, b)| a * b == 0.0));
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(solve_lambda_vectors(0b11111, 1.0).is_err());
        assert!(solve_lambda_vectors(0, 0.9732).is_err());
    }
}
