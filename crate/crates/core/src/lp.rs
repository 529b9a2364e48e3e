//! Sparse linear programs with independently checked certificates.
//!
//! Programs are handed to HiGHS (dual simplex, single thread, fixed seed)
//! and the returned primal/dual pair is re-checked here: primal residuals
//! are measured against the original rows and bounds, reduced costs are
//! recomputed from the row duals, and the dual objective is evaluated as a
//! weak-duality bound. The solver is only trusted to find the point.

use highs::{HighsModelStatus, RowProblem, Sense as HighsSense};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feasibility tolerance passed to the backend.
pub const SOLVER_TOLERANCE: f64 = 1e-10;
/// Primal feasibility residual accepted for an optimal solution.
pub const PRIMAL_TOLERANCE: f64 = 1e-8;
/// Relative duality gap accepted for an optimal solution.
pub const GAP_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

/// A sparse row `(column, coefficient)`, columns strictly increasing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseRow(pub Vec<(usize, f64)>);

impl SparseRow {
    pub fn new(mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_by_key(|&(c, _)| c);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (c, v) in entries {
            match merged.last_mut() {
                Some((last, acc)) if *last == c => *acc += v,
                _ => merged.push((c, v)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        SparseRow(merged)
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.0.iter().map(|&(c, v)| v * x[c]).sum()
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.0
    }

    pub fn to_dense(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for &(c, v) in &self.0 {
            out[c] = v;
        }
        out
    }
}

/// List of sparse rows together with their right-hand sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintMatrix {
    pub num_cols: usize,
    pub rows: Vec<SparseRow>,
    pub rhs: Vec<f64>,
}

impl ConstraintMatrix {
    pub fn new(num_cols: usize) -> Self {
        ConstraintMatrix {
            num_cols,
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn push(&mut self, row: SparseRow, rhs: f64) {
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `row_i · x − rhs_i` for every row.
    pub fn residuals(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, b)| row.dot(x) - b)
            .collect()
    }

    fn validate(&self, num_cols: usize, what: &str) -> Result<()> {
        if self.rows.len() != self.rhs.len() {
            return Err(Error::MalformedProgram(format!(
                "{what}: {} rows but {} right-hand sides",
                self.rows.len(),
                self.rhs.len()
            )));
        }
        if self.num_cols != num_cols {
            return Err(Error::MalformedProgram(format!(
                "{what}: matrix has {} columns, program has {num_cols}",
                self.num_cols
            )));
        }
        for row in &self.rows {
            if let Some(&(c, _)) = row.0.last() {
                if c >= num_cols {
                    return Err(Error::MalformedProgram(format!(
                        "{what}: column {c} out of range"
                    )));
                }
            }
            if row.0.iter().any(|&(_, v)| !v.is_finite()) {
                return Err(Error::MalformedProgram(format!(
                    "{what}: non-finite coefficient"
                )));
            }
        }
        if self.rhs.iter().any(|b| !b.is_finite()) {
            return Err(Error::MalformedProgram(format!(
                "{what}: non-finite right-hand side"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarBounds {
    pub lower: f64,
    pub upper: f64,
}

impl VarBounds {
    pub const FREE: VarBounds = VarBounds {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
    };
    pub const NONNEGATIVE: VarBounds = VarBounds {
        lower: 0.0,
        upper: f64::INFINITY,
    };
    pub const ZERO: VarBounds = VarBounds {
        lower: 0.0,
        upper: 0.0,
    };
}

/// `optimize objective·x` subject to `equalities x = b`, `inequalities x <= c`
/// and per-variable bounds (free when `bounds` is `None`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgramSpec {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub equalities: ConstraintMatrix,
    pub inequalities: ConstraintMatrix,
    pub bounds: Option<Vec<VarBounds>>,
}

impl LinearProgramSpec {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgramSpec {
            sense,
            objective,
            equalities: ConstraintMatrix::new(n),
            inequalities: ConstraintMatrix::new(n),
            bounds: None,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn bound(&self, j: usize) -> VarBounds {
        self.bounds.as_ref().map_or(VarBounds::FREE, |b| b[j])
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::MalformedProgram("non-finite objective".into()));
        }
        self.equalities.validate(n, "equalities")?;
        self.inequalities.validate(n, "inequalities")?;
        if let Some(b) = &self.bounds {
            if b.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: b.len(),
                });
            }
            if b.iter()
                .any(|vb| vb.lower > vb.upper || vb.lower.is_nan() || vb.upper.is_nan())
            {
                return Err(Error::MalformedProgram("empty variable bound".into()));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let eq = self
            .equalities
            .residuals(x)
            .into_iter()
            .map(f64::abs)
            .fold(0.0, f64::max);
        let ineq = self
            .inequalities
            .residuals(x)
            .into_iter()
            .fold(0.0, f64::max);
        let bnd = (0..self.num_vars())
            .map(|j| {
                let b = self.bound(j);
                (b.lower - x[j]).max(x[j] - b.upper).max(0.0)
            })
            .fold(0.0, f64::max);
        eq.max(ineq).max(bnd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

impl std::fmt::Display for LpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
        };
        f.write_str(s)
    }
}

/// Optimality evidence recomputed from the primal/dual pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub primal_residual: f64,
    /// Largest dual sign or reduced-cost violation.
    pub dual_residual: f64,
    /// Weak-duality bound in the program's own sense.
    pub dual_value: f64,
    pub relative_gap: f64,
}

impl Certificate {
    pub fn is_tight(&self) -> bool {
        self.primal_residual <= PRIMAL_TOLERANCE && self.relative_gap <= GAP_TOLERANCE
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LPSolution {
    pub status: LpStatus,
    pub value: f64,
    pub primal: Vec<f64>,
    /// Row multipliers, equalities first, in minimization convention.
    pub dual: Vec<f64>,
    pub certificate: Option<Certificate>,
}

impl LPSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Backend algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Method {
    /// Dual simplex; returns a vertex.
    #[default]
    Simplex,
    /// Interior point; with `crossover` the result is pushed to a vertex,
    /// without it the point lies in the relative interior of the optimal
    /// face (up to solver tolerance).
    InteriorPoint { crossover: bool },
}

/// Solve with the default (deterministic) backend configuration.
pub fn solve(spec: &LinearProgramSpec) -> Result<LPSolution> {
    solve_with(spec, Method::Simplex)
}

/// Solve with the given method. An interior-point run that ends without a
/// definite status is retried with crossover, then with simplex.
pub fn solve_with(spec: &LinearProgramSpec, method: Method) -> Result<LPSolution> {
    spec.validate()?;
    let mut method = method;
    loop {
        match solve_once(spec, method) {
            Err(Error::Solver(msg)) if method != Method::Simplex => {
                let next = match method {
                    Method::InteriorPoint { crossover: false } => {
                        Method::InteriorPoint { crossover: true }
                    }
                    _ => Method::Simplex,
                };
                log::warn!("{method:?} ended with {msg}; retrying with {next:?}");
                method = next;
            }
            other => return other,
        }
    }
}

fn solve_once(spec: &LinearProgramSpec, method: Method) -> Result<LPSolution> {
    let n = spec.num_vars();
    let flip = match spec.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };

    let mut pb = RowProblem::default();
    let cols: Vec<_> = (0..n)
        .map(|j| {
            let b = spec.bound(j);
            pb.add_column(flip * spec.objective[j], b.lower..=b.upper)
        })
        .collect();
    let mut buf = Vec::new();
    for (row, &b) in spec.equalities.rows.iter().zip(&spec.equalities.rhs) {
        buf.clear();
        buf.extend(row.0.iter().map(|&(c, v)| (cols[c], v)));
        pb.add_row(b..=b, &buf);
    }
    for (row, &b) in spec.inequalities.rows.iter().zip(&spec.inequalities.rhs) {
        buf.clear();
        buf.extend(row.0.iter().map(|&(c, v)| (cols[c], v)));
        pb.add_row(..=b, &buf);
    }

    let mut model = pb.optimise(HighsSense::Minimise);
    model.set_option("output_flag", log::log_enabled!(log::Level::Trace));
    model.set_option("threads", 1);
    model.set_option("random_seed", 0);
    match method {
        Method::Simplex => model.set_option("solver", "simplex"),
        Method::InteriorPoint { crossover } => {
            model.set_option("solver", "ipm");
            model.set_option("run_crossover", if crossover { "on" } else { "off" });
        }
    }
    model.set_option("primal_feasibility_tolerance", SOLVER_TOLERANCE);
    model.set_option("dual_feasibility_tolerance", SOLVER_TOLERANCE);
    let solved = model.solve();

    let status = match solved.status() {
        HighsModelStatus::Optimal => LpStatus::Optimal,
        HighsModelStatus::Infeasible => LpStatus::Infeasible,
        HighsModelStatus::Unbounded | HighsModelStatus::UnboundedOrInfeasible => {
            LpStatus::Unbounded
        }
        other => return Err(Error::Solver(format!("{other:?}"))),
    };
    if status != LpStatus::Optimal {
        return Ok(LPSolution {
            status,
            value: f64::NAN,
            primal: Vec::new(),
            dual: Vec::new(),
            certificate: None,
        });
    }

    let sol = solved.get_solution();
    let primal = sol.columns().to_vec();
    let dual = sol.dual_rows().to_vec();
    let value = spec.objective_value(&primal);
    let certificate = certify(spec, &primal, &dual);
    Ok(LPSolution {
        status,
        value,
        primal,
        dual,
        certificate: Some(certificate),
    })
}

/// Recompute primal residual, reduced costs and the weak-duality bound.
///
/// `dual` is in the minimization convention for `flip·objective`: one entry
/// per equality row (free sign) followed by one per inequality row (`<= 0`).
pub fn certify(spec: &LinearProgramSpec, primal: &[f64], dual: &[f64]) -> Certificate {
    let n = spec.num_vars();
    let flip = match spec.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let n_eq = spec.equalities.len();

    let mut reduced: Vec<f64> = spec.objective.iter().map(|c| flip * c).collect();
    let mut dual_value = 0.0;
    let mut dual_residual: f64 = 0.0;
    let all_rows = spec
        .equalities
        .rows
        .iter()
        .zip(&spec.equalities.rhs)
        .chain(spec.inequalities.rows.iter().zip(&spec.inequalities.rhs));
    for (i, (row, &b)) in all_rows.enumerate() {
        let mut y = dual.get(i).copied().unwrap_or(0.0);
        if i >= n_eq && y > 0.0 {
            // positive multiplier on a `<=` row has the wrong sign
            dual_residual = dual_residual.max(y);
            y = 0.0;
        }
        dual_value += y * b;
        for &(c, v) in &row.0 {
            reduced[c] -= y * v;
        }
    }
    for (j, &z) in reduced.iter().enumerate().take(n) {
        let b = spec.bound(j);
        if z > 0.0 {
            if b.lower.is_finite() {
                dual_value += z * b.lower;
            } else {
                dual_residual = dual_residual.max(z);
            }
        } else if z < 0.0 {
            if b.upper.is_finite() {
                dual_value += z * b.upper;
            } else {
                dual_residual = dual_residual.max(-z);
            }
        }
    }
    let primal_min = flip * spec.objective_value(primal);
    let relative_gap = (primal_min - dual_value).abs() / primal_min.abs().max(1.0);
    Certificate {
        primal_residual: spec.primal_residual(primal),
        dual_residual,
        dual_value: flip * dual_value,
        relative_gap,
    }
}
