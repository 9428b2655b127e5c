//! Time-indexed LP relaxation of the scheduling problem and its variants.
//!
//! The base model has one variable x_{j,t} per job j and time t with
//! positive survival p_j(t), interpreted as the probability that a policy
//! runs job j at time t. Constraints:
//!
//! - one `JobOnce` row per job:     sum_t x_{j,t} / p_j(t) <= 1
//! - one `ServerBusy` row per time: sum_{tau<=t} sum_j x_{j,tau} * Pr(S_j > t-tau) <= 1
//!
//! Deadline, knapsack and cardinality variants adjust coefficients or append
//! rows. Cells with p_j(t) = 0 are eliminated at build time; a policy can
//! never run a departed job, and eliminating the cell avoids division by
//! zero.

mod export;
mod solve;

pub use export::write_lp_format;
pub use solve::solve_lp;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;

/// Feasibility tolerance on constraint residuals.
pub const FEAS_TOL: f64 = 1e-7;
/// Optimality tolerance on objective values.
pub const OPT_TOL: f64 = 1e-6;

/// Identifies what a constraint row encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowTag {
    /// Job j is run at most once (in expectation).
    JobOnce(usize),
    /// The server is occupied by at most one job at time t (1-based).
    ServerBusy(usize),
    Knapsack,
    Cardinality,
}

impl std::fmt::Display for RowTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RowTag::JobOnce(j) => write!(f, "job_{j}"),
            RowTag::ServerBusy(t) => write!(f, "busy_{t}"),
            RowTag::Knapsack => write!(f, "knapsack"),
            RowTag::Cardinality => write!(f, "cardinality"),
        }
    }
}

/// A variable of the model: the (job, time) cell it covers, its objective
/// coefficient, and an upper bound implied by the job-once row.
#[derive(Debug, Clone, Copy)]
pub struct VarInfo {
    pub job: usize,
    pub t: usize,
    pub obj_coef: f64,
    pub upper: f64,
}

/// Sparse constraint row over variable indices.
#[derive(Debug, Clone)]
pub struct Row {
    pub tag: RowTag,
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// Sparse LP in the variable space of non-eliminated (job, time) cells.
#[derive(Debug, Clone)]
pub struct LpModel {
    n_jobs: usize,
    horizon: usize,
    vars: Vec<VarInfo>,
    /// var_of[j][t-1] = index into `vars`, None for eliminated cells.
    var_of: Vec<Vec<Option<usize>>>,
    rows: Vec<Row>,
}

impl LpModel {
    pub fn n_jobs(&self) -> usize {
        self.n_jobs
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn vars(&self) -> &[VarInfo] {
        &self.vars
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn var_index(&self, job: usize, t: usize) -> Option<usize> {
        self.var_of[job][t - 1]
    }

    /// Objective value of an n x H assignment under this model's coefficients.
    pub fn objective_of(&self, x: &[Vec<f64>]) -> f64 {
        self.vars
            .iter()
            .map(|v| v.obj_coef * x[v.job][v.t - 1])
            .sum()
    }

    fn lhs_of(&self, row: &Row, x: &[Vec<f64>]) -> f64 {
        row.terms
            .iter()
            .map(|&(vi, coef)| {
                let v = &self.vars[vi];
                coef * x[v.job][v.t - 1]
            })
            .sum()
    }
}

/// Builds the base relaxation for an instance.
pub fn build_lp_sched(instance: &Instance) -> Result<LpModel> {
    instance.validate()?;
    let horizon = instance.horizon;
    build_inner(instance, |_, _| horizon, |job, _| instance.jobs[job].value)
}

/// Builds the deadline variant: value is collected only when service
/// completes by the job's deadline, so the coefficient of x_{j,t} becomes
/// v_j * Pr(S_j <= B_j - t) and all sums stop at B_j.
pub fn build_lp_deadline(instance: &Instance) -> Result<LpModel> {
    instance.validate()?;
    let deadlines = instance.deadlines.clone().ok_or(Error::MissingDeadlines)?;
    let horizon = instance.horizon;
    build_inner(
        instance,
        |job, _| deadlines[job].min(horizon),
        |job, t| {
            let b = deadlines[job];
            let slack = b.saturating_sub(t) as u32;
            instance.jobs[job].value * instance.jobs[job].service.cdf(slack)
        },
    )
}

fn build_inner(
    instance: &Instance,
    last_t: impl Fn(usize, usize) -> usize,
    obj: impl Fn(usize, usize) -> f64,
) -> Result<LpModel> {
    let n = instance.n_jobs();
    let horizon = instance.horizon;

    let mut vars = Vec::new();
    let mut var_of = vec![vec![None; horizon]; n];
    for (j, job) in instance.jobs.iter().enumerate() {
        let limit = last_t(j, horizon);
        for t in 1..=limit {
            let p = job.departure.prob_at(t);
            if p > 0.0 {
                var_of[j][t - 1] = Some(vars.len());
                vars.push(VarInfo {
                    job: j,
                    t,
                    obj_coef: obj(j, t),
                    upper: p,
                });
            }
        }
    }

    let mut rows = Vec::with_capacity(n + horizon);
    for (j, job) in instance.jobs.iter().enumerate() {
        let terms = (1..=horizon)
            .filter_map(|t| {
                var_of[j][t - 1].map(|vi| (vi, 1.0 / job.departure.prob_at(t)))
            })
            .collect();
        rows.push(Row {
            tag: RowTag::JobOnce(j),
            terms,
            rhs: 1.0,
        });
    }
    // A variable at (j, tau) occupies server rows tau..tau+maxS_j-1 with the
    // service tail as coefficient; scattering per variable keeps the build
    // linear in the number of nonzeros.
    let mut busy_terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); horizon];
    for (vi, v) in vars.iter().enumerate() {
        let service = &instance.jobs[v.job].service;
        let max_s = service.max_support() as usize;
        for t in v.t..=(v.t + max_s - 1).min(horizon) {
            let coef = service.tail((t - v.t) as u32);
            if coef > 0.0 {
                busy_terms[t - 1].push((vi, coef));
            }
        }
    }
    for (ti, terms) in busy_terms.into_iter().enumerate() {
        rows.push(Row {
            tag: RowTag::ServerBusy(ti + 1),
            terms,
            rhs: 1.0,
        });
    }

    Ok(LpModel {
        n_jobs: n,
        horizon,
        vars,
        var_of,
        rows,
    })
}

/// Appends the knapsack row sum_j sum_t w_j x_{j,t} <= capacity.
pub fn with_knapsack(mut model: LpModel, weights: &[f64], capacity: f64) -> Result<LpModel> {
    if weights.len() != model.n_jobs {
        return Err(Error::DimensionMismatch {
            expected: format!("{} weights", model.n_jobs),
            got: format!("{}", weights.len()),
        });
    }
    if capacity < 0.0 || weights.iter().any(|&w| w < 0.0) {
        return Err(Error::InvalidParameter(
            "knapsack weights and capacity must be non-negative".into(),
        ));
    }
    let terms = model
        .vars
        .iter()
        .enumerate()
        .filter(|(_, v)| weights[v.job] != 0.0)
        .map(|(vi, v)| (vi, weights[v.job]))
        .collect();
    model.rows.push(Row {
        tag: RowTag::Knapsack,
        terms,
        rhs: capacity,
    });
    Ok(model)
}

/// Appends the cardinality row sum_j sum_t x_{j,t} <= k (unit weights).
pub fn with_cardinality(mut model: LpModel, k: usize) -> Result<LpModel> {
    let terms = model.vars.iter().enumerate().map(|(vi, _)| (vi, 1.0)).collect();
    model.rows.push(Row {
        tag: RowTag::Cardinality,
        terms,
        rhs: k as f64,
    });
    Ok(model)
}

/// Solver outcome classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    NumericalIssue,
}

/// A solved relaxation: the full n x H matrix (zeros on eliminated cells),
/// its objective value and the largest constraint violation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpSolution {
    pub objective: f64,
    pub x: Vec<Vec<f64>>,
    pub status: LpStatus,
    pub max_residual: f64,
}

impl LpSolution {
    /// Handy constructor for analytically known solutions used in tests and
    /// benchmarks (e.g. x_{j,1} = 1/n on the hard instance).
    pub fn from_matrix(x: Vec<Vec<f64>>, values: &[f64]) -> Self {
        let objective = x
            .iter()
            .zip(values)
            .map(|(row, &v)| v * row.iter().sum::<f64>())
            .sum();
        LpSolution {
            objective,
            x,
            status: LpStatus::Optimal,
            max_residual: 0.0,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Residual of one row plus its tag, as reported by `check_feasibility`.
#[derive(Debug, Clone)]
pub struct RowResidual {
    pub tag: RowTag,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub rows: Vec<RowResidual>,
    /// Violation of variable bounds: negative entries or mass on eliminated
    /// cells.
    pub bounds_residual: f64,
    pub max_residual: f64,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.max_residual <= FEAS_TOL
    }
}

/// Checks an assignment against a model's rows and variable bounds.
pub fn check_model_feasibility(model: &LpModel, x: &[Vec<f64>]) -> Result<FeasibilityReport> {
    if x.len() != model.n_jobs || x.iter().any(|r| r.len() != model.horizon) {
        return Err(Error::DimensionMismatch {
            expected: format!("{} x {}", model.n_jobs, model.horizon),
            got: format!(
                "{} x {}",
                x.len(),
                x.first().map(|r| r.len()).unwrap_or(0)
            ),
        });
    }
    let mut bounds_residual = 0.0f64;
    for (j, row) in x.iter().enumerate() {
        for (ti, &v) in row.iter().enumerate() {
            if v < 0.0 {
                bounds_residual = bounds_residual.max(-v);
            }
            if model.var_of[j][ti].is_none() && v != 0.0 {
                bounds_residual = bounds_residual.max(v.abs());
            }
        }
    }
    let rows: Vec<RowResidual> = model
        .rows
        .iter()
        .map(|row| {
            let lhs = model.lhs_of(row, x);
            RowResidual {
                tag: row.tag,
                lhs,
                rhs: row.rhs,
                residual: (lhs - row.rhs).max(0.0),
            }
        })
        .collect();
    let max_residual = rows
        .iter()
        .map(|r| r.residual)
        .fold(bounds_residual, f64::max);
    Ok(FeasibilityReport {
        rows,
        bounds_residual,
        max_residual,
    })
}

/// Checks an assignment against the base model of `instance`, including the
/// knapsack/cardinality rows when the instance carries them.
pub fn check_feasibility(instance: &Instance, x: &[Vec<f64>]) -> Result<FeasibilityReport> {
    let mut model = build_lp_sched(instance)?;
    if let (Some(w), Some(cap)) = (&instance.weights, instance.capacity) {
        model = with_knapsack(model, w, cap)?;
    }
    if let Some(k) = instance.cardinality {
        model = with_cardinality(model, k)?;
    }
    check_model_feasibility(&model, x)
}
