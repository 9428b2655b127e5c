//! Solver backend. The contract is solver-agnostic: status `Optimal` implies
//! primal feasibility within `FEAS_TOL` and an objective within `OPT_TOL` of
//! the true optimum; tests certify this against an independent dense-simplex
//! re-solve.

use minilp::{ComparisonOp, OptimizationDirection, Problem};

use super::{check_model_feasibility, LpModel, LpSolution, LpStatus};
use crate::error::{Error, Result};

/// Solves a model to optimality.
///
/// The returned matrix is polished to exact primal feasibility: negatives are
/// clamped to zero and, if any row is violated, the whole solution is scaled
/// down by the worst ratio. All rows have non-negative coefficients and
/// right-hand sides, so scaling preserves feasibility of every row at a
/// negligible objective cost.
pub fn solve_lp(model: &LpModel) -> Result<LpSolution> {
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let handles: Vec<_> = model
        .vars()
        .iter()
        .map(|v| problem.add_var(v.obj_coef, (0.0, v.upper)))
        .collect();
    for row in model.rows() {
        if row.terms.is_empty() {
            continue;
        }
        let expr: Vec<_> = row
            .terms
            .iter()
            .map(|&(vi, coef)| (handles[vi], coef))
            .collect();
        problem.add_constraint(&expr, ComparisonOp::Le, row.rhs);
    }

    let solution = problem.solve().map_err(|e| match e {
        minilp::Error::Infeasible => Error::LpInfeasible,
        minilp::Error::Unbounded => {
            Error::LpNumericalIssue("solver reported unbounded on a bounded model".into())
        }
    })?;

    let mut x = vec![vec![0.0; model.horizon()]; model.n_jobs()];
    for (v, h) in model.vars().iter().zip(&handles) {
        x[v.job][v.t - 1] = solution[*h].max(0.0);
    }
    polish(model, &mut x);

    let objective = model.objective_of(&x);
    let report = check_model_feasibility(model, &x)?;
    if report.max_residual > super::FEAS_TOL {
        return Err(Error::LpNumericalIssue(format!(
            "residual {} after polishing",
            report.max_residual
        )));
    }
    Ok(LpSolution {
        objective,
        x,
        status: LpStatus::Optimal,
        max_residual: report.max_residual,
    })
}

fn polish(model: &LpModel, x: &mut [Vec<f64>]) {
    // Rows with zero capacity admit no mass on their variables.
    for row in model.rows() {
        if row.rhs <= 0.0 {
            for &(vi, coef) in &row.terms {
                if coef > 0.0 {
                    let v = model.vars()[vi];
                    x[v.job][v.t - 1] = 0.0;
                }
            }
        }
    }
    let mut scale = 1.0f64;
    for row in model.rows() {
        if row.rhs > 0.0 {
            let lhs: f64 = row
                .terms
                .iter()
                .map(|&(vi, coef)| {
                    let v = model.vars()[vi];
                    coef * x[v.job][v.t - 1]
                })
                .sum();
            scale = scale.max(lhs / row.rhs);
        }
    }
    if scale > 1.0 {
        let factor = scale * (1.0 + 1e-12);
        for row in x.iter_mut() {
            for v in row.iter_mut() {
                *v /= factor;
            }
        }
    }
}
