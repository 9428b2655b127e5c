//! Plain-text LP-format export for cross-checking models with external
//! solvers.

use std::fmt::Write as _;

use super::LpModel;

/// Renders the model in the industry-standard LP file format. Variables are
/// named `x_<job>_<t>`.
pub fn write_lp_format(model: &LpModel) -> String {
    let mut out = String::new();
    out.push_str("Maximize\n obj:");
    let mut first = true;
    for v in model.vars() {
        if v.obj_coef == 0.0 {
            continue;
        }
        if first {
            let _ = write!(out, " {} x_{}_{}", fmt_coef(v.obj_coef), v.job, v.t);
            first = false;
        } else {
            let _ = write!(out, " + {} x_{}_{}", fmt_coef(v.obj_coef), v.job, v.t);
        }
    }
    if first {
        out.push_str(" 0 x_0_1");
    }
    out.push_str("\nSubject To\n");
    for row in model.rows() {
        if row.terms.is_empty() {
            continue;
        }
        let _ = write!(out, " {}:", row.tag);
        for (i, &(vi, coef)) in row.terms.iter().enumerate() {
            let v = model.vars()[vi];
            if i == 0 {
                let _ = write!(out, " {} x_{}_{}", fmt_coef(coef), v.job, v.t);
            } else {
                let _ = write!(out, " + {} x_{}_{}", fmt_coef(coef), v.job, v.t);
            }
        }
        let _ = writeln!(out, " <= {}", fmt_coef(row.rhs));
    }
    out.push_str("Bounds\n");
    for v in model.vars() {
        let _ = writeln!(out, " 0 <= x_{}_{} <= {}", v.job, v.t, fmt_coef(v.upper));
    }
    out.push_str("End\n");
    out
}

fn fmt_coef(c: f64) -> String {
    if c == c.trunc() && c.abs() < 1e15 {
        format!("{}", c as i64)
    } else {
        format!("{c}")
    }
}
