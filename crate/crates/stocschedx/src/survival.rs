//! Departure survival curves p(t) = Pr(D >= t).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pmf::{Pmf, PROB_TOL};

/// Survival curve of a departure time: `values[t-1] = Pr(D >= t)` for
/// t = 1..=len.
///
/// Every job is present at time 1, so p(1) = 1, and the curve is
/// non-increasing with entries in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SurvivalCurve {
    values: Vec<f64>,
}

impl SurvivalCurve {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidCurve("empty curve".into()));
        }
        if (values[0] - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidCurve(format!(
                "p(1) must be 1, got {}",
                values[0]
            )));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < -PROB_TOL || v > 1.0 + PROB_TOL {
                return Err(Error::InvalidCurve(format!(
                    "p({}) = {v} outside [0, 1]",
                    i + 1
                )));
            }
        }
        if values.windows(2).any(|w| w[1] > w[0] + PROB_TOL) {
            return Err(Error::InvalidCurve("curve must be non-increasing".into()));
        }
        Ok(Self { values })
    }

    /// Number of time steps the curve covers.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// p(t) = Pr(D >= t) for 1-based `t`; 0 beyond the stored range.
    pub fn prob_at(&self, t: usize) -> f64 {
        debug_assert!(t >= 1);
        if t <= self.values.len() {
            self.values[t - 1]
        } else {
            0.0
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Converts a departure-time pmf to its survival curve over `horizon`
    /// steps: p(t) = Pr(D >= t) = tail(t - 1).
    pub fn from_pmf(pmf: &Pmf, horizon: usize) -> Self {
        let values = (1..=horizon).map(|t| pmf.tail(t as u32 - 1)).collect();
        Self::new(values).expect("pmf tail is a valid survival curve")
    }

    /// Per-step departure hazard Pr(D = t | D >= t) = (p(t) - p(t+1)) / p(t).
    ///
    /// Requires 1 <= t < len; errors when p(t) = 0.
    pub fn hazard(&self, t: usize) -> Result<f64> {
        if t < 1 || t >= self.values.len() {
            return Err(Error::InvalidParameter(format!(
                "hazard defined for 1 <= t < {}, got {t}",
                self.values.len()
            )));
        }
        let p_t = self.values[t - 1];
        if p_t <= 0.0 {
            return Err(Error::ZeroSurvival { t });
        }
        let h = (p_t - self.values[t]) / p_t;
        Ok(h.clamp(0.0, 1.0))
    }

    /// Largest t with p(t) > u; determines a sampled departure time from a
    /// uniform draw u in [0, 1). Returns values in 1..=len.
    pub fn departure_from_uniform(&self, u: f64) -> usize {
        let mut d = 1;
        for (i, &p) in self.values.iter().enumerate() {
            if u < p {
                d = i + 1;
            } else {
                break;
            }
        }
        d
    }
}

/// Geometric survival p(t) = q^(t-1) for t = 1..=horizon; q in (0, 1].
pub fn geometric_survival(q: f64, horizon: usize) -> Result<SurvivalCurve> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "geometric survival requires q in (0, 1], got {q}"
        )));
    }
    let values = (0..horizon).map(|k| q.powi(k as i32)).collect();
    SurvivalCurve::new(values)
}
