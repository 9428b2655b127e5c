//! Monte-Carlo estimation of the attenuation table.
//!
//! The entry f_{j,t} is the probability that the consideration-set process
//! has not considered job j before time t and the server is free at t,
//! conditioned on j being alive at t. Row t is estimated from M truncated
//! simulations of the process that use only the already-estimated rows
//! tau < t, so the table is built strictly left to right.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lp::{check_feasibility, LpSolution};
use crate::policies::simalg_probability;

/// Which denominator the estimator divides by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FEstimator {
    /// Count of simulations where job j is alive at t: a consistent
    /// estimator of the conditional probability defining f.
    #[default]
    Conditional,
    /// Total simulation count M, as in the raw Count/M bookkeeping.
    Joint,
}

impl FEstimator {
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "conditional" => Ok(FEstimator::Conditional),
            "joint" => Ok(FEstimator::Joint),
            other => Err(Error::Configuration(format!(
                "unknown f-estimator `{other}` (expected joint|conditional)"
            ))),
        }
    }
}

/// Estimated (or exact) attenuation values f_{j,t}, with the simulation
/// budget and per-cell diagnostic counts retained for analysis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttenuationTable {
    pub epsilon: f64,
    #[serde(rename = "M")]
    pub sims_per_step: usize,
    /// f[j][t-1] for t = 1..=horizon; every entry lies in [0, 1].
    pub f: Vec<Vec<f64>>,
    /// Joint-event counts per (j, t); empty for exact/constant tables.
    #[serde(skip)]
    pub joint_counts: Vec<Vec<u32>>,
    /// Conditioning (alive) counts per (j, t); empty for exact/constant tables.
    #[serde(skip)]
    pub alive_counts: Vec<Vec<u32>>,
    /// Cells where the conditioning count was 0 and f fell back to 1.
    #[serde(skip)]
    pub fallback_cells: Vec<(usize, usize)>,
}

impl AttenuationTable {
    pub fn constant(n_jobs: usize, horizon: usize, value: f64) -> Self {
        AttenuationTable {
            epsilon: 0.0,
            sims_per_step: 0,
            f: vec![vec![value; horizon]; n_jobs],
            joint_counts: Vec::new(),
            alive_counts: Vec::new(),
            fallback_cells: Vec::new(),
        }
    }

    /// The identity table f = 1 (no attenuation).
    pub fn ones(n_jobs: usize, horizon: usize) -> Self {
        Self::constant(n_jobs, horizon, 1.0)
    }

    pub fn from_matrix(f: Vec<Vec<f64>>) -> Self {
        AttenuationTable {
            epsilon: 0.0,
            sims_per_step: 0,
            f,
            joint_counts: Vec::new(),
            alive_counts: Vec::new(),
            fallback_cells: Vec::new(),
        }
    }

    /// f_{j,t}; 1 outside the stored range.
    pub fn value(&self, j: usize, t: usize) -> f64 {
        self.f
            .get(j)
            .and_then(|row| row.get(t - 1))
            .copied()
            .unwrap_or(1.0)
    }

    pub fn n_jobs(&self) -> usize {
        self.f.len()
    }

    pub fn horizon(&self) -> usize {
        self.f.first().map(|r| r.len()).unwrap_or(0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let table: AttenuationTable = serde_json::from_str(text)?;
        if table.f.iter().flatten().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::Configuration(
                "attenuation entries must lie in [0, 1]".into(),
            ));
        }
        Ok(table)
    }
}

/// Simulation budget from the plug-in formula
/// M = ceil(2 n^2 T v_max mu / eps) with mu = 3 ln(2/delta) / eps^2 and
/// delta = eps / (n^2 T). Decreasing in eps; callers cap it.
pub fn default_budget(n: usize, t_max: usize, v_max: f64, epsilon: f64) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let n2t = (n * n * t_max) as f64;
    let delta = epsilon / n2t;
    let mu = 3.0 * (2.0 / delta).ln() / (epsilon * epsilon);
    Ok((2.0 * n2t * v_max * mu / epsilon).ceil() as u64)
}

/// Zeroes every x*_{j,t} below eps / (n^2 T v_j). The removed mass costs at
/// most eps * H / (n T) of objective in absolute terms.
pub fn threshold_lp(lp: &LpSolution, instance: &Instance, epsilon: f64) -> Result<LpSolution> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let n = instance.n_jobs();
    let t_max = instance.max_service();
    let mut out = lp.clone();
    for (j, row) in out.x.iter_mut().enumerate() {
        let cut = epsilon / ((n * n * t_max) as f64 * instance.jobs[j].value);
        for v in row.iter_mut() {
            if *v < cut {
                *v = 0.0;
            }
        }
    }
    out.objective = out
        .x
        .iter()
        .zip(&instance.jobs)
        .map(|(row, job)| job.value * row.iter().sum::<f64>())
        .sum();
    out.max_residual = check_feasibility(instance, &out.x)?.max_residual;
    Ok(out)
}

/// Outcome of one truncated simulation, observed at the target time.
struct Observation {
    alive: Vec<bool>,
    not_considered: Vec<bool>,
    server_free: bool,
}

/// Simulates the epsilon-mode consideration process through time `upto - 1`
/// and reports the state at time `upto`.
fn truncated_run(
    instance: &Instance,
    x: &LpSolution,
    table_so_far: &AttenuationTable,
    epsilon: f64,
    atten_const: f64,
    upto: usize,
    rng: &mut ChaCha8Rng,
) -> Observation {
    use rand::Rng;

    let n = instance.n_jobs();
    let departure: Vec<usize> = instance
        .jobs
        .iter()
        .map(|j| j.departure.departure_from_uniform(rng.gen::<f64>()))
        .collect();
    let mut considered = vec![false; n];
    let mut free_at = 1usize;

    for t in 1..upto {
        if free_at <= t {
            let mut best: Option<usize> = None;
            for j in 0..n {
                if considered[j] || departure[j] < t {
                    continue;
                }
                let f = table_so_far.value(j, t);
                let prob = simalg_probability(
                    instance,
                    x,
                    j,
                    t,
                    f,
                    atten_const,
                    Some(epsilon),
                );
                if rng.gen::<f64>() < prob {
                    considered[j] = true;
                    let take = match best {
                        None => true,
                        Some(b) => instance.jobs[j].value > instance.jobs[b].value,
                    };
                    if take {
                        best = Some(j);
                    }
                }
            }
            if let Some(j) = best {
                let service = instance.jobs[j].service.sample_with(rng.gen::<f64>()) as usize;
                free_at = t + service;
            }
        }
    }

    Observation {
        alive: (0..n).map(|j| departure[j] >= upto).collect(),
        not_considered: considered.iter().map(|&c| !c).collect(),
        server_free: free_at <= upto,
    }
}

/// Estimates the attenuation table with `m` simulations per time step,
/// dividing per the conditional estimator. See [`estimate_f_with`].
pub fn estimate_f(
    instance: &Instance,
    lp: &LpSolution,
    epsilon: f64,
    m: usize,
    seed: u64,
) -> Result<AttenuationTable> {
    estimate_f_with(
        instance,
        lp,
        epsilon,
        m,
        seed,
        FEstimator::Conditional,
        crate::policies::DEFAULT_ATTEN_CONST,
    )
}

/// Estimates the attenuation table.
///
/// Proceeds t = 2..=H in order; row t is computed from `m` independent
/// truncated simulations that consider jobs with the epsilon-mode
/// probability (small x* entries thresholded away, numerator scaled by
/// (1 - eps)^2) using the rows estimated so far. Cells whose denominator is
/// zero fall back to f = 1, the conservative choice for the downstream
/// consideration probability, and are logged.
pub fn estimate_f_with(
    instance: &Instance,
    lp: &LpSolution,
    epsilon: f64,
    m: usize,
    seed: u64,
    estimator: FEstimator,
    atten_const: f64,
) -> Result<AttenuationTable> {
    if m < 1 {
        return Err(Error::InvalidParameter("M must be >= 1".into()));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in [0, 1), got {epsilon}"
        )));
    }
    let n = instance.n_jobs();
    let horizon = instance.horizon;
    if lp.x.len() != n || lp.x.iter().any(|r| r.len() != horizon) {
        return Err(Error::DimensionMismatch {
            expected: format!("{n} x {horizon} LP matrix"),
            got: format!("{} x {}", lp.x.len(), lp.x.first().map(|r| r.len()).unwrap_or(0)),
        });
    }

    // Thresholding is part of the epsilon-mode formula; applying it to the
    // solution up-front is equivalent and done once.
    let x = if epsilon > 0.0 {
        threshold_lp(lp, instance, epsilon)?
    } else {
        lp.clone()
    };

    let mut table = AttenuationTable {
        epsilon,
        sims_per_step: m,
        f: vec![vec![1.0; horizon]; n],
        joint_counts: vec![vec![0; horizon]; n],
        alive_counts: vec![vec![0; horizon]; n],
        fallback_cells: Vec::new(),
    };

    for t in 2..=horizon {
        let observations: Vec<Observation> = (0..m)
            .into_par_iter()
            .map(|sim| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(((t as u64) << 32) | sim as u64);
                truncated_run(instance, &x, &table, epsilon, atten_const, t, &mut rng)
            })
            .collect();

        for j in 0..n {
            let mut alive = 0u32;
            let mut joint = 0u32;
            for obs in &observations {
                if obs.alive[j] {
                    alive += 1;
                    if obs.not_considered[j] && obs.server_free {
                        joint += 1;
                    }
                }
            }
            table.joint_counts[j][t - 1] = joint;
            table.alive_counts[j][t - 1] = alive;
            let denom = match estimator {
                FEstimator::Conditional => alive,
                FEstimator::Joint => m as u32,
            };
            table.f[j][t - 1] = if denom == 0 {
                table.fallback_cells.push((j, t));
                1.0
            } else {
                joint as f64 / denom as f64
            };
        }
    }
    Ok(table)
}
