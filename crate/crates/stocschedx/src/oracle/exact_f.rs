//! Exact attenuation probabilities by forward propagation of the
//! consideration-set process distribution.
//!
//! The state is (set of never-considered jobs still in the system,
//! considered set, next-free time). Jobs that have been considered never
//! re-enter any downstream quantity, so their departure evolution is
//! marginalized out by dropping them from the alive set; this keeps the
//! state space small without changing f, the server-free probabilities or
//! the collected value.

use std::collections::BTreeMap;

use crate::attenuation::AttenuationTable;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lp::LpSolution;

pub const EXACT_F_MAX_JOBS: usize = 6;
pub const EXACT_F_MAX_HORIZON: usize = 12;

/// Exact forward analysis of the consideration-set process driven by x*.
#[derive(Debug, Clone)]
pub struct AlgAnalysis {
    /// Exact f_{j,t} = Pr(not considered before t, server free at t | alive at t).
    pub table: AttenuationTable,
    /// Exact Pr(server free at t) per t.
    pub server_free: Vec<f64>,
    /// Exact expected total value collected by the process.
    pub expected_value: f64,
}

/// Exact f_{j,t} table; see [`exact_alg_analysis`].
pub fn exact_f(instance: &Instance, lp: &LpSolution) -> Result<AttenuationTable> {
    Ok(exact_alg_analysis(instance, lp)?.table)
}

/// Propagates the exact state distribution of the process that, at each free
/// time step, adds each eligible job j to the consideration set with
/// probability x*_{j,t} / (2 p_j(t) f_{j,t}) (f computed exactly from the
/// distribution so far) and runs the highest-valued member.
pub fn exact_alg_analysis(instance: &Instance, lp: &LpSolution) -> Result<AlgAnalysis> {
    instance.validate()?;
    let n = instance.n_jobs();
    let horizon = instance.horizon;
    if n > EXACT_F_MAX_JOBS || horizon > EXACT_F_MAX_HORIZON {
        return Err(Error::StateSpaceLimit {
            states: (1usize << (2 * n)) * (horizon + 2),
            limit: (1usize << (2 * EXACT_F_MAX_JOBS)) * (EXACT_F_MAX_HORIZON + 2),
        });
    }
    if lp.x.len() != n || lp.x.iter().any(|r| r.len() != horizon) {
        return Err(Error::DimensionMismatch {
            expected: format!("{n} x {horizon} LP matrix"),
            got: format!(
                "{} x {}",
                lp.x.len(),
                lp.x.first().map(|r| r.len()).unwrap_or(0)
            ),
        });
    }

    // hazards[j][t-1] = Pr(D_j = t | D_j >= t)
    let hazards: Vec<Vec<f64>> = instance
        .jobs
        .iter()
        .map(|job| {
            (1..=horizon)
                .map(|t| {
                    let p = job.departure.prob_at(t);
                    if p <= 0.0 {
                        1.0
                    } else {
                        ((p - job.departure.prob_at(t + 1)) / p).clamp(0.0, 1.0)
                    }
                })
                .collect()
        })
        .collect();

    // state: (alive & never considered, considered, next-free time; 0 = free)
    type State = (u32, u32, u16);
    let full = (1u32 << n) - 1;
    let mut dist: BTreeMap<State, f64> = BTreeMap::new();
    dist.insert((full, 0, 0), 1.0);

    let mut f = vec![vec![1.0f64; horizon]; n];
    let mut server_free = vec![0.0f64; horizon];
    let mut expected_value = 0.0f64;

    for t in 1..=horizon {
        // exact f and Pr(SF_t) from the pre-decision distribution
        let mut joint = vec![0.0f64; n];
        let mut sf = 0.0f64;
        for (&(alive, _considered, b), &pi) in &dist {
            let free = (b as usize) <= t;
            if free {
                sf += pi;
            }
            if free {
                for (j, slot) in joint.iter_mut().enumerate() {
                    if alive & (1u32 << j) != 0 {
                        *slot += pi;
                    }
                }
            }
        }
        server_free[t - 1] = sf.min(1.0);
        for j in 0..n {
            let p = instance.jobs[j].departure.prob_at(t);
            f[j][t - 1] = if p > 0.0 {
                (joint[j] / p).clamp(0.0, 1.0)
            } else {
                1.0
            };
        }

        // per-job consideration probabilities at this t
        let q: Vec<f64> = (0..n)
            .map(|j| {
                let x = lp.x[j][t - 1];
                if x <= 0.0 {
                    return 0.0;
                }
                let denom = 2.0 * instance.jobs[j].departure.prob_at(t) * f[j][t - 1];
                if denom <= 0.0 {
                    1.0
                } else {
                    (x / denom).min(1.0)
                }
            })
            .collect();

        // one step of the process
        let mut next: BTreeMap<State, f64> = BTreeMap::new();
        let mut settle = |alive: u32,
                          considered: u32,
                          next_free: usize,
                          weight: f64,
                          next: &mut BTreeMap<State, f64>| {
            if weight <= 0.0 {
                return;
            }
            // departures of never-considered jobs at the end of step t
            let mut depart = alive;
            loop {
                let mut prob = weight;
                for j in 0..n {
                    let bit = 1u32 << j;
                    if alive & bit != 0 {
                        let h = hazards[j][t - 1];
                        prob *= if depart & bit != 0 { h } else { 1.0 - h };
                        if prob == 0.0 {
                            break;
                        }
                    }
                }
                if prob > 0.0 {
                    let b = if next_free <= t + 1 { 0 } else { next_free as u16 };
                    *next.entry((alive & !depart, considered, b)).or_insert(0.0) += prob;
                }
                if depart == 0 {
                    break;
                }
                depart = (depart.wrapping_sub(1)) & alive;
            }
        };

        for (&(alive, considered, b), &pi) in &dist {
            if (b as usize) > t {
                settle(alive, considered, b as usize, pi, &mut next);
                continue;
            }
            let eligible = alive;
            // enumerate consideration sets
            let mut set = eligible;
            loop {
                let mut prob = pi;
                for j in 0..n {
                    let bit = 1u32 << j;
                    if eligible & bit != 0 {
                        prob *= if set & bit != 0 { q[j] } else { 1.0 - q[j] };
                        if prob == 0.0 {
                            break;
                        }
                    }
                }
                if prob > 0.0 {
                    if set == 0 {
                        settle(alive, considered, 0, prob, &mut next);
                    } else {
                        let jstar = (0..n)
                            .filter(|&j| set & (1u32 << j) != 0)
                            .max_by(|&a, &b| {
                                instance.jobs[a]
                                    .value
                                    .partial_cmp(&instance.jobs[b].value)
                                    .unwrap()
                                    .then(b.cmp(&a))
                            })
                            .expect("set is non-empty");
                        expected_value += prob * instance.jobs[jstar].value;
                        let mut free_again_dist: Vec<(usize, f64)> = Vec::new();
                        for (&s, &ps) in instance.jobs[jstar]
                            .service
                            .support()
                            .iter()
                            .zip(instance.jobs[jstar].service.probs())
                        {
                            if ps > 0.0 {
                                free_again_dist
                                    .push(((t + s as usize).min(horizon + 1), ps));
                            }
                        }
                        for (free_again, ps) in free_again_dist {
                            settle(
                                alive & !set,
                                considered | set,
                                free_again,
                                prob * ps,
                                &mut next,
                            );
                        }
                    }
                }
                if set == 0 {
                    break;
                }
                set = (set.wrapping_sub(1)) & eligible;
            }
        }
        dist = next;
    }

    let mut table = AttenuationTable::from_matrix(f);
    table.sims_per_step = 0;
    table.epsilon = 0.0;
    Ok(AlgAnalysis {
        table,
        server_free,
        expected_value,
    })
}
