//! Discrete-time replicated simulator.
//!
//! Each replication samples all departure times up-front (inverse-CDF on the
//! survival curves; equivalent to stepping per-time hazards by the chain
//! rule), then walks t = 1..=H querying the policy whenever the server is
//! free and at least one job is available. Jobs that have started never
//! depart. Replications are seeded with independent ChaCha8 streams derived
//! from the run seed, so any replication is reproducible in isolation; the
//! generator is pinned and recorded in output metadata.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attenuation::AttenuationTable;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lp::LpSolution;

/// Name of the pinned replication RNG, embedded in output metadata.
pub const RNG_NAME: &str = "chacha8";

/// How constrained modes account for violations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Accounting {
    /// Jobs that would overflow the budget are excluded from the available
    /// set; a replication can never violate the constraint.
    Strict,
    /// Jobs run unconstrained; a replication whose cumulative usage exceeds
    /// the budget is marked failed and scores zero.
    Analysis,
}

/// Simulation semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Base,
    /// Value is credited only when service completes by the job's deadline.
    Deadline,
    /// Weighted budget on the set of jobs run.
    Knapsack(Accounting),
    /// At most k jobs run.
    Cardinality(Accounting),
}

impl Mode {
    pub fn label(&self) -> &'static str {
        match self {
            Mode::Base => "base",
            Mode::Deadline => "deadline",
            Mode::Knapsack(_) => "knapsack",
            Mode::Cardinality(_) => "cardinality",
        }
    }
}

/// Read-only references a policy may consult.
#[derive(Debug, Clone, Copy, Default)]
pub struct Bindings<'a> {
    pub lp: Option<&'a LpSolution>,
    pub atten: Option<&'a AttenuationTable>,
}

/// What a policy sees when the server is free: the time, the ascending list
/// of available job ids, and the bound read-only data.
#[derive(Debug, Clone, Copy)]
pub struct PolicyContext<'a> {
    pub t: usize,
    pub available: &'a [usize],
    pub instance: &'a Instance,
    pub lp: Option<&'a LpSolution>,
    pub atten: Option<&'a AttenuationTable>,
}

/// A scheduling policy. `decide` may return `None` to idle even when jobs
/// are available (attenuated policies rely on this). Mutable state is
/// per-replication; the engine calls `reset` before each replication.
pub trait Policy: Send {
    fn name(&self) -> &str;
    fn reset(&mut self, n_jobs: usize);
    fn decide(&mut self, ctx: &PolicyContext, rng: &mut ChaCha8Rng) -> Result<Option<usize>>;
}

/// One started job within a replication.
#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub job: usize,
    pub start: usize,
    pub service: usize,
    pub credited: bool,
}

/// Outcome of a single replication.
#[derive(Debug, Clone, Default)]
pub struct RunRecord {
    pub total_value: f64,
    pub runs: Vec<RunEntry>,
    /// Set in analysis accounting when the budget was exceeded.
    pub failed: bool,
}

/// Aggregates over replications.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimStats {
    pub reps: usize,
    pub mean: f64,
    /// Sample standard deviation (Bessel-corrected; 0 when reps < 2).
    pub std: f64,
    /// 95% confidence half-width, 1.96 * std / sqrt(reps).
    pub ci95: f64,
    /// Empirical Pr(server free at t) for t = 1..=H.
    pub free_freq: Vec<f64>,
}

/// Empirical per-time server-free frequencies.
pub fn server_free_profile(stats: &SimStats) -> &[f64] {
    &stats.free_freq
}

fn check_mode(instance: &Instance, mode: Mode) -> Result<()> {
    match mode {
        Mode::Base => Ok(()),
        Mode::Deadline => {
            if instance.deadlines.is_none() {
                Err(Error::MissingDeadlines)
            } else {
                Ok(())
            }
        }
        Mode::Knapsack(_) => {
            if instance.weights.is_none() || instance.capacity.is_none() {
                Err(Error::Configuration(
                    "knapsack mode requires instance weights and capacity".into(),
                ))
            } else {
                Ok(())
            }
        }
        Mode::Cardinality(_) => {
            if instance.cardinality.is_none() {
                Err(Error::Configuration(
                    "cardinality mode requires the instance cardinality bound".into(),
                ))
            } else {
                Ok(())
            }
        }
    }
}

/// Runs one replication. The caller owns the RNG stream.
pub fn simulate_once<P: Policy + ?Sized>(
    instance: &Instance,
    policy: &mut P,
    bindings: Bindings,
    mode: Mode,
    rng: &mut ChaCha8Rng,
) -> Result<RunRecord> {
    check_mode(instance, mode)?;
    let n = instance.n_jobs();
    let horizon = instance.horizon;

    // One uniform per job fixes its departure time for the replication.
    let departure: Vec<usize> = instance
        .jobs
        .iter()
        .map(|j| j.departure.departure_from_uniform(rng.gen::<f64>()))
        .collect();

    let mut in_system: Vec<usize> = (0..n).collect();
    let mut available: Vec<usize> = Vec::with_capacity(n);
    let mut record = RunRecord::default();
    let mut free_at = 1usize;
    let mut used_weight = 0.0f64;
    let mut started = 0usize;

    let weights = instance.weights.as_deref();
    let capacity = instance.capacity.unwrap_or(f64::INFINITY);
    let k_bound = instance.cardinality.unwrap_or(usize::MAX);

    for t in 1..=horizon {
        if free_at <= t && !in_system.is_empty() {
            available.clear();
            match mode {
                Mode::Knapsack(Accounting::Strict) => {
                    let w = weights.expect("checked by mode");
                    available.extend(
                        in_system
                            .iter()
                            .copied()
                            .filter(|&j| used_weight + w[j] <= capacity),
                    );
                }
                Mode::Cardinality(Accounting::Strict) => {
                    if started < k_bound {
                        available.extend(in_system.iter().copied());
                    }
                }
                _ => available.extend(in_system.iter().copied()),
            }

            if !available.is_empty() {
                let ctx = PolicyContext {
                    t,
                    available: &available,
                    instance,
                    lp: bindings.lp,
                    atten: bindings.atten,
                };
                if let Some(job) = policy.decide(&ctx, rng)? {
                    if !available.contains(&job) {
                        return Err(Error::PolicyContract(format!(
                            "policy `{}` returned job {job} which is not available at t={t}",
                            policy.name()
                        )));
                    }
                    let service =
                        instance.jobs[job].service.sample_with(rng.gen::<f64>()) as usize;
                    let credited = match mode {
                        Mode::Base | Mode::Knapsack(_) | Mode::Cardinality(_) => true,
                        Mode::Deadline => {
                            let b = instance.deadlines.as_ref().expect("checked by mode")[job];
                            t + service <= b
                        }
                    };
                    if credited {
                        record.total_value += instance.jobs[job].value;
                    }
                    record.runs.push(RunEntry {
                        job,
                        start: t,
                        service,
                        credited,
                    });
                    if let Some(w) = weights {
                        used_weight += w[job];
                    }
                    started += 1;
                    free_at = t + service;
                    in_system.retain(|&j| j != job);
                }
            }
        }
        // departures realized at the end of step t
        in_system.retain(|&j| departure[j] > t);
    }

    let over_budget = match mode {
        Mode::Knapsack(Accounting::Analysis) => used_weight > capacity,
        Mode::Cardinality(Accounting::Analysis) => started > k_bound,
        _ => false,
    };
    if over_budget {
        record.failed = true;
        record.total_value = 0.0;
        for run in &mut record.runs {
            run.credited = false;
        }
    }
    Ok(record)
}

/// RNG for replication `rep` of a run seeded with `seed`.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Runs `reps` independent replications and aggregates. Replications execute
/// in parallel; aggregation is a fixed-order reduction so results are
/// bit-identical for a fixed seed.
pub fn simulate_many<P: Policy + Clone + Sync>(
    instance: &Instance,
    policy: &P,
    bindings: Bindings,
    mode: Mode,
    reps: usize,
    seed: u64,
) -> Result<SimStats> {
    if reps < 1 {
        return Err(Error::InvalidParameter("reps must be >= 1".into()));
    }
    check_mode(instance, mode)?;
    let records: Vec<RunRecord> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replication_rng(seed, rep as u64);
            let mut policy = policy.clone();
            policy.reset(instance.n_jobs());
            simulate_once(instance, &mut policy, bindings, mode, &mut rng)
        })
        .collect::<Result<_>>()?;
    Ok(aggregate(instance.horizon, &records))
}

fn aggregate(horizon: usize, records: &[RunRecord]) -> SimStats {
    let reps = records.len();
    let mean = records.iter().map(|r| r.total_value).sum::<f64>() / reps as f64;
    let std = if reps > 1 {
        let ss: f64 = records
            .iter()
            .map(|r| {
                let d = r.total_value - mean;
                d * d
            })
            .sum();
        (ss / (reps - 1) as f64).sqrt()
    } else {
        0.0
    };
    let ci95 = 1.96 * std / (reps as f64).sqrt();

    let mut busy = vec![0u64; horizon];
    for r in records {
        for run in &r.runs {
            let from = run.start + 1;
            let to = (run.start + run.service.max(1) - 1).min(horizon);
            for slot in busy.iter_mut().take(to).skip(from - 1) {
                *slot += 1;
            }
        }
    }
    let free_freq = busy
        .iter()
        .map(|&b| 1.0 - b as f64 / reps as f64)
        .collect();

    SimStats {
        reps,
        mean,
        std,
        ci95,
        free_freq,
    }
}
