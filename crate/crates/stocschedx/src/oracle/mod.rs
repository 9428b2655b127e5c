//! Exact computation on small instances: the finite-horizon optimum by
//! backward induction, exact evaluation of Markov policies, and exact
//! attenuation probabilities by forward state-distribution propagation.
//!
//! The state (t, alive set, next-free time, remaining budget) is a
//! sufficient statistic: departures are independent given survival and
//! rewards are additive, so the full decision history collapses to it.

mod exact_f;

pub use exact_f::{exact_alg_analysis, exact_f, AlgAnalysis, EXACT_F_MAX_HORIZON, EXACT_F_MAX_JOBS};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lp::LpSolution;

/// Largest job count the backward induction accepts.
pub const MAX_MDP_JOBS: usize = 12;
/// Default bound on H * 4^n * (H + 2) * budget_levels * max_service.
pub const DEFAULT_STATE_LIMIT: usize = 500_000_000;

/// Constraint semantics understood by the oracle. Budgeted modes enforce the
/// budget strictly (a job that does not fit is not offered).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    Base,
    Deadline,
    Cardinality,
    Knapsack,
}

#[derive(Debug, Clone)]
pub struct MdpOptions {
    pub mode: OracleMode,
    pub state_limit: usize,
    /// Record per-state optimal actions (needed for dumps and idle audits).
    pub keep_actions: bool,
}

impl Default for MdpOptions {
    fn default() -> Self {
        MdpOptions {
            mode: OracleMode::Base,
            state_limit: DEFAULT_STATE_LIMIT,
            keep_actions: false,
        }
    }
}

/// Optimal action at a free state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateAction {
    pub t: usize,
    pub alive: u32,
    pub budget: usize,
    /// `None` is idle.
    pub action: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct MdpSolution {
    pub value: f64,
    /// Present when `keep_actions` was set; free states only.
    pub actions: Option<Vec<StateAction>>,
    /// Whether the optimal policy idles at some reachable free state with a
    /// non-empty admissible set. Computed only when actions are kept.
    pub opt_idles: Option<bool>,
}

impl MdpSolution {
    /// JSON dump of the optimal action table, keyed by state.
    pub fn actions_json(&self) -> Result<String> {
        let actions = self.actions.as_ref().ok_or_else(|| {
            Error::Configuration("action table was not recorded; solve with keep_actions".into())
        })?;
        let map: serde_json::Map<String, serde_json::Value> = actions
            .iter()
            .map(|a| {
                let key = format!("t={},alive={:b},budget={}", a.t, a.alive, a.budget);
                let val = match a.action {
                    Some(j) => serde_json::Value::String(format!("run {j}")),
                    None => serde_json::Value::String("idle".into()),
                };
                (key, val)
            })
            .collect();
        Ok(serde_json::to_string_pretty(&serde_json::Value::Object(
            map,
        ))?)
    }
}

/// A policy that depends only on (t, available set); distributions over
/// actions make randomized policies exactly evaluable.
pub trait MarkovPolicy {
    fn name(&self) -> &str;
    /// Probability-weighted actions; weights must sum to 1. `None` idles.
    fn action_distribution(
        &self,
        t: usize,
        available: &[usize],
        instance: &Instance,
    ) -> Vec<(Option<usize>, f64)>;
}

/// Runs the highest-valued available job (lowest id on ties).
pub struct GreedyMarkov;

impl MarkovPolicy for GreedyMarkov {
    fn name(&self) -> &str {
        "greedy"
    }

    fn action_distribution(
        &self,
        _t: usize,
        available: &[usize],
        instance: &Instance,
    ) -> Vec<(Option<usize>, f64)> {
        vec![(crate::policies::greedy_choice(available, instance), 1.0)]
    }
}

/// Uniform over the available set.
pub struct UniformMarkov;

impl MarkovPolicy for UniformMarkov {
    fn name(&self) -> &str {
        "ur"
    }

    fn action_distribution(
        &self,
        _t: usize,
        available: &[usize],
        _instance: &Instance,
    ) -> Vec<(Option<usize>, f64)> {
        let p = 1.0 / available.len() as f64;
        available.iter().map(|&j| (Some(j), p)).collect()
    }
}

/// Runs job j with probability x*_{j,t} / sum of x* over the available set.
pub struct SafeMarkov<'a>(pub &'a LpSolution);

impl MarkovPolicy for SafeMarkov<'_> {
    fn name(&self) -> &str {
        "safe"
    }

    fn action_distribution(
        &self,
        t: usize,
        available: &[usize],
        _instance: &Instance,
    ) -> Vec<(Option<usize>, f64)> {
        let weights: Vec<f64> = available
            .iter()
            .map(|&j| self.0.x[j][t - 1].max(0.0))
            .collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return vec![(None, 1.0)];
        }
        available
            .iter()
            .zip(&weights)
            .map(|(&j, &w)| (Some(j), w / total))
            .collect()
    }
}

/// Never runs anything.
pub struct IdleMarkov;

impl MarkovPolicy for IdleMarkov {
    fn name(&self) -> &str {
        "idle"
    }

    fn action_distribution(
        &self,
        _t: usize,
        _available: &[usize],
        _instance: &Instance,
    ) -> Vec<(Option<usize>, f64)> {
        vec![(None, 1.0)]
    }
}

/// Budget bookkeeping for the two constrained modes.
struct Budget {
    levels: usize,
    cost: Vec<usize>,
}

impl Budget {
    fn build(instance: &Instance, mode: OracleMode) -> Result<Self> {
        match mode {
            OracleMode::Base | OracleMode::Deadline => Ok(Budget {
                levels: 1,
                cost: vec![0; instance.n_jobs()],
            }),
            OracleMode::Cardinality => {
                let k = instance.cardinality.ok_or_else(|| {
                    Error::Configuration("cardinality mode requires the cardinality bound".into())
                })?;
                Ok(Budget {
                    levels: k + 1,
                    cost: vec![1; instance.n_jobs()],
                })
            }
            OracleMode::Knapsack => {
                let weights = instance.weights.as_ref().ok_or_else(|| {
                    Error::Configuration("knapsack mode requires weights".into())
                })?;
                let capacity = instance.capacity.ok_or_else(|| {
                    Error::Configuration("knapsack mode requires a capacity".into())
                })?;
                let cost = weights
                    .iter()
                    .map(|&w| {
                        let r = w.round();
                        if (w - r).abs() > 1e-9 || r < 0.0 {
                            Err(Error::Configuration(
                                "exact knapsack evaluation requires integer weights".into(),
                            ))
                        } else {
                            Ok(r as usize)
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                if (capacity - capacity.round()).abs() > 1e-9 {
                    return Err(Error::Configuration(
                        "exact knapsack evaluation requires an integer capacity".into(),
                    ));
                }
                Ok(Budget {
                    levels: capacity.round() as usize + 1,
                    cost,
                })
            }
        }
    }

    fn admits(&self, j: usize, remaining: usize) -> bool {
        self.cost[j] <= remaining
    }

    fn after(&self, j: usize, remaining: usize) -> usize {
        remaining - self.cost[j]
    }
}

fn check_limits(instance: &Instance, budget: &Budget, limit: usize) -> Result<()> {
    let n = instance.n_jobs();
    if n > MAX_MDP_JOBS {
        return Err(Error::StateSpaceLimit {
            states: 1usize << n,
            limit: 1usize << MAX_MDP_JOBS,
        });
    }
    let h = instance.horizon;
    let cost = h
        .saturating_mul(1usize << (2 * n.min(16)))
        .saturating_mul(h + 2)
        .saturating_mul(budget.levels)
        .saturating_mul(instance.max_service());
    if cost > limit {
        return Err(Error::StateSpaceLimit {
            states: cost,
            limit,
        });
    }
    Ok(())
}

/// True when the default limits admit backward induction on this instance.
pub fn within_default_limits(instance: &Instance, mode: OracleMode) -> bool {
    Budget::build(instance, mode)
        .and_then(|b| check_limits(instance, &b, DEFAULT_STATE_LIMIT))
        .is_ok()
}

/// Deadline-mode immediate reward; ordinary value otherwise.
fn immediate_reward(instance: &Instance, mode: OracleMode, j: usize, t: usize) -> f64 {
    match mode {
        OracleMode::Deadline => {
            let b = instance.deadlines.as_ref().expect("validated")[j];
            let slack = b.saturating_sub(t) as u32;
            instance.jobs[j].value * instance.jobs[j].service.cdf(slack)
        }
        _ => instance.jobs[j].value,
    }
}

/// Shared backward induction. `chooser` picks the action value at free
/// states given the admissible Q-values.
struct Dp<'a> {
    instance: &'a Instance,
    mode: OracleMode,
    budget: Budget,
    /// hazards[j][t-1] = Pr(D_j = t | D_j >= t)
    hazards: Vec<Vec<f64>>,
    horizon: usize,
    n: usize,
}

impl<'a> Dp<'a> {
    fn new(instance: &'a Instance, mode: OracleMode, limit: usize) -> Result<Self> {
        instance.validate()?;
        if mode == OracleMode::Deadline && instance.deadlines.is_none() {
            return Err(Error::MissingDeadlines);
        }
        let budget = Budget::build(instance, mode)?;
        check_limits(instance, &budget, limit)?;
        let horizon = instance.horizon;
        let n = instance.n_jobs();
        let hazards = instance
            .jobs
            .iter()
            .map(|job| {
                (1..=horizon)
                    .map(|t| {
                        let p = job.departure.prob_at(t);
                        if p <= 0.0 {
                            // unreachable for alive jobs; forced departure
                            1.0
                        } else {
                            ((p - job.departure.prob_at(t + 1)) / p).clamp(0.0, 1.0)
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Dp {
            instance,
            mode,
            budget,
            hazards,
            horizon,
            n,
        })
    }

    fn layer_size(&self) -> usize {
        (1usize << self.n) * (self.horizon + 2) * self.budget.levels
    }

    fn index(&self, alive: u32, busy_rel: usize, budget: usize) -> usize {
        ((alive as usize) * (self.horizon + 2) + busy_rel) * self.budget.levels + budget
    }

    /// Expectation of `value(next_alive)` over one departure step at time t.
    fn expect_departures(&self, t: usize, alive: u32, value: &mut dyn FnMut(u32) -> f64) -> f64 {
        if alive == 0 {
            return value(0);
        }
        let mut total = 0.0;
        let mut depart = alive;
        loop {
            let mut prob = 1.0;
            for j in 0..self.n {
                let bit = 1u32 << j;
                if alive & bit != 0 {
                    let h = self.hazards[j][t - 1];
                    prob *= if depart & bit != 0 { h } else { 1.0 - h };
                    if prob == 0.0 {
                        break;
                    }
                }
            }
            if prob > 0.0 {
                total += prob * value(alive & !depart);
            }
            if depart == 0 {
                break;
            }
            depart = (depart.wrapping_sub(1)) & alive;
        }
        total
    }

    /// Runs the induction; `choose` maps (t, alive, budget, q_idle, q_runs)
    /// to the state value, where q_runs holds (job, Q(job)) for admissible
    /// jobs in ascending id order.
    fn backward<F>(&self, mut choose: F) -> f64
    where
        F: FnMut(usize, u32, usize, f64, &[(usize, f64)]) -> f64,
    {
        let size = self.layer_size();
        let mut next = vec![0.0f64; size];
        let mut current = vec![0.0f64; size];

        for t in (1..=self.horizon).rev() {
            for alive in 0..(1u32 << self.n) {
                for budget in 0..self.budget.levels {
                    // busy states: busy_rel >= 1 means free again at t + busy_rel
                    for busy_rel in 1..=(self.horizon + 1 - t) {
                        let v = self.expect_departures(t, alive, &mut |a| {
                            next[self.index(a, busy_rel - 1, budget)]
                        });
                        current[self.index(alive, busy_rel, budget)] = v;
                    }
                    // free state
                    let q_idle = self.expect_departures(t, alive, &mut |a| {
                        next[self.index(a, 0, budget)]
                    });
                    let mut q_runs = Vec::new();
                    for j in 0..self.n {
                        let bit = 1u32 << j;
                        if alive & bit == 0 || !self.budget.admits(j, budget) {
                            continue;
                        }
                        let reward = immediate_reward(self.instance, self.mode, j, t);
                        let after_run = alive & !bit;
                        let b2 = self.budget.after(j, budget);
                        let mut cont = 0.0;
                        for (&s, &ps) in self.instance.jobs[j]
                            .service
                            .support()
                            .iter()
                            .zip(self.instance.jobs[j].service.probs())
                        {
                            if ps == 0.0 {
                                continue;
                            }
                            let next_free = (t + s as usize).min(self.horizon + 1);
                            let busy_rel_next = next_free - (t + 1);
                            cont += ps
                                * self.expect_departures(t, after_run, &mut |a| {
                                    next[self.index(a, busy_rel_next, budget.min(b2))]
                                });
                        }
                        q_runs.push((j, reward + cont));
                    }
                    current[self.index(alive, 0, budget)] =
                        choose(t, alive, budget, q_idle, &q_runs);
                }
            }
            std::mem::swap(&mut next, &mut current);
        }
        let full = (1u32 << self.n) - 1;
        next[self.index(full, 0, self.budget.levels - 1)]
    }
}

/// Exact optimum by backward induction. Idle is always an admissible action.
pub fn solve_mdp(instance: &Instance, mode: OracleMode) -> Result<MdpSolution> {
    solve_mdp_with(
        instance,
        &MdpOptions {
            mode,
            ..MdpOptions::default()
        },
    )
}

pub fn solve_mdp_with(instance: &Instance, options: &MdpOptions) -> Result<MdpSolution> {
    let dp = Dp::new(instance, options.mode, options.state_limit)?;
    let mut actions = options.keep_actions.then(Vec::new);
    let value = dp.backward(|t, alive, budget, q_idle, q_runs| {
        let mut best = q_idle;
        let mut act: Option<usize> = None;
        for &(j, q) in q_runs {
            if q > best {
                best = q;
                act = Some(j);
            }
        }
        if let Some(actions) = actions.as_mut() {
            actions.push(StateAction {
                t,
                alive,
                budget,
                action: act,
            });
        }
        best
    });
    let opt_idles = actions
        .as_ref()
        .map(|acts| optimal_policy_idles(&dp, acts));
    Ok(MdpSolution {
        value,
        actions,
        opt_idles,
    })
}

/// Forward reachability under the recorded optimal actions: does the optimum
/// ever idle at a reachable free state with a non-empty admissible set?
fn optimal_policy_idles(dp: &Dp, actions: &[StateAction]) -> bool {
    use std::collections::{HashMap, HashSet};

    let mut table: HashMap<(usize, u32, usize), Option<usize>> = HashMap::new();
    for a in actions {
        table.insert((a.t, a.alive, a.budget), a.action);
    }

    let full = (1u32 << dp.n) - 1;
    let start = (1usize, full, 0usize, dp.budget.levels - 1);
    let mut seen: HashSet<(usize, u32, usize, usize)> = HashSet::new();
    let mut stack = vec![start];
    let mut idled = false;

    while let Some((t, alive, busy_rel, budget)) = stack.pop() {
        if t > dp.horizon || !seen.insert((t, alive, busy_rel, budget)) {
            continue;
        }
        let mut push_departures = |alive_after: u32, busy_next: usize, budget_next: usize,
                                   stack: &mut Vec<(usize, u32, usize, usize)>| {
            let mut depart = alive_after;
            loop {
                let mut prob = 1.0;
                for j in 0..dp.n {
                    let bit = 1u32 << j;
                    if alive_after & bit != 0 {
                        let h = dp.hazards[j][t - 1];
                        prob *= if depart & bit != 0 { h } else { 1.0 - h };
                    }
                }
                if prob > 0.0 {
                    stack.push((t + 1, alive_after & !depart, busy_next, budget_next));
                }
                if depart == 0 {
                    break;
                }
                depart = (depart.wrapping_sub(1)) & alive_after;
            }
        };

        if busy_rel >= 1 {
            push_departures(alive, busy_rel - 1, budget, &mut stack);
            continue;
        }
        let action = table.get(&(t, alive, budget)).copied().flatten();
        match action {
            None => {
                let has_admissible = (0..dp.n).any(|j| {
                    alive & (1u32 << j) != 0 && dp.budget.admits(j, budget)
                });
                if has_admissible {
                    idled = true;
                }
                push_departures(alive, 0, budget, &mut stack);
            }
            Some(j) => {
                let after = alive & !(1u32 << j);
                let b2 = dp.budget.after(j, budget);
                for (&s, &ps) in dp.instance.jobs[j]
                    .service
                    .support()
                    .iter()
                    .zip(dp.instance.jobs[j].service.probs())
                {
                    if ps == 0.0 {
                        continue;
                    }
                    let next_free = (t + s as usize).min(dp.horizon + 1);
                    push_departures(after, next_free - (t + 1), b2, &mut stack);
                }
            }
        }
    }
    idled
}

/// Exact expected value of a Markov policy under the same transition
/// machinery as `solve_mdp`.
pub fn evaluate_policy_exact<P: MarkovPolicy + ?Sized>(
    instance: &Instance,
    policy: &P,
    mode: OracleMode,
) -> Result<f64> {
    evaluate_policy_exact_with(instance, policy, mode, DEFAULT_STATE_LIMIT)
}

pub fn evaluate_policy_exact_with<P: MarkovPolicy + ?Sized>(
    instance: &Instance,
    policy: &P,
    mode: OracleMode,
    state_limit: usize,
) -> Result<f64> {
    let dp = Dp::new(instance, mode, state_limit)?;
    let mut contract_error: Option<Error> = None;
    let value = dp.backward(|t, alive, budget, q_idle, q_runs| {
        if contract_error.is_some() {
            return 0.0;
        }
        let available: Vec<usize> = q_runs.iter().map(|&(j, _)| j).collect();
        if available.is_empty() {
            return q_idle;
        }
        let dist = policy.action_distribution(t, &available, dp.instance);
        let total: f64 = dist.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-9 || dist.iter().any(|&(_, p)| p < 0.0) {
            contract_error = Some(Error::PolicyContract(format!(
                "policy `{}` returned an action distribution summing to {total}",
                policy.name()
            )));
            return 0.0;
        }
        let mut v = 0.0;
        for &(action, p) in &dist {
            if p == 0.0 {
                continue;
            }
            match action {
                None => v += p * q_idle,
                Some(j) => match q_runs.iter().find(|&&(jj, _)| jj == j) {
                    Some(&(_, q)) => v += p * q,
                    None => {
                        contract_error = Some(Error::PolicyContract(format!(
                            "policy `{}` chose job {j} outside the available set at t={t}",
                            policy.name()
                        )));
                        return 0.0;
                    }
                },
            }
        }
        v
    });
    match contract_error {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

#[cfg(test)]
mod tests;
