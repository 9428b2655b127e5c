//! The five benchmarked policies.
//!
//! Greedy and UR are self-contained. Safe, ConSet and SimAlg consume an LP
//! solution; SimAlg additionally divides by an attenuation table so that the
//! per-step consideration probability stays aligned with x*/2.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::engine::{Policy, PolicyContext};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lp::LpSolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    /// Run the available job of largest value (ties to the lowest id).
    Greedy,
    /// Run an available job uniformly at random.
    UniformRandom,
    /// Run available job j with probability x*_{j,t} / sum_i x*_{i,t}.
    Safe,
    /// Consideration set with entry probability
    /// x*_{j,t} / (p_j(t) (1 - sum_{tau<t} x*_{j,tau}/p_j(tau))).
    ConSet,
    /// Consideration set with entry probability x*_{j,t} / (c p_j(t) f_{j,t}).
    SimAlg,
}

/// Immutable policy template; instantiate a [`PolicyRunner`] per run.
#[derive(Debug, Clone, Copy)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    /// `Some(eps)` switches SimAlg to epsilon mode: probabilities scaled by
    /// (1 - eps)^2 and x* entries below eps / (n^2 T v_j) treated as 0.
    pub epsilon: Option<f64>,
    /// Attenuation constant c; 2 is the analyzed value.
    pub atten_const: f64,
}

pub const DEFAULT_ATTEN_CONST: f64 = 2.0;

impl PolicySpec {
    pub fn greedy() -> Self {
        Self::of(PolicyKind::Greedy)
    }

    pub fn uniform_random() -> Self {
        Self::of(PolicyKind::UniformRandom)
    }

    pub fn safe() -> Self {
        Self::of(PolicyKind::Safe)
    }

    pub fn conset() -> Self {
        Self::of(PolicyKind::ConSet)
    }

    pub fn simalg() -> Self {
        Self::of(PolicyKind::SimAlg)
    }

    fn of(kind: PolicyKind) -> Self {
        PolicySpec {
            kind,
            epsilon: None,
            atten_const: DEFAULT_ATTEN_CONST,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn with_atten_const(mut self, c: f64) -> Self {
        self.atten_const = c;
        self
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            PolicyKind::Greedy => "greedy",
            PolicyKind::UniformRandom => "ur",
            PolicyKind::Safe => "safe",
            PolicyKind::ConSet => "conset",
            PolicyKind::SimAlg => "simalg",
        }
    }

    /// Policy selection by CLI name.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "greedy" => Ok(Self::greedy()),
            "ur" => Ok(Self::uniform_random()),
            "safe" => Ok(Self::safe()),
            "conset" => Ok(Self::conset()),
            "simalg" => Ok(Self::simalg()),
            other => Err(Error::Configuration(format!(
                "unknown policy `{other}` (expected greedy|ur|safe|conset|simalg)"
            ))),
        }
    }

    pub fn runner(&self) -> PolicyRunner {
        PolicyRunner {
            spec: *self,
            considered: Vec::new(),
        }
    }
}

/// Engine-facing instantiation of a [`PolicySpec`] holding the
/// per-replication consideration memory used by ConSet and SimAlg.
#[derive(Debug, Clone)]
pub struct PolicyRunner {
    spec: PolicySpec,
    considered: Vec<bool>,
}

impl PolicyRunner {
    pub fn considered(&self) -> &[bool] {
        &self.considered
    }
}

impl Policy for PolicyRunner {
    fn name(&self) -> &str {
        self.spec.name()
    }

    fn reset(&mut self, n_jobs: usize) {
        self.considered.clear();
        self.considered.resize(n_jobs, false);
    }

    fn decide(&mut self, ctx: &PolicyContext, rng: &mut ChaCha8Rng) -> Result<Option<usize>> {
        debug_assert!(!ctx.available.is_empty());
        match self.spec.kind {
            PolicyKind::Greedy => Ok(greedy_choice(ctx.available, ctx.instance)),
            PolicyKind::UniformRandom => {
                let i = rng.gen_range(0..ctx.available.len());
                Ok(Some(ctx.available[i]))
            }
            PolicyKind::Safe => {
                let lp = require_lp(ctx, "safe")?;
                Ok(safe_draw(ctx, lp, rng))
            }
            PolicyKind::ConSet => {
                let lp = require_lp(ctx, "conset")?;
                if self.considered.len() != ctx.instance.n_jobs() {
                    self.reset(ctx.instance.n_jobs());
                }
                let mut best: Option<usize> = None;
                for &j in ctx.available {
                    if self.considered[j] {
                        continue;
                    }
                    let prob = conset_probability(ctx.instance, lp, j, ctx.t);
                    if rng.gen::<f64>() < prob {
                        self.considered[j] = true;
                        best = better(best, j, ctx.instance);
                    }
                }
                Ok(best)
            }
            PolicyKind::SimAlg => {
                let lp = require_lp(ctx, "simalg")?;
                let atten = ctx.atten.ok_or(Error::MissingBinding {
                    policy: "simalg",
                    binding: "attenuation table",
                })?;
                if self.considered.len() != ctx.instance.n_jobs() {
                    self.reset(ctx.instance.n_jobs());
                }
                let mut best: Option<usize> = None;
                for &j in ctx.available {
                    if self.considered[j] {
                        continue;
                    }
                    let f = atten.value(j, ctx.t);
                    let prob = simalg_probability(
                        ctx.instance,
                        lp,
                        j,
                        ctx.t,
                        f,
                        self.spec.atten_const,
                        self.spec.epsilon,
                    );
                    if rng.gen::<f64>() < prob {
                        self.considered[j] = true;
                        best = better(best, j, ctx.instance);
                    }
                }
                Ok(best)
            }
        }
    }
}

fn require_lp<'a>(ctx: &PolicyContext<'a>, policy: &'static str) -> Result<&'a LpSolution> {
    ctx.lp.ok_or(Error::MissingBinding {
        policy,
        binding: "LP solution",
    })
}

fn better(best: Option<usize>, j: usize, instance: &Instance) -> Option<usize> {
    match best {
        None => Some(j),
        // strict inequality keeps the lowest id on ties (ids scan ascending)
        Some(b) if instance.jobs[j].value > instance.jobs[b].value => Some(j),
        Some(b) => Some(b),
    }
}

/// Highest-valued available job, lowest id on ties; `None` when empty.
pub fn greedy_choice(available: &[usize], instance: &Instance) -> Option<usize> {
    available
        .iter()
        .copied()
        .fold(None, |best, j| better(best, j, instance))
}

fn safe_draw(ctx: &PolicyContext, lp: &LpSolution, rng: &mut ChaCha8Rng) -> Option<usize> {
    let t = ctx.t;
    let weights: Vec<f64> = ctx
        .available
        .iter()
        .map(|&j| lp.x[j][t - 1].max(0.0))
        .collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let mut u = rng.gen::<f64>() * total;
    for (&j, &w) in ctx.available.iter().zip(&weights) {
        u -= w;
        if u < 0.0 {
            return Some(j);
        }
    }
    ctx.available.last().copied()
}

/// ConSet consideration probability for job j at time t, clamped to [0, 1].
/// A non-positive denominator clamps to 1 when x* > 0 and 0 otherwise.
pub fn conset_probability(instance: &Instance, lp: &LpSolution, j: usize, t: usize) -> f64 {
    let x = lp.x[j][t - 1];
    if x <= 0.0 {
        return 0.0;
    }
    let curve = &instance.jobs[j].departure;
    let mut prior = 0.0;
    for tau in 1..t {
        let p = curve.prob_at(tau);
        if p > 0.0 {
            prior += lp.x[j][tau - 1] / p;
        }
    }
    let denom = curve.prob_at(t) * (1.0 - prior);
    if denom <= 0.0 {
        1.0
    } else {
        (x / denom).clamp(0.0, 1.0)
    }
}

/// SimAlg consideration probability for job j at time t given attenuation f,
/// clamped to [0, 1]. In epsilon mode the numerator is scaled by (1 - eps)^2
/// and x* entries below eps / (n^2 T v_j) are treated as 0.
pub fn simalg_probability(
    instance: &Instance,
    lp: &LpSolution,
    j: usize,
    t: usize,
    f: f64,
    atten_const: f64,
    epsilon: Option<f64>,
) -> f64 {
    let x = lp.x[j][t - 1];
    if x <= 0.0 {
        return 0.0;
    }
    let mut scale = 1.0;
    if let Some(eps) = epsilon {
        let n = instance.n_jobs();
        let t_max = instance.max_service();
        let threshold = eps / ((n * n * t_max) as f64 * instance.jobs[j].value);
        if x < threshold {
            return 0.0;
        }
        scale = (1.0 - eps) * (1.0 - eps);
    }
    let denom = atten_const * instance.jobs[j].departure.prob_at(t) * f;
    if denom <= 0.0 {
        1.0
    } else {
        (scale * x / denom).clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attenuation::AttenuationTable;
    use crate::engine::{Policy, PolicyContext};
    use crate::instance::Job;
    use crate::pmf::Pmf;
    use crate::survival::SurvivalCurve;
    use rand::SeedableRng;

    fn flat_instance(values: &[f64], horizon: usize) -> Instance {
        let jobs = values
            .iter()
            .enumerate()
            .map(|(id, &value)| Job {
                id,
                value,
                service: Pmf::deterministic(1),
                departure: SurvivalCurve::new(vec![1.0; horizon]).unwrap(),
            })
            .collect();
        Instance::new("flat", horizon, jobs).unwrap()
    }

    fn lp_with(x: Vec<Vec<f64>>, instance: &Instance) -> LpSolution {
        LpSolution::from_matrix(x, &instance.values())
    }

    fn ctx<'a>(
        t: usize,
        available: &'a [usize],
        instance: &'a Instance,
        lp: Option<&'a LpSolution>,
        atten: Option<&'a AttenuationTable>,
    ) -> PolicyContext<'a> {
        PolicyContext {
            t,
            available,
            instance,
            lp,
            atten,
        }
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn greedy_picks_largest_value_then_lowest_id() {
        let inst = flat_instance(&[1.1, 1.0], 2);
        assert_eq!(greedy_choice(&[0, 1], &inst), Some(0));
        assert_eq!(greedy_choice(&[], &inst), None);

        let tie = flat_instance(&[2.0, 2.0], 2);
        assert_eq!(greedy_choice(&[0, 1], &tie), Some(0));
    }

    #[test]
    fn greedy_is_invariant_under_value_scaling() {
        let inst = flat_instance(&[1.5, 3.0, 2.0], 2);
        let mut scaled = inst.clone();
        for j in &mut scaled.jobs {
            j.value *= 17.0;
        }
        for avail in [&[0, 1, 2][..], &[0, 2][..], &[0][..]] {
            assert_eq!(greedy_choice(avail, &inst), greedy_choice(avail, &scaled));
        }
    }

    #[test]
    fn ur_single_job_is_certain_and_empirically_uniform() {
        let inst = flat_instance(&[1.0, 1.0], 2);
        let mut p = PolicySpec::uniform_random().runner();
        p.reset(2);
        let mut r = rng(7);
        let c = ctx(1, &[1], &inst, None, None);
        assert_eq!(p.decide(&c, &mut r).unwrap(), Some(1));

        let c2 = ctx(1, &[0, 1], &inst, None, None);
        let mut count0 = 0usize;
        let trials = 100_000;
        for _ in 0..trials {
            if p.decide(&c2, &mut r).unwrap() == Some(0) {
                count0 += 1;
            }
        }
        let freq = count0 as f64 / trials as f64;
        assert!((freq - 0.5).abs() < 0.01, "freq={freq}");
    }

    #[test]
    fn safe_draws_proportionally_to_x() {
        let inst = flat_instance(&[1.0, 1.0], 1);
        let lp = lp_with(vec![vec![0.3], vec![0.1]], &inst);
        let mut p = PolicySpec::safe().runner();
        p.reset(2);
        let mut r = rng(3);
        let c = ctx(1, &[0, 1], &inst, Some(&lp), None);
        let trials = 100_000;
        let mut count0 = 0usize;
        for _ in 0..trials {
            match p.decide(&c, &mut r).unwrap() {
                Some(0) => count0 += 1,
                Some(1) => {}
                other => panic!("unexpected decision {other:?}"),
            }
        }
        let freq = count0 as f64 / trials as f64;
        assert!((freq - 0.75).abs() < 0.01, "freq={freq}");
    }

    #[test]
    fn safe_with_all_zero_weights_declines() {
        let inst = flat_instance(&[1.0, 1.0], 2);
        let lp = lp_with(vec![vec![0.5, 0.0], vec![0.5, 0.0]], &inst);
        let mut p = PolicySpec::safe().runner();
        p.reset(2);
        let mut r = rng(11);
        let c = ctx(2, &[0, 1], &inst, Some(&lp), None);
        assert_eq!(p.decide(&c, &mut r).unwrap(), None);
        // one available job with positive x* is taken with probability 1
        let c1 = ctx(1, &[0], &inst, Some(&lp), None);
        assert_eq!(p.decide(&c1, &mut r).unwrap(), Some(0));
    }

    #[test]
    fn conset_probability_reduces_to_x_over_p_at_t1() {
        let inst = flat_instance(&[1.0], 3);
        let lp = lp_with(vec![vec![0.4, 0.2, 0.0]], &inst);
        assert!((conset_probability(&inst, &lp, 0, 1) - 0.4).abs() < 1e-12);
        // t=2: 0.2 / (1 * (1 - 0.4)) = 1/3
        assert!((conset_probability(&inst, &lp, 0, 2) - 0.2 / 0.6).abs() < 1e-12);
    }

    #[test]
    fn conset_probability_degenerate_denominator_rules() {
        let inst = flat_instance(&[1.0], 2);
        // prior sum reaches 1 at t=2, making the denominator 0
        let lp = lp_with(vec![vec![1.0, 0.5]], &inst);
        assert_eq!(conset_probability(&inst, &lp, 0, 2), 1.0);
        let lp0 = lp_with(vec![vec![1.0, 0.0]], &inst);
        assert_eq!(conset_probability(&inst, &lp0, 0, 2), 0.0);
    }

    #[test]
    fn conset_empirical_mean_matches_entry_probability() {
        let inst = flat_instance(&[2.0], 1);
        let lp = lp_with(vec![vec![0.5]], &inst);
        let spec = PolicySpec::conset();
        let mut r = rng(5);
        let trials = 100_000;
        let mut total = 0.0;
        for _ in 0..trials {
            let mut p = spec.runner();
            p.reset(1);
            let c = ctx(1, &[0], &inst, Some(&lp), None);
            if let Some(j) = p.decide(&c, &mut r).unwrap() {
                total += inst.jobs[j].value;
            }
        }
        let mean = total / trials as f64;
        // 0.5 * v = 1.0; 3-sigma on 1e5 Bernoulli draws is well under 0.01
        assert!((mean - 1.0).abs() < 0.01, "mean={mean}");
    }

    #[test]
    fn conset_marks_entered_jobs_only() {
        let inst = flat_instance(&[1.0, 3.0], 2);
        // job 0 enters surely, job 1 never
        let lp = lp_with(vec![vec![1.0, 0.0], vec![0.0, 0.0]], &inst);
        let mut p = PolicySpec::conset().runner();
        p.reset(2);
        let mut r = rng(9);
        let c = ctx(1, &[0, 1], &inst, Some(&lp), None);
        assert_eq!(p.decide(&c, &mut r).unwrap(), Some(0));
        assert!(p.considered()[0]);
        assert!(!p.considered()[1]);
    }

    #[test]
    fn simalg_requires_attenuation_table() {
        let inst = flat_instance(&[1.0], 1);
        let lp = lp_with(vec![vec![1.0]], &inst);
        let mut p = PolicySpec::simalg().runner();
        p.reset(1);
        let mut r = rng(1);
        let c = ctx(1, &[0], &inst, Some(&lp), None);
        assert!(matches!(
            p.decide(&c, &mut r),
            Err(Error::MissingBinding { .. })
        ));
    }

    #[test]
    fn simalg_probability_formula_cases() {
        let inst = flat_instance(&[1.0], 2);
        let lp = lp_with(vec![vec![0.6, 0.0]], &inst);
        // t=1, f=1: x / (2 p f) = 0.3
        assert!((simalg_probability(&inst, &lp, 0, 1, 1.0, 2.0, None) - 0.3).abs() < 1e-12);
        // small f inflates the ratio past 1; clamped
        assert!((simalg_probability(&inst, &lp, 0, 1, 0.25, 2.0, None) - 1.0).abs() < 1e-12);
        // epsilon mode scales by (1-eps)^2
        let p_eps = simalg_probability(&inst, &lp, 0, 1, 1.0, 2.0, Some(0.5));
        assert!((p_eps - 0.6 * 0.25 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn simalg_epsilon_mode_thresholds_tiny_x() {
        let inst = flat_instance(&[1.0, 1.0], 2);
        // n^2 T = 4*1... here n=2, T=1 so threshold for eps=0.4 is 0.1
        let lp = lp_with(vec![vec![0.09, 0.0], vec![0.11, 0.0]], &inst);
        assert_eq!(simalg_probability(&inst, &lp, 0, 1, 1.0, 2.0, Some(0.4)), 0.0);
        assert!(simalg_probability(&inst, &lp, 1, 1, 1.0, 2.0, Some(0.4)) > 0.0);
    }

    #[test]
    fn simalg_runs_max_value_of_consideration_set() {
        let inst = flat_instance(&[1.0, 5.0, 3.0], 1);
        let lp = lp_with(vec![vec![1.0], vec![1.0], vec![1.0]], &inst);
        // f = 0.5 makes each probability x/(2*1*0.5) = 1: all enter
        let table = AttenuationTable::constant(3, 1, 0.5);
        let mut p = PolicySpec::simalg().runner();
        p.reset(3);
        let mut r = rng(2);
        let c = ctx(1, &[0, 1, 2], &inst, Some(&lp), Some(&table));
        assert_eq!(p.decide(&c, &mut r).unwrap(), Some(1));
        assert!(p.considered().iter().all(|&c| c));
        // everything considered: the set is empty on the next call
        assert_eq!(p.decide(&c, &mut r).unwrap(), None);
    }

    #[test]
    fn greedy_and_ur_ignore_lp_binding() {
        let inst = flat_instance(&[1.0, 2.0, 3.0], 2);
        let lp = lp_with(vec![vec![0.9, 0.0]; 3], &inst);
        for spec in [PolicySpec::greedy(), PolicySpec::uniform_random()] {
            let mut without = spec.runner();
            let mut with = spec.runner();
            without.reset(3);
            with.reset(3);
            let mut r1 = rng(42);
            let mut r2 = rng(42);
            for _ in 0..200 {
                let c_without = ctx(1, &[0, 1, 2], &inst, None, None);
                let c_with = ctx(1, &[0, 1, 2], &inst, Some(&lp), None);
                assert_eq!(
                    without.decide(&c_without, &mut r1).unwrap(),
                    with.decide(&c_with, &mut r2).unwrap()
                );
            }
        }
    }

    #[test]
    fn policy_names_round_trip() {
        for name in ["greedy", "ur", "safe", "conset", "simalg"] {
            assert_eq!(PolicySpec::by_name(name).unwrap().name(), name);
        }
        assert!(PolicySpec::by_name("nope").is_err());
    }
}
