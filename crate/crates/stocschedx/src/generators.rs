//! Instance generators: the synthetic benchmark family, the two
//! worst-case constructions, and the documented counterexample instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::{Instance, Job};
use crate::pmf::Pmf;
use crate::survival::{geometric_survival, SurvivalCurve};

/// Horizon used by the synthetic and call-center families.
pub const BENCH_HORIZON: usize = 50;

fn until(last: usize, horizon: usize) -> SurvivalCurve {
    let values = (1..=horizon)
        .map(|t| if t <= last { 1.0 } else { 0.0 })
        .collect();
    SurvivalCurve::new(values).expect("step curve is valid")
}

/// Synthetic family: geometric departures with rate drawn uniformly in
/// (0.2, 1), short jobs (service 1 w.p. 0.9, else 2) and long jobs (service
/// s_max w.p. 0.9, else s_max - 1) with s_max = max(3, n/5), and values
/// drawn from the low/medium/high ranges (1,2)/(2,4)/(4,8) with
/// probabilities 0.2/0.6/0.2. Horizon 50.
pub fn gen_synthetic(n: usize, seed: u64) -> Instance {
    assert!(n >= 1, "need at least one job");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s_max = (n / 5).max(3) as u32;
    let jobs = (0..n)
        .map(|id| {
            let q = rng.gen_range(0.2..1.0);
            let departure = geometric_survival(q, BENCH_HORIZON).expect("q in (0.2, 1)");
            let short = rng.gen_bool(0.5);
            let service = if short {
                Pmf::new(vec![1, 2], vec![0.9, 0.1]).unwrap()
            } else {
                Pmf::new(vec![s_max - 1, s_max], vec![0.1, 0.9]).unwrap()
            };
            let u: f64 = rng.gen();
            let value = if u < 0.2 {
                rng.gen_range(1.0..2.0)
            } else if u < 0.8 {
                rng.gen_range(2.0..4.0)
            } else {
                rng.gen_range(4.0..8.0)
            };
            Job {
                id,
                value,
                service,
                departure,
            }
        })
        .collect();
    Instance::new(format!("syn-{n}-s{seed}"), BENCH_HORIZON, jobs).expect("generator output valid")
}

/// n identical unit-value jobs with deterministic unit service, present only
/// at time 1. Any policy collects at most one job; the relaxation's optimum
/// is exactly 1.
pub fn gen_hard_alg(n: usize) -> Instance {
    assert!(n >= 1, "need at least one job");
    let horizon = n; // n * T with T = 1
    let jobs = (0..n)
        .map(|id| Job {
            id,
            value: 1.0,
            service: Pmf::deterministic(1),
            departure: until(1, horizon),
        })
        .collect();
    Instance::new(format!("hard-{n}"), horizon, jobs).expect("generator output valid")
}

/// n unit-value jobs in m equal types; a type-k job has deterministic
/// service 2^(k-1) and departs at time 1 with probability 1 - m/n, otherwise
/// at time 2^(k-1) + 1. The gap between the relaxation optimum and the best
/// policy approaches 1 - 1/e as m and n grow.
pub fn gen_integrality_gap(n: usize, m: usize) -> Result<Instance> {
    if m < 1 || n < 1 || n % m != 0 {
        return Err(Error::InvalidParameter(format!(
            "need m >= 1 dividing n, got n={n}, m={m}"
        )));
    }
    if m > 20 {
        return Err(Error::InvalidParameter(
            "service time 2^(m-1) overflows for m > 20".into(),
        ));
    }
    let per_type = n / m;
    let t_max = 1usize << (m - 1);
    let horizon = n * t_max;
    let survive_prob = m as f64 / n as f64;
    let jobs = (0..n)
        .map(|id| {
            let k = id / per_type + 1; // type 1..=m
            let service_time = 1u32 << (k - 1);
            let last = service_time as usize + 1;
            let values = (1..=horizon)
                .map(|t| {
                    if t == 1 {
                        1.0
                    } else if t <= last {
                        survive_prob
                    } else {
                        0.0
                    }
                })
                .collect();
            Job {
                id,
                value: 1.0,
                service: Pmf::deterministic(service_time),
                departure: SurvivalCurve::new(values).expect("gap curve valid"),
            }
        })
        .collect();
    Instance::new(format!("gap-{n}-{m}"), horizon, jobs)
}

/// The paper-style feasible assignment for the gap instance: job 0 fully at
/// time 1, every other job with mass m/n at its type's revival time.
pub fn integrality_gap_assignment(n: usize, m: usize) -> Vec<Vec<f64>> {
    let per_type = n / m;
    let t_max = 1usize << (m - 1);
    let horizon = n * t_max;
    let mut x = vec![vec![0.0; horizon]; n];
    x[0][0] = 1.0;
    for (j, row) in x.iter_mut().enumerate().skip(1) {
        let k = j / per_type + 1;
        let t = (1usize << (k - 1)) + 1;
        row[t - 1] = m as f64 / n as f64;
    }
    x
}

/// Expected value of running the gap instance in increasing type order:
/// 1 + (1 - (1-m/n)^(n/m-1)) + (m-1)(1 - (1-m/n)^(n/m)).
pub fn integrality_gap_opt_value(n: usize, m: usize) -> f64 {
    let p = 1.0 - m as f64 / n as f64;
    let per_type = (n / m) as f64;
    1.0 + (1.0 - p.powf(per_type - 1.0)) + (m as f64 - 1.0) * (1.0 - p.powf(per_type))
}

/// The documented counterexample instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExampleName {
    /// Two unit-service jobs where chasing the higher value forfeits the
    /// impatient one; the value-greedy policy attains (1+eps)/(2+eps).
    GreedyIid,
    /// One long high-value job blocks n-1 short ones.
    GreedyValue,
    /// The value-per-expected-service ratio rule forfeits a large impatient
    /// job.
    GreedyRatio,
    /// Heterogeneous deadlines make value-greedy collect nothing.
    Deadline,
    /// Weighted pair where value-greedy-that-fits is fooled.
    Knapsack1,
    /// One heavy job crowds out n-1 light ones.
    Knapsack2,
    /// Staggered departures defeat the hybrid half-half knapsack rule.
    Knapsack3,
}

impl ExampleName {
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "greedy_iid" => Ok(Self::GreedyIid),
            "greedy_value" => Ok(Self::GreedyValue),
            "greedy_ratio" => Ok(Self::GreedyRatio),
            "deadline" => Ok(Self::Deadline),
            "knapsack1" => Ok(Self::Knapsack1),
            "knapsack2" => Ok(Self::Knapsack2),
            "knapsack3" => Ok(Self::Knapsack3),
            other => Err(Error::Configuration(format!(
                "unknown example `{other}` (expected greedy_iid|greedy_value|greedy_ratio|deadline|knapsack1|knapsack2|knapsack3)"
            ))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::GreedyIid => "greedy_iid",
            Self::GreedyValue => "greedy_value",
            Self::GreedyRatio => "greedy_ratio",
            Self::Deadline => "deadline",
            Self::Knapsack1 => "knapsack1",
            Self::Knapsack2 => "knapsack2",
            Self::Knapsack3 => "knapsack3",
        }
    }
}

/// Secondary knobs of the example instances; the defaults reproduce the
/// quoted figures.
#[derive(Debug, Clone, Copy)]
pub struct ExampleParams {
    pub epsilon: f64,
    /// Job count for the families parameterized by n.
    pub n: usize,
    /// The constant K (a value, a deadline or a capacity, per example).
    pub big_k: f64,
}

impl Default for ExampleParams {
    fn default() -> Self {
        ExampleParams {
            epsilon: 0.1,
            n: 5,
            big_k: 10.0,
        }
    }
}

/// Exact encodings of the documented counterexamples. Departure times D are
/// encoded as survival curves under the convention that a job with
/// deterministic departure D is present through time t = D.
pub fn gen_example(name: ExampleName, params: &ExampleParams) -> Result<Instance> {
    let eps = params.epsilon;
    let n = params.n;
    match name {
        ExampleName::GreedyIid => {
            let horizon = 2;
            Instance::new(
                "ex-greedy-iid",
                horizon,
                vec![
                    job(0, 1.0 + eps, Pmf::deterministic(1), until(2, horizon)),
                    job(1, 1.0, Pmf::deterministic(1), until(1, horizon)),
                ],
            )
        }
        ExampleName::GreedyValue => {
            if n < 2 {
                return Err(Error::InvalidParameter("greedy_value needs n >= 2".into()));
            }
            let horizon = n * n;
            let mut jobs = vec![job(
                0,
                1.0 + eps,
                Pmf::deterministic(n as u32),
                until(horizon, horizon),
            )];
            for id in 1..n {
                jobs.push(job(id, 1.0, Pmf::deterministic(1), until(n, horizon)));
            }
            Instance::new(format!("ex-greedy-value-{n}"), horizon, jobs)
        }
        ExampleName::GreedyRatio => {
            let k = params.big_k.round() as usize;
            if k < 2 {
                return Err(Error::InvalidParameter("greedy_ratio needs K >= 2".into()));
            }
            let horizon = 2 * k;
            Instance::new(
                format!("ex-greedy-ratio-{k}"),
                horizon,
                vec![
                    job(0, 1.0 + eps, Pmf::deterministic(1), until(k + 2, horizon)),
                    job(1, k as f64, Pmf::deterministic(k as u32), until(1, horizon)),
                ],
            )
        }
        ExampleName::Deadline => {
            let k = params.big_k.round() as usize;
            if k < 4 {
                return Err(Error::InvalidParameter("deadline needs K >= 4".into()));
            }
            let horizon = 4;
            Instance::new(
                "ex-deadline",
                horizon,
                vec![
                    job(0, 1.0 + eps, Pmf::deterministic(2), until(2, horizon)),
                    job(1, 1.0, Pmf::deterministic(2), until(2, horizon)),
                ],
            )?
            .with_deadlines(vec![2, k])
        }
        ExampleName::Knapsack1 => {
            let w = params.big_k;
            if w < 2.0 {
                return Err(Error::InvalidParameter("knapsack1 needs W >= 2".into()));
            }
            let horizon = 2;
            Instance::new(
                "ex-knapsack1",
                horizon,
                vec![
                    job(0, 1.0, Pmf::deterministic(1), until(1, horizon)),
                    job(1, w - 1.0, Pmf::deterministic(1), until(1, horizon)),
                ],
            )?
            .with_knapsack(vec![1.0, w], w)
        }
        ExampleName::Knapsack2 => {
            if n < 2 {
                return Err(Error::InvalidParameter("knapsack2 needs n >= 2".into()));
            }
            let w = params.big_k;
            if w <= n as f64 {
                return Err(Error::InvalidParameter("knapsack2 needs W > n".into()));
            }
            let horizon = n;
            let mut jobs = vec![job(0, 1.0 + eps, Pmf::deterministic(1), until(n, horizon))];
            for id in 1..n {
                jobs.push(job(id, 1.0, Pmf::deterministic(1), until(n, horizon)));
            }
            let mut weights = vec![1.0; n];
            weights[0] = w;
            Instance::new(format!("ex-knapsack2-{n}"), horizon, jobs)?.with_knapsack(weights, w)
        }
        ExampleName::Knapsack3 => {
            if n < 2 || n % 2 != 0 {
                return Err(Error::InvalidParameter(
                    "knapsack3 needs even n >= 2".into(),
                ));
            }
            let mid = (n + 1) as f64 / 2.0;
            if 1.0 + (1.0 - mid) * eps <= 0.0 {
                return Err(Error::InvalidParameter(
                    "knapsack3 epsilon too large; values must stay positive".into(),
                ));
            }
            let horizon = n + 1;
            let mut jobs: Vec<Job> = (1..=n)
                .map(|j| {
                    job(
                        j - 1,
                        1.0 + (j as f64 - mid) * eps,
                        Pmf::deterministic(1),
                        until(j + 1, horizon),
                    )
                })
                .collect();
            jobs.push(job(
                n,
                1.0 + n as f64 * eps / 2.0,
                Pmf::deterministic(1),
                until(n, horizon),
            ));
            let mut weights = vec![1.0; n + 1];
            weights[n] = n as f64;
            Instance::new(format!("ex-knapsack3-{n}"), horizon, jobs)?
                .with_knapsack(weights, n as f64)
        }
    }
}

fn job(id: usize, value: f64, service: Pmf, departure: SurvivalCurve) -> Job {
    Job {
        id,
        value,
        service,
        departure,
    }
}
