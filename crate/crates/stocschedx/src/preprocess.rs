//! Instance reductions: bounded-support service times and strictly positive
//! departure curves.

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::pmf::Pmf;
use crate::survival::SurvivalCurve;

/// Truncates every service pmf at the smallest tau such that
/// Pr(S_j > tau) <= epsilon / n^2 for all jobs, moving the truncated mass
/// onto tau. The horizon is recomputed as n * tau, capped at the shortest
/// departure curve so the result remains a valid instance.
pub fn truncate_services(instance: &Instance, epsilon: f64) -> Result<Instance> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let n = instance.n_jobs();
    let threshold = epsilon / (n * n) as f64;
    let max_t = instance.max_service() as u32;
    let mut tau = max_t;
    for cand in 1..=max_t {
        if instance
            .jobs
            .iter()
            .all(|j| j.service.tail(cand) <= threshold)
        {
            tau = cand;
            break;
        }
    }

    let mut out = instance.clone();
    for job in &mut out.jobs {
        if job.service.max_support() <= tau {
            continue;
        }
        let mut support = Vec::new();
        let mut probs = Vec::new();
        let mut cut_mass = 0.0;
        for (&s, &p) in job.service.support().iter().zip(job.service.probs()) {
            if s < tau {
                support.push(s);
                probs.push(p);
            } else {
                cut_mass += p;
            }
        }
        support.push(tau);
        probs.push(cut_mass);
        job.service = Pmf::new(support, probs)?;
    }

    let min_curve = out.jobs.iter().map(|j| j.departure.len()).min().unwrap();
    out.horizon = (n * tau as usize).min(min_curve).max(1);
    out.validate()?;
    Ok(out)
}

/// Replaces each departure time D by max(D, G) where G is geometric with
/// success probability 1 - epsilon, so that Pr(D' <= t) = Pr(D <= t)(1 - eps^t).
/// The resulting curve satisfies p'(t) >= eps^(t-1) > 0 for every t.
pub fn regularize_departures(instance: &Instance, epsilon: f64) -> Result<Instance> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let mut out = instance.clone();
    for job in &mut out.jobs {
        let values = (1..=job.departure.len())
            .map(|t| {
                let p = job.departure.prob_at(t);
                // p'(t) = 1 - Pr(D <= t-1) * (1 - eps^(t-1))
                1.0 - (1.0 - p) * (1.0 - epsilon.powi(t as i32 - 1))
            })
            .collect();
        job.departure = SurvivalCurve::new(values)?;
    }
    out.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Job;
    use crate::survival::geometric_survival;

    fn single_job_instance(service: Pmf, curve: SurvivalCurve, horizon: usize) -> Instance {
        Instance::new(
            "t",
            horizon,
            vec![Job {
                id: 0,
                value: 1.0,
                service,
                departure: curve,
            }],
        )
        .unwrap()
    }

    #[test]
    fn truncate_is_fixed_point_on_bounded_support() {
        // Uniform on {1..10}: tail(9) = 0.1 > eps/n^2 = 0.05, so tau = 10.
        let pmf = Pmf::new((1..=10).collect(), vec![0.1; 10]).unwrap();
        let inst = single_job_instance(pmf, geometric_survival(0.9, 10).unwrap(), 10);
        let out = truncate_services(&inst, 0.05).unwrap();
        assert_eq!(out, inst);
    }

    #[test]
    fn truncate_collapses_heavy_tail() {
        // S in {1: 0.5, 100: 0.5}, eps = 0.9, n = 1: threshold 0.9 so tau = 1.
        let pmf = Pmf::new(vec![1, 100], vec![0.5, 0.5]).unwrap();
        let inst = single_job_instance(pmf, geometric_survival(0.9, 100).unwrap(), 100);
        let out = truncate_services(&inst, 0.9).unwrap();
        assert_eq!(out.jobs[0].service, Pmf::deterministic(1));
        assert_eq!(out.horizon, 1);
    }

    #[test]
    fn truncate_tail_bound_holds() {
        let pmf = Pmf::new(vec![1, 5, 9, 30], vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        let inst = single_job_instance(pmf.clone(), geometric_survival(0.95, 40).unwrap(), 30);
        let eps = 0.3;
        let out = truncate_services(&inst, eps).unwrap();
        let tau = out.jobs[0].service.max_support();
        assert!(pmf.tail(tau) <= eps / 1.0);
        assert!((out.jobs[0].service.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn regularize_matches_direct_formula() {
        // D = 1 surely; eps = 0.5. p'(2) = 1 - (1-0)(1-0.5) = 0.5 and
        // p'(3) = 1 - (1-0)(1-0.25) = 0.25.
        let curve = SurvivalCurve::new(vec![1.0, 0.0, 0.0]).unwrap();
        let inst = single_job_instance(Pmf::deterministic(1), curve, 3);
        let out = regularize_departures(&inst, 0.5).unwrap();
        let c = &out.jobs[0].departure;
        assert!((c.prob_at(1) - 1.0).abs() < 1e-12);
        assert!((c.prob_at(2) - 0.5).abs() < 1e-12);
        assert!((c.prob_at(3) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn regularize_leaves_certain_stayers_unchanged() {
        let curve = SurvivalCurve::new(vec![1.0, 1.0, 1.0]).unwrap();
        let inst = single_job_instance(Pmf::deterministic(1), curve.clone(), 3);
        let out = regularize_departures(&inst, 0.3).unwrap();
        assert_eq!(out.jobs[0].departure, curve);
    }

    #[test]
    fn regularize_approaches_original_as_eps_vanishes() {
        let curve = SurvivalCurve::new(vec![1.0, 0.6, 0.3]).unwrap();
        let inst = single_job_instance(Pmf::deterministic(1), curve.clone(), 3);
        let out = regularize_departures(&inst, 1e-9).unwrap();
        for t in 1..=3 {
            assert!((out.jobs[0].departure.prob_at(t) - curve.prob_at(t)).abs() < 1e-8);
        }
    }

    proptest::proptest! {
        // Quantified form of the positivity guarantee over random curves.
        #[test]
        fn regularized_curves_dominate_geometric_floor(
            factors in proptest::collection::vec(0.0f64..=1.0, 1..12),
            eps in 0.05f64..0.95,
        ) {
            let mut values = vec![1.0];
            for f in &factors {
                let last = *values.last().unwrap();
                values.push(last * f);
            }
            let horizon = values.len();
            let inst = single_job_instance(
                Pmf::deterministic(1),
                SurvivalCurve::new(values).unwrap(),
                horizon,
            );
            let out = regularize_departures(&inst, eps).unwrap();
            for t in 1..=horizon {
                let p = out.jobs[0].departure.prob_at(t);
                proptest::prop_assert!(p >= eps.powi(t as i32 - 1) - 1e-12);
                proptest::prop_assert!(p >= inst.jobs[0].departure.prob_at(t) - 1e-12);
            }
        }
    }
}
