//! CSV emitters for simulation results. Numbers are written with fixed
//! precision so identical runs produce byte-identical files.

use std::fmt::Write as _;

use crate::engine::SimStats;

/// Metadata header shared by all outputs: seed and generator version.
pub fn metadata_line(seed: u64) -> String {
    format!(
        "# generator=stocschedx/{} rng={} seed={}\n",
        env!("CARGO_PKG_VERSION"),
        crate::engine::RNG_NAME,
        seed
    )
}

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_else(|| "NA".into())
}

/// One row of the per-run results table.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub instance: String,
    pub policy: String,
    pub mode: String,
    pub reps: usize,
    pub seed: u64,
    pub mean: f64,
    pub std: f64,
    pub ci95: f64,
    pub lp_objective: Option<f64>,
    pub ratio_to_lp: Option<f64>,
}

impl ResultRow {
    pub fn new(
        instance: &str,
        policy: &str,
        mode: &str,
        reps: usize,
        seed: u64,
        stats: &SimStats,
        lp_objective: Option<f64>,
    ) -> Self {
        ResultRow {
            instance: instance.into(),
            policy: policy.into(),
            mode: mode.into(),
            reps,
            seed,
            mean: stats.mean,
            std: stats.std,
            ci95: stats.ci95,
            lp_objective,
            ratio_to_lp: lp_objective.map(|o| stats.mean / o),
        }
    }
}

/// `instance,policy,mode,reps,seed,mean,std,ci95,lp_objective,ratio_to_lp`
pub fn results_csv(rows: &[ResultRow], seed: u64) -> String {
    let mut out = metadata_line(seed);
    out.push_str("instance,policy,mode,reps,seed,mean,std,ci95,lp_objective,ratio_to_lp\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.instance,
            r.policy,
            r.mode,
            r.reps,
            r.seed,
            fmt(r.mean),
            fmt(r.std),
            fmt(r.ci95),
            fmt_opt(r.lp_objective),
            fmt_opt(r.ratio_to_lp),
        );
    }
    out
}

/// `instance,policy,t,free_frequency`
pub fn profile_csv(entries: &[(String, String, &SimStats)], seed: u64) -> String {
    let mut out = metadata_line(seed);
    out.push_str("instance,policy,t,free_frequency\n");
    for (instance, policy, stats) in entries {
        for (i, &f) in stats.free_freq.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{}", instance, policy, i + 1, fmt(f));
        }
    }
    out
}

/// A benchmark table row: one instance-size label with the LP benchmark and
/// per-policy mean and confidence interval, in table order.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub label: String,
    pub lp: f64,
    /// `None` marks instances too large for the exact optimum column.
    pub mdp: Option<f64>,
    pub policies: Vec<(String, f64, f64)>,
}

/// Wide per-size values table mirroring the benchmark report layout.
pub fn bench_values_csv(rows: &[BenchRow], policy_names: &[String], with_mdp: bool, seed: u64) -> String {
    let mut out = metadata_line(seed);
    out.push_str("instance,lp");
    if with_mdp {
        out.push_str(",mdp");
    }
    for p in policy_names {
        let _ = write!(out, ",{p}_mean,{p}_ci95");
    }
    out.push('\n');
    for row in rows {
        let _ = write!(out, "{},{}", row.label, fmt(row.lp));
        if with_mdp {
            let _ = write!(out, ",{}", fmt_opt(row.mdp));
        }
        for (_, mean, ci) in &row.policies {
            let _ = write!(out, ",{},{}", fmt(*mean), fmt(*ci));
        }
        out.push('\n');
    }
    out
}

/// Long-format ratio table: `instance,n,policy,ratio_to_lp`.
pub fn bench_ratios_csv(rows: &[(String, usize, String, f64)], seed: u64) -> String {
    let mut out = metadata_line(seed);
    out.push_str("instance,n,policy,ratio_to_lp\n");
    for (label, n, policy, ratio) in rows {
        let _ = writeln!(out, "{label},{n},{policy},{}", fmt(*ratio));
    }
    out
}

/// Long-format runtime table: `instance,step,milliseconds`. Timings are
/// hardware-dependent; this file is informational and intentionally kept
/// separate from the deterministic outputs.
pub fn bench_runtimes_csv(rows: &[(String, String, f64)], seed: u64) -> String {
    let mut out = metadata_line(seed);
    out.push_str("instance,step,milliseconds\n");
    for (label, step, ms) in rows {
        let _ = writeln!(out, "{label},{step},{}", fmt(*ms));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(mean: f64) -> SimStats {
        SimStats {
            reps: 10,
            mean,
            std: 0.5,
            ci95: 0.31,
            free_freq: vec![1.0, 0.25],
        }
    }

    #[test]
    fn results_csv_has_fixed_columns_and_na() {
        let s = stats(2.0);
        let rows = vec![
            ResultRow::new("inst", "greedy", "base", 10, 7, &s, Some(4.0)),
            ResultRow::new("inst", "ur", "base", 10, 7, &s, None),
        ];
        let text = results_csv(&rows, 7);
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# generator=stocschedx/"));
        assert_eq!(
            lines.next().unwrap(),
            "instance,policy,mode,reps,seed,mean,std,ci95,lp_objective,ratio_to_lp"
        );
        let greedy = lines.next().unwrap();
        assert!(greedy.contains(",0.500000,"));
        assert!(greedy.ends_with(",4.000000,0.500000"));
        assert!(lines.next().unwrap().ends_with(",NA,NA"));
    }

    #[test]
    fn profile_csv_enumerates_times() {
        let s = stats(1.0);
        let text = profile_csv(&[("i".into(), "greedy".into(), &s)], 1);
        assert!(text.contains("i,greedy,1,1.000000"));
        assert!(text.contains("i,greedy,2,0.250000"));
    }

    #[test]
    fn bench_values_csv_orders_policies() {
        let rows = vec![BenchRow {
            label: "syn-5".into(),
            lp: 10.0,
            mdp: None,
            policies: vec![
                ("simalg".into(), 9.0, 0.1),
                ("greedy".into(), 8.0, 0.2),
            ],
        }];
        let names = vec!["simalg".to_string(), "greedy".to_string()];
        let text = bench_values_csv(&rows, &names, true, 3);
        assert!(text.contains("instance,lp,mdp,simalg_mean,simalg_ci95,greedy_mean,greedy_ci95"));
        assert!(text.contains("syn-5,10.000000,NA,9.000000,0.100000,8.000000,0.200000"));
    }
}
