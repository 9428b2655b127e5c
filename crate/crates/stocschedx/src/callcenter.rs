//! Call-center log ingestion.
//!
//! The expected CSV format is defined by this crate (the original bank logs
//! are not redistributable):
//!
//! ```text
//! category,outcome,service_seconds,patience_seconds
//! priority,served,45,
//! new,abandoned,,130
//! ```
//!
//! `category` is one of new/regular/priority, `outcome` one of
//! served/abandoned. Served rows carry the handling time in seconds;
//! abandoned rows carry the time until hang-up. To convert the public bank
//! dataset, map its call type field onto the three categories, its service
//! duration onto `service_seconds` for rows that reached an agent, and its
//! queue exit time onto `patience_seconds` for rows flagged as hang-ups.
//!
//! Durations are bucketed into fixed-width bins (20 seconds by default,
//! minimum bin 1). Served rows yield the per-category service distribution;
//! abandoned rows yield the departure survival curve p(t) = fraction of
//! callers whose binned patience is at least t, which reaches 0 one bin past
//! the largest observation and stays there.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::BENCH_HORIZON;
use crate::instance::{Instance, Job};
use crate::pmf::Pmf;
use crate::survival::SurvivalCurve;

pub const DEFAULT_BIN_SECONDS: f64 = 20.0;

/// Caller categories with their fixed values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    New,
    Regular,
    Priority,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::New, Category::Regular, Category::Priority];

    pub fn value(&self) -> f64 {
        match self {
            Category::New => 1.0,
            Category::Regular => 2.0,
            Category::Priority => 8.0,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Category::New => "new",
            Category::Regular => "regular",
            Category::Priority => "priority",
        }
    }

    fn parse(text: &str) -> Option<Self> {
        match text.trim() {
            "new" => Some(Category::New),
            "regular" => Some(Category::Regular),
            "priority" => Some(Category::Priority),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Served,
    Abandoned,
}

/// One parsed log row. Exactly one of the duration fields is set, matching
/// the outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct CallRecord {
    pub category: Category,
    pub outcome: Outcome,
    pub service_seconds: Option<f64>,
    pub patience_seconds: Option<f64>,
}

/// Distributions learned for one category.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CategoryProfile {
    pub service: Pmf,
    pub departure: SurvivalCurve,
    pub frequency: f64,
    pub value: f64,
    pub rows: usize,
}

/// Per-category empirical distributions in fixed-width bins.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmpiricalProfile {
    pub bin_seconds: f64,
    pub categories: BTreeMap<Category, CategoryProfile>,
}

impl EmpiricalProfile {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Seconds to 1-based bin index.
pub fn bin_index(seconds: f64, bin_seconds: f64) -> u32 {
    ((seconds / bin_seconds).ceil() as u32).max(1)
}

/// Parses the CSV format documented at module level.
pub fn parse_call_csv<R: Read>(reader: R) -> Result<Vec<CallRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 2; // 1-based, after the header
        let row = row.map_err(|e| Error::CsvRow {
            row: row_no,
            msg: e.to_string(),
        })?;
        let category = Category::parse(row.get(0).unwrap_or("")).ok_or_else(|| Error::CsvRow {
            row: row_no,
            msg: format!("unknown category `{}`", row.get(0).unwrap_or("")),
        })?;
        let outcome = match row.get(1).unwrap_or("").trim() {
            "served" => Outcome::Served,
            "abandoned" => Outcome::Abandoned,
            other => {
                return Err(Error::CsvRow {
                    row: row_no,
                    msg: format!("unknown outcome `{other}`"),
                })
            }
        };
        let parse_secs = |field: Option<&str>, name: &str| -> Result<f64> {
            let text = field.unwrap_or("").trim();
            let v: f64 = text.parse().map_err(|_| Error::CsvRow {
                row: row_no,
                msg: format!("bad {name} `{text}`"),
            })?;
            if v < 0.0 {
                return Err(Error::CsvRow {
                    row: row_no,
                    msg: format!("negative {name}"),
                });
            }
            Ok(v)
        };
        let record = match outcome {
            Outcome::Served => CallRecord {
                category,
                outcome,
                service_seconds: Some(parse_secs(row.get(2), "service_seconds")?),
                patience_seconds: None,
            },
            Outcome::Abandoned => CallRecord {
                category,
                outcome,
                service_seconds: None,
                patience_seconds: Some(parse_secs(row.get(3), "patience_seconds")?),
            },
        };
        records.push(record);
    }
    Ok(records)
}

/// Builds the empirical profile from parsed records.
pub fn profile_from_records(records: &[CallRecord], bin_seconds: f64) -> Result<EmpiricalProfile> {
    if bin_seconds <= 0.0 {
        return Err(Error::InvalidParameter("bin width must be positive".into()));
    }
    let total = records.len();
    let mut categories = BTreeMap::new();
    for cat in Category::ALL {
        let rows: Vec<&CallRecord> = records.iter().filter(|r| r.category == cat).collect();
        let service_bins: Vec<u32> = rows
            .iter()
            .filter_map(|r| r.service_seconds)
            .map(|s| bin_index(s, bin_seconds))
            .collect();
        let patience_bins: Vec<u32> = rows
            .iter()
            .filter_map(|r| r.patience_seconds)
            .map(|s| bin_index(s, bin_seconds))
            .collect();
        if service_bins.is_empty() || patience_bins.is_empty() {
            return Err(Error::EmptyCategory(cat.label().into()));
        }

        let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
        for &b in &service_bins {
            *counts.entry(b).or_insert(0) += 1;
        }
        let service = Pmf::new(
            counts.keys().copied().collect(),
            counts
                .values()
                .map(|&c| c as f64 / service_bins.len() as f64)
                .collect(),
        )?;

        let max_bin = *patience_bins.iter().max().unwrap() as usize;
        let values: Vec<f64> = (1..=max_bin + 1)
            .map(|t| {
                patience_bins.iter().filter(|&&b| b as usize >= t).count() as f64
                    / patience_bins.len() as f64
            })
            .collect();
        let departure = SurvivalCurve::new(values)?;

        categories.insert(
            cat,
            CategoryProfile {
                service,
                departure,
                frequency: rows.len() as f64 / total as f64,
                value: cat.value(),
                rows: rows.len(),
            },
        );
    }
    Ok(EmpiricalProfile {
        bin_seconds,
        categories,
    })
}

/// Reads and bins a call log.
pub fn ingest_call_center(path: &Path, bin_seconds: f64) -> Result<EmpiricalProfile> {
    let file = std::fs::File::open(path)?;
    let records = parse_call_csv(file)?;
    profile_from_records(&records, bin_seconds)
}

/// Draws an n-customer instance from the learned profile: categories by
/// frequency, each customer carrying its category's distributions and value.
/// Survival curves are extended to the horizon (they are 0 beyond the
/// observed support by construction).
pub fn sample_real_instance(profile: &EmpiricalProfile, n: usize, seed: u64) -> Result<Instance> {
    if n < 1 {
        return Err(Error::InvalidParameter("need at least one customer".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cats: Vec<&CategoryProfile> = profile.categories.values().collect();
    let horizon = BENCH_HORIZON;
    let jobs = (0..n)
        .map(|id| {
            let mut u: f64 = rng.gen();
            let mut chosen = cats[cats.len() - 1];
            for c in &cats {
                if u < c.frequency {
                    chosen = c;
                    break;
                }
                u -= c.frequency;
            }
            let curve_values: Vec<f64> = (1..=horizon)
                .map(|t| chosen.departure.prob_at(t))
                .collect();
            Job {
                id,
                value: chosen.value,
                service: chosen.service.clone(),
                departure: SurvivalCurve::new(curve_values).expect("extension stays valid"),
            }
        })
        .collect();
    Instance::new(format!("real-{n}-s{seed}"), horizon, jobs)
}

/// Root mean squared difference of two pmfs over the union of their
/// supports.
pub fn pmf_rmse(a: &Pmf, b: &Pmf) -> f64 {
    let mut union: Vec<u32> = a.support().iter().chain(b.support()).copied().collect();
    union.sort_unstable();
    union.dedup();
    let mse: f64 = union
        .iter()
        .map(|&s| {
            let d = a.mass_at(s) - b.mass_at(s);
            d * d
        })
        .sum::<f64>()
        / union.len() as f64;
    mse.sqrt()
}
