//! Jobs and problem instances, plus the canonical on-disk JSON format.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pmf::Pmf;
use crate::survival::SurvivalCurve;

/// A job: value collected when run, stochastic service time, and a departure
/// survival curve describing how long the job stays in the system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: usize,
    pub value: f64,
    pub service: Pmf,
    #[serde(rename = "departure_survival")]
    pub departure: SurvivalCurve,
}

/// A scheduling instance. Immutable after construction.
///
/// `horizon` is the number of decision epochs; every departure curve must
/// cover at least that many steps. Deadlines, weights, capacity and
/// cardinality are optional extension data consumed by the corresponding
/// modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub name: String,
    pub horizon: usize,
    pub jobs: Vec<Job>,
    #[serde(default)]
    pub deadlines: Option<Vec<usize>>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default)]
    pub capacity: Option<f64>,
    #[serde(default)]
    pub cardinality: Option<usize>,
}

impl Instance {
    /// Builds and validates a plain instance.
    pub fn new(name: impl Into<String>, horizon: usize, jobs: Vec<Job>) -> Result<Self> {
        let inst = Self {
            name: name.into(),
            horizon,
            jobs,
            deadlines: None,
            weights: None,
            capacity: None,
            cardinality: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn with_deadlines(mut self, deadlines: Vec<usize>) -> Result<Self> {
        self.deadlines = Some(deadlines);
        self.validate()?;
        Ok(self)
    }

    pub fn with_knapsack(mut self, weights: Vec<f64>, capacity: f64) -> Result<Self> {
        self.weights = Some(weights);
        self.capacity = Some(capacity);
        self.validate()?;
        Ok(self)
    }

    pub fn with_cardinality(mut self, k: usize) -> Result<Self> {
        self.cardinality = Some(k);
        self.validate()?;
        Ok(self)
    }

    pub fn n_jobs(&self) -> usize {
        self.jobs.len()
    }

    /// Maximum service-time support over all jobs (the `T` of the model).
    pub fn max_service(&self) -> usize {
        self.jobs
            .iter()
            .map(|j| j.service.max_support() as usize)
            .max()
            .unwrap_or(1)
    }

    /// Default horizon n * T used when no explicit horizon is requested.
    pub fn default_horizon(n_jobs: usize, max_service: usize) -> usize {
        n_jobs * max_service
    }

    pub fn values(&self) -> Vec<f64> {
        self.jobs.iter().map(|j| j.value).collect()
    }

    pub fn max_value(&self) -> f64 {
        self.jobs.iter().map(|j| j.value).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::InvalidInstance("horizon must be >= 1".into()));
        }
        if self.jobs.is_empty() {
            return Err(Error::InvalidInstance("no jobs".into()));
        }
        for (i, job) in self.jobs.iter().enumerate() {
            if job.id != i {
                return Err(Error::InvalidInstance(format!(
                    "job ids must be 0..n-1 in order; position {i} has id {}",
                    job.id
                )));
            }
            if !(job.value > 0.0) || !job.value.is_finite() {
                return Err(Error::InvalidInstance(format!(
                    "job {i} value must be positive, got {}",
                    job.value
                )));
            }
            if job.departure.len() < self.horizon {
                return Err(Error::InvalidInstance(format!(
                    "job {i} survival curve covers {} steps but horizon is {}; curves are never extended implicitly",
                    job.departure.len(),
                    self.horizon
                )));
            }
        }
        if let Some(d) = &self.deadlines {
            if d.len() != self.jobs.len() {
                return Err(Error::InvalidInstance(format!(
                    "deadlines has {} entries for {} jobs",
                    d.len(),
                    self.jobs.len()
                )));
            }
            if d.iter().any(|&b| b < 1) {
                return Err(Error::InvalidInstance("deadlines must be >= 1".into()));
            }
        }
        if let Some(w) = &self.weights {
            if w.len() != self.jobs.len() {
                return Err(Error::InvalidInstance(format!(
                    "weights has {} entries for {} jobs",
                    w.len(),
                    self.jobs.len()
                )));
            }
            if w.iter().any(|&x| x < 0.0 || !x.is_finite()) {
                return Err(Error::InvalidInstance(
                    "weights must be non-negative".into(),
                ));
            }
        }
        if let Some(cap) = self.capacity {
            if cap < 0.0 || !cap.is_finite() {
                return Err(Error::InvalidInstance("capacity must be >= 0".into()));
            }
            if self.weights.is_none() {
                return Err(Error::InvalidInstance(
                    "capacity set without per-job weights".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Instance = serde_json::from_str(text)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn write_json(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read_json(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
