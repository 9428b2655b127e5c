//! Single-server stochastic scheduling with abandonments.
//!
//! Jobs carry a value, a stochastic service time and a stochastic departure
//! time; the server runs at most one job at a time and a job that departs
//! before being started yields nothing. This crate provides:
//!
//! - probability primitives and the instance model ([`pmf`], [`survival`],
//!   [`instance`], [`preprocess`]),
//! - the time-indexed LP relaxation with deadline/knapsack/cardinality
//!   variants ([`lp`]),
//! - a seeded replicated simulator ([`engine`]) and the benchmarked policies
//!   ([`policies`]),
//! - Monte-Carlo estimation of the attenuation table that drives the
//!   consideration-set policy ([`attenuation`]),
//! - exact finite-horizon dynamic programming on small instances
//!   ([`oracle`]),
//! - instance generators and call-center log ingestion ([`generators`],
//!   [`callcenter`]),
//! - CSV emitters for benchmark results ([`report`]).

pub mod attenuation;
pub mod callcenter;
pub mod engine;
mod error;
pub mod generators;
pub mod instance;
pub mod lp;
pub mod oracle;
pub mod pmf;
pub mod policies;
pub mod preprocess;
pub mod report;
pub mod survival;

pub use error::{Error, Result};
pub use instance::{Instance, Job};
pub use pmf::Pmf;
pub use survival::SurvivalCurve;
