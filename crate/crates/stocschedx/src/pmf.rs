//! Finite discrete distributions on positive integers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for probability identities. All quantities handled by
/// this crate are O(1), so a fixed absolute tolerance is appropriate.
pub const PROB_TOL: f64 = 1e-9;

/// A probability mass function with finite support on the positive integers.
///
/// Used for both service times and departure times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    support: Vec<u32>,
    probs: Vec<f64>,
}

impl Pmf {
    /// Builds a pmf from parallel `support`/`probs` sequences.
    ///
    /// The support must be strictly increasing with all values >= 1, the
    /// probabilities non-negative and summing to 1 within `PROB_TOL`.
    pub fn new(support: Vec<u32>, probs: Vec<f64>) -> Result<Self> {
        if support.len() != probs.len() {
            return Err(Error::InvalidPmf(format!(
                "support has {} entries but probs has {}",
                support.len(),
                probs.len()
            )));
        }
        if support.is_empty() {
            return Err(Error::InvalidPmf("empty support".into()));
        }
        if support[0] < 1 {
            return Err(Error::InvalidPmf("support values must be >= 1".into()));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPmf(
                "support must be strictly increasing".into(),
            ));
        }
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidPmf(
                "probabilities must be finite and non-negative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidPmf(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self { support, probs })
    }

    /// A distribution placing all mass on `value`.
    pub fn deterministic(value: u32) -> Self {
        Self::new(vec![value], vec![1.0]).expect("deterministic pmf is valid")
    }

    pub fn support(&self) -> &[u32] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Largest support point.
    pub fn max_support(&self) -> u32 {
        *self.support.last().expect("support is non-empty")
    }

    /// Pr(X = v); zero off the support.
    pub fn mass_at(&self, v: u32) -> f64 {
        match self.support.binary_search(&v) {
            Ok(i) => self.probs[i],
            Err(_) => 0.0,
        }
    }

    /// Tail distribution Pr(X > t). `tail(0) = 1` for any pmf on positive
    /// integers.
    pub fn tail(&self, t: u32) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .filter(|(&s, _)| s > t)
            .map(|(_, &p)| p)
            .sum()
    }

    /// Cumulative distribution Pr(X <= t).
    pub fn cdf(&self, t: u32) -> f64 {
        1.0 - self.tail(t)
    }

    /// Expected value.
    pub fn mean(&self) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(&s, &p)| s as f64 * p)
            .sum()
    }

    /// Draws a sample by inverse-CDF lookup on `u` in [0, 1).
    pub fn sample_with(&self, u: f64) -> u32 {
        let mut acc = 0.0;
        for (&s, &p) in self.support.iter().zip(&self.probs) {
            acc += p;
            if u < acc {
                return s;
            }
        }
        self.max_support()
    }
}

/// Tail distribution Pr(X > t) of a pmf.
pub fn tail(pmf: &Pmf, t: u32) -> f64 {
    pmf.tail(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_deterministic_service() {
        let s = Pmf::deterministic(1);
        assert_eq!(s.tail(0), 1.0);
        assert_eq!(s.tail(1), 0.0);
    }

    #[test]
    fn tail_two_point() {
        let s = Pmf::new(vec![1, 2], vec![0.9, 0.1]).unwrap();
        assert!((s.tail(1) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_support() {
        assert!(Pmf::new(vec![0], vec![1.0]).is_err());
        assert!(Pmf::new(vec![2, 2], vec![0.5, 0.5]).is_err());
        assert!(Pmf::new(vec![3, 2], vec![0.5, 0.5]).is_err());
        assert!(Pmf::new(vec![], vec![]).is_err());
    }

    #[test]
    fn rejects_bad_probs() {
        assert!(Pmf::new(vec![1, 2], vec![0.5, 0.6]).is_err());
        assert!(Pmf::new(vec![1, 2], vec![-0.1, 1.1]).is_err());
        assert!(Pmf::new(vec![1], vec![f64::NAN]).is_err());
    }

    #[test]
    fn sample_with_hits_support() {
        let s = Pmf::new(vec![1, 3, 7], vec![0.2, 0.5, 0.3]).unwrap();
        assert_eq!(s.sample_with(0.0), 1);
        assert_eq!(s.sample_with(0.19), 1);
        assert_eq!(s.sample_with(0.21), 3);
        assert_eq!(s.sample_with(0.69), 3);
        assert_eq!(s.sample_with(0.71), 7);
        assert_eq!(s.sample_with(0.999999), 7);
    }

    proptest::proptest! {
        #[test]
        fn tail_is_monotone_and_vanishes(points in proptest::collection::vec((1u32..40, 0.01f64..1.0), 1..8)) {
            use std::collections::BTreeMap;
            let mut merged: BTreeMap<u32, f64> = BTreeMap::new();
            for (s, w) in points {
                *merged.entry(s).or_insert(0.0) += w;
            }
            let total: f64 = merged.values().sum();
            let support: Vec<u32> = merged.keys().copied().collect();
            let probs: Vec<f64> = merged.values().map(|w| w / total).collect();
            let pmf = Pmf::new(support, probs).unwrap();

            let max = pmf.max_support();
            let mut prev = 1.0;
            for t in 0..=max {
                let tl = pmf.tail(t);
                proptest::prop_assert!(tl <= prev + 1e-12);
                prev = tl;
            }
            proptest::prop_assert!(pmf.tail(max).abs() < 1e-9);
            proptest::prop_assert!((pmf.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
