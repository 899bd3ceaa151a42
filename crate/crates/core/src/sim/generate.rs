//! Periodic i.i.d. instance generator.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, Job};
use crate::seeds::{rng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Period.
    pub k: usize,
    /// Capacity of every slot.
    pub capacity: usize,
    pub epsilon: f64,
    pub horizon: usize,
    pub l_max: usize,
    /// Weights of lengths `1..=l_max`; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_weights: Option<Vec<f64>>,
    /// Deadline slack beyond `s + l - 1`, drawn uniformly from `0..=max_slack`.
    #[serde(default)]
    pub max_slack: usize,
    pub q: f64,
    pub value_range: (f64, f64),
    /// Core jobs per residue. Defaults to the count whose expected demand
    /// is `(1 - eps) B` per slot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs_per_residue: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl GeneratorConfig {
    fn weights(&self) -> Vec<f64> {
        self.length_weights
            .clone()
            .unwrap_or_else(|| vec![1.0; self.l_max])
    }

    pub fn mean_length(&self) -> f64 {
        let w = self.weights();
        let total: f64 = w.iter().sum();
        w.iter()
            .enumerate()
            .map(|(i, x)| (i + 1) as f64 * x)
            .sum::<f64>()
            / total
    }

    pub fn core_jobs_per_residue(&self) -> usize {
        self.jobs_per_residue.unwrap_or_else(|| {
            ((1.0 - self.epsilon) * self.capacity as f64 / (self.q * self.mean_length())).round()
                as usize
        })
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.l_max == 0 || self.capacity == 0 {
            return Err(Error::Invalid(
                "k, l_max and capacity must be positive".into(),
            ));
        }
        if self.weights().len() != self.l_max || self.weights().iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::Invalid(format!(
                "need {} non-negative length weights",
                self.l_max
            )));
        }
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::Invalid(format!("q {} outside (0, 1]", self.q)));
        }
        let (lo, hi) = self.value_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::Invalid(format!("bad value range [{lo}, {hi}]")));
        }
        if self.k + self.l_max + self.max_slack > self.horizon + 1 {
            return Err(Error::Invalid(
                "horizon too short for one period of windows".into(),
            ));
        }
        Ok(())
    }
}

/// Core jobs start at every residue `1..=k`; the instance is their
/// k-shift closure over the horizon.
pub fn generate_periodic(cfg: &GeneratorConfig) -> Result<Instance> {
    cfg.validate()?;
    let mut r = rng(cfg.seed, Stream::Generator, 0);
    let lengths = WeightedIndex::new(cfg.weights())
        .map_err(|e| Error::Invalid(format!("length weights: {e}")))?;
    let (lo, hi) = cfg.value_range;
    let per = cfg.core_jobs_per_residue();
    let mut core = Vec::with_capacity(per * cfg.k);
    for s in 1..=cfg.k {
        for i in 0..per {
            let l = lengths.sample(&mut r) + 1;
            let slack = r.random_range(0..=cfg.max_slack);
            let v = if hi > lo { r.random_range(lo..hi) } else { lo };
            core.push(Job::new(
                format!("r{s}j{i}"),
                s,
                s + l - 1 + slack,
                l,
                v,
                cfg.q,
            )?);
        }
    }
    Instance::periodic(
        core,
        cfg.k,
        vec![cfg.capacity; cfg.k],
        cfg.horizon,
        cfg.epsilon,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> GeneratorConfig {
        GeneratorConfig {
            k: 2,
            capacity: 20,
            epsilon: 0.25,
            horizon: 10,
            l_max: 2,
            length_weights: None,
            max_slack: 1,
            q: 0.5,
            value_range: (1.0, 3.0),
            jobs_per_residue: None,
            seed: 4,
        }
    }

    #[test]
    fn demand_matches_target() {
        let c = cfg();
        assert_eq!(c.core_jobs_per_residue(), 20);
        let inst = generate_periodic(&c).unwrap();
        assert_eq!(inst.period.as_ref().unwrap().core.len(), 40);
        assert!(inst.jobs.iter().all(|j| j.l <= 2 && j.d <= 10));
        assert_eq!(generate_periodic(&c).unwrap(), inst);
    }

    #[test]
    fn bad_configs() {
        let mut c = cfg();
        c.q = 0.0;
        assert!(generate_periodic(&c).is_err());
        let mut c = cfg();
        c.horizon = 3;
        assert!(generate_periodic(&c).is_err());
        let mut c = cfg();
        c.length_weights = Some(vec![1.0]);
        assert!(generate_periodic(&c).is_err());
    }
}
