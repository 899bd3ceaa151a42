//! Per-block capacities `B_{t,l}` carved out of the slot capacities.
//!
//! `B_{t,l} = sum_{j : l_j = l} q_j X_{j,t} + eps' * min_{s in [t, t+l-1]} B_s`
//! with `eps' = eps / l_max^2`. Using the smallest capacity along the block
//! keeps the partition inequality valid when capacities vary.

use crate::error::{Error, Result};
use crate::model::Instance;
use crate::pricing::FractionalAssignment;

/// Absolute slack when comparing fractional capacities.
const PARTITION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockCapacities {
    pub horizon: usize,
    pub l_max: usize,
    pub eps_prime: f64,
    /// `caps[l - 1][t - 1]` for blocks that fit the horizon.
    pub caps: Vec<Vec<f64>>,
}

impl BlockCapacities {
    pub fn get(&self, t: usize, l: usize) -> f64 {
        self.caps[l - 1][t - 1]
    }

    /// Number of jobs a block admits.
    pub fn admissions(&self, t: usize, l: usize) -> usize {
        (self.get(t, l) + PARTITION_TOL).floor() as usize
    }

    /// `sum_l sum_{t' in [t-l+1, t]} B_{t',l}` for every slot.
    pub fn slot_usage(&self) -> Vec<f64> {
        let mut usage = vec![0.0; self.horizon];
        for (li, row) in self.caps.iter().enumerate() {
            let l = li + 1;
            for (ti, &c) in row.iter().enumerate() {
                for s in ti..ti + l {
                    usage[s] += c;
                }
            }
        }
        usage
    }

    /// Slots where the partition inequality fails.
    pub fn violations(&self, capacities: &[usize]) -> Vec<usize> {
        self.slot_usage()
            .iter()
            .zip(capacities)
            .enumerate()
            .filter(|(_, (u, &b))| **u > b as f64 + PARTITION_TOL * (1.0 + b as f64))
            .map(|(i, _)| i + 1)
            .collect()
    }
}

pub fn partition_capacities(
    inst: &Instance,
    x: &FractionalAssignment,
    epsilon: f64,
) -> Result<BlockCapacities> {
    let h = inst.horizon;
    let l_max = inst.max_len().min(h);
    let eps_prime = epsilon / (l_max * l_max) as f64;
    let mut caps: Vec<Vec<f64>> = (1..=l_max)
        .map(|l| {
            (1..=h + 1 - l)
                .map(|t| {
                    let floor = (t..t + l)
                        .map(|s| inst.capacity(s))
                        .min()
                        .expect("nonempty block");
                    eps_prime * floor as f64
                })
                .collect()
        })
        .collect();
    for (j, job) in inst.jobs.iter().enumerate() {
        if job.l > l_max {
            continue;
        }
        for &(t, m) in &x.x[j] {
            if t + job.l - 1 > h {
                return Err(Error::Contract(format!(
                    "job {} has mass at {} past the horizon",
                    job.id, t
                )));
            }
            caps[job.l - 1][t - 1] += job.q * m;
        }
    }
    let out = BlockCapacities {
        horizon: h,
        l_max,
        eps_prime,
        caps,
    };
    if let Some(&t) = out.violations(&inst.capacities).first() {
        return Err(Error::Invariant(format!(
            "capacity partition exceeds B_{t} (assignment infeasible for slack {epsilon})"
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Job;

    #[test]
    fn unit_lengths_collapse() {
        let inst = Instance::new(
            vec![Job::new("a", 1, 2, 1, 1.0, 0.5).unwrap()],
            2,
            vec![4, 4],
            0.25,
        )
        .unwrap();
        let mut x = FractionalAssignment::zeros(1);
        x.set(0, 1, 1.0);
        let caps = partition_capacities(&inst, &x, 0.25).unwrap();
        assert!((caps.get(1, 1) - 1.5).abs() < 1e-12);
        assert!((caps.get(2, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_lengths_example() {
        // per slot: length-1 load 2.0 and length-2 load 1.5, B = 10, eps = 0.4
        let h = 4;
        let mut jobs = Vec::new();
        for t in 1..=h {
            jobs.push(Job::new(format!("u{t}"), t, t, 1, 1.0, 1.0).unwrap());
        }
        for t in 1..h {
            jobs.push(Job::new(format!("w{t}"), t, t + 1, 2, 1.0, 1.0).unwrap());
        }
        let inst = Instance::new(jobs, h, vec![10; h], 0.4).unwrap();
        let mut x = FractionalAssignment::zeros(inst.jobs.len());
        for j in 0..h {
            x.set(j, j + 1, 2.0);
        }
        for j in 0..h - 1 {
            x.set(h + j, j + 1, 1.5);
        }
        let caps = partition_capacities(&inst, &x, 0.4).unwrap();
        assert!((caps.eps_prime - 0.1).abs() < 1e-12);
        assert!((caps.get(2, 1) - 3.0).abs() < 1e-12);
        assert!((caps.get(2, 2) - 2.5).abs() < 1e-12);
        let usage = caps.slot_usage();
        assert!((usage[1] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn zero_assignment_leaves_reserve() {
        let jobs = vec![
            Job::new("a", 1, 3, 1, 1.0, 1.0).unwrap(),
            Job::new("b", 1, 3, 3, 1.0, 1.0).unwrap(),
        ];
        let inst = Instance::new(jobs, 3, vec![9, 9, 9], 0.3).unwrap();
        let caps = partition_capacities(&inst, &FractionalAssignment::zeros(2), 0.3).unwrap();
        let usage = caps.slot_usage();
        // the middle slot is covered by every block length: 9 * 0.3 * (1+2+3)/9
        assert!(usage.iter().all(|&u| u <= 0.3 * 9.0 + 1e-12));
    }

    #[test]
    fn infeasible_assignment_is_rejected() {
        let inst = Instance::new(
            vec![Job::new("a", 1, 1, 1, 1.0, 1.0).unwrap()],
            1,
            vec![1],
            0.5,
        )
        .unwrap();
        let mut x = FractionalAssignment::zeros(1);
        x.set(0, 1, 1.0);
        assert!(matches!(
            partition_capacities(&inst, &x, 0.5),
            Err(Error::Invariant(_))
        ));
    }
}
