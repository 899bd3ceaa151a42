//! Forwarding simulation under pluggable adversaries.
//!
//! Jobs are released one at a time. A job is served at the first node with
//! spare capacity on its walk; a full node forwards it to an unvisited
//! out-neighbor picked by the policy, and a job with nowhere left to go
//! gives up.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::{self, Stream};
use crate::stats::Proportion;

use super::network::{PathCollection, ServerNetwork};
use super::search::exhaustive_first_node_failures;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NetworkPolicy {
    /// Uniformly random job order and forwarding targets.
    Random,
    /// Jobs by entry node, lowest-numbered neighbor first.
    Fifo,
    /// Jobs from the most over-subscribed nodes first, forwarded to the
    /// neighbor closest to filling up.
    CapacitySeeking,
    /// Worst case over all orders and routes; tiny instances only.
    Exhaustive,
}

impl NetworkPolicy {
    pub const ALL: [NetworkPolicy; 4] = [
        NetworkPolicy::Random,
        NetworkPolicy::Fifo,
        NetworkPolicy::CapacitySeeking,
        NetworkPolicy::Exhaustive,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            NetworkPolicy::Random => "random",
            NetworkPolicy::Fifo => "fifo",
            NetworkPolicy::CapacitySeeking => "capacity-seeking",
            NetworkPolicy::Exhaustive => "exhaustive",
        }
    }

    pub fn parse(s: &str) -> Result<NetworkPolicy> {
        NetworkPolicy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown network policy '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkJob {
    pub entry: usize,
    pub path: Vec<usize>,
    pub served_at: Option<usize>,
    pub first_node_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkTrial {
    pub arrivals: Vec<usize>,
    pub jobs: Vec<NetworkJob>,
}

impl NetworkTrial {
    pub fn collection(&self) -> PathCollection {
        PathCollection {
            arrivals: self.arrivals.clone(),
            paths: self.jobs.iter().map(|j| j.path.clone()).collect(),
        }
    }

    pub fn failures(&self) -> usize {
        self.jobs.iter().filter(|j| !j.first_node_ok).count()
    }
}

/// Runs one trial with the given realized arrivals.
pub fn network_simulate<R: Rng + ?Sized>(
    net: &ServerNetwork,
    arrivals: &[usize],
    policy: NetworkPolicy,
    rng: &mut R,
) -> Result<NetworkTrial> {
    let n = net.n();
    if arrivals.len() != n {
        return Err(Error::Contract("one arrival count per node".into()));
    }
    if policy == NetworkPolicy::Exhaustive {
        let w = exhaustive_first_node_failures(net, arrivals)?;
        let jobs = w
            .paths
            .paths
            .into_iter()
            .zip(w.first_node_ok)
            .zip(w.served_at)
            .map(|((path, ok), served_at)| NetworkJob {
                entry: path[0],
                path,
                served_at,
                first_node_ok: ok,
            })
            .collect();
        return Ok(NetworkTrial {
            arrivals: arrivals.to_vec(),
            jobs,
        });
    }

    let mut order: Vec<usize> = (0..n)
        .flat_map(|i| std::iter::repeat_n(i, arrivals[i]))
        .collect();
    match policy {
        NetworkPolicy::Random => order.shuffle(rng),
        NetworkPolicy::CapacitySeeking => {
            let excess = |i: usize| arrivals[i] as i64 - net.capacities[i] as i64;
            order.sort_by_key(|&i| (std::cmp::Reverse(excess(i)), i));
        }
        _ => {}
    }

    let mut residual = net.capacities.clone();
    let mut visited = vec![false; n];
    let mut jobs = Vec::with_capacity(order.len());
    for entry in order {
        visited.iter_mut().for_each(|v| *v = false);
        let mut path = vec![entry];
        visited[entry] = true;
        let mut cur = entry;
        let served_at = loop {
            if residual[cur] > 0 {
                residual[cur] -= 1;
                break Some(cur);
            }
            let options: Vec<usize> = net
                .out(cur)
                .iter()
                .copied()
                .filter(|&w| !visited[w])
                .collect();
            if options.is_empty() {
                break None;
            }
            let next = match policy {
                NetworkPolicy::Random => options[rng.random_range(0..options.len())],
                NetworkPolicy::Fifo => options[0],
                NetworkPolicy::CapacitySeeking => options
                    .iter()
                    .copied()
                    .filter(|&w| residual[w] > 0)
                    .min_by_key(|&w| (residual[w], w))
                    .unwrap_or(options[0]),
                NetworkPolicy::Exhaustive => unreachable!(),
            };
            visited[next] = true;
            path.push(next);
            cur = next;
        };
        jobs.push(NetworkJob {
            entry,
            first_node_ok: served_at == Some(entry),
            path,
            served_at,
        });
    }
    Ok(NetworkTrial {
        arrivals: arrivals.to_vec(),
        jobs,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkReport {
    pub policy: NetworkPolicy,
    /// Jobs not served at their entry node, over all jobs.
    pub failures: Proportion,
    pub trials: u64,
}

/// Per-trial CSV rows: trial, job, entry, served_at, path_len, first_node_ok.
pub type TrialRow = (u64, usize, usize, Option<usize>, usize, bool);

/// Monte-Carlo over sampled arrivals. Per-trial seeds make the result
/// independent of thread scheduling.
pub fn run_network_experiment(
    net: &ServerNetwork,
    policy: NetworkPolicy,
    trials: u64,
    seed: u64,
    keep_rows: bool,
) -> Result<(NetworkReport, Vec<TrialRow>)> {
    let outcomes: Vec<Result<(Proportion, Vec<TrialRow>)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut arr_rng = seeds::rng(seed, Stream::Arrivals, t);
            let arrivals = net.sample_arrivals(&mut arr_rng);
            let mut adv_rng = seeds::rng(seed, Stream::Adversary, t);
            let trial = network_simulate(net, &arrivals, policy, &mut adv_rng)?;
            let p = Proportion {
                successes: trial.failures() as u64,
                trials: trial.jobs.len() as u64,
            };
            let rows = if keep_rows {
                trial
                    .jobs
                    .iter()
                    .enumerate()
                    .map(|(k, j)| (t, k, j.entry, j.served_at, j.path.len(), j.first_node_ok))
                    .collect()
            } else {
                Vec::new()
            };
            Ok((p, rows))
        })
        .collect();
    let mut failures = Proportion::default();
    let mut rows = Vec::new();
    for o in outcomes {
        let (p, r) = o?;
        failures.add(p);
        rows.extend(r);
    }
    Ok((
        NetworkReport {
            policy,
            failures,
            trials,
        },
        rows,
    ))
}
