//! Arrival orders chosen by an adversary that sees the realization.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TimeBlock;

use super::allocation::run_async_allocation;
use super::market::{Market, Residual};
use super::realization::Arrival;

/// Largest realization the exhaustive adversary will permute.
pub const EXHAUSTIVE_CAP: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderPolicy {
    UniformRandom,
    ByStartTime,
    ReverseStartTime,
    ValueDescending,
    /// Batched one-step lookahead that prefers arrivals which get forwarded
    /// into slots other jobs still want. A heuristic, not the worst case.
    OverloadSeeking,
    /// Worst permutation for acceptance, then welfare.
    Exhaustive,
}

impl OrderPolicy {
    pub const ALL: [OrderPolicy; 6] = [
        OrderPolicy::UniformRandom,
        OrderPolicy::ByStartTime,
        OrderPolicy::ReverseStartTime,
        OrderPolicy::ValueDescending,
        OrderPolicy::OverloadSeeking,
        OrderPolicy::Exhaustive,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            OrderPolicy::UniformRandom => "uniform-random",
            OrderPolicy::ByStartTime => "by-start-time",
            OrderPolicy::ReverseStartTime => "reverse-start-time",
            OrderPolicy::ValueDescending => "value-descending",
            OrderPolicy::OverloadSeeking => "overload-seeking",
            OrderPolicy::Exhaustive => "exhaustive",
        }
    }

    pub fn parse(s: &str) -> Result<OrderPolicy> {
        OrderPolicy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown adversary '{s}'")))
    }
}

/// A permutation of `0..arrivals.len()`.
pub fn order_jobs<R: Rng + ?Sized>(
    market: &Market,
    arrivals: &[Arrival],
    policy: OrderPolicy,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let jobs = &market.instance.jobs;
    let mut order: Vec<usize> = (0..arrivals.len()).collect();
    match policy {
        OrderPolicy::UniformRandom => order.shuffle(rng),
        OrderPolicy::ByStartTime => order.sort_by_key(|&a| jobs[arrivals[a].job].s),
        OrderPolicy::ReverseStartTime => {
            order.sort_by_key(|&a| std::cmp::Reverse(jobs[arrivals[a].job].s))
        }
        OrderPolicy::ValueDescending => {
            order.sort_by(|&a, &b| jobs[arrivals[b].job].v.total_cmp(&jobs[arrivals[a].job].v))
        }
        OrderPolicy::OverloadSeeking => order = overload_seeking(market, arrivals),
        OrderPolicy::Exhaustive => order = worst_permutation(market, arrivals)?,
    }
    Ok(order)
}

/// All permutations of `0..n` by Heap's algorithm.
pub struct Permutations {
    perm: Vec<usize>,
    c: Vec<usize>,
    i: usize,
    first: bool,
}

pub fn permutations(n: usize) -> Permutations {
    Permutations {
        perm: (0..n).collect(),
        c: vec![0; n],
        i: 1,
        first: true,
    }
}

impl Iterator for Permutations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.first {
            self.first = false;
            return Some(self.perm.clone());
        }
        let n = self.perm.len();
        while self.i < n {
            if self.c[self.i] < self.i {
                if self.i.is_multiple_of(2) {
                    self.perm.swap(0, self.i);
                } else {
                    self.perm.swap(self.c[self.i], self.i);
                }
                self.c[self.i] += 1;
                self.i = 1;
                return Some(self.perm.clone());
            }
            self.c[self.i] = 0;
            self.i += 1;
        }
        None
    }
}

fn worst_permutation(market: &Market, arrivals: &[Arrival]) -> Result<Vec<usize>> {
    if arrivals.len() > EXHAUSTIVE_CAP {
        return Err(Error::Cap(format!(
            "{} arrivals; the exhaustive adversary handles at most {EXHAUSTIVE_CAP}",
            arrivals.len()
        )));
    }
    let mut best: Option<((u64, f64), Vec<usize>)> = None;
    for perm in permutations(arrivals.len()) {
        let r = run_async_allocation(market, arrivals, &perm);
        let key = (r.acceptance(market).1, r.welfare);
        let worse = match &best {
            None => true,
            Some((k, _)) => key.0 < k.0 || (key.0 == k.0 && key.1 < k.1),
        };
        if worse {
            best = Some((key, perm));
        }
    }
    Ok(best.map(|b| b.1).unwrap_or_default())
}

fn overload_seeking(market: &Market, arrivals: &[Arrival]) -> Vec<usize> {
    let jobs = &market.instance.jobs;
    // arrivals with identical preference orders move together
    let mut by_key: BTreeMap<(usize, usize, &[TimeBlock]), Vec<usize>> = BTreeMap::new();
    for (a, arr) in arrivals.iter().enumerate() {
        let key = (
            arr.y,
            jobs[arr.job].l,
            market.plans[arr.job].order_for(arr.y),
        );
        by_key.entry(key).or_default().push(a);
    }
    struct Group {
        members: Vec<usize>,
        next: usize,
        first: TimeBlock,
        order: Vec<TimeBlock>,
        cursor: usize,
    }
    let mut groups: Vec<Group> = by_key
        .into_values()
        .map(|members| {
            let arr = arrivals[members[0]];
            let order = market.plans[arr.job].order_for(arr.y).to_vec();
            Group {
                first: TimeBlock::new(arr.y, jobs[arr.job].l),
                members,
                next: 0,
                order,
                cursor: 0,
            }
        })
        .collect();

    let mut residual = Residual::new(market);
    let mut demand = vec![0i64; market.block_count()];
    for g in &groups {
        demand[market.block_index(g.first)] += g.members.len() as i64;
    }
    let mut out = Vec::with_capacity(arrivals.len());
    let mut stranded = Vec::new();
    loop {
        let mut best: Option<(usize, (u8, i64))> = None;
        for (gi, g) in groups.iter_mut().enumerate() {
            if g.next == g.members.len() {
                continue;
            }
            while g.cursor < g.order.len() && residual.room(market, g.order[g.cursor]) == 0 {
                g.cursor += 1;
            }
            if g.cursor == g.order.len() {
                // nothing left for this group; it cannot change anyone's fate
                stranded.extend_from_slice(&g.members[g.next..]);
                g.next = g.members.len();
                continue;
            }
            let target = g.order[g.cursor];
            let score = if target != g.first {
                (1, demand[market.block_index(target)])
            } else {
                (
                    0,
                    demand[market.block_index(target)] - residual.room(market, target) as i64,
                )
            };
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((gi, score));
            }
        }
        let Some((gi, _)) = best else { break };
        let g = &mut groups[gi];
        let target = g.order[g.cursor];
        let batch = (g.members.len() - g.next).min(residual.room(market, target));
        for _ in 0..batch {
            residual.take(market, target);
        }
        out.extend_from_slice(&g.members[g.next..g.next + batch]);
        g.next += batch;
        demand[market.block_index(g.first)] -= batch as i64;
    }
    out.extend(stranded);
    out
}
