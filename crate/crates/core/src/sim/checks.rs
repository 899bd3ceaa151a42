//! Exact per-trial invariants: capacity safety, min-work, shortcut
//! validity and overload preservation.

use crate::model::TimeBlock;
use crate::servers::{validate_min_work, Multigraph};
use crate::temporal::{shortcut_layered_path, shortcut_with_mask};

use super::allocation::TrialResult;
use super::market::Market;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrialChecks {
    pub violations: Vec<String>,
    /// Whether the network checks applied (unit lengths or partitioned).
    pub network_checked: bool,
}

impl TrialChecks {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_trial(market: &Market, result: &TrialResult) -> TrialChecks {
    let mut v = Vec::new();
    let inst = &market.instance;
    let cmp = market.cmp;

    for (t, (&used, &cap)) in result.slot_usage.iter().zip(&inst.capacities).enumerate() {
        if used > cap {
            v.push(format!(
                "slot {} holds {used} jobs over capacity {cap}",
                t + 1
            ));
        }
    }
    if market.partitioned() {
        for l in 1..=market.l_max {
            for t in 1..=market.horizon() + 1 - l {
                let b = TimeBlock::new(t, l);
                let used = result.block_usage[market.block_index(b)];
                let lim = market.block_limit(b).unwrap();
                if used > lim {
                    v.push(format!("block ({t}, {l}) admitted {used} over {lim}"));
                }
            }
        }
    }
    let mut welfare = 0.0;
    for o in &result.outcomes {
        let job = &inst.jobs[o.job];
        if let Some(b) = o.served {
            welfare += job.v;
            if !cmp.le(o.payment, job.v) {
                v.push(format!(
                    "job {} pays {} above its value {}",
                    job.id, o.payment, job.v
                ));
            }
            if o.path.last() != Some(&b) {
                v.push(format!("job {} path does not end at its block", job.id));
            }
        } else if o.payment != 0.0 {
            v.push(format!("unserved job {} pays {}", job.id, o.payment));
        }
    }
    if (welfare - result.welfare).abs() > 1e-9 * (1.0 + welfare.abs()) {
        v.push(format!(
            "welfare {} differs from served value {welfare}",
            result.welfare
        ));
    }

    // Network view: nodes are blocks, with capacity B_{t,l} when
    // partitioned or B_t for unit lengths.
    let network = market.partitioned() || market.l_max == 1;
    if network {
        let n = market.block_count();
        let caps: Vec<usize> = (1..=market.l_max)
            .flat_map(|l| (1..=market.horizon() + 1 - l).map(move |t| TimeBlock::new(t, l)))
            .map(|b| market.block_limit(b).unwrap_or_else(|| inst.capacity(b.t)))
            .collect();
        let mut arrivals = vec![0; n];
        let mut g = Multigraph::new(n);
        let mut loads = vec![0usize; n];
        let mut cut_loads = vec![0usize; n];
        for o in &result.outcomes {
            let idx: Vec<usize> = o.path.iter().map(|&b| market.block_index(b)).collect();
            arrivals[idx[0]] += 1;
            for w in idx.windows(2) {
                g.add(w[0], w[1], 1);
            }
            for &i in &idx {
                loads[i] += 1;
            }
            let job = &inst.jobs[o.job];
            let plan = &market.plans[o.job];
            let z = o.path.last().unwrap();
            let mask = &market.masks[job.l - 1][z.t - 1];
            let cut = if market.l_max == 1 {
                let slots: Vec<usize> = o.path.iter().map(|b| b.t).collect();
                shortcut_with_mask(market.graph.layer(1), &plan.favorites, &slots, mask).map(|p| {
                    p.into_iter()
                        .map(|t| TimeBlock::new(t, 1))
                        .collect::<Vec<_>>()
                })
            } else {
                shortcut_layered_path(&market.graph, &plan.favorites, job.l, &o.path, Some(mask))
            };
            match cut {
                Ok(p) => {
                    if !p.windows(2).all(|w| market.graph.has_edge(w[0], w[1])) {
                        v.push(format!(
                            "shortcut of job {} leaves the block graph: {p:?}",
                            job.id
                        ));
                    }
                    if p.first() != o.path.first() || p.last() != o.path.last() {
                        v.push(format!("shortcut of job {} changed its endpoints", job.id));
                    }
                    for b in p {
                        cut_loads[market.block_index(b)] += 1;
                    }
                }
                Err(e) => v.push(format!("shortcut of job {} failed: {e}", job.id)),
            }
        }
        if let Err(e) = validate_min_work(&g, &arrivals, &caps) {
            v.push(format!("realized paths: {e}"));
        }
        for i in 0..n {
            if (loads[i] >= caps[i]) != (cut_loads[i] >= caps[i]) {
                v.push(format!(
                    "block index {i}: overload {} before shortcut, {} after",
                    loads[i] >= caps[i],
                    cut_loads[i] >= caps[i]
                ));
            }
        }
    }
    TrialChecks {
        violations: v,
        network_checked: network,
    }
}
