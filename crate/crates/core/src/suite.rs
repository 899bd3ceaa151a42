//! Invariant suites behind `tou verify`, and the exact OPT table behind
//! `tou oracle`.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Instance;
use crate::pricing::{
    lp_welfare_bound, price_instance, verify_price_conditions, welfare_reference,
};
use crate::seeds::{rng, Stream};
use crate::servers::{
    check_mgf_condition, exhaustive_overload, network_simulate, reduce_to_tree, remove_cycles,
    validate_min_work, NetworkPolicy, ServerNetwork,
};
use crate::sim::{offline_opt, run_experiment, ExperimentConfig};
use crate::temporal::{partition_capacities, LayeredGraph, SlotGraph};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

impl CheckLine {
    fn new(name: &str, ok: bool, detail: impl Into<String>) -> CheckLine {
        CheckLine {
            name: name.to_string(),
            ok,
            detail: detail.into(),
        }
    }

    fn from_result(name: &str, r: Result<String>) -> CheckLine {
        match r {
            Ok(d) => CheckLine::new(name, true, d),
            Err(e) => CheckLine::new(name, false, e.to_string()),
        }
    }
}

/// Forward reachability from every slot, by BFS.
fn reachability(g: &SlotGraph) -> Vec<Vec<bool>> {
    let children = g.forward_children();
    (1..=g.len())
        .map(|s| {
            let mut seen = vec![false; g.len()];
            seen[s - 1] = true;
            let mut q = VecDeque::from([s]);
            while let Some(a) = q.pop_front() {
                for &c in &children[a - 1] {
                    if !seen[c - 1] {
                        seen[c - 1] = true;
                        q.push_back(c);
                    }
                }
            }
            seen
        })
        .collect()
}

/// Checks that every `C(t)` is exactly the set of slots reaching `t` and is
/// listed in reachability order.
pub fn check_ancestor_chains(g: &SlotGraph) -> std::result::Result<(), String> {
    let reach = reachability(g);
    for t in 1..=g.len() {
        let chain = g.ancestors(t);
        let expected: Vec<usize> = (1..=g.len()).filter(|&s| reach[s - 1][t - 1]).collect();
        let mut sorted = chain.clone();
        sorted.sort_unstable();
        if sorted != expected {
            return Err(format!(
                "C({t}) = {chain:?} but the slots reaching {t} are {expected:?}"
            ));
        }
        for i in 0..chain.len() {
            for j in i + 1..chain.len() {
                if !reach[chain[i] - 1][chain[j] - 1] {
                    return Err(format!(
                        "in C({t}), {} does not reach {}",
                        chain[i], chain[j]
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Pricing certificates, graph bounds, ancestor chains, the capacity
/// partition and `trials` checked simulation trials per adversary.
pub fn instance_suite(inst: &Instance, seed: u64, trials: usize) -> Vec<CheckLine> {
    let tol = Tolerances::default();
    let mut out = Vec::new();
    let pricing = match price_instance(inst, &tol) {
        Ok(p) => p,
        Err(e) => {
            out.push(CheckLine::new("lp", false, e.to_string()));
            return out;
        }
    };
    let r = &pricing.outcome.residuals;
    out.push(CheckLine::new(
        "lp certificate",
        r.duality_gap <= tol.duality_gap && r.worst() <= tol.residual,
        format!(
            "gap {:.2e}, worst residual {:.2e}",
            r.duality_gap,
            r.worst()
        ),
    ));
    out.push(CheckLine::from_result(
        "price conditions",
        welfare_reference(inst, &pricing, &tol).and_then(|reference| {
            let rep = verify_price_conditions(
                inst,
                &pricing.prices,
                &pricing.assignment,
                reference,
                &tol,
            );
            match rep.violations.first() {
                None => Ok(format!(
                    "objective {:.6}, reference {:.6}",
                    rep.objective, rep.reference
                )),
                Some(v) => Err(Error::Invariant(format!(
                    "condition {} fails at {} by {:.3e}",
                    v.condition, v.witness, v.residual
                ))),
            }
        }),
    ));
    let l_max = inst.max_len().min(inst.horizon);
    let graph = LayeredGraph::build(&pricing.prices, l_max, tol.price_cmp());
    out.push(match &graph {
        Ok(g) => CheckLine::new(
            "graph bounds",
            true,
            format!("{} layers, max in-degree {}", g.l_max(), g.max_in_degree()),
        ),
        Err(e) => CheckLine::new("graph bounds", false, e.to_string()),
    });
    if let Ok(g) = &graph {
        let bad = g.layers.iter().enumerate().find_map(|(i, layer)| {
            check_ancestor_chains(layer)
                .err()
                .map(|e| format!("layer {}: {e}", i + 1))
        });
        out.push(CheckLine::new(
            "ancestor chains",
            bad.is_none(),
            bad.unwrap_or_else(|| "total orders".into()),
        ));
    }
    if l_max > 1 {
        out.push(CheckLine::from_result(
            "capacity partition",
            partition_capacities(inst, &pricing.assignment, inst.epsilon)
                .map(|b| format!("eps' {}", b.eps_prime)),
        ));
    }
    if trials > 0 {
        let cfg = ExperimentConfig::new(trials, seed);
        let line = match run_experiment(inst, &cfg, "verify") {
            Ok(rep) => {
                let bad = rep
                    .adversaries
                    .iter()
                    .find_map(|a| a.first_violation.clone());
                let checked: usize = rep.adversaries.iter().map(|a| a.network_checked).sum();
                CheckLine::new(
                    "simulation invariants",
                    rep.violations() == 0,
                    bad.unwrap_or_else(|| {
                        format!(
                            "{} trials per adversary, {checked} with network checks",
                            trials
                        )
                    }),
                )
            }
            Err(e) => CheckLine::new("simulation invariants", false, e.to_string()),
        };
        out.push(line);
    }
    out
}

/// Walk validity, min-work, cycle removal and tree reduction on simulated
/// routings, exhaustive cross-checks on small networks, and the MGF
/// condition per node (informational).
pub fn network_suite(net: &ServerNetwork, seed: u64, trials: u64, eps: f64) -> Vec<CheckLine> {
    let mut out = Vec::new();
    let models: Result<()> = net.arrivals.iter().try_for_each(|m| m.validate());
    out.push(CheckLine::from_result(
        "arrival models",
        models.map(|_| format!("{} nodes", net.n())),
    ));
    let caps = &net.capacities;
    let routed = (|| -> Result<String> {
        let mut reductions = 0;
        for policy in [
            NetworkPolicy::Random,
            NetworkPolicy::Fifo,
            NetworkPolicy::CapacitySeeking,
        ] {
            for t in 0..trials {
                let arrivals = net.sample_arrivals(&mut rng(seed, Stream::Arrivals, t));
                let trial =
                    network_simulate(net, &arrivals, policy, &mut rng(seed, Stream::Adversary, t))?;
                let pc = trial.collection();
                pc.check_walks(net)?;
                validate_min_work(&pc.multigraph(), &arrivals, caps)?;
                let acyclic = remove_cycles(&pc, caps)?;
                if acyclic.overloaded(caps) != pc.overloaded(caps) {
                    return Err(Error::Invariant(format!(
                        "{} trial {t}: cycle removal changed the overload set",
                        policy.name()
                    )));
                }
                for (u, &over) in pc.overloaded(caps).iter().enumerate() {
                    if over {
                        let red = reduce_to_tree(net, &acyclic, u)?;
                        if red.tree_load < caps[u] {
                            return Err(Error::Invariant(format!(
                                "{} trial {t}: tree for node {} carries {} < {}",
                                policy.name(),
                                net.ids[u],
                                red.tree_load,
                                caps[u]
                            )));
                        }
                        reductions += 1;
                    }
                }
            }
        }
        Ok(format!(
            "{trials} trials per policy, {reductions} tree reductions"
        ))
    })();
    out.push(CheckLine::from_result("routed paths", routed));
    if net.n() <= 6 {
        let exhaustive = (|| -> Result<String> {
            let mut found = 0;
            for t in 0..trials.min(20) {
                let arrivals = net.sample_arrivals(&mut rng(seed, Stream::Arrivals, t));
                for u in 0..net.n() {
                    match exhaustive_overload(net, &arrivals, u) {
                        Ok(Some(pc)) => {
                            let red = reduce_to_tree(net, &remove_cycles(&pc, caps)?, u)?;
                            if red.tree_load < caps[u] {
                                return Err(Error::Invariant(format!(
                                    "trial {t}: worst routing overloads {} but its tree carries {}",
                                    net.ids[u], red.tree_load
                                )));
                            }
                            found += 1;
                        }
                        Ok(None) => {}
                        Err(Error::Cap(m)) => return Ok(format!("skipped: {m}")),
                        Err(e) => return Err(e),
                    }
                }
            }
            Ok(format!("{found} adversarial overloads reduced to trees"))
        })();
        out.push(CheckLine::from_result("exhaustive routing", exhaustive));
    }
    let d = net.d_max().max(1);
    let mgf: Vec<String> = (0..net.n())
        .map(
            |i| match check_mgf_condition(&net.arrivals[i], caps[i], eps, d) {
                Ok(c) => format!("{}:{}", net.ids[i], if c.passed { "ok" } else { "no" }),
                Err(_) => format!("{}:n/a", net.ids[i]),
            },
        )
        .collect();
    out.push(CheckLine::new(
        "mgf condition (informational)",
        true,
        mgf.join(" "),
    ));
    out
}

/// Largest instance the oracle enumerates.
pub const ORACLE_CAP: usize = 14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub realized: Vec<String>,
    pub probability: f64,
    pub opt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleTable {
    pub rows: Vec<OracleRow>,
    pub expected_opt: f64,
    pub lp_bound: f64,
}

/// Offline optimum of every realization with positive probability.
pub fn oracle_table(inst: &Instance) -> Result<OracleTable> {
    let n = inst.jobs.len();
    if n > ORACLE_CAP {
        return Err(Error::Cap(format!(
            "{n} jobs; the oracle enumerates at most {ORACLE_CAP}"
        )));
    }
    let mut rows = Vec::new();
    let mut expected = 0.0;
    for mask in 0u32..(1 << n) {
        let realized: Vec<usize> = (0..n).filter(|&j| mask >> j & 1 == 1).collect();
        let probability: f64 = inst
            .jobs
            .iter()
            .enumerate()
            .map(|(j, job)| {
                if mask >> j & 1 == 1 {
                    job.q
                } else {
                    1.0 - job.q
                }
            })
            .product();
        if probability == 0.0 {
            continue;
        }
        let opt = offline_opt(inst, &realized)?.welfare;
        expected += probability * opt;
        rows.push(OracleRow {
            realized: realized.iter().map(|&j| inst.jobs[j].id.clone()).collect(),
            probability,
            opt,
        });
    }
    Ok(OracleTable {
        rows,
        expected_opt: expected,
        lp_bound: lp_welfare_bound(inst, &Tolerances::default())?,
    })
}
