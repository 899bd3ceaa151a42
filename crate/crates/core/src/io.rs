//! JSON and CSV formats for instances, prices, networks and reports.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{Instance, Job, PriceSchedule};
use crate::pricing::Residuals;
use crate::servers::simulate::{NetworkReport, TrialRow};
use crate::servers::{ArrivalModel, NetworkPolicy, ServerNetwork};
use crate::sim::ExperimentReport;
use crate::temporal::{EdgeKind, SlotGraph};

/// Instance file. For periodic instances `jobs` holds the core jobs and
/// `capacities` one value per residue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub horizon: usize,
    /// One entry per slot, per residue, or a single value for all slots.
    pub capacities: Vec<usize>,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<usize>,
    pub jobs: Vec<Job>,
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<Instance> {
        match self.period {
            Some(k) => {
                let caps = broadcast(self.capacities, k)?;
                Instance::periodic(self.jobs, k, caps, self.horizon, self.epsilon)
            }
            None => {
                let caps = broadcast(self.capacities, self.horizon)?;
                Instance::new(self.jobs, self.horizon, caps, self.epsilon)
            }
        }
    }

    pub fn from_instance(inst: &Instance) -> InstanceFile {
        match &inst.period {
            Some(p) => InstanceFile {
                horizon: inst.horizon,
                capacities: inst.capacities[..p.k].to_vec(),
                epsilon: inst.epsilon,
                period: Some(p.k),
                jobs: p.core.clone(),
            },
            None => InstanceFile {
                horizon: inst.horizon,
                capacities: inst.capacities.clone(),
                epsilon: inst.epsilon,
                period: None,
                jobs: inst.jobs.clone(),
            },
        }
    }
}

fn broadcast(caps: Vec<usize>, len: usize) -> Result<Vec<usize>> {
    match caps.len() {
        1 => Ok(vec![caps[0]; len]),
        n if n == len => Ok(caps),
        n => Err(Error::Invalid(format!(
            "expected 1 or {len} capacities, got {n}"
        ))),
    }
}

pub fn instance_from_json(text: &str) -> Result<Instance> {
    serde_json::from_str::<InstanceFile>(text)?.into_instance()
}

pub fn instance_to_json(inst: &Instance) -> Result<String> {
    Ok(serde_json::to_string_pretty(&InstanceFile::from_instance(
        inst,
    ))?)
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    instance_from_json(&std::fs::read_to_string(path)?)
}

/// Price file: the full-horizon price vector and the LP certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<usize>,
    pub prices: Vec<f64>,
    pub epsilon: f64,
    pub lp_objective: f64,
    pub residuals: Residuals,
}

impl PriceFile {
    pub fn schedule(&self) -> PriceSchedule {
        PriceSchedule {
            prices: self.prices.clone(),
            period: self.period,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeId {
    Num(u64),
    Name(String),
}

impl NodeId {
    fn key(&self) -> String {
        match self {
            NodeId::Num(n) => n.to_string(),
            NodeId::Name(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: NodeId,
    pub capacity: usize,
    pub arrivals: ArrivalModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub nodes: Vec<NodeSpec>,
    pub edges: Vec<(NodeId, NodeId)>,
}

impl NetworkFile {
    pub fn into_network(self) -> Result<ServerNetwork> {
        let ids: Vec<String> = self.nodes.iter().map(|n| n.id.key()).collect();
        let find = |id: &NodeId| {
            let k = id.key();
            ids.iter()
                .position(|x| *x == k)
                .ok_or_else(|| Error::Invalid(format!("edge references unknown node '{k}'")))
        };
        let edges = self
            .edges
            .iter()
            .map(|(a, b)| Ok((find(a)?, find(b)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(Error::Invalid(format!("duplicate node id '{dup}'")));
        }
        ServerNetwork::with_ids(
            ids,
            self.nodes.iter().map(|n| n.capacity).collect(),
            self.nodes.into_iter().map(|n| n.arrivals).collect(),
            edges,
        )
    }

    pub fn from_network(net: &ServerNetwork) -> NetworkFile {
        let nodes = (0..net.n())
            .map(|i| NodeSpec {
                id: NodeId::Name(net.ids[i].clone()),
                capacity: net.capacities[i],
                arrivals: net.arrivals[i].clone(),
            })
            .collect();
        let edges = net
            .edges
            .iter()
            .map(|&(a, b)| {
                (
                    NodeId::Name(net.ids[a].clone()),
                    NodeId::Name(net.ids[b].clone()),
                )
            })
            .collect();
        NetworkFile { nodes, edges }
    }
}

pub fn read_network(path: &Path) -> Result<ServerNetwork> {
    serde_json::from_str::<NetworkFile>(&std::fs::read_to_string(path)?)?.into_network()
}

/// Hex SHA-256 of the concatenated parts.
pub fn config_hash(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// First line of every CSV this crate writes.
pub fn provenance_line(seed: u64, hash: &str) -> String {
    format!("# seed={seed} config_hash={hash}\n")
}

/// Quotes a CSV field when needed.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Edge list of the slot graph: `src,dst,kind`.
pub fn graph_csv(g: &SlotGraph) -> String {
    let mut out = String::from("src,dst,kind\n");
    for (s, t, k) in g.edges() {
        let _ = writeln!(out, "{s},{t},{}", k.code());
    }
    out
}

/// Parent table: `slot,price,left,right,back`.
pub fn parents_csv(g: &SlotGraph) -> String {
    let opt = |o: Option<usize>| o.map(|v| v.to_string()).unwrap_or_default();
    let mut out = String::from("slot,price,left,right,back\n");
    for t in 1..=g.len() {
        let _ = writeln!(
            out,
            "{t},{},{},{},{}",
            g.prices[t - 1],
            opt(g.left(t)),
            opt(g.right(t)),
            opt(g.back(t))
        );
    }
    out
}

pub fn edge_kind_name(k: EdgeKind) -> &'static str {
    k.code()
}

/// Header of the experiment CSV.
pub const REPORT_COLUMNS: &str =
    "experiment,adversary,trials,accept_rate,ci_lo,ci_hi,welfare_mean,lp_bound,ratio";

/// One row per adversary, after the provenance line.
pub fn report_csv(report: &ExperimentReport, hash: &str) -> String {
    let mut out = provenance_line(report.seed, hash);
    out.push_str(REPORT_COLUMNS);
    out.push('\n');
    for a in &report.adversaries {
        let (lo, hi) = a.acceptance.ci95();
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            csv_field(&report.name),
            a.adversary,
            a.trials,
            a.acceptance.rate(),
            lo,
            hi,
            a.welfare_mean,
            report.lp_bound,
            a.ratio
        );
    }
    out
}

pub fn report_text(report: &ExperimentReport, hash: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "experiment {} (seed {}, config {})",
        report.name,
        report.seed,
        &hash[..12.min(hash.len())]
    );
    let _ = writeln!(
        out,
        "eps {}  lp bound {:.4}  priced objective {:.4}  partitioned {}",
        report.epsilon, report.lp_bound, report.lp_objective, report.partitioned
    );
    for a in &report.adversaries {
        let (lo, hi) = a.acceptance.ci95();
        let (flo, fhi) = a.first_choice.ci95();
        let _ = writeln!(out, "  {}", a.adversary);
        let _ = writeln!(
            out,
            "    accepted at favorite {:.4} [{:.4}, {:.4}] of {} arrivals",
            a.acceptance.rate(),
            lo,
            hi,
            a.acceptance.trials
        );
        let _ = writeln!(
            out,
            "    first choice         {:.4} [{:.4}, {:.4}]",
            a.first_choice.rate(),
            flo,
            fhi
        );
        let _ = writeln!(
            out,
            "    welfare {:.4} +- {:.4}  ratio to lp bound {:.4}",
            a.welfare_mean,
            1.96 * a.welfare_stderr,
            a.ratio
        );
        if let (Some(opt), Some(r)) = (a.opt_mean, a.opt_ratio) {
            let _ = writeln!(out, "    offline opt {opt:.4}  ratio {r:.4}");
        }
        let _ = writeln!(
            out,
            "    violations {}  network-checked trials {}",
            a.violations, a.network_checked
        );
        if let Some(v) = &a.first_violation {
            let _ = writeln!(out, "    first violation: {v}");
        }
    }
    for n in &report.notes {
        let _ = writeln!(out, "note: {n}");
    }
    out
}

fn default_network_policies() -> Vec<String> {
    NetworkPolicy::ALL
        .iter()
        .filter(|p| **p != NetworkPolicy::Exhaustive)
        .map(|p| p.name().to_string())
        .collect()
}

/// Forwarding experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<String>,
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_network_policies")]
    pub policies: Vec<String>,
}

impl NetworkConfig {
    pub fn new(trials: u64, seed: u64) -> NetworkConfig {
        NetworkConfig {
            network: None,
            trials,
            seed,
            policies: default_network_policies(),
        }
    }
}

pub const NETWORK_COLUMNS: &str = "experiment,policy,trials,jobs,fail_rate,ci_lo,ci_hi";

pub fn network_csv(name: &str, seed: u64, hash: &str, reports: &[NetworkReport]) -> String {
    let mut out = provenance_line(seed, hash);
    out.push_str(NETWORK_COLUMNS);
    out.push('\n');
    for r in reports {
        let (lo, hi) = r.failures.ci95();
        let _ = writeln!(
            out,
            "{},{},{},{},{:.6},{:.6},{:.6}",
            csv_field(name),
            r.policy.name(),
            r.trials,
            r.failures.trials,
            r.failures.rate(),
            lo,
            hi
        );
    }
    out
}

pub fn network_text(name: &str, seed: u64, reports: &[NetworkReport]) -> String {
    let mut out = format!("network experiment {name} (seed {seed})\n");
    for r in reports {
        let (lo, hi) = r.failures.ci95();
        let _ = writeln!(
            out,
            "  {:<18} not served at entry {:.4} [{:.4}, {:.4}] over {} jobs in {} trials",
            r.policy.name(),
            r.failures.rate(),
            lo,
            hi,
            r.failures.trials,
            r.trials
        );
    }
    out
}

pub fn trial_rows_csv(seed: u64, hash: &str, policy: &str, rows: &[TrialRow]) -> String {
    let mut out = provenance_line(seed, hash);
    out.push_str("policy,trial,job,entry,served_at,path_len,first_node_ok\n");
    for &(t, j, entry, served, len, ok) in rows {
        let served = served.map(|s| s.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{policy},{t},{j},{entry},{served},{len},{ok}");
    }
    out
}
