//! Repeated trials against each adversary, aggregated into a report.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, PaymentRule};
use crate::pricing::{lp_welfare_bound, price_instance};
use crate::seeds::{rng, Stream};
use crate::stats::Proportion;
use crate::tolerance::Tolerances;

use super::allocation::run_async_allocation;
use super::checks::check_trial;
use super::market::Market;
use super::opt::offline_opt;
use super::order::{order_jobs, OrderPolicy};
use super::realization::{choose_entries, sample_realization};

fn default_adversaries() -> Vec<String> {
    OrderPolicy::ALL
        .iter()
        .filter(|p| **p != OrderPolicy::Exhaustive)
        .map(|p| p.name().to_string())
        .collect()
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Path of the instance file, resolved by the caller.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_adversaries")]
    pub adversaries: Vec<String>,
    #[serde(default)]
    pub payment_rule: PaymentRule,
    /// Replaces the instance's LP slack.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_override: Option<f64>,
    /// Carve per-block capacities. Defaults to on when lengths exceed 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<bool>,
    /// Solve the offline optimum of every realization.
    #[serde(default)]
    pub exact_opt: bool,
    #[serde(default = "default_true")]
    pub check_invariants: bool,
}

impl ExperimentConfig {
    pub fn new(trials: usize, seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            instance: None,
            trials,
            seed,
            adversaries: default_adversaries(),
            payment_rule: PaymentRule::default(),
            epsilon_override: None,
            partition: None,
            exact_opt: false,
            check_invariants: true,
        }
    }

    pub fn policies(&self) -> Result<Vec<OrderPolicy>> {
        if self.adversaries.is_empty() {
            return Err(Error::Invalid("no adversaries configured".into()));
        }
        self.adversaries
            .iter()
            .map(|s| OrderPolicy::parse(s))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdversaryReport {
    pub adversary: String,
    pub trials: usize,
    /// Strictly affordable arrivals served at a favorite.
    pub acceptance: Proportion,
    /// Strictly affordable arrivals served at their entry block.
    pub first_choice: Proportion,
    pub welfare_mean: f64,
    pub welfare_stderr: f64,
    pub revenue_mean: f64,
    pub opt_mean: Option<f64>,
    /// `welfare_mean / lp_bound`.
    pub ratio: f64,
    /// `welfare_mean / opt_mean`.
    pub opt_ratio: Option<f64>,
    pub violations: usize,
    pub first_violation: Option<String>,
    pub network_checked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub seed: u64,
    pub epsilon: f64,
    pub lp_bound: f64,
    pub lp_objective: f64,
    pub prices: Vec<f64>,
    pub partitioned: bool,
    pub adversaries: Vec<AdversaryReport>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn violations(&self) -> usize {
        self.adversaries.iter().map(|a| a.violations).sum()
    }
}

struct TrialSummary {
    accept: (u64, u64),
    first: (u64, u64),
    welfare: f64,
    revenue: f64,
    opt: Option<f64>,
    violations: Vec<String>,
    network_checked: bool,
}

fn run_trial(
    market: &Market,
    policy: OrderPolicy,
    config: &ExperimentConfig,
    trial: u64,
) -> Result<TrialSummary> {
    let realized = sample_realization(
        &market.instance,
        &mut rng(config.seed, Stream::Realization, trial),
    );
    let arrivals = choose_entries(
        market,
        &realized,
        &mut rng(config.seed, Stream::Entry, trial),
    );
    let order = order_jobs(
        market,
        &arrivals,
        policy,
        &mut rng(config.seed, Stream::Adversary, trial),
    )?;
    let result = run_async_allocation(market, &arrivals, &order);
    let (violations, network_checked) = if config.check_invariants {
        let c = check_trial(market, &result);
        (c.violations, c.network_checked)
    } else {
        (Vec::new(), false)
    };
    let opt = if config.exact_opt {
        Some(offline_opt(&market.instance, &realized)?.welfare)
    } else {
        None
    };
    Ok(TrialSummary {
        accept: result.acceptance(market),
        first: result.first_choice(market),
        welfare: result.welfare,
        revenue: result.revenue,
        opt,
        violations,
        network_checked,
    })
}

fn aggregate(policy: OrderPolicy, trials: &[TrialSummary], lp_bound: f64) -> AdversaryReport {
    let n = trials.len() as f64;
    let mut acceptance = Proportion::default();
    let mut first_choice = Proportion::default();
    let (mut sum, mut sum_sq, mut revenue, mut opt_sum) = (0.0, 0.0, 0.0, 0.0);
    let mut violations = 0;
    let mut first_violation = None;
    let mut network_checked = 0;
    for (i, t) in trials.iter().enumerate() {
        acceptance.add(Proportion {
            successes: t.accept.1,
            trials: t.accept.0,
        });
        first_choice.add(Proportion {
            successes: t.first.1,
            trials: t.first.0,
        });
        sum += t.welfare;
        sum_sq += t.welfare * t.welfare;
        revenue += t.revenue;
        opt_sum += t.opt.unwrap_or(0.0);
        violations += t.violations.len();
        if first_violation.is_none() {
            first_violation = t.violations.first().map(|v| format!("trial {i}: {v}"));
        }
        network_checked += usize::from(t.network_checked);
    }
    let welfare_mean = sum / n;
    let var = if trials.len() > 1 {
        ((sum_sq - n * welfare_mean * welfare_mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    let opt_mean = trials.first().and_then(|t| t.opt).map(|_| opt_sum / n);
    AdversaryReport {
        adversary: policy.name().to_string(),
        trials: trials.len(),
        acceptance,
        first_choice,
        welfare_mean,
        welfare_stderr: (var / n).sqrt(),
        revenue_mean: revenue / n,
        opt_mean,
        ratio: if lp_bound > 0.0 {
            welfare_mean / lp_bound
        } else {
            1.0
        },
        opt_ratio: opt_mean.map(|o| if o > 0.0 { welfare_mean / o } else { 1.0 }),
        violations,
        first_violation,
        network_checked,
    }
}

/// Prices `inst`, then runs `config.trials` trials per adversary. Trials
/// run in parallel; aggregation is in trial order, so the report does not
/// depend on the thread count.
pub fn run_experiment(
    inst: &Instance,
    config: &ExperimentConfig,
    name: &str,
) -> Result<ExperimentReport> {
    if config.trials == 0 {
        return Err(Error::Contract(
            "an experiment needs at least one trial".into(),
        ));
    }
    let policies = config.policies()?;
    let inst = match config.epsilon_override {
        Some(eps) if (0.0..=0.5).contains(&eps) => inst.with_epsilon(eps),
        Some(eps) => {
            return Err(Error::Invalid(format!(
                "epsilon override {eps} outside [0, 1/2]"
            )))
        }
        None => inst.clone(),
    };
    let tol = Tolerances::default();
    let pricing = price_instance(&inst, &tol)?;
    let lp_bound = lp_welfare_bound(&inst, &tol)?;
    let partition = config.partition.unwrap_or(inst.max_len() > 1);
    let market = Market::new(
        &inst,
        &pricing.prices,
        &pricing.assignment,
        config.payment_rule,
        partition,
        tol.price_cmp(),
    )?;

    let mut notes = Vec::new();
    if !pricing.dropped.is_empty() {
        notes.push(format!(
            "{} jobs have no feasible start and were dropped",
            pricing.dropped.len()
        ));
    }
    if !config.exact_opt {
        notes.push(
            "ratio is against the LP upper bound; the true ratio to OPT is at least this".into(),
        );
    }
    if let Some(b) = &market.blocks {
        let total: f64 = b.caps.iter().flatten().sum();
        let admitted: usize = (1..=b.l_max)
            .flat_map(|l| (1..=inst.horizon + 1 - l).map(move |t| (t, l)))
            .map(|(t, l)| b.admissions(t, l))
            .sum();
        if (admitted as f64) < 0.9 * total {
            notes.push(format!(
                "block capacities round down to {admitted} admissions out of {total:.1}; capacity is too small for partitioning to pay off"
            ));
        }
    }
    if inst.max_len() > 1 {
        notes.push("general lengths: checks are structural (partition, shortcut, capacity), not a welfare guarantee".into());
    }

    let mut adversaries = Vec::with_capacity(policies.len());
    for policy in policies {
        let trials: Vec<TrialSummary> = (0..config.trials as u64)
            .into_par_iter()
            .map(|t| run_trial(&market, policy, config, t))
            .collect::<Result<_>>()?;
        adversaries.push(aggregate(policy, &trials, lp_bound));
    }
    Ok(ExperimentReport {
        name: name.to_string(),
        seed: config.seed,
        epsilon: inst.epsilon,
        lp_bound,
        lp_objective: pricing.outcome.objective,
        prices: pricing.prices.prices.clone(),
        partitioned: market.partitioned(),
        adversaries,
        notes,
    })
}
