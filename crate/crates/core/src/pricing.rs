//! Expected-demand LP, dual prices and the fractional-assignment checks.
//!
//! The primal is
//!
//! ```text
//! max  sum_j sum_{t in W_j} v_j q_j x_jt
//! s.t. sum_j sum_{t' in [t-l_j+1, t] ∩ W_j} q_j x_jt' <= (1-eps) B_t   for every slot t
//!      sum_{t in W_j} x_jt <= 1                                       for every job j
//! ```
//!
//! and the prices are the capacity duals `p_t = lambda_t`. Jobs with equal
//! `(s, d, l, v, q)` are merged into one group whose job row has right-hand
//! side equal to the group size; this leaves the capacity duals unchanged
//! and shrinks the LP for instances with many identical jobs.
//!
//! Periodic instances are priced through a compact LP over one period in
//! which windows wrap around and a job of length `l` loads slot `t` from
//! start `t'` with coefficient `floor(l/k) + [(t - t') mod k < l mod k]`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::DenseLp;
use crate::model::{favorites, Instance, Job, PriceSchedule};
use crate::tolerance::{PriceCmp, Tolerances};

/// Jobs that share every parameter and therefore every LP column.
#[derive(Debug, Clone, PartialEq)]
pub struct JobGroup {
    pub members: Vec<usize>,
    pub v: f64,
    pub q: f64,
    pub l: usize,
    pub starts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpColumn {
    pub group: usize,
    pub start: usize,
    /// `(capacity row, load coefficient)` pairs, before scaling by `q`.
    pub cover: Vec<(usize, f64)>,
}

/// The expected-demand LP in column form.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedLp {
    pub capacity_rhs: Vec<f64>,
    pub groups: Vec<JobGroup>,
    pub columns: Vec<LpColumn>,
    /// Ids of jobs whose window is empty after truncation.
    pub dropped: Vec<String>,
    pub epsilon: f64,
    /// Number of jobs the assignment is indexed by.
    pub job_count: usize,
    /// Set for the compact wrap-around LP of a periodic instance.
    pub period: Option<usize>,
}

fn group_key(j: &Job, end: usize) -> (usize, usize, usize, u64, u64) {
    (j.s, end, j.l, j.v.to_bits(), j.q.to_bits())
}

impl ExpectedLp {
    pub fn capacity_rows(&self) -> usize {
        self.capacity_rhs.len()
    }

    pub fn job_rows(&self) -> usize {
        self.groups.len()
    }

    pub fn dense(&self) -> DenseLp {
        let m = self.capacity_rows() + self.job_rows();
        let n = self.columns.len();
        let mut a = vec![vec![0.0; n]; m];
        let mut c = vec![0.0; n];
        for (k, col) in self.columns.iter().enumerate() {
            let g = &self.groups[col.group];
            c[k] = g.v * g.q;
            for &(row, coef) in &col.cover {
                a[row][k] = g.q * coef;
            }
            a[self.capacity_rows() + col.group][k] = 1.0;
        }
        let mut b = self.capacity_rhs.clone();
        b.extend(self.groups.iter().map(|g| g.members.len() as f64));
        DenseLp { a, b, c }
    }

    fn column_index(&self) -> HashMap<(usize, usize), usize> {
        self.columns
            .iter()
            .enumerate()
            .map(|(k, c)| ((c.group, c.start), k))
            .collect()
    }

    fn group_of_job(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.job_count];
        for (g, grp) in self.groups.iter().enumerate() {
            for &j in &grp.members {
                out[j] = Some(g);
            }
        }
        out
    }

    /// Price of starting a group at `start`: `sum_row coef * lambda_row`.
    pub fn column_price(&self, col: &LpColumn, lambda: &[f64]) -> f64 {
        col.cover.iter().map(|&(r, c)| c * lambda[r]).sum()
    }

    /// Objective, worst capacity excess and worst job-row excess of `x`.
    pub fn evaluate(&self, x: &FractionalAssignment) -> Result<Evaluation> {
        let index = self.column_index();
        let group_of = self.group_of_job();
        let mut load = vec![0.0; self.capacity_rows()];
        let mut objective = 0.0;
        let mut mass_excess: f64 = 0.0;
        for (j, entries) in x.x.iter().enumerate() {
            let total: f64 = entries.iter().map(|e| e.1).sum();
            mass_excess = mass_excess.max(total - 1.0);
            if entries.is_empty() {
                continue;
            }
            let g =
                group_of.get(j).copied().flatten().ok_or_else(|| {
                    Error::Contract(format!("job {j} has mass but no LP columns"))
                })?;
            let grp = &self.groups[g];
            for &(t, m) in entries {
                if m < 0.0 {
                    return Err(Error::Contract(format!("negative mass for job {j} at {t}")));
                }
                let k = *index.get(&(g, t)).ok_or_else(|| {
                    Error::Contract(format!("job {j} has mass at {t} outside its window"))
                })?;
                objective += grp.v * grp.q * m;
                for &(r, c) in &self.columns[k].cover {
                    load[r] += grp.q * c * m;
                }
            }
        }
        let load_excess = load
            .iter()
            .zip(&self.capacity_rhs)
            .map(|(l, b)| l - b)
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(Evaluation {
            objective,
            load_excess: if load.is_empty() { 0.0 } else { load_excess },
            mass_excess,
            loads: load,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub load_excess: f64,
    pub mass_excess: f64,
    pub loads: Vec<f64>,
}

impl Evaluation {
    pub fn feasible(&self, tol: f64) -> bool {
        self.load_excess <= tol && self.mass_excess <= tol
    }
}

/// Builds the expected LP with the instance's own slack.
pub fn build_expected_lp(inst: &Instance) -> ExpectedLp {
    build_expected_lp_with(inst, inst.epsilon)
}

/// Builds the expected LP with an explicit capacity slack.
pub fn build_expected_lp_with(inst: &Instance, epsilon: f64) -> ExpectedLp {
    let h = inst.horizon;
    let mut groups: Vec<JobGroup> = Vec::new();
    let mut by_key: HashMap<(usize, usize, usize, u64, u64), usize> = HashMap::new();
    let mut dropped = Vec::new();
    for (idx, j) in inst.jobs.iter().enumerate() {
        let Some((lo, hi)) = j.window(h) else {
            log::warn!("job {} dropped: window empty within horizon {}", j.id, h);
            dropped.push(j.id.clone());
            continue;
        };
        let key = group_key(j, j.d.min(h));
        let g = *by_key.entry(key).or_insert_with(|| {
            groups.push(JobGroup {
                members: Vec::new(),
                v: j.v,
                q: j.q,
                l: j.l,
                starts: (lo..=hi).collect(),
            });
            groups.len() - 1
        });
        groups[g].members.push(idx);
    }
    let mut columns = Vec::new();
    for (g, grp) in groups.iter().enumerate() {
        for &t in &grp.starts {
            columns.push(LpColumn {
                group: g,
                start: t,
                cover: (t..t + grp.l).map(|s| (s - 1, 1.0)).collect(),
            });
        }
    }
    ExpectedLp {
        capacity_rhs: inst
            .capacities
            .iter()
            .map(|&b| (1.0 - epsilon) * b as f64)
            .collect(),
        groups,
        columns,
        dropped,
        epsilon,
        job_count: inst.jobs.len(),
        period: None,
    }
}

/// Start residues of a core job's window on the circle `[1, k]`.
pub fn wrapped_window(job: &Job, k: usize) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::Contract("period must be positive".into()));
    }
    if job.s < 1 || job.s > k {
        return Err(Error::Contract(format!(
            "core job {} must start in [1, {}], got {}",
            job.id, k, job.s
        )));
    }
    let last = job.d + 1 - job.l;
    let width = last + 1 - job.s;
    if width >= k {
        return Ok((1..=k).collect());
    }
    if last <= k {
        return Ok((job.s..=last).collect());
    }
    // wraps: [s, k] followed by [1, s + width - 1 - k]
    let mut w: Vec<usize> = (job.s..=k).collect();
    w.extend(1..=job.s + width - 1 - k);
    Ok(w)
}

/// Load a length-`l` job starting at residue `start` places on residue `slot`.
pub fn load_coefficient(l: usize, k: usize, start: usize, slot: usize) -> usize {
    let offset = (slot + k - start % k) % k;
    l / k + usize::from(offset < l % k)
}

/// Builds the compact wrap-around LP over one period.
pub fn build_periodic_lp(
    core: &[Job],
    k: usize,
    capacities: &[usize],
    epsilon: f64,
) -> Result<ExpectedLp> {
    if k == 0 {
        return Err(Error::Contract("period must be positive".into()));
    }
    if capacities.len() != k {
        return Err(Error::Invalid(format!(
            "expected {} per-period capacities, got {}",
            k,
            capacities.len()
        )));
    }
    let mut groups: Vec<JobGroup> = Vec::new();
    let mut by_key: HashMap<(usize, usize, usize, u64, u64), usize> = HashMap::new();
    for (idx, j) in core.iter().enumerate() {
        j.validate()?;
        let starts = wrapped_window(j, k)?;
        let g = *by_key.entry(group_key(j, j.d)).or_insert_with(|| {
            groups.push(JobGroup {
                members: Vec::new(),
                v: j.v,
                q: j.q,
                l: j.l,
                starts,
            });
            groups.len() - 1
        });
        groups[g].members.push(idx);
    }
    let mut columns = Vec::new();
    for (g, grp) in groups.iter().enumerate() {
        for &t in &grp.starts {
            let cover = (1..=k)
                .map(|slot| (slot - 1, load_coefficient(grp.l, k, t, slot) as f64))
                .filter(|&(_, c)| c > 0.0)
                .collect();
            columns.push(LpColumn {
                group: g,
                start: t,
                cover,
            });
        }
    }
    Ok(ExpectedLp {
        capacity_rhs: capacities
            .iter()
            .map(|&b| (1.0 - epsilon) * b as f64)
            .collect(),
        groups,
        columns,
        dropped: Vec::new(),
        epsilon,
        job_count: core.len(),
        period: Some(k),
    })
}

/// `X_{j,t}`: per job, the `(start, mass)` pairs with positive mass.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FractionalAssignment {
    pub x: Vec<Vec<(usize, f64)>>,
}

impl FractionalAssignment {
    pub fn zeros(jobs: usize) -> FractionalAssignment {
        FractionalAssignment {
            x: vec![Vec::new(); jobs],
        }
    }

    pub fn total(&self, j: usize) -> f64 {
        self.x[j].iter().map(|e| e.1).sum()
    }

    pub fn get(&self, j: usize, t: usize) -> f64 {
        self.x[j].iter().filter(|e| e.0 == t).map(|e| e.1).sum()
    }

    pub fn set(&mut self, j: usize, t: usize, mass: f64) {
        self.x[j].retain(|e| e.0 != t);
        if mass != 0.0 {
            self.x[j].push((t, mass));
            self.x[j].sort_by_key(|e| e.0);
        }
    }

    fn add(&mut self, j: usize, t: usize, mass: f64) {
        match self.x[j].iter_mut().find(|e| e.0 == t) {
            Some(e) => e.1 += mass,
            None => {
                self.x[j].push((t, mass));
                self.x[j].sort_by_key(|e| e.0);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
}

/// Certificate residuals of an LP solution.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Residuals {
    /// `|primal - dual| / (1 + |primal|)`.
    pub duality_gap: f64,
    pub primal: f64,
    pub dual: f64,
    pub cs1: f64,
    pub cs2: f64,
    /// Largest price excess of a supported start over the window minimum.
    pub support: f64,
}

impl Residuals {
    pub fn worst(&self) -> f64 {
        [self.primal, self.dual, self.cs1, self.cs2, self.support]
            .into_iter()
            .fold(0.0, f64::max)
    }

    pub fn within(&self, tol: &Tolerances) -> bool {
        self.duality_gap <= tol.duality_gap && self.worst() <= tol.residual
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome {
    pub assignment: FractionalAssignment,
    pub dual: DualSolution,
    pub objective: f64,
    pub dual_objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
}

const SUPPORT_TOL: f64 = 1e-9;

/// Solves the LP and certifies the result.
pub fn solve_lp(lp: &ExpectedLp, tol: &Tolerances) -> Result<LpOutcome> {
    let dense = lp.dense();
    let sol = dense.solve()?;
    let cap_rows = lp.capacity_rows();
    let lambda: Vec<f64> = sol.y[..cap_rows].to_vec();
    let group_mu: Vec<f64> = sol.y[cap_rows..].to_vec();

    // per-group fractional masses
    let mut gx: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.groups.len()];
    for (k, col) in lp.columns.iter().enumerate() {
        let m = lp.groups[col.group].members.len() as f64;
        let v = sol.x[k] / m;
        if v > 0.0 {
            gx[col.group].push((col.start, v));
        }
    }

    // zero-probability groups carry no load; park them on a cheapest
    // affordable start so that the assignment reads as a favorite choice
    let cmp = PriceCmp::new(tol.price);
    let mut col_of_group: Vec<Vec<usize>> = vec![Vec::new(); lp.groups.len()];
    for (k, col) in lp.columns.iter().enumerate() {
        col_of_group[col.group].push(k);
    }
    for (g, grp) in lp.groups.iter().enumerate() {
        if grp.q != 0.0 {
            continue;
        }
        gx[g].clear();
        let best = col_of_group[g]
            .iter()
            .map(|&k| {
                (
                    lp.columns[k].start,
                    lp.column_price(&lp.columns[k], &lambda),
                )
            })
            .reduce(|a, b| if b.1 < a.1 - tol.price { b } else { a });
        if let Some((t, p)) = best {
            if cmp.le(p, grp.v) {
                gx[g].push((t, 1.0));
            }
        }
    }

    let mut residuals = Residuals::default();
    let mut load = vec![0.0; cap_rows];
    let mut primal_obj = 0.0;
    for (g, grp) in lp.groups.iter().enumerate() {
        let m = grp.members.len() as f64;
        let total: f64 = gx[g].iter().map(|e| e.1).sum();
        residuals.primal = residuals.primal.max(total - 1.0);
        let mu = group_mu[g];
        if mu > tol.residual {
            residuals.cs2 = residuals.cs2.max(1.0 - total);
        }
        let min_price = col_of_group[g]
            .iter()
            .map(|&k| lp.column_price(&lp.columns[k], &lambda))
            .fold(f64::INFINITY, f64::min);
        for &k in &col_of_group[g] {
            let col = &lp.columns[k];
            let price = lp.column_price(col, &lambda);
            let slack = grp.q * price + mu - grp.v * grp.q;
            residuals.dual = residuals.dual.max(-slack);
            let xv = gx[g].iter().find(|e| e.0 == col.start).map_or(0.0, |e| e.1);
            if xv > SUPPORT_TOL && grp.q > 0.0 {
                residuals.cs1 = residuals.cs1.max((price + mu / grp.q - grp.v).abs());
                residuals.support = residuals.support.max(price - min_price);
            }
            primal_obj += grp.v * grp.q * xv * m;
            for &(r, c) in &col.cover {
                load[r] += grp.q * c * xv * m;
            }
        }
    }
    for (l, b) in load.iter().zip(&lp.capacity_rhs) {
        residuals.primal = residuals.primal.max(l - b);
    }
    let dual_obj: f64 = lambda
        .iter()
        .zip(&lp.capacity_rhs)
        .map(|(a, b)| a * b)
        .sum::<f64>()
        + group_mu
            .iter()
            .zip(&lp.groups)
            .map(|(u, g)| u * g.members.len() as f64)
            .sum::<f64>();
    residuals.duality_gap = (primal_obj - dual_obj).abs() / (1.0 + primal_obj.abs());

    if !residuals.within(tol) {
        return Err(Error::Numerical {
            message: format!("LP certificate outside tolerance: {residuals:?}"),
            worst_residual: residuals.worst().max(residuals.duality_gap),
        });
    }

    let mut assignment = FractionalAssignment::zeros(lp.job_count);
    let mut mu = vec![0.0; lp.job_count];
    for (g, grp) in lp.groups.iter().enumerate() {
        for &j in &grp.members {
            assignment.x[j] = gx[g].clone();
            mu[j] = group_mu[g];
        }
    }
    Ok(LpOutcome {
        assignment,
        dual: DualSolution { lambda, mu },
        objective: primal_obj,
        dual_objective: dual_obj,
        residuals,
        iterations: sol.iterations,
    })
}

/// `p_t = lambda_t`; a compact dual is repeated over `horizon` slots.
pub fn extract_prices(dual: &DualSolution, period: Option<usize>, horizon: usize) -> PriceSchedule {
    match period {
        None => PriceSchedule::new(dual.lambda.clone()),
        Some(k) => PriceSchedule {
            prices: (0..horizon).map(|i| dual.lambda[i % k]).collect(),
            period: Some(k),
        },
    }
}

/// Result of pricing a whole instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Pricing {
    pub prices: PriceSchedule,
    /// Indexed by the instance's (expanded) jobs.
    pub assignment: FractionalAssignment,
    pub outcome: LpOutcome,
    /// Compact assignment over core jobs, for periodic instances.
    pub compact: Option<FractionalAssignment>,
    pub dropped: Vec<String>,
}

/// Prices an instance: compact LP for periodic instances, the full LP
/// otherwise.
pub fn price_instance(inst: &Instance, tol: &Tolerances) -> Result<Pricing> {
    match &inst.period {
        None => {
            let lp = build_expected_lp(inst);
            let outcome = solve_lp(&lp, tol)?;
            Ok(Pricing {
                prices: extract_prices(&outcome.dual, None, inst.horizon),
                assignment: outcome.assignment.clone(),
                outcome,
                compact: None,
                dropped: lp.dropped,
            })
        }
        Some(p) => {
            let caps = &inst.capacities[..p.k];
            let lp = build_periodic_lp(&p.core, p.k, caps, inst.epsilon)?;
            let outcome = solve_lp(&lp, tol)?;
            let assignment = unroll_periodic(inst, &outcome.assignment)?;
            Ok(Pricing {
                prices: extract_prices(&outcome.dual, Some(p.k), inst.horizon),
                assignment,
                compact: Some(outcome.assignment.clone()),
                outcome,
                dropped: Vec::new(),
            })
        }
    }
}

/// Maps a compact assignment onto every copy of an expanded periodic
/// instance: the mass of residue `r` goes to the first start in the copy's
/// window congruent to `r`.
pub fn unroll_periodic(
    inst: &Instance,
    compact: &FractionalAssignment,
) -> Result<FractionalAssignment> {
    let p = inst
        .period
        .as_ref()
        .ok_or_else(|| Error::Contract("instance is not periodic".into()))?;
    let k = p.k;
    let mut out = FractionalAssignment::zeros(inst.jobs.len());
    for (j, job) in inst.jobs.iter().enumerate() {
        let origin = p.origins[j];
        let Some((lo, hi)) = job.window(inst.horizon) else {
            continue;
        };
        for &(r, mass) in &compact.x[origin.core] {
            let t = (lo..=hi).find(|t| (t - 1) % k + 1 == r).ok_or_else(|| {
                Error::Invariant(format!("copy {} has no start congruent to {}", job.id, r))
            })?;
            out.add(j, t, mass);
        }
    }
    Ok(out)
}

/// Averages an aperiodic assignment over all copies and periods:
/// `x_dagger_{c,r} = (k/H) sum_copies sum_{t ≡ r} x_{copy,t}`.
pub fn fold_aperiodic(inst: &Instance, x: &FractionalAssignment) -> Result<FractionalAssignment> {
    let p = inst
        .period
        .as_ref()
        .ok_or_else(|| Error::Contract("instance is not periodic".into()))?;
    let k = p.k;
    if !inst.horizon.is_multiple_of(k) {
        return Err(Error::Contract(format!(
            "horizon {} is not a multiple of the period {}",
            inst.horizon, k
        )));
    }
    let scale = k as f64 / inst.horizon as f64;
    let mut out = FractionalAssignment::zeros(p.core.len());
    for (j, entries) in x.x.iter().enumerate() {
        let c = p.origins[j].core;
        for &(t, mass) in entries {
            out.add(c, (t - 1) % k + 1, scale * mass);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceConditionViolation {
    pub condition: u8,
    pub witness: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceConditionReport {
    pub violations: Vec<PriceConditionViolation>,
    pub objective: f64,
    pub reference: f64,
    pub max_load_excess: f64,
}

impl PriceConditionReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// What the welfare condition compares against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WelfareReference {
    /// Compare the assignment's own objective with `(1 - eps)` times this
    /// upper bound (normally the `eps = 0` LP optimum).
    Bound(f64),
    /// Compare a given objective with `(1 - eps)` times a given bound; used
    /// for the compact LP of periodic instances.
    Explicit { objective: f64, bound: f64 },
}

/// Checks the three fractional-assignment guarantees: strictly affordable
/// jobs are fully scheduled, expected loads respect `(1 - eps) B_t`, and the
/// objective is within `1 - eps` of the reference.
pub fn verify_price_conditions(
    inst: &Instance,
    prices: &PriceSchedule,
    x: &FractionalAssignment,
    reference: WelfareReference,
    tol: &Tolerances,
) -> PriceConditionReport {
    let cmp = PriceCmp::new(tol.price);
    let mut violations = Vec::new();
    let h = inst.horizon;
    let mut load = vec![0.0; h];
    let mut objective = 0.0;
    for (j, job) in inst.jobs.iter().enumerate() {
        let total = x.total(j);
        objective += job.v * job.q * total;
        for &(t, m) in &x.x[j] {
            for s in t..(t + job.l).min(h + 1) {
                load[s - 1] += job.q * m;
            }
        }
        let favs = favorites(job, prices, cmp);
        if let Some(&f) = favs.first() {
            let p = prices.block_price(f, job.l).expect("favorite fits");
            if cmp.lt(p, job.v) && (total - 1.0).abs() > tol.residual {
                violations.push(PriceConditionViolation {
                    condition: 1,
                    witness: job.id.clone(),
                    residual: (total - 1.0).abs(),
                });
            }
        }
    }
    let mut max_load_excess = f64::NEG_INFINITY;
    for t in 1..=h {
        let excess = load[t - 1] - (1.0 - inst.epsilon) * inst.capacity(t) as f64;
        max_load_excess = max_load_excess.max(excess);
        if excess > tol.residual {
            violations.push(PriceConditionViolation {
                condition: 2,
                witness: format!("slot {t}"),
                residual: excess,
            });
        }
    }
    let (obj, bound) = match reference {
        WelfareReference::Bound(b) => (objective, b),
        WelfareReference::Explicit { objective, bound } => (objective, bound),
    };
    let shortfall = (1.0 - inst.epsilon) * bound - obj;
    if shortfall > tol.residual * (1.0 + bound.abs()) {
        violations.push(PriceConditionViolation {
            condition: 3,
            witness: "objective".into(),
            residual: shortfall,
        });
    }
    PriceConditionReport {
        violations,
        objective: obj,
        reference: bound,
        max_load_excess: if h == 0 { 0.0 } else { max_load_excess },
    }
}

/// The welfare reference appropriate for `inst`: the `eps = 0` optimum of
/// the full LP, or for periodic instances the compact pair.
pub fn welfare_reference(
    inst: &Instance,
    pricing: &Pricing,
    tol: &Tolerances,
) -> Result<WelfareReference> {
    match &inst.period {
        None => {
            let lp0 = build_expected_lp_with(inst, 0.0);
            Ok(WelfareReference::Bound(solve_lp(&lp0, tol)?.objective))
        }
        Some(p) => {
            let lp0 = build_periodic_lp(&p.core, p.k, &inst.capacities[..p.k], 0.0)?;
            Ok(WelfareReference::Explicit {
                objective: pricing.outcome.objective,
                bound: solve_lp(&lp0, tol)?.objective,
            })
        }
    }
}

/// Upper bound on the expected offline optimum. For aperiodic instances
/// the `eps = 0` optimum of the full LP; for periodic ones the compact
/// `eps = 0` optimum scaled by `H / k`, which dominates the expanded LP and
/// is far cheaper to solve.
pub fn lp_welfare_bound(inst: &Instance, tol: &Tolerances) -> Result<f64> {
    match &inst.period {
        None => expanded_lp_bound(inst, tol),
        Some(p) => {
            let lp = build_periodic_lp(&p.core, p.k, &inst.capacities[..p.k], 0.0)?;
            Ok(solve_lp(&lp, tol)?.objective * inst.horizon as f64 / p.k as f64)
        }
    }
}

/// The `eps = 0` optimum of the full LP over the instance's jobs.
pub fn expanded_lp_bound(inst: &Instance, tol: &Tolerances) -> Result<f64> {
    Ok(solve_lp(&build_expected_lp_with(inst, 0.0), tol)?.objective)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(id: &str, s: usize, d: usize, v: f64) -> Job {
        Job::new(id, s, d, 1, v, 1.0).unwrap()
    }

    fn three_jobs() -> Instance {
        Instance::new(
            vec![
                unit("a", 1, 1, 5.0),
                unit("b", 1, 1, 3.0),
                unit("c", 1, 1, 1.0),
            ],
            1,
            vec![2],
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn row_counts() {
        let lp = build_expected_lp(&three_jobs());
        assert_eq!(lp.capacity_rows(), 1);
        assert_eq!(lp.job_rows(), 3);
        assert_eq!(lp.capacity_rhs, vec![2.0]);

        let empty = Instance::new(vec![], 3, vec![1, 1, 1], 0.1).unwrap();
        let lp = build_expected_lp(&empty);
        assert!(lp.columns.is_empty());
        assert_eq!(lp.capacity_rows(), 3);
    }

    #[test]
    fn long_job_covers_its_block() {
        let inst = Instance::new(
            vec![Job::new("a", 1, 2, 2, 1.0, 1.0).unwrap()],
            3,
            vec![1, 1, 1],
            0.0,
        )
        .unwrap();
        let lp = build_expected_lp(&inst);
        assert_eq!(lp.columns.len(), 1);
        assert_eq!(lp.columns[0].cover, vec![(0, 1.0), (1, 1.0)]);
    }

    #[test]
    fn dropped_jobs_are_recorded() {
        let inst = Instance::new(
            vec![unit("late", 5, 6, 1.0), unit("ok", 1, 2, 1.0)],
            3,
            vec![1, 1, 1],
            0.0,
        )
        .unwrap();
        let lp = build_expected_lp(&inst);
        assert_eq!(lp.dropped, vec!["late".to_string()]);
        assert_eq!(lp.job_rows(), 1);
    }

    #[test]
    fn single_slot_three_jobs() {
        let inst = three_jobs();
        let tol = Tolerances::default();
        let out = solve_lp(&build_expected_lp(&inst), &tol).unwrap();
        assert!((out.objective - 8.0).abs() < 1e-9);
        assert!((out.assignment.total(0) - 1.0).abs() < 1e-9);
        assert!((out.assignment.total(1) - 1.0).abs() < 1e-9);
        let lam = out.dual.lambda[0];
        assert!((1.0 - 1e-9..=3.0 + 1e-9).contains(&lam));
        let prices = extract_prices(&out.dual, None, 1);
        let report = verify_price_conditions(
            &inst,
            &prices,
            &out.assignment,
            WelfareReference::Bound(8.0),
            &tol,
        );
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn perturbed_assignment_fails_with_witness() {
        let inst = three_jobs();
        let tol = Tolerances::default();
        let out = solve_lp(&build_expected_lp(&inst), &tol).unwrap();
        let prices = extract_prices(&out.dual, None, 1);
        let mut x = out.assignment.clone();
        x.set(0, 1, 0.0);
        let report =
            verify_price_conditions(&inst, &prices, &x, WelfareReference::Bound(8.0), &tol);
        assert!(!report.passed());
        assert!(report
            .violations
            .iter()
            .any(|v| v.condition == 1 && v.witness == "a"));
    }

    #[test]
    fn empty_instance_passes() {
        let inst = Instance::new(vec![], 2, vec![1, 1], 0.2).unwrap();
        let tol = Tolerances::default();
        let out = solve_lp(&build_expected_lp(&inst), &tol).unwrap();
        assert_eq!(out.objective, 0.0);
        assert!(out.dual.lambda.iter().all(|&l| l == 0.0));
        let prices = extract_prices(&out.dual, None, 2);
        assert!(verify_price_conditions(
            &inst,
            &prices,
            &out.assignment,
            WelfareReference::Bound(0.0),
            &tol
        )
        .passed());
    }

    #[test]
    fn two_slot_example() {
        let inst = Instance::new(
            vec![unit("j1", 1, 2, 5.0), unit("j2", 1, 1, 3.0)],
            2,
            vec![1, 1],
            0.0,
        )
        .unwrap();
        let out = solve_lp(&build_expected_lp(&inst), &Tolerances::default()).unwrap();
        assert!((out.objective - 8.0).abs() < 1e-9);
        assert!((out.assignment.get(0, 2) - 1.0).abs() < 1e-9);
        assert!((out.assignment.get(1, 1) - 1.0).abs() < 1e-9);
        assert!((out.dual_objective - 8.0).abs() < 1e-9);
    }

    #[test]
    fn identical_jobs_share_a_group() {
        let jobs: Vec<Job> = (0..5).map(|i| unit(&format!("j{i}"), 1, 2, 2.0)).collect();
        let inst = Instance::new(jobs, 2, vec![2, 1], 0.0).unwrap();
        let lp = build_expected_lp(&inst);
        assert_eq!(lp.job_rows(), 1);
        let out = solve_lp(&lp, &Tolerances::default()).unwrap();
        assert!((out.objective - 6.0).abs() < 1e-9);
        let mass: f64 = (0..5).map(|j| out.assignment.total(j)).sum();
        assert!((mass - 3.0).abs() < 1e-9);
    }

    #[test]
    fn extract_prices_repeats_period() {
        let dual = DualSolution {
            lambda: vec![1.0, 2.0],
            mu: vec![],
        };
        let p = extract_prices(&dual, Some(2), 6);
        assert_eq!(p.prices, vec![1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        assert_eq!(p.period, Some(2));
        assert!(p.validate().is_ok());
        assert_eq!(extract_prices(&dual, None, 2).prices, vec![1.0, 2.0]);
    }

    #[test]
    fn load_coefficients() {
        // length 5 on a period of 3
        let from1: Vec<usize> = (1..=3).map(|t| load_coefficient(5, 3, 1, t)).collect();
        assert_eq!(from1, vec![2, 2, 1]);
        let from3: Vec<usize> = (1..=3).map(|t| load_coefficient(5, 3, 3, t)).collect();
        assert_eq!(from3, vec![2, 1, 2]);
        for s in 1..=4 {
            assert!((1..=4).all(|t| load_coefficient(4, 4, s, t) == 1));
        }
        for (l, k) in [(1, 1), (3, 2), (7, 3), (2, 5)] {
            for s in 1..=k {
                let total: usize = (1..=k).map(|t| load_coefficient(l, k, s, t)).sum();
                assert_eq!(total, l);
            }
        }
    }

    #[test]
    fn wrapped_windows() {
        let fits = Job::new("a", 1, 3, 2, 1.0, 1.0).unwrap();
        assert_eq!(wrapped_window(&fits, 4).unwrap(), vec![1, 2]);
        let wraps = Job::new("b", 3, 5, 1, 1.0, 1.0).unwrap();
        assert_eq!(wrapped_window(&wraps, 4).unwrap(), vec![3, 4, 1]);
        let wide = Job::new("c", 2, 9, 1, 1.0, 1.0).unwrap();
        assert_eq!(wrapped_window(&wide, 4).unwrap(), vec![1, 2, 3, 4]);
        assert!(matches!(wrapped_window(&fits, 0), Err(Error::Contract(_))));
    }

    #[test]
    fn periodic_pricing_round_trip() {
        let core = vec![
            Job::new("a", 1, 2, 1, 4.0, 0.5).unwrap(),
            Job::new("b", 2, 3, 2, 6.0, 1.0).unwrap(),
        ];
        let inst = Instance::periodic(core, 2, vec![1, 2], 6, 0.1).unwrap();
        let tol = Tolerances::default();
        let pricing = price_instance(&inst, &tol).unwrap();
        assert_eq!(pricing.prices.prices.len(), 6);
        assert!(pricing.prices.validate().is_ok());
        let reference = welfare_reference(&inst, &pricing, &tol).unwrap();
        let report =
            verify_price_conditions(&inst, &pricing.prices, &pricing.assignment, reference, &tol);
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn fold_requires_multiple_of_period() {
        let core = vec![Job::new("a", 1, 1, 1, 1.0, 1.0).unwrap()];
        let inst = Instance::periodic(core, 2, vec![1, 1], 5, 0.0).unwrap();
        let x = FractionalAssignment::zeros(inst.jobs.len());
        assert!(matches!(fold_aperiodic(&inst, &x), Err(Error::Contract(_))));
    }

    #[test]
    fn fold_of_periodic_solution_is_its_restriction() {
        let core = vec![Job::new("a", 1, 2, 1, 1.0, 1.0).unwrap()];
        let inst = Instance::periodic(core, 2, vec![1, 1], 6, 0.0).unwrap();
        let mut x = FractionalAssignment::zeros(inst.jobs.len());
        for (j, job) in inst.jobs.iter().enumerate() {
            x.set(j, job.s, 0.25);
            x.set(j, job.s + 1, 0.5);
        }
        let folded = fold_aperiodic(&inst, &x).unwrap();
        assert!((folded.get(0, 1) - 0.25).abs() < 1e-12);
        assert!((folded.get(0, 2) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fold_with_unit_period_averages() {
        let core = vec![Job::new("a", 1, 2, 1, 1.0, 1.0).unwrap()];
        let inst = Instance::periodic(core, 1, vec![2], 4, 0.0).unwrap();
        // copies at shifts 0..2 (the shift-3 copy would end past the horizon)
        assert_eq!(inst.jobs.len(), 3);
        let mut x = FractionalAssignment::zeros(3);
        x.set(0, 1, 1.0);
        x.set(1, 3, 0.5);
        x.set(2, 3, 0.5);
        let folded = fold_aperiodic(&inst, &x).unwrap();
        assert!((folded.get(0, 1) - 0.5).abs() < 1e-12);
    }
}
