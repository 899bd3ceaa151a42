//! Jobs, instances, price schedules and preference orders.
//!
//! Slots are 1-indexed: slot `t` lives at index `t - 1` of every per-slot
//! vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance::PriceCmp;

/// A potential client: start, deadline, length, value and realization
/// probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: String,
    pub s: usize,
    pub d: usize,
    pub l: usize,
    pub v: f64,
    pub q: f64,
}

impl Job {
    pub fn new(id: impl Into<String>, s: usize, d: usize, l: usize, v: f64, q: f64) -> Result<Job> {
        let job = Job {
            id: id.into(),
            s,
            d,
            l,
            v,
            q,
        };
        job.validate()?;
        Ok(job)
    }

    pub fn validate(&self) -> Result<()> {
        if self.s < 1 {
            return Err(Error::Invalid(format!(
                "job {}: start must be >= 1",
                self.id
            )));
        }
        if self.l < 1 {
            return Err(Error::Invalid(format!(
                "job {}: length must be >= 1",
                self.id
            )));
        }
        if self.d + 1 < self.s + self.l {
            return Err(Error::Invalid(format!(
                "job {}: empty window (d={} < s+l-1={})",
                self.id,
                self.d,
                self.s + self.l - 1
            )));
        }
        if !(self.v >= 0.0 && self.v.is_finite()) {
            return Err(Error::Invalid(format!(
                "job {}: value must be finite and >= 0",
                self.id
            )));
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(Error::Invalid(format!(
                "job {}: probability must lie in [0,1]",
                self.id
            )));
        }
        Ok(())
    }

    /// Start-time window truncated to the horizon, as an inclusive range.
    /// `None` when no start fits.
    pub fn window(&self, horizon: usize) -> Option<(usize, usize)> {
        let end = self.d.min(horizon);
        if end + 1 < self.s + self.l {
            return None;
        }
        Some((self.s, end + 1 - self.l))
    }

    /// Same window, shifted by `delta` slots.
    pub fn shifted(&self, delta: usize, id: String) -> Job {
        Job {
            id,
            s: self.s + delta,
            d: self.d + delta,
            ..self.clone()
        }
    }
}

/// Where a job of an expanded periodic instance came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobOrigin {
    pub core: usize,
    pub shift: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Periodicity {
    pub k: usize,
    pub core: Vec<Job>,
    /// Parallel to `Instance::jobs`.
    pub origins: Vec<JobOrigin>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub jobs: Vec<Job>,
    pub horizon: usize,
    /// `B_t`, indexed by `t - 1`.
    pub capacities: Vec<usize>,
    pub epsilon: f64,
    pub period: Option<Periodicity>,
}

impl Instance {
    pub fn new(
        jobs: Vec<Job>,
        horizon: usize,
        capacities: Vec<usize>,
        epsilon: f64,
    ) -> Result<Instance> {
        let inst = Instance {
            jobs,
            horizon,
            capacities,
            epsilon,
            period: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Expands a core job set into its k-shift closure over `[1, horizon]`.
    ///
    /// Only copies whose whole window `[s + ik, d + ik]` lies inside the
    /// horizon are kept, so every copy sees the same wrapped window as its
    /// core job.
    pub fn periodic(
        core: Vec<Job>,
        k: usize,
        period_capacities: Vec<usize>,
        horizon: usize,
        epsilon: f64,
    ) -> Result<Instance> {
        if k == 0 {
            return Err(Error::Contract("period must be positive".into()));
        }
        if period_capacities.len() != k {
            return Err(Error::Invalid(format!(
                "expected {} per-period capacities, got {}",
                k,
                period_capacities.len()
            )));
        }
        for j in &core {
            j.validate()?;
            if j.s > k {
                return Err(Error::Invalid(format!(
                    "core job {} starts at {} outside the first period [1,{}]",
                    j.id, j.s, k
                )));
            }
        }
        let mut jobs = Vec::new();
        let mut origins = Vec::new();
        for shift in 0.. {
            let delta = shift * k;
            if delta >= horizon {
                break;
            }
            for (ci, j) in core.iter().enumerate() {
                if j.d + delta <= horizon {
                    jobs.push(j.shifted(delta, format!("{}@{}", j.id, shift)));
                    origins.push(JobOrigin { core: ci, shift });
                }
            }
        }
        let capacities = (0..horizon).map(|i| period_capacities[i % k]).collect();
        let inst = Instance {
            jobs,
            horizon,
            capacities,
            epsilon,
            period: Some(Periodicity { k, core, origins }),
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Invalid("horizon must be positive".into()));
        }
        if self.capacities.len() != self.horizon {
            return Err(Error::Invalid(format!(
                "capacities has {} entries for horizon {}",
                self.capacities.len(),
                self.horizon
            )));
        }
        if self.capacities.contains(&0) {
            return Err(Error::Invalid("capacities must be positive".into()));
        }
        if !(0.0..=0.5).contains(&self.epsilon) {
            return Err(Error::Invalid(format!(
                "epsilon {} outside [0, 1/2]",
                self.epsilon
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for j in &self.jobs {
            j.validate()?;
            if !seen.insert(j.id.as_str()) {
                return Err(Error::Invalid(format!("duplicate job id {}", j.id)));
            }
        }
        if let Some(p) = &self.period {
            for t in 0..self.horizon {
                if self.capacities[t] != self.capacities[t % p.k] {
                    return Err(Error::Invalid("capacities are not periodic".into()));
                }
            }
        }
        Ok(())
    }

    pub fn capacity(&self, t: usize) -> usize {
        self.capacities[t - 1]
    }

    pub fn max_len(&self) -> usize {
        self.jobs.iter().map(|j| j.l).max().unwrap_or(1)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Instance {
        Instance {
            epsilon,
            ..self.clone()
        }
    }
}

/// Per-slot prices `p_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSchedule {
    pub prices: Vec<f64>,
    #[serde(default)]
    pub period: Option<usize>,
}

impl PriceSchedule {
    pub fn new(prices: Vec<f64>) -> PriceSchedule {
        PriceSchedule {
            prices,
            period: None,
        }
    }

    pub fn horizon(&self) -> usize {
        self.prices.len()
    }

    pub fn price(&self, t: usize) -> f64 {
        self.prices[t - 1]
    }

    /// Total price of the block `[t, t + l - 1]`.
    pub fn block_price(&self, t: usize, l: usize) -> Result<f64> {
        if t < 1 || l < 1 || t + l - 1 > self.prices.len() {
            return Err(Error::Range(format!(
                "block ({}, {}) outside horizon {}",
                t,
                l,
                self.prices.len()
            )));
        }
        Ok(self.prices[t - 1..t - 1 + l].iter().sum())
    }

    pub fn validate(&self) -> Result<()> {
        if self.prices.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Invalid(
                "prices must be finite and nonnegative".into(),
            ));
        }
        if let Some(k) = self.period {
            for (i, p) in self.prices.iter().enumerate() {
                if *p != self.prices[i % k] {
                    return Err(Error::Invalid("prices are not periodic".into()));
                }
            }
        }
        Ok(())
    }
}

/// A block of consecutive slots `[t, t + l - 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TimeBlock {
    pub t: usize,
    pub l: usize,
}

impl TimeBlock {
    pub fn new(t: usize, l: usize) -> TimeBlock {
        TimeBlock { t, l }
    }

    pub fn end(&self) -> usize {
        self.t + self.l - 1
    }

    pub fn covers(&self, slot: usize) -> bool {
        self.t <= slot && slot <= self.end()
    }
}

/// What a job pays for a block longer than its declared length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PaymentRule {
    /// Pay `p_t(l)` for the allocated block `(t, l)`.
    #[default]
    AllocatedBlock,
    /// Pay `p_t(l_j)`; the reservation ends after `l` slots.
    DeclaredLength,
}

impl PaymentRule {
    pub fn charge(&self, prices: &PriceSchedule, job: &Job, block: TimeBlock) -> Result<f64> {
        match self {
            PaymentRule::AllocatedBlock => prices.block_price(block.t, block.l),
            PaymentRule::DeclaredLength => prices.block_price(block.t, job.l),
        }
    }
}

/// Cheapest affordable starting slots (`p_t(l_j) <= v_j`) in the job's window.
pub fn favorites(job: &Job, prices: &PriceSchedule, cmp: PriceCmp) -> Vec<usize> {
    let Some((lo, hi)) = job.window(prices.horizon()) else {
        return Vec::new();
    };
    let priced: Vec<(usize, f64)> = (lo..=hi)
        .map(|t| {
            (
                t,
                prices.block_price(t, job.l).expect("window fits horizon"),
            )
        })
        .filter(|&(_, p)| cmp.le(p, job.v))
        .collect();
    let Some(min) = priced.iter().map(|&(_, p)| p).reduce(f64::min) else {
        return Vec::new();
    };
    priced
        .into_iter()
        .filter(|&(_, p)| cmp.eq(p, min))
        .map(|(t, _)| t)
        .collect()
}

/// Price of the job's favorite level, if it has one.
pub fn favorite_price(job: &Job, prices: &PriceSchedule, cmp: PriceCmp) -> Option<f64> {
    favorites(job, prices, cmp)
        .first()
        .map(|&t| prices.block_price(t, job.l).expect("favorite fits horizon"))
}

/// A job's visiting order over blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceOrder {
    pub job: String,
    pub y: usize,
    pub blocks: Vec<TimeBlock>,
}

impl PreferenceOrder {
    pub fn slots(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.t).collect()
    }
}

/// Unit-block preference order: blocks `(t, l_j)` only.
pub fn preference_order(
    job: &Job,
    prices: &PriceSchedule,
    y: usize,
    cmp: PriceCmp,
) -> Result<PreferenceOrder> {
    block_preference_order(job, prices, y, job.l, PaymentRule::AllocatedBlock, cmp)
}

/// Full preference order over blocks `(t, l)` with `t` in the window and
/// `l_j <= l <= max_len`.
///
/// Blocks are grouped into price levels. In the cheapest level the start
/// order is `y` first, then earlier favorites in decreasing time, then later
/// favorites in increasing time; every other level is visited in increasing
/// time. Within a start, shorter blocks come first. The cheapest level needs
/// `price <= v`; other levels need `price < v`.
pub fn block_preference_order(
    job: &Job,
    prices: &PriceSchedule,
    y: usize,
    max_len: usize,
    rule: PaymentRule,
    cmp: PriceCmp,
) -> Result<PreferenceOrder> {
    let favs = favorites(job, prices, cmp);
    if !favs.contains(&y) {
        return Err(Error::Contract(format!(
            "slot {} is not a favorite of job {}",
            y, job.id
        )));
    }
    let fav_price = prices.block_price(y, job.l)?;
    let horizon = prices.horizon();
    let (lo, hi) = job
        .window(horizon)
        .expect("job with a favorite has a window");

    let mut candidates: Vec<(f64, TimeBlock)> = Vec::new();
    for t in lo..=hi {
        for l in job.l..=max_len.max(job.l) {
            if t + l - 1 > horizon {
                break;
            }
            let block = TimeBlock::new(t, l);
            let price = rule.charge(prices, job, block)?;
            if cmp.eq(price, fav_price) || cmp.lt(price, job.v) {
                candidates.push((price, block));
            }
        }
    }

    // Cluster prices into levels so that near-equal sums share a level.
    let mut distinct: Vec<f64> = candidates.iter().map(|c| c.0).collect();
    distinct.sort_by(|a, b| a.total_cmp(b));
    let mut level_floor: Vec<f64> = Vec::new();
    for p in distinct {
        match level_floor.last() {
            Some(&last) if cmp.eq(p, last) => {}
            _ => level_floor.push(p),
        }
    }
    let level_of =
        |p: f64| -> usize { level_floor.iter().rposition(|&f| cmp.le(f, p)).unwrap_or(0) };
    let fav_level = level_of(fav_price);

    let rank = |level: usize, t: usize| -> (usize, usize) {
        if level == fav_level {
            if t == y {
                (0, 0)
            } else if t < y {
                (1, y - t)
            } else {
                (2, t - y)
            }
        } else {
            (0, t)
        }
    };
    let mut keyed: Vec<((usize, (usize, usize), usize), TimeBlock)> = candidates
        .into_iter()
        .map(|(p, b)| {
            let lv = level_of(p);
            ((lv, rank(lv, b.t), b.l), b)
        })
        .collect();
    keyed.sort_by_key(|(k, _)| *k);

    Ok(PreferenceOrder {
        job: job.id.clone(),
        y,
        blocks: keyed.into_iter().map(|(_, b)| b).collect(),
    })
}
