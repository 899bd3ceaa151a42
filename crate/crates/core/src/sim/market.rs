//! Everything a trial needs that does not depend on the realization.

use crate::error::{Error, Result};
use crate::model::{
    block_preference_order, favorites, Instance, PaymentRule, PriceSchedule, TimeBlock,
};
use crate::pricing::FractionalAssignment;
use crate::temporal::{partition_capacities, BlockCapacities, LayeredGraph};
use crate::tolerance::PriceCmp;

/// Per-job data fixed by the prices and the fractional assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct JobPlan {
    pub favorites: Vec<usize>,
    pub favorite_price: Option<f64>,
    /// Value strictly above the favorite price.
    pub strictly_affordable: bool,
    /// Entry probabilities over `favorites`; they sum to at most 1.
    pub entry_weights: Vec<f64>,
    /// Preference order over blocks for each entry favorite.
    pub orders: Vec<Vec<TimeBlock>>,
}

impl JobPlan {
    pub fn participation(&self) -> f64 {
        if self.strictly_affordable {
            1.0
        } else {
            self.entry_weights.iter().sum::<f64>().min(1.0)
        }
    }

    pub fn order_for(&self, y: usize) -> &[TimeBlock] {
        let k = self
            .favorites
            .iter()
            .position(|&t| t == y)
            .expect("entry is a favorite");
        &self.orders[k]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Market {
    pub instance: Instance,
    pub prices: PriceSchedule,
    pub rule: PaymentRule,
    pub cmp: PriceCmp,
    pub l_max: usize,
    pub graph: LayeredGraph,
    /// `masks[l - 1][z - 1]` is the ancestor mask of `z` in layer `l`.
    pub masks: Vec<Vec<Vec<bool>>>,
    pub blocks: Option<BlockCapacities>,
    pub plans: Vec<JobPlan>,
}

impl Market {
    /// `assignment` is indexed by the instance's jobs. Block capacities
    /// are carved out when `partition` is set.
    pub fn new(
        instance: &Instance,
        prices: &PriceSchedule,
        assignment: &FractionalAssignment,
        rule: PaymentRule,
        partition: bool,
        cmp: PriceCmp,
    ) -> Result<Market> {
        if prices.horizon() != instance.horizon {
            return Err(Error::Contract("prices do not cover the horizon".into()));
        }
        if assignment.x.len() != instance.jobs.len() {
            return Err(Error::Contract("assignment does not cover the jobs".into()));
        }
        let l_max = instance.max_len().min(instance.horizon);
        let graph = LayeredGraph::build(prices, l_max, cmp)?;
        let masks = graph
            .layers
            .iter()
            .map(|g| g.all_ancestor_masks())
            .collect();
        let blocks = if partition {
            Some(partition_capacities(
                instance,
                assignment,
                instance.epsilon,
            )?)
        } else {
            None
        };
        let mut plans = Vec::with_capacity(instance.jobs.len());
        for (j, job) in instance.jobs.iter().enumerate() {
            let favs = favorites(job, prices, cmp);
            let fav_price = favs
                .first()
                .map(|&t| prices.block_price(t, job.l))
                .transpose()?;
            let strictly = fav_price.is_some_and(|p| cmp.lt(p, job.v));
            let mut weights: Vec<f64> = favs
                .iter()
                .map(|&t| assignment.get(j, t).max(0.0))
                .collect();
            let total: f64 = weights.iter().sum();
            if strictly {
                if total > 0.0 {
                    weights.iter_mut().for_each(|w| *w /= total);
                } else {
                    weights = vec![1.0 / favs.len() as f64; favs.len()];
                }
            } else if total > 1.0 {
                weights.iter_mut().for_each(|w| *w /= total);
            }
            let orders = favs
                .iter()
                .map(|&y| {
                    block_preference_order(job, prices, y, l_max, rule, cmp).map(|o| o.blocks)
                })
                .collect::<Result<Vec<_>>>()?;
            plans.push(JobPlan {
                favorites: favs,
                favorite_price: fav_price,
                strictly_affordable: strictly,
                entry_weights: weights,
                orders,
            });
        }
        Ok(Market {
            instance: instance.clone(),
            prices: prices.clone(),
            rule,
            cmp,
            l_max,
            graph,
            masks,
            blocks,
            plans,
        })
    }

    pub fn horizon(&self) -> usize {
        self.instance.horizon
    }

    pub fn partitioned(&self) -> bool {
        self.blocks.is_some()
    }

    /// Dense index of a block, `l`-major.
    pub fn block_index(&self, b: TimeBlock) -> usize {
        let h = self.horizon();
        // layer l holds h - l + 1 starts
        let before: usize = (1..b.l).map(|l| h + 1 - l).sum();
        before + b.t - 1
    }

    pub fn block_count(&self) -> usize {
        (1..=self.l_max).map(|l| self.horizon() + 1 - l).sum()
    }

    /// Admissions per block, when partitioned.
    pub fn block_limit(&self, b: TimeBlock) -> Option<usize> {
        self.blocks.as_ref().map(|c| c.admissions(b.t, b.l))
    }
}

/// Residual capacities during a trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Residual {
    pub slots: Vec<usize>,
    /// Residual admissions per block index, when partitioned.
    pub blocks: Option<Vec<usize>>,
}

impl Residual {
    pub fn new(market: &Market) -> Residual {
        let blocks = market.blocks.as_ref().map(|_| {
            let mut v = vec![0; market.block_count()];
            for l in 1..=market.l_max {
                for t in 1..=market.horizon() + 1 - l {
                    let b = TimeBlock::new(t, l);
                    v[market.block_index(b)] = market.block_limit(b).unwrap();
                }
            }
            v
        });
        Residual {
            slots: market.instance.capacities.clone(),
            blocks,
        }
    }

    /// How many more jobs block `b` can take.
    pub fn room(&self, market: &Market, b: TimeBlock) -> usize {
        let slot_room = (b.t..=b.end())
            .map(|s| self.slots[s - 1])
            .min()
            .unwrap_or(0);
        match &self.blocks {
            Some(v) => slot_room.min(v[market.block_index(b)]),
            None => slot_room,
        }
    }

    pub fn take(&mut self, market: &Market, b: TimeBlock) {
        for s in b.t..=b.end() {
            self.slots[s - 1] -= 1;
        }
        if let Some(v) = &mut self.blocks {
            v[market.block_index(b)] -= 1;
        }
    }
}
