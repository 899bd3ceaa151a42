//! The asynchronous allocation process: each arriving job takes the first
//! block in its preference order that still has room.

use crate::model::TimeBlock;

use super::market::{Market, Residual};
use super::realization::Arrival;

#[derive(Debug, Clone, PartialEq)]
pub struct JobOutcome {
    pub job: usize,
    pub y: usize,
    pub served: Option<TimeBlock>,
    pub payment: f64,
    /// Served at a favorite start for the favorite price.
    pub at_favorite: bool,
    /// Served at its entry block `(y, l_j)`.
    pub first_choice: bool,
    /// Blocks visited, ending at the serving block or the last one tried.
    pub path: Vec<TimeBlock>,
}

impl JobOutcome {
    pub fn gave_up(&self) -> bool {
        self.served.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub outcomes: Vec<JobOutcome>,
    /// Jobs occupying each slot.
    pub slot_usage: Vec<usize>,
    /// Jobs admitted per block index.
    pub block_usage: Vec<usize>,
    pub welfare: f64,
    pub revenue: f64,
}

impl TrialResult {
    /// Strictly affordable arrivals and how many were served at a favorite.
    pub fn acceptance(&self, market: &Market) -> (u64, u64) {
        let mut eligible = 0;
        let mut ok = 0;
        for o in &self.outcomes {
            if market.plans[o.job].strictly_affordable {
                eligible += 1;
                ok += u64::from(o.at_favorite);
            }
        }
        (eligible, ok)
    }

    pub fn first_choice(&self, market: &Market) -> (u64, u64) {
        let mut eligible = 0;
        let mut ok = 0;
        for o in &self.outcomes {
            if market.plans[o.job].strictly_affordable {
                eligible += 1;
                ok += u64::from(o.first_choice);
            }
        }
        (eligible, ok)
    }
}

/// Serves `arrivals` in the given order.
pub fn run_async_allocation(market: &Market, arrivals: &[Arrival], order: &[usize]) -> TrialResult {
    let mut residual = Residual::new(market);
    let mut block_usage = vec![0; market.block_count()];
    let mut outcomes = Vec::with_capacity(order.len());
    let mut welfare = 0.0;
    let mut revenue = 0.0;
    for &a in order {
        let Arrival { job, y } = arrivals[a];
        let outcome = serve(market, &mut residual, &mut block_usage, job, y);
        if outcome.served.is_some() {
            welfare += market.instance.jobs[job].v;
            revenue += outcome.payment;
        }
        outcomes.push(outcome);
    }
    let slot_usage = market
        .instance
        .capacities
        .iter()
        .zip(&residual.slots)
        .map(|(b, r)| b - r)
        .collect();
    TrialResult {
        outcomes,
        slot_usage,
        block_usage,
        welfare,
        revenue,
    }
}

pub(crate) fn serve(
    market: &Market,
    residual: &mut Residual,
    block_usage: &mut [usize],
    job: usize,
    y: usize,
) -> JobOutcome {
    let plan = &market.plans[job];
    let info = &market.instance.jobs[job];
    let order = plan.order_for(y);
    let mut path = Vec::new();
    let mut served = None;
    for &b in order {
        path.push(b);
        if residual.room(market, b) > 0 {
            residual.take(market, b);
            block_usage[market.block_index(b)] += 1;
            served = Some(b);
            break;
        }
    }
    let payment = match served {
        Some(b) => market
            .rule
            .charge(&market.prices, info, b)
            .expect("block fits horizon"),
        None => 0.0,
    };
    let at_favorite = served.is_some_and(|b| {
        plan.favorites.contains(&b.t)
            && plan
                .favorite_price
                .is_some_and(|p| market.cmp.eq(payment, p))
    });
    JobOutcome {
        job,
        y,
        served,
        payment,
        at_favorite,
        first_choice: served == Some(TimeBlock::new(y, info.l)),
        path,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Instance, Job, PaymentRule, PriceSchedule};
    use crate::pricing::FractionalAssignment;
    use crate::sim::check_trial;
    use crate::tolerance::PriceCmp;

    fn market(jobs: Vec<Job>, prices: Vec<f64>, caps: Vec<usize>) -> Market {
        let h = prices.len();
        let n = jobs.len();
        let inst = Instance::new(jobs, h, caps, 0.0).unwrap();
        Market::new(
            &inst,
            &PriceSchedule::new(prices),
            &FractionalAssignment::zeros(n),
            PaymentRule::AllocatedBlock,
            false,
            PriceCmp::default(),
        )
        .unwrap()
    }

    #[test]
    fn bad_order_serves_the_low_value_job() {
        let jobs = vec![
            Job::new("j1", 1, 1, 1, 5.0, 1.0).unwrap(),
            Job::new("j2", 1, 1, 1, 3.0, 1.0).unwrap(),
        ];
        let m = market(jobs, vec![0.0], vec![1]);
        let arrivals = [Arrival { job: 0, y: 1 }, Arrival { job: 1, y: 1 }];
        let r = run_async_allocation(&m, &arrivals, &[1, 0]);
        assert_eq!(r.outcomes[0].served, Some(TimeBlock::new(1, 1)));
        assert!(r.outcomes[1].gave_up());
        assert_eq!(r.welfare, 3.0);
        assert!(check_trial(&m, &r).ok());
    }

    #[test]
    fn nobody_arrives() {
        let m = market(
            vec![Job::new("a", 1, 1, 1, 1.0, 1.0).unwrap()],
            vec![0.0],
            vec![1],
        );
        let r = run_async_allocation(&m, &[], &[]);
        assert!(r.outcomes.is_empty());
        assert_eq!(r.welfare, 0.0);
        assert_eq!(r.slot_usage, vec![0]);
    }

    #[test]
    fn crowd_at_the_cheap_slot_spills_over() {
        // everyone enters at slot 2, then takes the price-2 slots in time order
        let jobs: Vec<Job> = (0..3)
            .map(|i| Job::new(format!("j{i}"), 1, 3, 1, 9.0, 1.0).unwrap())
            .collect();
        let m = market(jobs, vec![2.0, 1.0, 2.0], vec![1, 1, 1]);
        let arrivals: Vec<Arrival> = (0..3).map(|job| Arrival { job, y: 2 }).collect();
        let r = run_async_allocation(&m, &arrivals, &[0, 1, 2]);
        let served: Vec<usize> = r.outcomes.iter().map(|o| o.served.unwrap().t).collect();
        assert_eq!(served, vec![2, 1, 3]);
        assert!(r.outcomes[0].first_choice && r.outcomes[0].at_favorite);
        assert!(!r.outcomes[1].at_favorite);
        assert_eq!(r.revenue, 5.0);
        assert_eq!(r.outcomes[2].path.len(), 3);
        let checks = check_trial(&m, &r);
        assert!(checks.ok(), "{:?}", checks.violations);
        assert!(checks.network_checked);
    }

    #[test]
    fn over_capacity_is_flagged() {
        let m = market(
            vec![Job::new("a", 1, 1, 1, 1.0, 1.0).unwrap()],
            vec![0.0],
            vec![1],
        );
        let mut r = run_async_allocation(&m, &[Arrival { job: 0, y: 1 }], &[0]);
        r.slot_usage[0] = 2;
        assert!(!check_trial(&m, &r).ok());
    }
}
