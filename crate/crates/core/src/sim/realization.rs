//! Realized jobs and their entry favorites.

use rand::Rng;

use crate::model::Instance;

use super::market::Market;

/// Independent Bernoulli(`q_j`) draws, as sorted job indices.
pub fn sample_realization<R: Rng + ?Sized>(inst: &Instance, rng: &mut R) -> Vec<usize> {
    inst.jobs
        .iter()
        .enumerate()
        .filter(|(_, j)| j.q >= 1.0 || rng.random::<f64>() < j.q)
        .map(|(i, _)| i)
        .collect()
}

/// A realized job that chose to buy, with its entry slot `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arrival {
    pub job: usize,
    pub y: usize,
}

/// Draws each realized job's entry favorite in proportion to its
/// fractional assignment. Jobs priced out, or indifferent and not drawn,
/// do not arrive.
pub fn choose_entries<R: Rng + ?Sized>(
    market: &Market,
    realized: &[usize],
    rng: &mut R,
) -> Vec<Arrival> {
    let mut out = Vec::with_capacity(realized.len());
    for &j in realized {
        let plan = &market.plans[j];
        if plan.favorites.is_empty() {
            continue;
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = None;
        for (k, &w) in plan.entry_weights.iter().enumerate() {
            acc += w;
            if u < acc {
                pick = Some(k);
                break;
            }
        }
        if pick.is_none() && plan.strictly_affordable {
            // rounding left a sliver of mass uncovered
            pick = plan
                .entry_weights
                .iter()
                .rposition(|&w| w > 0.0)
                .or(Some(0));
        }
        if let Some(k) = pick {
            out.push(Arrival {
                job: j,
                y: plan.favorites[k],
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Job;
    use rand::SeedableRng;

    fn inst(q: f64, n: usize) -> Instance {
        let jobs = (0..n)
            .map(|i| Job::new(format!("j{i}"), 1, 1, 1, 1.0, q).unwrap())
            .collect();
        Instance::new(jobs, 1, vec![1], 0.0).unwrap()
    }

    #[test]
    fn certain_and_impossible_jobs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        assert_eq!(
            sample_realization(&inst(1.0, 5), &mut rng),
            vec![0, 1, 2, 3, 4]
        );
        assert!(sample_realization(&inst(0.0, 5), &mut rng).is_empty());
    }

    #[test]
    fn inclusion_frequency() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let instance = inst(0.5, 3);
        let trials = 100_000;
        let mut counts = [0u32; 3];
        for _ in 0..trials {
            for j in sample_realization(&instance, &mut rng) {
                counts[j] += 1;
            }
        }
        let sd = (0.25 / trials as f64).sqrt();
        for c in counts {
            assert!((c as f64 / trials as f64 - 0.5).abs() <= 3.0 * sd);
        }
    }
}
