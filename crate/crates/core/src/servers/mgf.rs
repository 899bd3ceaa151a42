//! Moment generating function checks.
//!
//! Failures do not cascade when every node satisfies
//! `E[exp(eps (A_i - B_i))] <= eps^2 / (e d_max)`.

use crate::error::{Error, Result};
use crate::stats::proportion_stderr;

use super::network::ArrivalModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgfCheck {
    /// `E[exp(eps (A - B))]`
    pub value: f64,
    /// `eps^2 / (e d_max)`
    pub threshold: f64,
    pub passed: bool,
}

pub fn mgf_threshold(eps: f64, d_max: usize) -> f64 {
    eps * eps / (std::f64::consts::E * d_max as f64)
}

pub fn check_mgf_condition(
    model: &ArrivalModel,
    capacity: usize,
    eps: f64,
    d_max: usize,
) -> Result<MgfCheck> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::Range(format!("eps = {eps} must lie in (0, 1/2]")));
    }
    if d_max == 0 {
        return Err(Error::Range("d_max must be at least 1".into()));
    }
    let value = (model.log_mgf(eps)? - eps * capacity as f64).exp();
    let threshold = mgf_threshold(eps, d_max);
    Ok(MgfCheck {
        value,
        threshold,
        passed: value <= threshold,
    })
}

/// Sample estimate of `E[exp(eps (A - B))]` with its standard error, for
/// arrival models without a closed form.
pub fn empirical_mgf(samples: &[usize], capacity: usize, eps: f64) -> (f64, f64) {
    let n = samples.len() as f64;
    let vals: Vec<f64> = samples
        .iter()
        .map(|&a| (eps * (a as f64 - capacity as f64)).exp())
        .collect();
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// `exp(-eps^2 B / 2)`, the Chernoff form for sums of Bernoullis with mean
/// at most `(1 - eps) B`.
pub fn chernoff_bound(eps: f64, capacity: f64) -> f64 {
    (-eps * eps * capacity / 2.0).exp()
}

/// Smallest `B` with `exp(-eps^2 B / 2) <= eps^2 / (e d)`.
pub fn min_capacity_for_tail(eps: f64, d: usize) -> usize {
    let need = -mgf_threshold(eps, d).ln() * 2.0 / (eps * eps);
    let mut b = need.floor().max(1.0) as usize;
    while chernoff_bound(eps, b as f64) > mgf_threshold(eps, d) {
        b += 1;
    }
    b
}

/// Closed-form block check `prod (1 - pi + pi e^eps) e^(-eps B) <= e^(-eps^2 B / 2)`
/// for independent Bernoulli arrivals with means `probs`.
pub fn block_mgf_check(probs: &[f64], capacity: f64, eps: f64) -> (f64, f64) {
    let log: f64 = probs.iter().map(|&p| (1.0 - p + p * eps.exp()).ln()).sum();
    ((log - eps * capacity).exp(), chernoff_bound(eps, capacity))
}

/// Upper confidence bound on a proportion at three standard errors.
pub fn within_three_stderr(rate: f64, bound: f64, trials: u64) -> bool {
    rate <= bound + 3.0 * proportion_stderr(rate, trials)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_zero_arrivals_pass() {
        let c = check_mgf_condition(&ArrivalModel::Deterministic { count: 0 }, 10, 0.5, 3).unwrap();
        assert!((c.value - (-5f64).exp()).abs() < 1e-15);
        assert!((c.threshold - 0.25 / (3.0 * std::f64::consts::E)).abs() < 1e-15);
        assert!(c.passed);
    }

    #[test]
    fn saturated_arrivals_fail() {
        for eps in [0.1, 0.3, 0.5] {
            for d in [1, 2, 5] {
                let c = check_mgf_condition(&ArrivalModel::Deterministic { count: 7 }, 7, eps, d)
                    .unwrap();
                assert!((c.value - 1.0).abs() < 1e-15);
                assert!(!c.passed);
            }
        }
    }

    #[test]
    fn bernoulli_sum_under_chernoff() {
        let eps = 0.25;
        let b = 40;
        let probs = vec![0.75; 40];
        let c = check_mgf_condition(
            &ArrivalModel::BernoulliSum {
                probs: probs.clone(),
            },
            b,
            eps,
            1,
        )
        .unwrap();
        assert!(c.value <= chernoff_bound(eps, b as f64));
        let (v, bound) = block_mgf_check(&probs, b as f64, eps);
        assert!((v - c.value).abs() < 1e-12 && v <= bound);
    }

    #[test]
    fn capacity_threshold() {
        assert_eq!(min_capacity_for_tail(0.25, 3), 156);
        assert!(chernoff_bound(0.25, 155.0) > mgf_threshold(0.25, 3));
    }

    #[test]
    fn empirical_mode() {
        let e = ArrivalModel::Empirical {
            samples: vec![3, 4],
        };
        assert!(matches!(
            check_mgf_condition(&e, 5, 0.5, 1),
            Err(Error::Unsupported(_))
        ));
        let (m, se) = empirical_mgf(&[5, 5, 5], 5, 0.5);
        assert_eq!(m, 1.0);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn eps_range() {
        let m = ArrivalModel::Deterministic { count: 0 };
        assert!(check_mgf_condition(&m, 1, 0.0, 1).is_err());
        assert!(check_mgf_condition(&m, 1, 0.6, 1).is_err());
    }
}
