//! Binomial proportion intervals and standard errors.

use serde::{Deserialize, Serialize};

/// Wilson score interval at the given normal quantile.
pub fn wilson(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// 95% Wilson interval.
pub fn wilson95(successes: u64, trials: u64) -> (f64, f64) {
    wilson(successes, trials, 1.959_963_984_540_054)
}

/// Standard error of an empirical proportion.
pub fn proportion_stderr(p: f64, trials: u64) -> f64 {
    if trials == 0 {
        return f64::INFINITY;
    }
    (p * (1.0 - p) / trials as f64).sqrt()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
}

impl Proportion {
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }

    pub fn ci95(&self) -> (f64, f64) {
        wilson95(self.successes, self.trials)
    }

    pub fn stderr(&self) -> f64 {
        proportion_stderr(self.rate(), self.trials)
    }

    pub fn add(&mut self, other: Proportion) {
        self.successes += other.successes;
        self.trials += other.trials;
    }
}
