//! Stochastic dominance of the max over independent copies.
//!
//! For non-decreasing `g_1..g_k`, `max g_l(Y_l)` with independent copies
//! `Y_l ~ X` dominates `max g_l(X)`. With finite support both CDFs are
//! available in closed form:
//!
//! - independent: `P[max <= a] = prod_l F_l(a)`,
//! - shared: `P[max <= a] = min_l F_l(a)`,
//!
//! where `F_l(a) = P[g_l(X) <= a]`.

use rand::Rng;

use crate::error::{Error, Result};

/// A finite distribution on increasing support points.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDist {
    pub support: Vec<f64>,
    pub probs: Vec<f64>,
}

impl FiniteDist {
    pub fn new(support: Vec<f64>, probs: Vec<f64>) -> Result<FiniteDist> {
        if support.len() != probs.len() || support.is_empty() {
            return Err(Error::Invalid(
                "support and probabilities differ in length".into(),
            ));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("support must be strictly increasing".into()));
        }
        if probs.iter().any(|&p| p < 0.0) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid(
                "probabilities must be a distribution".into(),
            ));
        }
        Ok(FiniteDist { support, probs })
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Index of a draw.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.len() - 1
    }
}

/// `g` as its values on the support points.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTable(pub Vec<f64>);

impl StepTable {
    pub fn check_monotone(&self) -> Result<()> {
        if self.0.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Contract(format!(
                "table {:?} is not non-decreasing",
                self.0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdfComparison {
    pub grid: Vec<f64>,
    pub independent: Vec<f64>,
    pub shared: Vec<f64>,
}

impl CdfComparison {
    /// Largest `independent - shared` over the grid.
    pub fn worst_excess(&self) -> f64 {
        self.independent
            .iter()
            .zip(&self.shared)
            .map(|(a, b)| a - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn dominates(&self, tol: f64) -> bool {
        self.grid.is_empty() || self.worst_excess() <= tol
    }
}

fn check_tables(dist: &FiniteDist, gs: &[StepTable]) -> Result<()> {
    if gs.is_empty() {
        return Err(Error::Contract("need at least one function".into()));
    }
    for g in gs {
        if g.0.len() != dist.len() {
            return Err(Error::Contract(
                "table length differs from the support".into(),
            ));
        }
        g.check_monotone()?;
    }
    Ok(())
}

fn value_grid(gs: &[StepTable]) -> Vec<f64> {
    let mut grid: Vec<f64> = gs.iter().flat_map(|g| g.0.iter().copied()).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

fn marginal_cdf(dist: &FiniteDist, g: &StepTable, a: f64) -> f64 {
    g.0.iter()
        .zip(&dist.probs)
        .filter(|(v, _)| **v <= a)
        .map(|(_, p)| p)
        .sum()
}

/// Both CDFs from the closed forms.
pub fn exact_cdfs(dist: &FiniteDist, gs: &[StepTable]) -> Result<CdfComparison> {
    check_tables(dist, gs)?;
    let grid = value_grid(gs);
    let mut independent = Vec::with_capacity(grid.len());
    let mut shared = Vec::with_capacity(grid.len());
    for &a in &grid {
        let f: Vec<f64> = gs.iter().map(|g| marginal_cdf(dist, g, a)).collect();
        independent.push(f.iter().product());
        shared.push(f.iter().copied().fold(f64::INFINITY, f64::min));
    }
    Ok(CdfComparison {
        grid,
        independent,
        shared,
    })
}

/// Both CDFs by enumerating every outcome (`|support|^k` for the
/// independent copies).
pub fn enumerated_cdfs(dist: &FiniteDist, gs: &[StepTable]) -> Result<CdfComparison> {
    check_tables(dist, gs)?;
    let grid = value_grid(gs);
    let k = gs.len();
    let m = dist.len();
    let outcomes = m
        .checked_pow(k as u32)
        .filter(|&c| c <= 1 << 20)
        .ok_or_else(|| Error::Cap(format!("{m}^{k} joint outcomes")))?;
    let mut independent = vec![0.0; grid.len()];
    let mut idx = vec![0usize; k];
    for _ in 0..outcomes {
        let p: f64 = idx.iter().map(|&i| dist.probs[i]).product();
        let mx = (0..k)
            .map(|l| gs[l].0[idx[l]])
            .fold(f64::NEG_INFINITY, f64::max);
        for (c, &a) in independent.iter_mut().zip(&grid) {
            if mx <= a {
                *c += p;
            }
        }
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < m {
                break;
            }
            *slot = 0;
        }
    }
    let mut shared = vec![0.0; grid.len()];
    for x in 0..m {
        let mx = gs.iter().map(|g| g.0[x]).fold(f64::NEG_INFINITY, f64::max);
        for (c, &a) in shared.iter_mut().zip(&grid) {
            if mx <= a {
                *c += dist.probs[x];
            }
        }
    }
    Ok(CdfComparison {
        grid,
        independent,
        shared,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatisticalVerdict {
    pub comparison: CdfComparison,
    pub trials: u64,
    /// `independent <= shared + 3 stderr` at every grid point.
    pub consistent: bool,
}

/// Monte-Carlo comparison on the value grid with a three standard error band.
pub fn statistical_test<R: Rng + ?Sized>(
    dist: &FiniteDist,
    gs: &[StepTable],
    trials: u64,
    rng: &mut R,
) -> Result<StatisticalVerdict> {
    check_tables(dist, gs)?;
    if trials < 10_000 {
        return Err(Error::Contract(format!(
            "{trials} trials; at least 10^4 required"
        )));
    }
    let grid = value_grid(gs);
    let mut ind = vec![0u64; grid.len()];
    let mut sh = vec![0u64; grid.len()];
    for _ in 0..trials {
        let mi = gs
            .iter()
            .map(|g| g.0[dist.sample_index(rng)])
            .fold(f64::NEG_INFINITY, f64::max);
        let x = dist.sample_index(rng);
        let ms = gs.iter().map(|g| g.0[x]).fold(f64::NEG_INFINITY, f64::max);
        for (k, &a) in grid.iter().enumerate() {
            ind[k] += u64::from(mi <= a);
            sh[k] += u64::from(ms <= a);
        }
    }
    let n = trials as f64;
    let independent: Vec<f64> = ind.iter().map(|&c| c as f64 / n).collect();
    let shared: Vec<f64> = sh.iter().map(|&c| c as f64 / n).collect();
    let consistent = independent.iter().zip(&shared).all(|(&a, &b)| {
        let se = (a * (1.0 - a) / n + b * (1.0 - b) / n).sqrt();
        a <= b + 3.0 * se
    });
    Ok(StatisticalVerdict {
        comparison: CdfComparison {
            grid,
            independent,
            shared,
        },
        trials,
        consistent,
    })
}

/// The multivariate form: `h_k` on a product of independent finite
/// variables, and maps `P_i : [N] -> [n_i]` choosing which independent copy
/// of variable `i` function `k` reads.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiCase {
    pub vars: Vec<FiniteDist>,
    /// `tables[k]` holds `h_k` over the joint support in mixed radix,
    /// first variable fastest.
    pub tables: Vec<Vec<f64>>,
    /// `copy_of[i][k]` is `P_i(k)`.
    pub copy_of: Vec<Vec<usize>>,
}

impl MultiCase {
    fn index(&self, xs: &[usize]) -> usize {
        let mut idx = 0;
        let mut radix = 1;
        for (i, &x) in xs.iter().enumerate() {
            idx += x * radix;
            radix *= self.vars[i].len();
        }
        idx
    }

    fn joint_size(&self) -> usize {
        self.vars.iter().map(FiniteDist::len).product()
    }

    pub fn validate(&self) -> Result<()> {
        let size = self.joint_size();
        if self.copy_of.len() != self.vars.len() {
            return Err(Error::Contract("one copy map per variable".into()));
        }
        for t in &self.tables {
            if t.len() != size {
                return Err(Error::Contract(
                    "table does not cover the joint support".into(),
                ));
            }
            // non-decreasing in each coordinate
            for flat in 0..size {
                let xs = self.unflatten(flat);
                for i in 0..xs.len() {
                    if xs[i] + 1 < self.vars[i].len() {
                        let mut ys = xs.clone();
                        ys[i] += 1;
                        if t[self.index(&ys)] < t[flat] {
                            return Err(Error::Contract(format!(
                                "table decreases in variable {i}"
                            )));
                        }
                    }
                }
            }
        }
        for m in &self.copy_of {
            if m.len() != self.tables.len() {
                return Err(Error::Contract("copy map must cover every function".into()));
            }
        }
        Ok(())
    }

    fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        self.vars
            .iter()
            .map(|v| {
                let x = flat % v.len();
                flat /= v.len();
                x
            })
            .collect()
    }

    /// Exact CDFs of `max_k h_k` with shared and with per-copy arrivals.
    pub fn exact_cdfs(&self) -> Result<CdfComparison> {
        self.validate()?;
        let mut grid: Vec<f64> = self.tables.iter().flatten().copied().collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup();

        let mut shared = vec![0.0; grid.len()];
        for flat in 0..self.joint_size() {
            let xs = self.unflatten(flat);
            let p: f64 = xs
                .iter()
                .enumerate()
                .map(|(i, &x)| self.vars[i].probs[x])
                .product();
            let mx = self
                .tables
                .iter()
                .map(|t| t[flat])
                .fold(f64::NEG_INFINITY, f64::max);
            for (c, &a) in shared.iter_mut().zip(&grid) {
                if mx <= a {
                    *c += p;
                }
            }
        }

        // one independent draw per (variable, copy)
        let copies: Vec<usize> = self
            .copy_of
            .iter()
            .map(|m| m.iter().max().map_or(0, |&c| c + 1))
            .collect();
        let mut slots: Vec<(usize, usize)> = Vec::new();
        for (i, &c) in copies.iter().enumerate() {
            for copy in 0..c {
                slots.push((i, copy));
            }
        }
        let total: usize = slots.iter().map(|&(i, _)| self.vars[i].len()).product();
        if total > 1 << 22 {
            return Err(Error::Cap(format!(
                "{total} joint outcomes over independent copies"
            )));
        }
        let mut independent = vec![0.0; grid.len()];
        let mut draw = vec![0usize; slots.len()];
        for _ in 0..total {
            let p: f64 = slots
                .iter()
                .zip(&draw)
                .map(|(&(i, _), &x)| self.vars[i].probs[x])
                .product();
            let mut mx = f64::NEG_INFINITY;
            for (k, t) in self.tables.iter().enumerate() {
                let xs: Vec<usize> = (0..self.vars.len())
                    .map(|i| {
                        let s = slots
                            .iter()
                            .position(|&sl| sl == (i, self.copy_of[i][k]))
                            .unwrap();
                        draw[s]
                    })
                    .collect();
                mx = mx.max(t[self.index(&xs)]);
            }
            for (c, &a) in independent.iter_mut().zip(&grid) {
                if mx <= a {
                    *c += p;
                }
            }
            for (s, x) in draw.iter_mut().enumerate() {
                *x += 1;
                if *x < self.vars[slots[s].0].len() {
                    break;
                }
                *x = 0;
            }
        }
        Ok(CdfComparison {
            grid,
            independent,
            shared,
        })
    }
}
