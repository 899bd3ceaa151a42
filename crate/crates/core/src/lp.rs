//! Dense primal simplex for `max c·x  s.t.  A x <= b, x >= 0` with `b >= 0`.
//!
//! Because `b >= 0` the all-slack basis is feasible, so no phase one is
//! needed. Entering variables follow Dantzig's rule until a run of
//! degenerate pivots, after which Bland's rule takes over to rule out
//! cycling. Once optimal, the basic solution and the row duals are
//! recomputed from an LU factorization of the final basis.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLp {
    /// Row-major constraint matrix, `m` rows of `n` entries.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    /// One dual value per constraint row.
    pub y: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

const PIVOT_TOL: f64 = 1e-11;
const DEGENERATE_STREAK: usize = 64;
const MAX_ITERATIONS: usize = 1_000_000;

impl DenseLp {
    pub fn rows(&self) -> usize {
        self.b.len()
    }

    pub fn cols(&self) -> usize {
        self.c.len()
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.cols();
        if self.a.len() != self.rows() || self.a.iter().any(|r| r.len() != n) {
            return Err(Error::Invalid("constraint matrix shape mismatch".into()));
        }
        if self.b.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::Invalid(
                "right-hand side must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }

    pub fn solve(&self) -> Result<LpSolution> {
        self.check_shape()?;
        let m = self.rows();
        let n = self.cols();
        let width = n + m + 1;
        let rhs = n + m;

        let mut tab = vec![0.0; m * width];
        for i in 0..m {
            let row = &mut tab[i * width..(i + 1) * width];
            row[..n].copy_from_slice(&self.a[i]);
            row[n + i] = 1.0;
            row[rhs] = self.b[i];
        }
        // reduced costs; the objective value accumulates in the last entry
        let mut cost = vec![0.0; width];
        cost[..n].copy_from_slice(&self.c);
        let mut basis: Vec<usize> = (n..n + m).collect();

        let mut iterations = 0;
        let mut degenerate_run = 0;
        let mut bland = false;
        loop {
            let entering = if bland {
                (0..n + m).find(|&j| cost[j] > PIVOT_TOL)
            } else {
                let mut best = None;
                let mut best_val = PIVOT_TOL;
                for (j, &r) in cost[..n + m].iter().enumerate() {
                    if r > best_val {
                        best_val = r;
                        best = Some(j);
                    }
                }
                best
            };
            let Some(e) = entering else { break };

            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..m {
                let aij = tab[i * width + e];
                if aij > PIVOT_TOL {
                    let ratio = tab[i * width + rhs] / aij;
                    let better = match leave {
                        None => true,
                        Some(li) => {
                            ratio < best_ratio - 1e-12
                                || (ratio <= best_ratio + 1e-12 && basis[i] < basis[li])
                        }
                    };
                    if better {
                        best_ratio = ratio;
                        leave = Some(i);
                    }
                }
            }
            let Some(r) = leave else {
                return Err(Error::Numerical {
                    message: format!("objective unbounded along column {e}"),
                    worst_residual: f64::INFINITY,
                });
            };

            if best_ratio <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > DEGENERATE_STREAK {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }

            pivot(&mut tab, &mut cost, width, m, r, e);
            basis[r] = e;
            iterations += 1;
            if iterations > MAX_ITERATIONS {
                return Err(Error::Numerical {
                    message: "simplex iteration limit reached".into(),
                    worst_residual: f64::NAN,
                });
            }
        }

        let (x, y) = match self.refine(&basis) {
            Some(refined) => refined,
            None => {
                let mut x = vec![0.0; n];
                for (i, &bv) in basis.iter().enumerate() {
                    if bv < n {
                        x[bv] = tab[i * width + rhs];
                    }
                }
                let y = (0..m).map(|i| -cost[n + i]).collect();
                (x, y)
            }
        };
        let objective = x.iter().zip(&self.c).map(|(a, b)| a * b).sum();
        Ok(LpSolution {
            x,
            y,
            objective,
            iterations,
        })
    }

    /// Recomputes `x_B = B^-1 b` and `y = B^-T c_B` for the final basis.
    fn refine(&self, basis: &[usize]) -> Option<(Vec<f64>, Vec<f64>)> {
        let m = self.rows();
        let n = self.cols();
        if m == 0 {
            return Some((vec![0.0; n], Vec::new()));
        }
        let bmat = DMatrix::from_fn(m, m, |i, k| {
            let col = basis[k];
            if col < n {
                self.a[i][col]
            } else if col - n == i {
                1.0
            } else {
                0.0
            }
        });
        let lu = bmat.clone().lu();
        let xb = lu.solve(&DVector::from_column_slice(&self.b))?;
        let cb = DVector::from_iterator(
            m,
            basis
                .iter()
                .map(|&col| if col < n { self.c[col] } else { 0.0 }),
        );
        let y = bmat.transpose().lu().solve(&cb)?;
        let mut x = vec![0.0; n];
        for (k, &col) in basis.iter().enumerate() {
            if col < n {
                x[col] = xb[k].max(0.0);
            }
        }
        Some((x, y.iter().map(|v| v.max(0.0)).collect()))
    }
}

fn pivot(tab: &mut [f64], cost: &mut [f64], width: usize, m: usize, r: usize, e: usize) {
    let piv = tab[r * width + e];
    for v in &mut tab[r * width..(r + 1) * width] {
        *v /= piv;
    }
    let pivot_row: Vec<f64> = tab[r * width..(r + 1) * width].to_vec();
    for i in 0..m {
        if i == r {
            continue;
        }
        let f = tab[i * width + e];
        if f != 0.0 {
            let row = &mut tab[i * width..(i + 1) * width];
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            row[e] = 0.0;
        }
    }
    let f = cost[e];
    if f != 0.0 {
        for (v, p) in cost.iter_mut().zip(&pivot_row) {
            *v -= f * p;
        }
        cost[e] = 0.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force optimum over all basic solutions of the slack form.
    fn vertex_oracle(lp: &DenseLp) -> f64 {
        let m = lp.rows();
        let n = lp.cols();
        let total = n + m;
        let mut best = 0.0f64;
        let mut idx: Vec<usize> = (0..m).collect();
        loop {
            let bmat = DMatrix::from_fn(m, m, |i, k| {
                let col = idx[k];
                if col < n {
                    lp.a[i][col]
                } else if col - n == i {
                    1.0
                } else {
                    0.0
                }
            });
            if let Some(xb) = bmat.lu().solve(&DVector::from_column_slice(&lp.b)) {
                if xb.iter().all(|v| *v >= -1e-9) {
                    let mut x = vec![0.0; n];
                    for (k, &col) in idx.iter().enumerate() {
                        if col < n {
                            x[col] = xb[k];
                        }
                    }
                    let feasible = (0..m).all(|i| {
                        lp.a[i].iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() <= lp.b[i] + 1e-9
                    });
                    if feasible {
                        let obj: f64 = x.iter().zip(&lp.c).map(|(a, b)| a * b).sum();
                        best = best.max(obj);
                    }
                }
            }
            // next combination
            let mut i = m;
            loop {
                if i == 0 {
                    return best;
                }
                i -= 1;
                if idx[i] < total - m + i {
                    idx[i] += 1;
                    for k in i + 1..m {
                        idx[k] = idx[k - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    #[test]
    fn three_job_single_slot() {
        // capacity 2, three unit jobs valued 5, 3, 1
        let lp = DenseLp {
            a: vec![
                vec![1.0, 1.0, 1.0],
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ],
            b: vec![2.0, 1.0, 1.0, 1.0],
            c: vec![5.0, 3.0, 1.0],
        };
        let sol = lp.solve().unwrap();
        assert!((sol.objective - 8.0).abs() < 1e-12);
        assert!((sol.x[0] - 1.0).abs() < 1e-12 && (sol.x[1] - 1.0).abs() < 1e-12);
        let dual: f64 = sol.y.iter().zip(&lp.b).map(|(a, b)| a * b).sum();
        assert!((dual - 8.0).abs() < 1e-9);
        assert!(sol.y[0] >= 1.0 - 1e-9 && sol.y[0] <= 3.0 + 1e-9);
    }

    #[test]
    fn empty_problem() {
        let lp = DenseLp {
            a: vec![vec![]; 2],
            b: vec![1.0, 2.0],
            c: vec![],
        };
        let sol = lp.solve().unwrap();
        assert_eq!(sol.objective, 0.0);
        assert_eq!(sol.y, vec![0.0, 0.0]);
    }

    #[test]
    fn rejects_negative_rhs() {
        let lp = DenseLp {
            a: vec![vec![1.0]],
            b: vec![-1.0],
            c: vec![1.0],
        };
        assert!(lp.solve().is_err());
    }

    #[test]
    fn matches_vertex_enumeration_on_random_lps() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..150 {
            let m = rng.random_range(1..=4);
            let n = rng.random_range(1..=4);
            let a: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..n).map(|_| rng.random_range(0..4) as f64).collect())
                .collect();
            let b: Vec<f64> = (0..m).map(|_| rng.random_range(0..5) as f64).collect();
            let c: Vec<f64> = (0..n).map(|_| rng.random_range(-2..5) as f64).collect();
            // bound every column so the problem stays bounded
            let mut a = a;
            let mut b = b;
            for j in 0..n {
                let mut row = vec![0.0; n];
                row[j] = 1.0;
                a.push(row);
                b.push(3.0);
            }
            let lp = DenseLp { a, b, c };
            let sol = lp.solve().unwrap();
            let oracle = vertex_oracle(&lp);
            assert!(
                (sol.objective - oracle).abs() < 1e-7,
                "{} vs {}",
                sol.objective,
                oracle
            );
            let dual: f64 = sol.y.iter().zip(&lp.b).map(|(a, b)| a * b).sum();
            assert!((dual - sol.objective).abs() < 1e-7);
        }
    }
}
