//! Numeric tolerances and the shared price comparator.
//!
//! Every `<=`, `<` and `==` between prices goes through [`PriceCmp`]; the
//! parent definitions of the slot graph depend on the exact asymmetry
//! between the three.

use serde::{Deserialize, Serialize};

/// Tolerances used by the LP certificates, the price condition checks and price ties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Absolute tolerance for price ties.
    pub price: f64,
    /// Relative duality gap: `|primal - dual| <= gap * (1 + |primal|)`.
    pub duality_gap: f64,
    /// Complementary slackness and feasibility residual bound.
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            price: 1e-9,
            duality_gap: 1e-7,
            residual: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn price_cmp(&self) -> PriceCmp {
        PriceCmp::new(self.price)
    }
}

/// Tolerance-aware comparator for prices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceCmp {
    pub tol: f64,
}

impl Default for PriceCmp {
    fn default() -> Self {
        PriceCmp {
            tol: Tolerances::default().price,
        }
    }
}

impl PriceCmp {
    pub fn new(tol: f64) -> Self {
        PriceCmp { tol }
    }

    #[inline]
    pub fn le(&self, a: f64, b: f64) -> bool {
        a <= b + self.tol
    }

    #[inline]
    pub fn lt(&self, a: f64, b: f64) -> bool {
        a < b - self.tol
    }

    #[inline]
    pub fn eq(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.tol
    }
}
