//! Time-of-use pricing for temporal resources.
//!
//! The crate prices slots from an expected-demand linear program, simulates
//! the greedy allocation process that those prices induce, and provides the
//! forwarding-network machinery (min-work decompositions, tree reductions,
//! moment generating function bounds, decorrelation checks) used to reason
//! about overload cascades.
//!
//! Module map:
//!
//! - [`model`]: jobs, instances, prices, favorite slots, preference orders.
//! - [`lp`]: a dense simplex solver that returns dual certificates.
//! - [`pricing`]: the expected-case LP, price extraction, the periodic
//!   compact LP and the fractional-assignment checks.
//! - [`servers`]: the abstract network-of-servers setting.
//! - [`temporal`]: slot graphs, ancestor chains, path short-cutting and
//!   capacity partitioning.
//! - [`sim`]: realizations, adversarial orders, the asynchronous allocation
//!   process, offline optimum and Monte-Carlo experiments.

pub mod error;
pub mod io;
pub mod lp;
pub mod model;
pub mod pricing;
pub mod seeds;
pub mod servers;
pub mod sim;
pub mod stats;
pub mod suite;
pub mod temporal;
pub mod tolerance;

pub use error::{Error, Result};
pub use model::{Instance, Job, PaymentRule, PreferenceOrder, PriceSchedule, TimeBlock};
pub use tolerance::{PriceCmp, Tolerances};
