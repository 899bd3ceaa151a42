//! Allocation simulation: realizations, adversarial orders, the
//! asynchronous allocation process and the checks run on every trial.

pub mod allocation;
pub mod checks;
pub mod experiment;
pub mod generate;
pub mod market;
pub mod opt;
pub mod order;
pub mod realization;

pub use allocation::{run_async_allocation, JobOutcome, TrialResult};
pub use checks::{check_trial, TrialChecks};
pub use experiment::{run_experiment, AdversaryReport, ExperimentConfig, ExperimentReport};
pub use generate::{generate_periodic, GeneratorConfig};
pub use market::{JobPlan, Market, Residual};
pub use opt::{offline_opt, OfflineOpt, GENERAL_OPT_CAP};
pub use order::{order_jobs, permutations, OrderPolicy, EXHAUSTIVE_CAP};
pub use realization::{choose_entries, sample_realization, Arrival};
