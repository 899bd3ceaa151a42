//! Networks of servers with adversarial forwarding.

pub mod decorrelation;
pub mod mgf;
pub mod network;
pub mod paths;
pub mod search;
pub mod simulate;
pub mod trees;

pub use mgf::{check_mgf_condition, min_capacity_for_tail, MgfCheck};
pub use network::{ArrivalModel, Multigraph, PathCollection, ServerNetwork};
pub use paths::{decompose_flow, remove_cycles, shortcut_path, validate_min_work};
pub use search::{exhaustive_first_node_failures, exhaustive_overload};
pub use simulate::{network_simulate, run_network_experiment, NetworkPolicy, NetworkTrial};
pub use trees::{
    build_tree_of_trees, enumerate_trees, reduce_to_tree, simulate_tree_process, RootedTree,
    TreeOfTrees, TreeProcess, TreeScope,
};
