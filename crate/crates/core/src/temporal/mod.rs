//! Slot graphs, ancestor chains, path short-cutting, block graphs and
//! capacity partitioning.

pub mod graph;
pub mod layered;
pub mod partition;
pub mod shortcut;

pub use graph::{EdgeKind, SlotGraph};
pub use layered::LayeredGraph;
pub use partition::{partition_capacities, BlockCapacities};
pub use shortcut::{
    path_in_graph, shortcut_layered_path, shortcut_temporal_path, shortcut_with_mask, split_path,
};
