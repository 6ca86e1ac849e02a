// SPDX-License-Identifier: MIT OR Apache-2.0

pub mod cli;
pub mod constraint;
pub mod data;
pub mod error;
pub mod oracle;
pub mod parallel;
pub mod penalized;
pub mod piecewise;
pub mod segmentation;
pub mod segneigh;
pub mod stats;
pub mod storage;
pub mod synthetic;

pub use constraint::{ChangeConstraint, ChangeKind, ConstraintSchedule};
pub use data::WeightedSequence;
pub use error::{Error, Result};
pub use parallel::Execution;
pub use penalized::{
    gfpop_isotonic, gfpop_solve, gfpop_solve_batch, gfpop_solve_with, preset_graph, PenalizedSolution, Preset, StateGraph,
};
pub use piecewise::LossFamily;
pub use segmentation::Segmentation;
pub use segneigh::{
    decode, gpdpa_fill, gpdpa_solve, gpdpa_solve_batch, gpdpa_solve_with, pruning_stats, CostTable, SnSolution,
};
pub use stats::PruningStats;
pub use storage::Storage;
