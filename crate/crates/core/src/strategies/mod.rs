//! Toppling procedures from slow-phase arguments, run as concrete
//! stabilization strategies.

mod idla;
mod loop_return;
mod ordering;
mod spread;
mod staged;

pub use idla::{idla_stabilize, idla_stabilize_with};
pub use loop_return::{loop_return_procedure, LoopRun};
pub use ordering::{greedy_order, product_bound_check, OrderedSet, ProductBound};
pub use spread::{spread_to_singles, SpreadOutcome};
pub use staged::{interior_region, staged_torus_procedure, StageReport, StagedRun, StepRecord};
