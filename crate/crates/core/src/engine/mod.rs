//! Configurations, instruction fields, topplings and the abelian
//! stabilization engine.

mod config;
mod field;
mod stabilize;
mod state;

use serde::{Deserialize, Serialize};

pub use config::{Configuration, Odometer, SiteState};
pub use field::{couple_insert_sleeps, Instruction, InstructionField, Law, Stacks};
pub use stabilize::{
    stabilize, stabilize_with, Fifo, LowestIndex, Policy, Scheduler, StabilizeOutcome, Status, UniformRandom,
    DEFAULT_CAP,
};
pub use state::{Arw, Toppled};

/// Which site states a toppling accepts: legal needs `η(x) ≥ 1`,
/// acceptable only `η(x) ≥ s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToppleMode {
    Legal,
    Acceptable,
}
