//! Activated random walks on finite tori and boxes.
//!
//! The crate is built around the site-wise representation: every site
//! carries a stack of sleep/jump instructions, read off a pure function of
//! `(seed, site, index)` ([`engine::InstructionField`]). On top of the
//! engine sit the toppling procedures used in slow-phase arguments
//! ([`strategies`]), the reduced birth-death chain and its hitting
//! probabilities ([`chain1d`]), the closed-form constants ([`bounds`]) and
//! the Monte Carlo campaigns ([`experiments`]).

pub mod bounds;
pub mod chain1d;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod rng;
pub mod strategies;

pub use error::{ArwError, Result};
