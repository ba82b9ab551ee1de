//! Greedy-policy proposal-batch selection for expensive multi-objective
//! combinatorial optimization.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is pure
//! computation: hypervolume geometry, sequence tasks, surrogates and batch
//! acquisition functions, the set-conditioned policy, greedy subset
//! selection engines, approximation-bound verification and the multi-round
//! active-learning driver. File formats, configuration and the command line
//! live in the `setgreedy` companion crate.

#![no_std]

extern crate alloc;

#[cfg(any(feature = "std", test))]
extern crate std;

pub mod acquisition;
pub mod active;
mod error;
pub mod nn;
pub mod pareto;
pub mod policy;
pub mod rng;
pub mod selection;
pub mod surrogate;
pub mod tasks;
pub mod theory;

pub use error::{Error, Result};
pub use pareto::{ObjectiveVector, ReferencePoint};
pub use tasks::{BigramTask, Candidate, SequenceSpace};
