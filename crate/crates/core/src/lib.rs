//! Distributionally robust selection of the best system.
//!
//! Alternatives are compared by their worst-case mean over a finite set of
//! input-distribution scenarios, and the alternative with the smallest
//! worst-case mean is selected.

pub mod ambiguity;
pub mod bench;
pub mod boundary;
pub mod experiments;
pub mod queueing;
pub mod sampler;
pub mod scheduling;
pub mod selection;
pub mod stats;
