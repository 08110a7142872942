//! Redundancy allocation for NFV service chains.
//!
//! The crate places backup NF instances and assigns backup chains to flows
//! so that each flow meets its availability requirement. Placement avoids
//! nodes that are structurally correlated with the primary chain (measured
//! through the node dependency index), and backup capacity can be reserved
//! either per flow or shared among flows whose primaries are disjoint.
//!
//! Everything here is `no_std` + `alloc`; file formats, generators and the
//! CLI live in the `redalloc` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod assignment;
pub mod error;
pub mod estimate;
pub mod ledger;
pub mod model;
pub mod montecarlo;
pub mod oracle;
pub mod pipeline;
pub mod placement;
pub mod provision;
pub mod structure;
pub mod topology;

pub use assignment::{AssignConfig, AssignmentOutcome, OrderPolicy, RejectReason, Status};
pub use error::*;
pub use estimate::{BackupDemand, ClassDemand, EstimateConfig};
pub use ledger::{Independence, ReservationLedger, ReservationMode};
pub use model::*;
pub use placement::{NodeBudget, PlacementResult};
pub use structure::{DependencyProfile, DependencyTable};
pub use topology::{Distance, HopMatrix, Network, NodeId, NodeSpec};
