//! File formats, seeded generators, parallel runners, experiments and the
//! command-line front end for `redalloc-core`.

pub mod analysis;
pub mod config;
pub mod error;
pub mod experiment;
pub mod flows;
pub mod format;
pub mod generate;
pub mod par;
pub mod plan;
pub mod tiny;

pub use config::{Scenario, ScenarioConfig};
pub use error::HarnessError;
pub use plan::AllocationPlan;
