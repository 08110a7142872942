//! Rayon-backed versions of the embarrassingly parallel kernels. Results
//! equal the sequential core functions bit for bit.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use redalloc_core::montecarlo::{simulate_range, SimConfig, SimPlan, SimReport, Tally};
use redalloc_core::oracle::{Oracle, OracleSolution};
use redalloc_core::structure::dependency_column;
use redalloc_core::topology::hop_matrix;
use redalloc_core::{DependencyProfile, DependencyTable, Network, NodeId, OracleError, StructureError};
use serde::{Deserialize, Serialize};

/// Replications per work item.
const CHUNK: u64 = 1 << 14;

pub fn dependency_table(net: &Network) -> DependencyTable {
    let full = hop_matrix(net);
    let columns = (0..net.len() as u32)
        .into_par_iter()
        .map(|n| dependency_column(net, &full, NodeId(n)))
        .collect();
    DependencyTable::from_columns(net.len(), columns)
}

pub fn dependency_profile(net: &Network, threshold: f64, depth: u32) -> Result<DependencyProfile, StructureError> {
    DependencyProfile::from_table(dependency_table(net), threshold, depth)
}

pub fn tally(plan: &SimPlan, config: &SimConfig) -> Tally {
    let total = config.replications.max(1);
    let chunks = total.div_ceil(CHUNK);
    let n = plan.flows().len();
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let end = ((c + 1) * CHUNK).min(total);
            simulate_range(plan, config, c * CHUNK..end)
        })
        .reduce(|| Tally::empty(n, config.contention_aware), Tally::merge)
}

pub fn simulate(plan: &SimPlan, config: &SimConfig) -> SimReport {
    SimReport::from_tally(plan, config, &tally(plan, config))
}

/// Runs both plans on the same replication streams.
pub fn compare_placements(a: &SimPlan, b: &SimPlan, config: &SimConfig) -> (SimReport, SimReport) {
    rayon::join(|| simulate(a, config), || simulate(b, config))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum OracleRun {
    Solved(OracleSolution),
    /// Out of time; no placement with fewer than `lower_bound` backups works.
    TimedOut { lower_bound: u32 },
}

/// Smallest feasible placement, branches of each size searched in
/// parallel. The witness is the first feasible branch in order, as in the
/// sequential search.
pub fn solve_oracle(oracle: &Oracle<'_>, time_budget: Option<Duration>) -> Result<OracleRun, OracleError> {
    let start = Instant::now();
    for k in 0..=oracle.k_cap() {
        if time_budget.is_some_and(|t| start.elapsed() > t) {
            return Ok(OracleRun::TimedOut { lower_bound: k });
        }
        let found = (0..oracle.branches())
            .into_par_iter()
            .map(|b| oracle.solve_branch(k, b))
            .find_first(Option::is_some)
            .flatten();
        if let Some(s) = found {
            return Ok(OracleRun::Solved(s));
        }
    }
    Err(OracleError::Infeasible(oracle.k_cap()))
}
