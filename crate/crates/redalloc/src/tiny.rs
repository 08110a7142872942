//! Tiny scenarios: exhaustive oracle runs and heuristic-vs-oracle
//! comparisons, plus the generator behind the shipped fixtures.

use std::path::Path;
use std::time::Duration;

use rand::Rng;
use redalloc_core::oracle::{Oracle, TinyScenario};
use redalloc_core::{ReservationMode, Status};
use serde::{Deserialize, Serialize};

use crate::config::{FlowSource, OracleConfig, ScenarioConfig, TopologySource};
use crate::error::HarnessError;
use crate::flows::NfTypeDoc;
use crate::format::{write_edge_list, NodeDefaults};
use crate::generate::{draw_node_avail, mark_end_nodes, preferential_attachment, Dist, FlowGen, Stream};
use crate::par::{solve_oracle, OracleRun};
use crate::plan::{allocate, provisioned};

/// Run 0 of `config` with primaries provisioned, as an oracle input.
pub fn tiny_scenario(config: &ScenarioConfig, base: &Path) -> Result<TinyScenario, HarnessError> {
    let s = config.scenario(base, 0)?;
    let model = provisioned(config, &s)?;
    Ok(TinyScenario {
        net: s.net,
        model,
        backup_budget: s.backup_budget,
        threshold: config.threshold,
        depth: config.depth,
        max_chains: config.oracle.max_chains,
        max_backups: config.oracle.max_backups,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub mode: ReservationMode,
    /// Precomputed search-space size.
    pub bound: u128,
    pub max_backups: u32,
    pub result: OracleRun,
}

pub fn run_oracle(config: &ScenarioConfig, base: &Path) -> Result<OracleReport, HarnessError> {
    config.validate()?;
    let scenario = tiny_scenario(config, base)?;
    let oracle = Oracle::new(&scenario)?;
    let budget = config.oracle.time_budget_secs.map(Duration::from_secs_f64);
    Ok(OracleReport {
        mode: config.mode,
        bound: oracle.bound(),
        max_backups: oracle.k_cap(),
        result: solve_oracle(&oracle, budget)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TinyComparison {
    pub flows: usize,
    /// Fewest backups serving every flow with dedicated reservation.
    pub oracle: u32,
    pub dedicated: u32,
    pub shared: u32,
    pub dedicated_accepted: usize,
    pub shared_accepted: usize,
    /// Accepted flows whose achieved availability misses the requirement.
    pub violations: usize,
}

/// Oracle minimum against the heuristic in both reservation modes. Backup
/// instances use the catalog availability on both sides.
pub fn compare_tiny(config: &ScenarioConfig, base: &Path) -> Result<TinyComparison, HarnessError> {
    let dedicated_cfg = ScenarioConfig {
        mode: ReservationMode::Dedicated,
        ..config.clone()
    };
    let oracle = match run_oracle(&dedicated_cfg, base)?.result {
        OracleRun::Solved(s) => s.count,
        OracleRun::TimedOut { lower_bound } => {
            return Err(HarnessError::Config(format!("oracle timed out at {lower_bound} backups")))
        }
    };
    let mut counts = Vec::new();
    let mut violations = 0;
    let mut flows = 0;
    for mode in [ReservationMode::Dedicated, ReservationMode::Shared] {
        let c = ScenarioConfig { mode, ..config.clone() };
        let plan = allocate(&c, &c.scenario(base, 0)?)?;
        flows = plan.outcomes.len();
        let accepted = plan.outcomes.iter().filter(|o| o.status == Status::Accepted).count();
        violations += plan
            .outcomes
            .iter()
            .filter(|o| o.status == Status::Accepted && o.achieved_avail < plan.model.flow(o.flow).avail_req)
            .count();
        counts.push((plan.metrics.backups_used, accepted));
    }
    Ok(TinyComparison {
        flows,
        oracle,
        dedicated: counts[0].0,
        shared: counts[1].0,
        dedicated_accepted: counts[0].1,
        shared_accepted: counts[1].1,
        violations,
    })
}

/// Candidate tiny config for `seed`: 6 to 8 nodes with two end nodes, two
/// NF types, two to four flows with chains of one or two NFs.
pub fn tiny_config(seed: u64) -> ScenarioConfig {
    let mut rng = Stream::Topology.rng(seed, 0);
    let nodes = rng.random_range(6..=8usize);
    let links = (nodes - 1 + rng.random_range(0..=3usize)).min(nodes * (nodes - 1) / 2);
    let defaults = NodeDefaults {
        cores: 4,
        memory_gb: 8,
        avail: 0.999,
    };
    let mut net = preferential_attachment(nodes, links, &defaults, &mut rng).expect("sizes are in range");
    mark_end_nodes(&mut net, 2.0 / nodes as f64);
    draw_node_avail(&mut net, &Dist::Uniform(0.99, 0.999), &mut Stream::NodeAvail.rng(seed, 0))
        .expect("range is valid");
    let count = rng.random_range(2..=4usize);
    ScenarioConfig {
        topology: TopologySource::Inline {
            text: write_edge_list(&net),
        },
        node_defaults: defaults,
        catalog: vec![NfTypeDoc::new("FW", 10e6), NfTypeDoc::new("NAT", 10e6)],
        instance_avail: Dist::Fixed(0.999),
        flows: FlowSource::Generated(FlowGen {
            count,
            chain_len: (1, 2),
            class_mix: Vec::new(),
            rate_pps: 4e6,
        }),
        classes: vec![0.999, 0.9999],
        seed,
        assign: redalloc_core::AssignConfig {
            max_chains: 2,
            ..Default::default()
        },
        oracle: OracleConfig::default(),
        ..ScenarioConfig::default()
    }
}

/// First `count` seeds whose candidate config the oracle solves, with the
/// configs.
pub fn tiny_fixtures(count: usize) -> Vec<(u64, ScenarioConfig)> {
    let mut out = Vec::new();
    let mut seed = 0;
    while out.len() < count {
        let c = tiny_config(seed);
        let solved = run_oracle(&c, Path::new(".")).is_ok_and(|r| matches!(r.result, OracleRun::Solved(_)));
        if solved {
            out.push((seed, c));
        }
        seed += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn candidate_configs_are_tiny() {
        for seed in 0..10 {
            let c = tiny_config(seed);
            c.validate().unwrap();
            let s = tiny_scenario(&c, Path::new(".")).unwrap();
            s.validate().unwrap();
            assert!(s.net.len() <= 8 && s.model.flows.len() <= 6);
            assert_eq!(s.net.end_nodes().count(), 2);
        }
    }

    #[test]
    fn comparison_is_consistent() {
        let (_, c) = tiny_fixtures(1).remove(0);
        let r = compare_tiny(&c, Path::new(".")).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.shared <= r.dedicated);
        let again = compare_tiny(&c, Path::new(".")).unwrap();
        assert_eq!(r, again);
    }
}
