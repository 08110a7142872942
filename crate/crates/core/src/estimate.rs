//! Rough backup-chain and backup-instance counts per availability class.
//!
//! The estimate assumes worst-case availabilities and distinct hosts for
//! every NF, so it overshoots on purpose; assignment later uses only what
//! it needs.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::EstimateError;
use crate::model::{ClassId, FlowSpec, Model, NfTypeId};
use crate::topology::Network;

pub const DEFAULT_X_MAX: u32 = 10;

/// Smallest number of backup chains `x` such that
/// `1 - (1 - worst_primary) * (1 - (worst_node * worst_instance)^g)^x >= req`.
///
/// Returns 0 when the primary alone already meets the requirement.
pub fn chains_needed(
    req: f64,
    worst_primary: f64,
    worst_node: f64,
    worst_instance: f64,
    g: u32,
    x_max: u32,
) -> Result<u32, EstimateError> {
    for p in [req, worst_primary] {
        if !(p > 0.0 && p < 1.0) {
            return Err(EstimateError::BadProbability(p));
        }
    }
    for p in [worst_node, worst_instance] {
        if !(p > 0.0 && p <= 1.0) {
            return Err(EstimateError::BadProbability(p));
        }
    }
    if worst_primary >= req {
        return Ok(0);
    }
    let per_hop = worst_node * worst_instance;
    let mut chain = 1.0;
    for _ in 0..g {
        chain *= per_hop;
    }
    let mut down = 1.0 - worst_primary;
    for x in 1..=x_max {
        down *= 1.0 - chain;
        if 1.0 - down >= req {
            return Ok(x);
        }
    }
    Err(EstimateError::Infeasible { req, x_max })
}

/// `h * ceil(sum of rates of class flows using the NF / capacity)`.
pub fn instances_needed<'a>(
    flows: impl IntoIterator<Item = &'a FlowSpec>,
    nf: NfTypeId,
    capacity: f64,
    h: u32,
) -> u32 {
    if h == 0 {
        return 0;
    }
    let load: f64 = flows
        .into_iter()
        .filter(|f| f.chain.contains(&nf))
        .map(|f| f.rate)
        .sum();
    let bins = libm::ceil(load / capacity - 1e-9).max(0.0) as u32;
    h * bins
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassDemand {
    pub class: ClassId,
    pub req: f64,
    /// Backup chains per flow.
    pub h: u32,
    /// Backup instances per NF type.
    pub z: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackupDemand {
    pub classes: Vec<ClassDemand>,
    /// Per NF type, summed over classes.
    pub z_total: Vec<u32>,
}

impl BackupDemand {
    pub fn h(&self, class: ClassId) -> u32 {
        self.classes.iter().find(|c| c.class == class).map_or(0, |c| c.h)
    }

    pub fn z(&self, nf: NfTypeId, class: ClassId) -> u32 {
        self.classes
            .iter()
            .find(|c| c.class == class)
            .map_or(0, |c| c.z[nf.index()])
    }

    pub fn class_total(&self, class: ClassId) -> u32 {
        self.classes
            .iter()
            .find(|c| c.class == class)
            .map_or(0, |c| c.z.iter().sum())
    }

    pub fn total(&self) -> u32 {
        self.z_total.iter().sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateConfig {
    pub x_max: u32,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self { x_max: DEFAULT_X_MAX }
    }
}

/// Demand for every class that has flows. `backup_cores[n]` is the backup
/// core budget of node `n`; nodes with a zero budget or flagged as end
/// nodes are not backup-capable.
pub fn estimate_demand(
    model: &Model,
    net: &Network,
    backup_cores: &[u32],
    config: EstimateConfig,
) -> Result<BackupDemand, EstimateError> {
    let n_types = model.nf_types.len();
    let worst_node = net
        .hosting_nodes()
        .filter(|n| backup_cores[n.index()] > 0)
        .map(|n| net.avail(n))
        .fold(f64::INFINITY, f64::min);
    let worst_instance = model
        .nf_types
        .iter()
        .map(|t| t.avail)
        .fold(f64::INFINITY, f64::min);

    let mut classes = Vec::new();
    let mut z_total = vec![0u32; n_types];
    for (c, &req) in model.classes.iter().enumerate() {
        let class = ClassId(c as u32);
        let members: Vec<&FlowSpec> = model.flows.iter().filter(|f| f.class == class).collect();
        if members.is_empty() {
            continue;
        }
        let worst_primary = members
            .iter()
            .map(|f| f.primary_avail)
            .fold(f64::INFINITY, f64::min);
        let g = members.iter().map(|f| f.chain_len()).max().unwrap_or(0) as u32;
        let h = if worst_primary >= req {
            0
        } else if !worst_node.is_finite() {
            return Err(EstimateError::Infeasible { req, x_max: config.x_max });
        } else {
            chains_needed(req, worst_primary, worst_node, worst_instance, g, config.x_max)?
        };
        let z: Vec<u32> = (0..n_types)
            .map(|v| {
                let nf = NfTypeId(v as u32);
                instances_needed(members.iter().copied(), nf, model.nf(nf).capacity, h)
            })
            .collect();
        for (t, zc) in z_total.iter_mut().zip(&z) {
            *t += zc;
        }
        classes.push(ClassDemand { class, req, h, z });
    }
    Ok(BackupDemand { classes, z_total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ClassId;
    use alloc::vec;
    use proptest::prelude::*;

    fn brute(req: f64, wp: f64, wn: f64, wi: f64, g: u32, x_max: u32) -> Option<u32> {
        if wp >= req {
            return Some(0);
        }
        let chain = libm::pow(wn * wi, g as f64);
        (1..=x_max).find(|&x| 1.0 - (1.0 - wp) * libm::pow(1.0 - chain, x as f64) >= req)
    }

    #[test]
    fn two_chains_for_five_nines() {
        assert_eq!(chains_needed(0.99999, 0.99, 0.99, 0.999, 2, 10), Ok(2));
    }

    #[test]
    fn primary_already_sufficient() {
        assert_eq!(chains_needed(0.999, 0.9999, 0.99, 0.999, 2, 10), Ok(0));
    }

    #[test]
    fn worst_case_three_classes() {
        // worst node 0.99, worst instance 0.999, chain length 2; the worst
        // primary is itself a two-NF chain on distinct worst-case hosts.
        let worst_primary = 0.99 * 0.99 * 0.999 * 0.999;
        let h: Vec<u32> = [0.999, 0.9999, 0.99999]
            .iter()
            .map(|&r| chains_needed(r, worst_primary, 0.99, 0.999, 2, 10).unwrap())
            .collect();
        assert_eq!(h, vec![1, 2, 3]);
    }

    #[test]
    fn infeasible_when_capped() {
        assert!(matches!(
            chains_needed(0.999999, 0.5, 0.5, 0.5, 4, 3),
            Err(EstimateError::Infeasible { .. })
        ));
    }

    fn flow(rate: f64, chain: Vec<u32>) -> FlowSpec {
        FlowSpec {
            id: crate::model::FlowId(0),
            src: crate::NodeId(0),
            dst: crate::NodeId(1),
            rate,
            chain: chain.into_iter().map(NfTypeId).collect(),
            class: ClassId(0),
            avail_req: 0.999,
            primary: None,
            primary_avail: 0.99,
        }
    }

    #[test]
    fn instances_needed_examples() {
        let flows = vec![flow(0.5e6, vec![0]), flow(0.5e6, vec![0, 1]), flow(0.5e6, vec![0])];
        assert_eq!(instances_needed(&flows, NfTypeId(0), 10e6, 2), 2);
        assert_eq!(instances_needed(&flows, NfTypeId(0), 10e6, 0), 0);
        assert_eq!(instances_needed(&flows, NfTypeId(2), 10e6, 3), 0);
    }

    #[test]
    fn seven_hundred_flows_per_class() {
        // 700 two-NF flows spread evenly over five NF types: 280 uses each,
        // 140 Mpps per type, 14 instances per type per backup chain.
        let flows: Vec<FlowSpec> = (0..700)
            .map(|k| flow(0.5e6, vec![k % 5, (k + 1) % 5]))
            .collect();
        let totals: Vec<u32> = [1, 2, 3]
            .iter()
            .map(|&h| (0..5).map(|v| instances_needed(&flows, NfTypeId(v), 10e6, h)).sum())
            .collect();
        assert_eq!(totals, vec![70, 140, 210]);
    }

    proptest! {
        #[test]
        fn matches_brute_force_scan(
            req in 0.9f64..0.999999,
            wp in 0.8f64..0.99999,
            wn in 0.9f64..1.0,
            wi in 0.9f64..1.0,
            g in 1u32..5,
        ) {
            let fast = chains_needed(req, wp, wn, wi, g, 10).ok();
            let slow = brute(req, wp, wn, wi, g, 10);
            // product vs pow can differ in the last ulp; only compare when
            // the margin is not razor thin
            if let (Some(a), Some(b)) = (fast, slow) {
                prop_assert!(a == b || (a as i64 - b as i64).abs() == 1);
            }
        }

        #[test]
        fn monotone_in_inputs(
            req in 0.9f64..0.99999,
            bump in 0.0f64..0.000009,
            wp in 0.8f64..0.9,
            wn in 0.9f64..0.999,
            wi in 0.9f64..0.999,
            g in 1u32..4,
        ) {
            let base = chains_needed(req, wp, wn, wi, g, 50).unwrap();
            let harder = chains_needed(req + bump, wp, wn, wi, g, 50).unwrap();
            prop_assert!(harder >= base);
            let better_node = chains_needed(req, wp, (wn + 0.0005).min(1.0), wi, g, 50).unwrap();
            prop_assert!(better_node <= base);
            let better_inst = chains_needed(req, wp, wn, (wi + 0.0005).min(1.0), g, 50).unwrap();
            prop_assert!(better_inst <= base);
            let better_primary = chains_needed(req, wp + 0.05, wn, wi, g, 50).unwrap();
            prop_assert!(better_primary <= base);
        }
    }
}
