//! Bin-packing of the estimated backup instances onto nodes.
//!
//! Classes are packed one at a time. Candidate nodes are split into those
//! structurally uncorrelated with every primary host of the class and the
//! rest; both lists are sorted by node availability and the uncorrelated
//! list is exhausted first. After each instance lands on the active node,
//! the next NF type in the queue is tried on the same node so that nodes
//! end up hosting a mix of types.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::estimate::BackupDemand;
use crate::model::{ClassId, Model, NfTypeId};
use crate::structure::DependencyProfile;
use crate::topology::{Network, NodeId};

/// Remaining backup resources per node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeBudget {
    pub cores: Vec<u32>,
    pub memory_gb: Vec<u32>,
}

impl NodeBudget {
    /// `fraction` of every non-end node's cores and memory, rounded down.
    pub fn fraction_of(net: &Network, fraction: f64) -> Self {
        let take = |x: u32| libm::floor(x as f64 * fraction) as u32;
        Self {
            cores: net
                .nodes()
                .iter()
                .map(|n| if n.end { 0 } else { take(n.cores) })
                .collect(),
            memory_gb: net
                .nodes()
                .iter()
                .map(|n| if n.end { 0 } else { take(n.memory_gb) })
                .collect(),
        }
    }

    pub fn fits(&self, node: NodeId, cores: u32, memory_gb: u32) -> bool {
        self.cores[node.index()] >= cores && self.memory_gb[node.index()] >= memory_gb
    }

    pub fn take(&mut self, node: NodeId, cores: u32, memory_gb: u32) {
        self.cores[node.index()] -= cores;
        self.memory_gb[node.index()] -= memory_gb;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ClassOrder {
    /// Highest requirement first.
    #[default]
    Descending,
    Ascending,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedBackup {
    pub nf: NfTypeId,
    pub class: ClassId,
    pub host: NodeId,
    /// Whether the host came from the uncorrelated queue.
    pub uncorrelated: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shortfall {
    pub nf: NfTypeId,
    pub class: ClassId,
    pub count: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementResult {
    pub placed: Vec<PlacedBackup>,
    pub unplaced: Vec<Shortfall>,
    pub nodes_used: BTreeSet<NodeId>,
}

impl PlacementResult {
    pub fn placed_count(&self, nf: NfTypeId, class: ClassId) -> u32 {
        self.placed
            .iter()
            .filter(|p| p.nf == nf && p.class == class)
            .count() as u32
    }

    pub fn unplaced_count(&self, nf: NfTypeId, class: ClassId) -> u32 {
        self.unplaced
            .iter()
            .filter(|s| s.nf == nf && s.class == class)
            .map(|s| s.count)
            .sum()
    }
}

/// Nodes hosting primaries of each class's flows, indexed by class.
pub fn primary_nodes_by_class(model: &Model) -> Vec<BTreeSet<NodeId>> {
    let mut out = alloc::vec![BTreeSet::new(); model.classes.len()];
    for f in &model.flows {
        if let Some(b) = &f.primary {
            out[f.class.index()].extend(b.instances.iter().map(|&i| model.instance(i).host));
        }
    }
    out
}

fn by_availability(net: &Network) -> impl Fn(&NodeId, &NodeId) -> Ordering + '_ {
    move |a, b| {
        net.avail(*b)
            .partial_cmp(&net.avail(*a))
            .unwrap_or(Ordering::Equal)
            .then_with(|| net.name(*a).cmp(net.name(*b)))
    }
}

/// Uncorrelated and correlated candidate queues for a class, both sorted by
/// availability (descending, ties by name). Primary hosts of the class and
/// end nodes are in neither.
pub fn candidate_queues(
    net: &Network,
    profile: &DependencyProfile,
    primary_nodes: &BTreeSet<NodeId>,
) -> (Vec<NodeId>, Vec<NodeId>) {
    let correlated = profile.correlated_union(primary_nodes.iter().copied());
    let (mut clean, mut tainted): (Vec<NodeId>, Vec<NodeId>) = net
        .hosting_nodes()
        .filter(|n| !primary_nodes.contains(n))
        .partition(|n| !correlated.contains(n));
    clean.sort_by(by_availability(net));
    tainted.sort_by(by_availability(net));
    (clean, tainted)
}

pub fn place_backups(
    net: &Network,
    model: &Model,
    demand: &BackupDemand,
    profile: &DependencyProfile,
    primary_nodes: &[BTreeSet<NodeId>],
    budget: &mut NodeBudget,
    order: ClassOrder,
) -> PlacementResult {
    let mut result = PlacementResult::default();
    let mut classes: Vec<_> = demand.classes.iter().collect();
    classes.sort_by(|a, b| {
        let o = a.req.partial_cmp(&b.req).unwrap_or(Ordering::Equal);
        match order {
            ClassOrder::Descending => o.reverse(),
            ClassOrder::Ascending => o,
        }
        .then(a.class.cmp(&b.class))
    });

    for cd in classes {
        let mut remaining = cd.z.clone();
        let mut queue: Vec<NfTypeId> = (0..remaining.len() as u32)
            .map(NfTypeId)
            .filter(|v| remaining[v.index()] > 0)
            .collect();
        queue.sort_by(|a, b| {
            remaining[b.index()]
                .cmp(&remaining[a.index()])
                .then_with(|| model.nf(*a).name.cmp(&model.nf(*b).name))
        });
        let empty = BTreeSet::new();
        let hosts = primary_nodes.get(cd.class.index()).unwrap_or(&empty);
        let (clean, tainted) = candidate_queues(net, profile, hosts);
        let n_clean = clean.len();
        let nodes: Vec<NodeId> = clean.into_iter().chain(tainted).collect();

        let mut pos = 0;
        let mut k = 0;
        while pos < nodes.len() {
            let Some(next) = next_pending(&queue, &remaining, k) else {
                break;
            };
            k = next;
            let nf = queue[k];
            let ty = model.nf(nf);
            let node = nodes[pos];
            if budget.fits(node, ty.cores, ty.memory_gb) {
                budget.take(node, ty.cores, ty.memory_gb);
                remaining[nf.index()] -= 1;
                result.placed.push(PlacedBackup {
                    nf,
                    class: cd.class,
                    host: node,
                    uncorrelated: pos < n_clean,
                });
                result.nodes_used.insert(node);
                k = (k + 1) % queue.len();
            } else {
                pos += 1;
            }
        }
        for nf in queue {
            if remaining[nf.index()] > 0 {
                result.unplaced.push(Shortfall {
                    nf,
                    class: cd.class,
                    count: remaining[nf.index()],
                });
            }
        }
    }
    result
}

/// First queue position at or after `from` (cyclically) with demand left.
fn next_pending(queue: &[NfTypeId], remaining: &[u32], from: usize) -> Option<usize> {
    (0..queue.len())
        .map(|step| (from + step) % queue.len())
        .find(|&k| remaining[queue[k].index()] > 0)
}
