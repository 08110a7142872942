//! Backup-chain assignment.
//!
//! Per flow: collect candidate backup instances, trim them to a feasible
//! set (every composition meets the requirement together with the primary
//! and any chains already fixed), enumerate compositions and keep the one
//! with the largest chain weight. Instances where the flow could join an
//! existing sharing group score the chain length; all others score their
//! current utilization.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::ledger::{Independence, ReservationMode};
use crate::model::{service_availability, BackupChain, FlowId, FlowSpec, IndependenceTable, InstanceId, Model};
use crate::structure::DependencyProfile;
use crate::topology::{HopMatrix, Network, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    /// Some NF of the chain has no usable backup instance.
    NoCandidates,
    /// Not enough instances left to reach the requirement.
    InsufficientCandidates,
    /// Every composition failed the route filter.
    NoPath,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderPolicy {
    Input,
    #[default]
    ChainLengthDesc,
    ChainLengthAsc,
    AvailDesc,
    AvailAsc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssignConfig {
    pub order: OrderPolicy,
    /// Forbid compositions whose instances share a host.
    pub strict_distinct_hosts: bool,
    /// Max hops of src -> backup hosts -> dst; `None` disables the filter.
    pub hop_budget: Option<u32>,
    /// Compositions kept by the route filter.
    pub k_paths: usize,
    pub max_compositions: usize,
    /// Max backup chains per flow.
    pub max_chains: u32,
}

impl Default for AssignConfig {
    fn default() -> Self {
        Self {
            order: OrderPolicy::default(),
            strict_distinct_hosts: false,
            hop_budget: None,
            k_paths: 3,
            max_compositions: 10_000,
            max_chains: crate::estimate::DEFAULT_X_MAX,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    Accepted,
    Rejected { reason: RejectReason },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssignmentOutcome {
    pub flow: FlowId,
    #[serde(flatten)]
    pub status: Status,
    pub chains: Vec<BackupChain>,
    pub achieved_avail: f64,
}

impl AssignmentOutcome {
    pub fn accepted(&self) -> bool {
        self.status == Status::Accepted
    }
}

/// Instance availability times host availability.
pub fn composite(model: &Model, net: &Network, inst: InstanceId) -> f64 {
    let i = model.instance(inst);
    i.avail * net.avail(i.host)
}

/// Nodes a flow's backups must avoid: primary hosts and everything
/// structurally correlated with them.
pub fn exclusion_set(model: &Model, profile: &DependencyProfile, flow: &FlowSpec) -> BTreeSet<NodeId> {
    let hosts = model.primary_hosts(flow).unwrap_or_default();
    let mut out = profile.correlated_union(hosts.iter().copied());
    out.extend(hosts);
    out
}

/// Backup instances per chain position that the flow may use, sorted by id.
pub fn candidate_instances(
    model: &Model,
    net: &Network,
    profile: &DependencyProfile,
    flow: &FlowSpec,
    indep: &impl Independence,
) -> Result<Vec<Vec<InstanceId>>, RejectReason> {
    let excluded = exclusion_set(model, profile, flow);
    let sets: Vec<Vec<InstanceId>> = flow
        .chain
        .iter()
        .map(|&nf| {
            model
                .backups()
                .filter(|i| {
                    i.nf == nf
                        && !excluded.contains(&i.host)
                        && !net.is_end(i.host)
                        && i.ledger.admissible(flow.id, flow.rate, indep).is_ok()
                })
                .map(|i| i.id)
                .collect()
        })
        .collect();
    if sets.iter().any(Vec::is_empty) {
        return Err(RejectReason::NoCandidates);
    }
    Ok(sets)
}

fn extreme(values: &[f64], pick: fn(f64, f64) -> f64, init: f64) -> f64 {
    values.iter().copied().fold(init, pick)
}

/// Worst and best service availability reachable with one more backup
/// chain drawn from `composites` (per position, instance composites).
pub fn min_max_availability(primary: f64, composites: &[Vec<f64>]) -> (f64, f64) {
    let mut lo = 1.0;
    let mut hi = 1.0;
    for c in composites {
        lo *= extreme(c, f64::min, f64::INFINITY);
        hi *= extreme(c, f64::max, f64::NEG_INFINITY);
    }
    (
        1.0 - (1.0 - primary) * (1.0 - lo),
        1.0 - (1.0 - primary) * (1.0 - hi),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibleSet {
    /// Candidates per chain position, sorted by id.
    pub sets: Vec<Vec<InstanceId>>,
    /// Backup chains needed, including the committed prefix.
    pub chains_required: u32,
    /// Chains fixed because one chain alone could not reach the requirement.
    pub committed: Vec<Vec<InstanceId>>,
    /// Primary availability after folding in the committed prefix.
    pub effective_primary: f64,
}

/// Best instance per position, all distinct (and on distinct hosts when
/// `strict`). Ties go to the lower id.
fn best_composition(
    model: &Model,
    sets: &[Vec<InstanceId>],
    comps: &[Vec<f64>],
    strict: bool,
) -> Option<Vec<InstanceId>> {
    let mut chosen: Vec<InstanceId> = Vec::with_capacity(sets.len());
    let mut hosts = BTreeSet::new();
    for (set, c) in sets.iter().zip(comps) {
        let best = set
            .iter()
            .zip(c)
            .filter(|(i, _)| !chosen.contains(i) && !(strict && hosts.contains(&model.instance(**i).host)))
            .fold(None::<(InstanceId, f64)>, |acc, (&i, &a)| match acc {
                Some((_, b)) if b >= a => acc,
                _ => Some((i, a)),
            })?;
        hosts.insert(model.instance(best.0).host);
        chosen.push(best.0);
    }
    Some(chosen)
}

/// Trims candidate sets until every composition meets the requirement,
/// fixing extra best-case chains first when one chain cannot suffice.
pub fn feasible_set(
    model: &Model,
    net: &Network,
    flow: &FlowSpec,
    mut sets: Vec<Vec<InstanceId>>,
    config: &AssignConfig,
) -> Result<FeasibleSet, RejectReason> {
    let req = flow.avail_req;
    let mut primary = flow.primary_avail;
    let mut committed = Vec::new();
    for s in &mut sets {
        s.sort();
    }
    loop {
        if sets.iter().any(Vec::is_empty) {
            return Err(RejectReason::InsufficientCandidates);
        }
        let mut comps: Vec<Vec<f64>> = sets
            .iter()
            .map(|s| s.iter().map(|&i| composite(model, net, i)).collect())
            .collect();
        let (mut lo, hi) = min_max_availability(primary, &comps);
        if hi < req {
            if committed.len() as u32 + 1 >= config.max_chains {
                return Err(RejectReason::InsufficientCandidates);
            }
            let chain = best_composition(model, &sets, &comps, config.strict_distinct_hosts)
                .ok_or(RejectReason::InsufficientCandidates)?;
            primary = hi;
            for s in &mut sets {
                s.retain(|i| !chain.contains(i));
            }
            committed.push(chain);
            continue;
        }
        while lo < req {
            // lowest composite among positions that can still lose one;
            // ties prefer the larger set, then the lower id
            let mut drop: Option<(usize, usize)> = None;
            for (g, c) in comps.iter().enumerate() {
                if c.len() < 2 {
                    continue;
                }
                for (k, &a) in c.iter().enumerate() {
                    let better = match drop {
                        None => true,
                        Some((dg, dk)) => {
                            let b = comps[dg][dk];
                            a < b
                                || (a == b
                                    && (c.len() > comps[dg].len()
                                        || (c.len() == comps[dg].len() && sets[g][k] < sets[dg][dk])))
                        }
                    };
                    if better {
                        drop = Some((g, k));
                    }
                }
            }
            let Some((g, k)) = drop else {
                return Err(RejectReason::InsufficientCandidates);
            };
            sets[g].remove(k);
            comps[g].remove(k);
            lo = min_max_availability(primary, &comps).0;
        }
        return Ok(FeasibleSet {
            chains_required: committed.len() as u32 + 1,
            sets,
            committed,
            effective_primary: primary,
        });
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Enumeration {
    /// Compositions in lexicographic order of instance ids.
    pub chains: Vec<Vec<InstanceId>>,
    /// Compositions looked at, including ones filtered out.
    pub examined: u64,
}

fn route_hops(hops: &HopMatrix, src: NodeId, hosts: &[NodeId], dst: NodeId) -> Option<u32> {
    let mut at = src;
    let mut total = 0u32;
    for &h in hosts.iter().chain(core::iter::once(&dst)) {
        total = total.checked_add(hops.get(at, h).hops()?)?;
        at = h;
    }
    Some(total)
}

/// All compositions of the feasible sets, or, with a hop budget, the `k`
/// cheapest within budget found by a k-best pass over the stage graph.
pub fn enumerate_chains(
    model: &Model,
    hops: &HopMatrix,
    flow: &FlowSpec,
    sets: &[Vec<InstanceId>],
    config: &AssignConfig,
) -> Result<Enumeration, RejectReason> {
    let out = match config.hop_budget {
        None => cartesian(model, sets, config),
        Some(budget) => k_cheapest(model, hops, flow, sets, budget, config),
    };
    if out.chains.is_empty() {
        return Err(RejectReason::NoPath);
    }
    Ok(out)
}

fn admissible_prefix(model: &Model, prefix: &[InstanceId], next: InstanceId, strict: bool) -> bool {
    !prefix.contains(&next)
        && !(strict
            && prefix
                .iter()
                .any(|&p| model.instance(p).host == model.instance(next).host))
}

fn cartesian(model: &Model, sets: &[Vec<InstanceId>], config: &AssignConfig) -> Enumeration {
    let mut chains = Vec::new();
    let mut examined = 0u64;
    if sets.is_empty() || sets.iter().any(Vec::is_empty) {
        return Enumeration { chains, examined };
    }
    let mut idx = vec![0usize; sets.len()];
    'outer: loop {
        examined += 1;
        let chain: Vec<InstanceId> = idx.iter().zip(sets).map(|(&k, s)| s[k]).collect();
        let ok = (0..chain.len()).all(|g| admissible_prefix(model, &chain[..g], chain[g], config.strict_distinct_hosts));
        if ok {
            chains.push(chain);
            if chains.len() >= config.max_compositions {
                break;
            }
        }
        for g in (0..sets.len()).rev() {
            idx[g] += 1;
            if idx[g] < sets[g].len() {
                continue 'outer;
            }
            idx[g] = 0;
        }
        break;
    }
    Enumeration { chains, examined }
}

fn k_cheapest(
    model: &Model,
    hops: &HopMatrix,
    flow: &FlowSpec,
    sets: &[Vec<InstanceId>],
    budget: u32,
    config: &AssignConfig,
) -> Enumeration {
    let k = config.k_paths.max(1);
    let host = |i: InstanceId| model.instance(i).host;
    let mut examined = 0u64;
    // labels[j]: up to k cheapest prefixes ending at the j-th instance of the stage
    let mut labels: Vec<Vec<(u32, Vec<InstanceId>)>> = Vec::new();
    for (g, set) in sets.iter().enumerate() {
        let mut next = Vec::with_capacity(set.len());
        for &inst in set {
            let mut cands: Vec<(u32, Vec<InstanceId>)> = Vec::new();
            if g == 0 {
                if let Some(d) = hops.get(flow.src, host(inst)).hops() {
                    cands.push((d, vec![inst]));
                }
            } else {
                for stage in &labels {
                    for (cost, prefix) in stage {
                        examined += 1;
                        if !admissible_prefix(model, prefix, inst, config.strict_distinct_hosts) {
                            continue;
                        }
                        let last = host(*prefix.last().unwrap());
                        if let Some(d) = hops.get(last, host(inst)).hops() {
                            let mut p = prefix.clone();
                            p.push(inst);
                            cands.push((cost + d, p));
                        }
                    }
                }
            }
            cands.retain(|(c, _)| *c <= budget);
            cands.sort();
            cands.truncate(k);
            next.push(cands);
        }
        labels = next;
    }
    let mut done: Vec<(u32, Vec<InstanceId>)> = labels
        .into_iter()
        .flatten()
        .filter_map(|(c, p)| {
            let last = host(*p.last()?);
            let total = c + hops.get(last, flow.dst).hops()?;
            (total <= budget).then_some((total, p))
        })
        .collect();
    done.sort();
    done.truncate(k.min(config.max_compositions));
    let mut chains: Vec<Vec<InstanceId>> = done.into_iter().map(|(_, p)| p).collect();
    chains.sort();
    debug_assert!(chains
        .iter()
        .all(|c| route_hops(hops, flow.src, &c.iter().map(|&i| host(i)).collect::<Vec<_>>(), flow.dst)
            .is_some_and(|h| h <= budget)));
    Enumeration { chains, examined }
}

/// Chain length when the flow can join an existing sharing group at the
/// instance, otherwise the instance's reserved fraction.
pub fn instance_weight(model: &Model, flow: &FlowSpec, inst: InstanceId, indep: &impl Independence) -> f64 {
    let ledger = &model.instance(inst).ledger;
    if ledger.mode == ReservationMode::Shared && ledger.shareable_group(flow.id, flow.rate, indep).is_some() {
        flow.chain_len() as f64
    } else {
        ledger.utilization()
    }
}

pub fn chain_weight(weights: impl IntoIterator<Item = f64>) -> f64 {
    weights.into_iter().sum()
}

/// Assigns backup chains to flows against shared model state.
pub struct Assigner<'a> {
    pub net: &'a Network,
    pub hops: &'a HopMatrix,
    pub profile: &'a DependencyProfile,
    pub indep: &'a IndependenceTable,
    pub config: &'a AssignConfig,
}

impl Assigner<'_> {
    pub fn assign_flow(&self, model: &mut Model, flow: FlowId) -> AssignmentOutcome {
        let f = model.flow(flow).clone();
        let reject = |reason| AssignmentOutcome {
            flow,
            status: Status::Rejected { reason },
            chains: Vec::new(),
            achieved_avail: f.primary_avail,
        };
        if f.primary_avail >= f.avail_req {
            return AssignmentOutcome {
                flow,
                status: Status::Accepted,
                chains: Vec::new(),
                achieved_avail: f.primary_avail,
            };
        }
        let result = candidate_instances(model, self.net, self.profile, &f, self.indep)
            .and_then(|sets| feasible_set(model, self.net, &f, sets, self.config))
            .and_then(|fs| {
                let e = enumerate_chains(model, self.hops, &f, &fs.sets, self.config)?;
                Ok((fs, e))
            });
        let (fs, e) = match result {
            Ok(x) => x,
            Err(r) => return reject(r),
        };
        let best = self.pick(model, &f, &e.chains);
        let mut chains = fs.committed;
        chains.push(best);
        match self.commit(model, &f, &chains) {
            Some(out) => out,
            None => reject(RejectReason::InsufficientCandidates),
        }
    }

    /// Highest chain weight; the first (lexicographically smallest) wins ties.
    fn pick(&self, model: &Model, f: &FlowSpec, chains: &[Vec<InstanceId>]) -> Vec<InstanceId> {
        let mut cache: Vec<(InstanceId, f64)> = Vec::new();
        let mut weight = |i: InstanceId| match cache.iter().find(|(c, _)| *c == i) {
            Some(&(_, w)) => w,
            None => {
                let w = instance_weight(model, f, i, self.indep);
                cache.push((i, w));
                w
            }
        };
        let mut best: Option<(f64, &Vec<InstanceId>)> = None;
        for c in chains {
            let w = chain_weight(c.iter().map(|&i| weight(i)));
            if best.is_none_or(|(b, _)| w.partial_cmp(&b) == Some(Ordering::Greater)) {
                best = Some((w, c));
            }
        }
        best.map(|(_, c)| c.clone()).unwrap_or_default()
    }

    /// Reserves every chain or nothing.
    fn commit(&self, model: &mut Model, f: &FlowSpec, chains: &[Vec<InstanceId>]) -> Option<AssignmentOutcome> {
        let mut done: Vec<InstanceId> = Vec::new();
        let mut ok = true;
        'chains: for c in chains {
            for &i in c {
                if model.instances[i.index()]
                    .ledger
                    .reserve(f.id, f.rate, self.indep)
                    .is_err()
                {
                    ok = false;
                    break 'chains;
                }
                done.push(i);
            }
        }
        let built: Vec<BackupChain> = chains
            .iter()
            .map(|c| model.backup_chain(self.net, f.id, c.clone()))
            .collect();
        let avails: Vec<f64> = built.iter().map(|b| b.avail).collect();
        let achieved = service_availability(f.primary_avail, &avails);
        if !ok || achieved < f.avail_req {
            for i in done {
                model.instances[i.index()].ledger.release(f.id);
            }
            return None;
        }
        Some(AssignmentOutcome {
            flow: f.id,
            status: Status::Accepted,
            chains: built,
            achieved_avail: achieved,
        })
    }
}

/// Flow processing order under a policy; stable, so ties keep input order.
pub fn processing_order(flows: &[FlowSpec], policy: OrderPolicy) -> Vec<FlowId> {
    let mut ids: Vec<FlowId> = flows.iter().map(|f| f.id).collect();
    let f = |id: &FlowId| &flows[id.index()];
    let by_req = |a: &FlowId, b: &FlowId| f(a).avail_req.partial_cmp(&f(b).avail_req).unwrap_or(Ordering::Equal);
    match policy {
        OrderPolicy::Input => {}
        OrderPolicy::ChainLengthDesc => ids.sort_by_key(|a| core::cmp::Reverse(f(a).chain_len())),
        OrderPolicy::ChainLengthAsc => ids.sort_by_key(|a| f(a).chain_len()),
        OrderPolicy::AvailDesc => ids.sort_by(|a, b| by_req(b, a)),
        OrderPolicy::AvailAsc => ids.sort_by(by_req),
    }
    ids
}

/// Assigns every flow; outcomes come back in flow-id order.
pub fn run_assignment(
    model: &mut Model,
    net: &Network,
    hops: &HopMatrix,
    profile: &DependencyProfile,
    indep: &IndependenceTable,
    config: &AssignConfig,
) -> Vec<AssignmentOutcome> {
    let assigner = Assigner {
        net,
        hops,
        profile,
        indep,
        config,
    };
    let mut outcomes: Vec<AssignmentOutcome> = processing_order(&model.flows, config.order)
        .into_iter()
        .map(|id| assigner.assign_flow(model, id))
        .collect();
    outcomes.sort_by_key(|o| o.flow);
    outcomes
}
