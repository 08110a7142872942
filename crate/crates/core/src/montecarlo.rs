//! Bernoulli availability simulation.
//!
//! Every replication draws its own ChaCha8 stream (`seed`, stream = the
//! replication index), so ranges of replications can run anywhere and merge
//! to the same totals. Node states are drawn first in node order, then the
//! states of the plan's instances in instance-id order; two plans over the
//! same network therefore see identical node failures.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::assignment::AssignmentOutcome;
use crate::ledger::CAPACITY_EPS;
use crate::model::{chain_availability, service_availability, FlowId, InstanceId, Model};

/// Normal quantile for a two-sided 95% interval.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub replications: u64,
    pub seed: u64,
    /// Also deny flows whose failover would overload a backup instance.
    pub contention_aware: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            replications: 1_000_000,
            seed: 0,
            contention_aware: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct SimInstance {
    id: InstanceId,
    avail: f64,
    host: u32,
    capacity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimFlow {
    pub flow: FlowId,
    pub rate: f64,
    /// Indices into the plan's instance table.
    pub primary: Vec<u32>,
    pub backups: Vec<Vec<u32>>,
}

/// `(flow, rate, primary chain, backup chains)`.
pub type FlowChains = (FlowId, f64, Vec<InstanceId>, Vec<Vec<InstanceId>>);

/// The elements a simulation samples: nodes, the instances some flow uses,
/// and each flow's chains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimPlan {
    node_avail: Vec<f64>,
    instances: Vec<SimInstance>,
    flows: Vec<SimFlow>,
}

impl SimPlan {
    /// Plan from a model and assignment outcomes. Rejected flows keep only
    /// their primary chain.
    pub fn new(node_avail: Vec<f64>, model: &Model, outcomes: &[AssignmentOutcome]) -> Self {
        let chains = |f: FlowId| -> Vec<Vec<InstanceId>> {
            outcomes
                .iter()
                .find(|o| o.flow == f)
                .map(|o| o.chains.iter().map(|c| c.instances.clone()).collect())
                .unwrap_or_default()
        };
        let specs: Vec<FlowChains> = model
            .flows
            .iter()
            .map(|f| {
                let primary = f.primary.as_ref().map(|b| b.instances.clone()).unwrap_or_default();
                (f.id, f.rate, primary, chains(f.id))
            })
            .collect();
        Self::from_chains(node_avail, model, &specs)
    }

    /// Plan from explicit `(flow, rate, primary, backups)` tuples.
    pub fn from_chains(
        node_avail: Vec<f64>,
        model: &Model,
        flows: &[FlowChains],
    ) -> Self {
        let mut used: Vec<InstanceId> = flows
            .iter()
            .flat_map(|(_, _, p, b)| p.iter().chain(b.iter().flatten()).copied())
            .collect();
        used.sort();
        used.dedup();
        let local = |i: &InstanceId| used.binary_search(i).unwrap() as u32;
        let instances = used
            .iter()
            .map(|&i| {
                let inst = model.instance(i);
                SimInstance {
                    id: i,
                    avail: inst.avail,
                    host: inst.host.0,
                    capacity: inst.capacity(),
                }
            })
            .collect();
        let flows = flows
            .iter()
            .map(|(flow, rate, p, b)| SimFlow {
                flow: *flow,
                rate: *rate,
                primary: p.iter().map(local).collect(),
                backups: b.iter().map(|c| c.iter().map(local).collect()).collect(),
            })
            .collect();
        Self {
            node_avail,
            instances,
            flows,
        }
    }

    pub fn flows(&self) -> &[SimFlow] {
        &self.flows
    }

    fn chain_avail(&self, chain: &[u32]) -> f64 {
        chain_availability(
            chain.iter().map(|&k| {
                let i = &self.instances[k as usize];
                (i.avail, crate::NodeId(i.host))
            }),
            |n| self.node_avail[n.index()],
        )
    }

    /// Closed-form service availability of every flow under independent
    /// failures.
    pub fn analytic(&self) -> Vec<f64> {
        self.flows
            .iter()
            .map(|f| {
                let b: Vec<f64> = f.backups.iter().map(|c| self.chain_avail(c)).collect();
                service_availability(self.chain_avail(&f.primary), &b)
            })
            .collect()
    }
}

/// Uniform draw in [0, 1) from the top 53 bits.
#[inline]
fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Reusable per-replication state.
#[derive(Clone, Debug, Default)]
pub struct Scratch {
    node_up: Vec<bool>,
    inst_up: Vec<bool>,
    load: Vec<f64>,
    /// Backup chain each flow fails over to, if any.
    using: Vec<Option<u32>>,
}

/// Served indicator of every flow in one replication; the contention-aware
/// indicator is written to `contended` when given.
pub fn replicate(
    plan: &SimPlan,
    seed: u64,
    r: u64,
    scratch: &mut Scratch,
    served: &mut [bool],
    contended: Option<&mut [bool]>,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r);
    scratch.node_up.clear();
    scratch
        .node_up
        .extend(plan.node_avail.iter().map(|&a| unit(&mut rng) < a));
    scratch.inst_up.clear();
    for i in &plan.instances {
        let up = unit(&mut rng) < i.avail;
        scratch.inst_up.push(up && scratch.node_up[i.host as usize]);
    }
    let chain_up = |c: &[u32], s: &Scratch| c.iter().all(|&k| s.inst_up[k as usize]);
    scratch.using.clear();
    for (k, f) in plan.flows.iter().enumerate() {
        if chain_up(&f.primary, scratch) {
            served[k] = true;
            scratch.using.push(None);
        } else {
            let b = f.backups.iter().position(|c| chain_up(c, scratch));
            served[k] = b.is_some();
            scratch.using.push(b.map(|b| b as u32));
        }
    }
    let Some(contended) = contended else {
        return;
    };
    scratch.load.clear();
    scratch.load.resize(plan.instances.len(), 0.0);
    for (f, u) in plan.flows.iter().zip(&scratch.using) {
        if let Some(b) = u {
            for &i in &f.backups[*b as usize] {
                scratch.load[i as usize] += f.rate;
            }
        }
    }
    for (k, f) in plan.flows.iter().enumerate() {
        contended[k] = served[k]
            && match scratch.using[k] {
                None => true,
                Some(b) => f.backups[b as usize]
                    .iter()
                    .all(|&i| scratch.load[i as usize] <= plan.instances[i as usize].capacity + CAPACITY_EPS),
            };
    }
}

/// Served counts over a range of replications; merges by addition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub replications: u64,
    pub served: Vec<u64>,
    pub contended: Option<Vec<u64>>,
}

impl Tally {
    pub fn empty(flows: usize, contention_aware: bool) -> Self {
        Self {
            replications: 0,
            served: vec![0; flows],
            contended: contention_aware.then(|| vec![0; flows]),
        }
    }

    pub fn merge(mut self, other: Tally) -> Tally {
        self.replications += other.replications;
        for (a, b) in self.served.iter_mut().zip(other.served) {
            *a += b;
        }
        if let (Some(a), Some(b)) = (self.contended.as_mut(), other.contended) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self
    }
}

pub fn simulate_range(plan: &SimPlan, config: &SimConfig, range: Range<u64>) -> Tally {
    let n = plan.flows.len();
    let mut tally = Tally::empty(n, config.contention_aware);
    let mut scratch = Scratch::default();
    let mut served = vec![false; n];
    let mut contended = vec![false; n];
    for r in range {
        let c = config.contention_aware.then_some(contended.as_mut_slice());
        replicate(plan, config.seed, r, &mut scratch, &mut served, c);
        for (t, &s) in tally.served.iter_mut().zip(&served) {
            *t += s as u64;
        }
        if let Some(t) = tally.contended.as_mut() {
            for (t, &s) in t.iter_mut().zip(&contended) {
                *t += s as u64;
            }
        }
        tally.replications += 1;
    }
    tally
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowEstimate {
    pub flow: FlowId,
    pub estimate: f64,
    /// 95% normal-approximation half-width.
    pub half_width: f64,
    pub analytic: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub contended: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub unavailability: f64,
    pub fraction: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NinesShare {
    pub nines: u32,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub replications: u64,
    pub seed: u64,
    pub flows: Vec<FlowEstimate>,
    /// Empirical CDF of per-flow unavailability.
    pub cdf: Vec<CdfPoint>,
    /// Fraction of flows at or above each nines level, 1 through 6.
    pub nines: Vec<NinesShare>,
}

pub fn half_width(p: f64, replications: u64) -> f64 {
    Z95 * libm::sqrt(p * (1.0 - p) / replications as f64)
}

pub fn nines_level(k: u32) -> f64 {
    1.0 - libm::pow(10.0, -(k as f64))
}

impl SimReport {
    pub fn from_tally(plan: &SimPlan, config: &SimConfig, tally: &Tally) -> Self {
        let r = tally.replications.max(1);
        let analytic = plan.analytic();
        let flows: Vec<FlowEstimate> = plan
            .flows
            .iter()
            .enumerate()
            .map(|(k, f)| {
                let p = tally.served[k] as f64 / r as f64;
                FlowEstimate {
                    flow: f.flow,
                    estimate: p,
                    half_width: half_width(p, r),
                    analytic: analytic[k],
                    contended: tally.contended.as_ref().map(|c| c[k] as f64 / r as f64),
                }
            })
            .collect();
        let mut un: Vec<f64> = flows.iter().map(|f| 1.0 - f.estimate).collect();
        un.sort_by(f64::total_cmp);
        let n = un.len();
        let cdf = un
            .iter()
            .enumerate()
            .map(|(k, &u)| CdfPoint {
                unavailability: u,
                fraction: (k + 1) as f64 / n as f64,
            })
            .collect();
        let nines = (1..=6)
            .map(|k| NinesShare {
                nines: k,
                fraction: if n == 0 {
                    0.0
                } else {
                    flows.iter().filter(|f| f.estimate >= nines_level(k)).count() as f64 / n as f64
                },
            })
            .collect();
        Self {
            replications: tally.replications,
            seed: config.seed,
            flows,
            cdf,
            nines,
        }
    }

    pub fn fraction_at_least(&self, k: u32) -> f64 {
        self.nines
            .iter()
            .find(|s| s.nines == k)
            .map_or(0.0, |s| s.fraction)
    }
}

/// Single-threaded simulation over all replications.
pub fn simulate(plan: &SimPlan, config: &SimConfig) -> SimReport {
    let tally = simulate_range(plan, config, 0..config.replications.max(1));
    SimReport::from_tally(plan, config, &tally)
}

/// Both plans under the same seed, hence the same node draws.
pub fn compare_placements(a: &SimPlan, b: &SimPlan, config: &SimConfig) -> (SimReport, SimReport) {
    (simulate(a, config), simulate(b, config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::ReservationMode;
    use crate::model::{NfType, NfTypeId, Role};
    use crate::topology::{fixtures, Network, NodeId};
    use alloc::string::ToString;
    use proptest::prelude::*;

    fn setup(node_avail: f64, inst_avail: f64, nodes: usize) -> (Network, Model) {
        let mut net = fixtures::mesh(nodes);
        for n in 0..nodes as u32 {
            net.set_avail(NodeId(n), node_avail).unwrap();
        }
        let model = Model::new(
            vec![NfType {
                name: "FW".to_string(),
                cores: 1,
                memory_gb: 0,
                capacity: 1.0,
                avail: inst_avail,
            }],
            vec![0.999],
            ReservationMode::Shared,
        );
        (net, model)
    }

    fn avails(net: &Network) -> Vec<f64> {
        net.node_ids().map(|n| net.avail(n)).collect()
    }

    fn inst(model: &mut Model, net: &Network, host: u32, role: Role) -> InstanceId {
        let a = model.nf(NfTypeId(0)).avail;
        model.add_instance(net, NfTypeId(0), NodeId(host), role, a).unwrap()
    }

    #[test]
    fn perfect_elements_always_serve() {
        let (net, mut model) = setup(1.0, 1.0, 3);
        let p = inst(&mut model, &net, 0, Role::Primary);
        let plan = SimPlan::from_chains(avails(&net), &model, &[(FlowId(0), 1.0, vec![p], vec![])]);
        let rep = simulate(&plan, &SimConfig { replications: 1000, seed: 1, contention_aware: false });
        assert_eq!(rep.flows[0].estimate, 1.0);
        assert_eq!(rep.fraction_at_least(6), 1.0);
    }

    #[test]
    fn single_primary_matches_bernoulli_mean() {
        let (net, mut model) = setup(0.999, 1.0, 2);
        let p = inst(&mut model, &net, 0, Role::Primary);
        let plan = SimPlan::from_chains(avails(&net), &model, &[(FlowId(0), 1.0, vec![p], vec![])]);
        let r = 1_000_000;
        let rep = simulate(&plan, &SimConfig { replications: r, seed: 7, contention_aware: false });
        let tol = 3.0 * libm::sqrt(0.999 * 0.001 / r as f64);
        assert!((rep.flows[0].estimate - 0.999).abs() <= tol, "{}", rep.flows[0].estimate);
        assert!((rep.flows[0].analytic - 0.999).abs() < 1e-15);
    }

    #[test]
    fn ranges_merge_to_the_whole() {
        let (net, mut model) = setup(0.9, 0.95, 4);
        let p = inst(&mut model, &net, 0, Role::Primary);
        let b = inst(&mut model, &net, 1, Role::Backup);
        let plan = SimPlan::from_chains(avails(&net), &model, &[(FlowId(0), 1.0, vec![p], vec![vec![b]])]);
        let cfg = SimConfig { replications: 5000, seed: 3, contention_aware: true };
        let whole = simulate_range(&plan, &cfg, 0..5000);
        let parts = simulate_range(&plan, &cfg, 0..1234).merge(simulate_range(&plan, &cfg, 1234..5000));
        assert_eq!(whole, parts);
        assert_eq!(simulate(&plan, &cfg), simulate(&plan, &cfg));
    }

    #[test]
    fn identical_plans_identical_reports() {
        let (net, mut model) = setup(0.99, 0.99, 3);
        let p = inst(&mut model, &net, 0, Role::Primary);
        let plan = SimPlan::from_chains(avails(&net), &model, &[(FlowId(0), 1.0, vec![p], vec![])]);
        let cfg = SimConfig { replications: 2000, seed: 11, contention_aware: false };
        let (a, b) = compare_placements(&plan, &plan.clone(), &cfg);
        assert_eq!(a, b);
    }

    #[test]
    fn contention_denies_overloaded_failover() {
        // two flows share one backup of capacity 1, each at rate 1; both
        // primaries always down
        let (mut net, mut model) = setup(1.0, 1.0, 3);
        let p1 = inst(&mut model, &net, 0, Role::Primary);
        let p2 = inst(&mut model, &net, 1, Role::Primary);
        let b = inst(&mut model, &net, 2, Role::Backup);
        net.set_avail(NodeId(0), 1e-12).unwrap();
        net.set_avail(NodeId(1), 1e-12).unwrap();
        let plan = SimPlan::from_chains(
            avails(&net),
            &model,
            &[(FlowId(0), 1.0, vec![p1], vec![vec![b]]), (FlowId(1), 1.0, vec![p2], vec![vec![b]])],
        );
        let rep = simulate(&plan, &SimConfig { replications: 100, seed: 0, contention_aware: true });
        assert_eq!(rep.flows[0].estimate, 1.0);
        assert_eq!(rep.flows[0].contended, Some(0.0));
    }

    #[test]
    fn cdf_is_monotone() {
        let (net, mut model) = setup(0.99, 0.995, 5);
        let mut specs = Vec::new();
        for k in 0..5u32 {
            let p = inst(&mut model, &net, k, Role::Primary);
            specs.push((FlowId(k), 1.0, vec![p], vec![]));
        }
        let plan = SimPlan::from_chains(avails(&net), &model, &specs);
        let rep = simulate(&plan, &SimConfig { replications: 3000, seed: 5, contention_aware: false });
        for w in rep.cdf.windows(2) {
            assert!(w[0].unavailability <= w[1].unavailability && w[0].fraction < w[1].fraction);
        }
        assert_eq!(rep.cdf.last().unwrap().fraction, 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        /// Under common random numbers an extra backup chain never turns a
        /// served replication into an unserved one.
        #[test]
        fn extra_backup_never_hurts(seed in any::<u64>(), na in 0.5f64..1.0, ia in 0.5f64..1.0) {
            let (net, mut model) = setup(na, ia, 4);
            let p = inst(&mut model, &net, 0, Role::Primary);
            let b1 = inst(&mut model, &net, 1, Role::Backup);
            let b2 = inst(&mut model, &net, 2, Role::Backup);
            let more = SimPlan::from_chains(avails(&net), &model, &[(FlowId(0), 1.0, vec![p], vec![vec![b1], vec![b2]])]);
            // same instance table, so the draws line up exactly
            let mut base = more.clone();
            base.flows[0].backups.truncate(1);
            let mut s = Scratch::default();
            for r in 0..200 {
                let mut x = [false];
                let mut y = [false];
                replicate(&base, seed, r, &mut s, &mut x, None);
                replicate(&more, seed, r, &mut s, &mut y, None);
                prop_assert!(!x[0] || y[0]);
            }
        }

        #[test]
        fn estimates_in_unit_interval(seed in any::<u64>(), na in 0.01f64..=1.0) {
            let (net, mut model) = setup(na, 0.9, 3);
            let p = inst(&mut model, &net, 0, Role::Primary);
            let plan = SimPlan::from_chains(avails(&net), &model, &[(FlowId(0), 1.0, vec![p], vec![])]);
            let rep = simulate(&plan, &SimConfig { replications: 200, seed, contention_aware: false });
            prop_assert!((0.0..=1.0).contains(&rep.flows[0].estimate));
        }
    }
}
