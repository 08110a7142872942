//! Greedy primary-chain provisioning.
//!
//! Each flow is routed on a shortest path. Each NF of its chain reuses a
//! primary instance of the same type further along the path when one still
//! has capacity, otherwise a new instance goes on the path node with the
//! most free cores. When no path node can host, the flow detours to the
//! same-type primary with room closest to both endpoints, or failing that
//! to the hostable node closest to both endpoints.

use alloc::vec::Vec;

use crate::error::ProvisionError;
use crate::model::{FlowId, InstanceId, Model, NfTypeId, PrimaryBinding, Role};
use crate::placement::NodeBudget;
use crate::topology::{shortest_path, HopMatrix, Network, NodeId};

/// Binds primaries for every unbound flow in id order. `instance_avail`
/// supplies the availability of each newly created instance.
pub fn provision_primaries(
    model: &mut Model,
    net: &Network,
    hops: &HopMatrix,
    budget: &mut NodeBudget,
    mut instance_avail: impl FnMut(NfTypeId) -> f64,
) -> Result<(), ProvisionError> {
    for k in 0..model.flows.len() {
        if model.flows[k].primary.is_some() {
            continue;
        }
        let id = model.flows[k].id;
        provision_flow(model, net, hops, budget, id, &mut instance_avail)?;
    }
    Ok(())
}

fn provision_flow(
    model: &mut Model,
    net: &Network,
    hops: &HopMatrix,
    budget: &mut NodeBudget,
    flow: FlowId,
    instance_avail: &mut impl FnMut(NfTypeId) -> f64,
) -> Result<(), ProvisionError> {
    let f = model.flow(flow).clone();
    let mut path = shortest_path(net, f.src, f.dst).ok_or(ProvisionError::NoRoute(flow.0))?;
    let never = |_: FlowId, _: FlowId| false;
    let mut instances: Vec<InstanceId> = Vec::with_capacity(f.chain.len());
    // position on the path of the previous NF
    let mut at = 0usize;
    for &nf in &f.chain {
        let ty = model.nf(nf).clone();
        let reusable = |model: &Model, from: usize| {
            path[from..].iter().enumerate().find_map(|(off, &n)| {
                model
                    .primaries()
                    .find(|i| {
                        i.nf == nf
                            && i.host == n
                            && !instances.contains(&i.id)
                            && i.ledger.admissible(flow, f.rate, &never).is_ok()
                    })
                    .map(|i| (from + off, i.id))
            })
        };
        let fresh = |from: usize| {
            path[from..]
                .iter()
                .enumerate()
                .filter(|(_, &n)| !net.is_end(n) && budget.fits(n, ty.cores, ty.memory_gb))
                .max_by(|(a, &x), (b, &y)| budget.cores[x.index()].cmp(&budget.cores[y.index()]).then(b.cmp(a)))
                .map(|(off, &n)| (from + off, n))
        };
        if let Some((pos, inst)) = reusable(model, at) {
            at = pos;
            instances.push(inst);
        } else if let Some((pos, node)) = fresh(at).or_else(|| fresh(0)) {
            at = pos.max(at);
            let inst = model.add_instance(net, nf, node, Role::Primary, instance_avail(nf))?;
            budget.take(node, ty.cores, ty.memory_gb);
            instances.push(inst);
        } else {
            let detour = |n: NodeId| Some(hops.get(f.src, n).hops()? + hops.get(n, f.dst).hops()?);
            let shared = model
                .primaries()
                .filter(|i| {
                    i.nf == nf && !instances.contains(&i.id) && i.ledger.admissible(flow, f.rate, &never).is_ok()
                })
                .filter_map(|i| Some((detour(i.host)?, i.host, i.id)))
                .min();
            let (node, inst) = match shared {
                Some((_, node, inst)) => (node, inst),
                None => {
                    let node = detour_host(net, budget, ty.cores, ty.memory_gb, detour).ok_or_else(|| {
                        ProvisionError::NoHost {
                            flow: flow.0,
                            nf: ty.name.clone(),
                        }
                    })?;
                    let inst = model.add_instance(net, nf, node, Role::Primary, instance_avail(nf))?;
                    budget.take(node, ty.cores, ty.memory_gb);
                    (node, inst)
                }
            };
            instances.push(inst);
            path = via(net, &path, at, node, f.dst).ok_or(ProvisionError::NoRoute(flow.0))?;
            at = path.iter().rposition(|&n| n == node).unwrap_or(0);
        }
    }
    for &i in &instances {
        model.instances[i.index()]
            .ledger
            .reserve(flow, f.rate, &never)
            .map_err(|_| ProvisionError::NoHost {
                flow: flow.0,
                nf: model.nf(model.instance(i).nf).name.clone(),
            })?;
    }
    model.bind_primary(net, flow, PrimaryBinding { instances, path })?;
    Ok(())
}

/// Hostable node with the shortest detour, ties by id.
fn detour_host(
    net: &Network,
    budget: &NodeBudget,
    cores: u32,
    memory_gb: u32,
    detour: impl Fn(NodeId) -> Option<u32>,
) -> Option<NodeId> {
    net.hosting_nodes()
        .filter(|&n| budget.fits(n, cores, memory_gb))
        .filter_map(|n| Some((detour(n)?, n)))
        .min()
        .map(|(_, n)| n)
}

/// Keeps `path[..=at]`, then goes to `mid` and on to `dst` on shortest
/// paths.
fn via(net: &Network, path: &[NodeId], at: usize, mid: NodeId, dst: NodeId) -> Option<Vec<NodeId>> {
    let mut p = path[..=at].to_vec();
    let leg = shortest_path(net, path[at], mid)?;
    p.extend(leg.into_iter().skip(1));
    let rest = shortest_path(net, mid, dst)?;
    p.extend(rest.into_iter().skip(1));
    Some(p)
}
