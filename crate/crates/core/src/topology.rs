//! Undirected network graph and the hop-count kernels the rest of the crate
//! builds on.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::TopologyError;

/// Dense node handle, assigned in first-seen order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Per-node attributes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    pub cores: u32,
    pub memory_gb: u32,
    pub avail: f64,
    /// Flow endpoint; never hosts NF instances.
    pub end: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Network {
    nodes: Vec<NodeSpec>,
    index: BTreeMap<String, NodeId>,
    adj: Vec<Vec<NodeId>>,
    links: Vec<(NodeId, NodeId)>,
    link_set: BTreeSet<(NodeId, NodeId)>,
}

impl Network {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, spec: NodeSpec) -> Result<NodeId, TopologyError> {
        if self.index.contains_key(&spec.name) {
            return Err(TopologyError::DuplicateNode(spec.name));
        }
        check_avail(&spec.name, spec.avail)?;
        let id = NodeId(self.nodes.len() as u32);
        self.index.insert(spec.name.clone(), id);
        self.nodes.push(spec);
        self.adj.push(Vec::new());
        Ok(id)
    }

    /// Replaces the attributes of an existing node, keeping its name and id.
    pub fn update_node(
        &mut self,
        id: NodeId,
        cores: u32,
        memory_gb: u32,
        avail: f64,
        end: bool,
    ) -> Result<(), TopologyError> {
        let spec = self
            .nodes
            .get_mut(id.index())
            .ok_or_else(|| TopologyError::UnknownNode(alloc::format!("{id}")))?;
        check_avail(&spec.name, avail)?;
        spec.cores = cores;
        spec.memory_gb = memory_gb;
        spec.avail = avail;
        spec.end = end;
        Ok(())
    }

    pub fn set_end(&mut self, id: NodeId, end: bool) {
        self.nodes[id.index()].end = end;
    }

    pub fn set_avail(&mut self, id: NodeId, avail: f64) -> Result<(), TopologyError> {
        check_avail(&self.nodes[id.index()].name, avail)?;
        self.nodes[id.index()].avail = avail;
        Ok(())
    }

    pub fn add_link(&mut self, a: NodeId, b: NodeId) -> Result<(), TopologyError> {
        let n = self.nodes.len();
        for x in [a, b] {
            if x.index() >= n {
                return Err(TopologyError::UnknownNode(alloc::format!("{x}")));
            }
        }
        if a == b {
            return Err(TopologyError::SelfLoop(self.name(a).into()));
        }
        let key = if a < b { (a, b) } else { (b, a) };
        if !self.link_set.insert(key) {
            return Err(TopologyError::DuplicateLink(
                self.name(a).into(),
                self.name(b).into(),
            ));
        }
        self.links.push((a, b));
        self.adj[a.index()].push(b);
        self.adj[b.index()].push(a);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn links(&self) -> &[(NodeId, NodeId)] {
        &self.links
    }

    pub fn has_link(&self, a: NodeId, b: NodeId) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.link_set.contains(&key)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn node(&self, id: NodeId) -> &NodeSpec {
        &self.nodes[id.index()]
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.nodes[id.index()].name
    }

    pub fn id(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn avail(&self, id: NodeId) -> f64 {
        self.nodes[id.index()].avail
    }

    pub fn is_end(&self, id: NodeId) -> bool {
        self.nodes[id.index()].end
    }

    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.adj[id.index()]
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.adj[id.index()].len()
    }

    /// Nodes allowed to host NF instances.
    pub fn hosting_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.node_ids().filter(move |&n| !self.is_end(n))
    }

    pub fn end_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.node_ids().filter(move |&n| self.is_end(n))
    }

    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        bfs(self, NodeId(0), None)
            .iter()
            .all(|d| d.is_reachable())
    }
}

fn check_avail(name: &str, avail: f64) -> Result<(), TopologyError> {
    if !(avail > 0.0 && avail <= 1.0) {
        return Err(TopologyError::InvalidAvailability {
            node: name.into(),
            value: avail,
        });
    }
    Ok(())
}

/// Shortest-path hop count between two nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Distance {
    Hops(u32),
    Unreachable,
}

impl Distance {
    pub fn hops(self) -> Option<u32> {
        match self {
            Distance::Hops(h) => Some(h),
            Distance::Unreachable => None,
        }
    }

    pub fn is_reachable(self) -> bool {
        matches!(self, Distance::Hops(_))
    }
}

/// All-pairs hop counts, indexed by [`NodeId`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HopMatrix {
    n: usize,
    dist: Vec<Distance>,
}

impl HopMatrix {
    pub fn get(&self, i: NodeId, j: NodeId) -> Distance {
        self.dist[i.index() * self.n + j.index()]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn row(&self, i: NodeId) -> &[Distance] {
        &self.dist[i.index() * self.n..(i.index() + 1) * self.n]
    }
}

/// Single-source BFS, optionally treating `removed` as absent. Distances
/// to and from the removed node are unreachable.
pub fn bfs(net: &Network, src: NodeId, removed: Option<NodeId>) -> Vec<Distance> {
    let mut dist = vec![Distance::Unreachable; net.len()];
    if Some(src) == removed {
        return dist;
    }
    let mut queue = VecDeque::new();
    dist[src.index()] = Distance::Hops(0);
    queue.push_back((src, 0u32));
    while let Some((u, d)) = queue.pop_front() {
        for &v in net.neighbors(u) {
            if Some(v) == removed || dist[v.index()].is_reachable() {
                continue;
            }
            dist[v.index()] = Distance::Hops(d + 1);
            queue.push_back((v, d + 1));
        }
    }
    dist
}

fn all_pairs(net: &Network, removed: Option<NodeId>) -> HopMatrix {
    let n = net.len();
    let mut dist = Vec::with_capacity(n * n);
    for src in net.node_ids() {
        dist.extend(bfs(net, src, removed));
    }
    HopMatrix { n, dist }
}

pub fn hop_matrix(net: &Network) -> HopMatrix {
    all_pairs(net, None)
}

/// Hop matrix of the subgraph induced on all nodes except `removed`. The
/// removed node keeps its row and column, filled with `Unreachable`.
pub fn hop_matrix_without(net: &Network, removed: NodeId) -> Result<HopMatrix, TopologyError> {
    if removed.index() >= net.len() {
        return Err(TopologyError::UnknownNode(alloc::format!("{removed}")));
    }
    Ok(all_pairs(net, Some(removed)))
}

/// BFS shortest path from `src` to `dst` (inclusive). Among equal-length
/// paths the one through lower node ids is returned.
pub fn shortest_path(net: &Network, src: NodeId, dst: NodeId) -> Option<Vec<NodeId>> {
    let n = net.len();
    let mut parent: Vec<Option<NodeId>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    seen[src.index()] = true;
    queue.push_back(src);
    while let Some(u) = queue.pop_front() {
        if u == dst {
            break;
        }
        let mut next: Vec<NodeId> = net.neighbors(u).to_vec();
        next.sort_unstable();
        for v in next {
            if !seen[v.index()] {
                seen[v.index()] = true;
                parent[v.index()] = Some(u);
                queue.push_back(v);
            }
        }
    }
    if !seen[dst.index()] {
        return None;
    }
    let mut path = vec![dst];
    let mut cur = dst;
    while let Some(p) = parent[cur.index()] {
        path.push(p);
        cur = p;
    }
    path.reverse();
    Some(path)
}
