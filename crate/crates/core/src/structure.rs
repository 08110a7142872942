//! Node dependency index, critical sets and structurally correlated sets.
//!
//! `DI(i->j|n)` measures how much the shortest path from `i` to `j` suffers
//! when `n` fails: the drop in inverse hop distance, or 1 when `j` becomes
//! unreachable. `DI(i|n)` averages it over every other `j` (divisor
//! `N - 2`). A node's critical set holds the nodes it depends on above the
//! threshold; the correlated set widens that to both directions plus the
//! cascade through critical nodes.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::StructureError;
use crate::topology::{bfs, hop_matrix, hop_matrix_without, Distance, HopMatrix, Network, NodeId};

/// Dependency of the `i -> j` path on `n`, given intact and `n`-removed
/// distances. `None` when `i` and `j` are not connected in the intact graph.
#[inline]
fn path_term(full: Distance, without: Distance) -> Option<f64> {
    let d = full.hops()?;
    Some(match without {
        Distance::Hops(d2) => 1.0 / d as f64 - 1.0 / d2 as f64,
        Distance::Unreachable => 1.0,
    })
}

pub fn path_dependency(net: &Network, i: NodeId, j: NodeId, n: NodeId) -> Result<f64, StructureError> {
    if i == j || i == n || j == n {
        return Err(StructureError::NotDistinct);
    }
    let full = bfs(net, i, None);
    let cut = bfs(net, i, Some(n));
    path_term(full[j.index()], cut[j.index()]).ok_or(StructureError::Disconnected)
}

pub fn node_dependency(net: &Network, i: NodeId, n: NodeId) -> Result<f64, StructureError> {
    if net.len() < 3 {
        return Err(StructureError::TooFewNodes(net.len()));
    }
    if i == n {
        return Err(StructureError::NotDistinct);
    }
    let full = bfs(net, i, None);
    let cut = bfs(net, i, Some(n));
    Ok(average(net.len(), i, n, |j| path_term(full[j], cut[j])))
}

fn average(count: usize, i: NodeId, n: NodeId, term: impl Fn(usize) -> Option<f64>) -> f64 {
    let mut sum = 0.0;
    for j in 0..count {
        if j == i.index() || j == n.index() {
            continue;
        }
        sum += term(j).unwrap_or(0.0);
    }
    sum / (count - 2) as f64
}

/// Full `DI(i|n)` table. Columns for end nodes stay zero: they never host
/// instances, so they are not evaluated as the failed node.
#[derive(Clone, Debug, PartialEq)]
pub struct DependencyTable {
    n: usize,
    /// Row-major, `di[i * n + removed]`.
    di: Vec<f64>,
}

impl DependencyTable {
    pub fn compute(net: &Network) -> Self {
        let full = hop_matrix(net);
        let columns = net.node_ids().map(|n| dependency_column(net, &full, n)).collect();
        Self::from_columns(net.len(), columns)
    }

    /// Assembles the table from per-removed-node columns, e.g. computed on
    /// parallel workers with [`dependency_column`].
    pub fn from_columns(n: usize, columns: Vec<Vec<f64>>) -> Self {
        assert_eq!(columns.len(), n);
        let mut di = vec![0.0; n * n];
        for (removed, col) in columns.into_iter().enumerate() {
            assert_eq!(col.len(), n);
            for (i, v) in col.into_iter().enumerate() {
                di[i * n + removed] = v;
            }
        }
        Self { n, di }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `DI(i|n)`.
    pub fn get(&self, i: NodeId, n: NodeId) -> f64 {
        self.di[i.index() * self.n + n.index()]
    }

    /// `C(n) = { i != n : DI(n|i) > t }`.
    pub fn critical_set(&self, n: NodeId, threshold: f64) -> BTreeSet<NodeId> {
        (0..self.n as u32)
            .map(NodeId)
            .filter(|&i| i != n && self.get(n, i) > threshold)
            .collect()
    }
}

/// `DI(i|removed)` for every `i`, or all zeros when `removed` is an end node
/// or the network is too small.
pub fn dependency_column(net: &Network, full: &HopMatrix, removed: NodeId) -> Vec<f64> {
    let n = net.len();
    let mut col = vec![0.0; n];
    if n < 3 || net.is_end(removed) {
        return col;
    }
    let cut = hop_matrix_without(net, removed).expect("removed node belongs to net");
    for i in net.node_ids().filter(|&i| i != removed) {
        let full_row = full.row(i);
        let cut_row = cut.row(i);
        col[i.index()] = average(n, i, removed, |j| path_term(full_row[j], cut_row[j]));
    }
    col
}

/// Critical and correlated sets for every node at one threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct DependencyProfile {
    pub table: DependencyTable,
    pub threshold: f64,
    pub depth: u32,
    critical: Vec<BTreeSet<NodeId>>,
    correlated: Vec<BTreeSet<NodeId>>,
}

pub const DEFAULT_CASCADE_DEPTH: u32 = 2;

impl DependencyProfile {
    pub fn build(net: &Network, threshold: f64, depth: u32) -> Result<Self, StructureError> {
        Self::from_table(DependencyTable::compute(net), threshold, depth)
    }

    pub fn from_table(table: DependencyTable, threshold: f64, depth: u32) -> Result<Self, StructureError> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(StructureError::BadThreshold(alloc::format!("{threshold}")));
        }
        let n = table.len();
        let critical: Vec<_> = (0..n as u32)
            .map(|v| table.critical_set(NodeId(v), threshold))
            .collect();
        let correlated = (0..n as u32)
            .map(|v| correlate(&critical, NodeId(v), depth))
            .collect();
        Ok(Self {
            table,
            threshold,
            depth,
            critical,
            correlated,
        })
    }

    pub fn critical(&self, n: NodeId) -> &BTreeSet<NodeId> {
        &self.critical[n.index()]
    }

    pub fn correlated(&self, n: NodeId) -> &BTreeSet<NodeId> {
        &self.correlated[n.index()]
    }

    pub fn len(&self) -> usize {
        self.critical.len()
    }

    pub fn is_empty(&self) -> bool {
        self.critical.is_empty()
    }

    /// Union of the correlated sets of `nodes`.
    pub fn correlated_union(&self, nodes: impl IntoIterator<Item = NodeId>) -> BTreeSet<NodeId> {
        let mut out = BTreeSet::new();
        for n in nodes {
            out.extend(self.correlated(n).iter().copied());
        }
        out
    }

    /// Fraction of nodes that appear in at least one correlated set.
    pub fn coverage(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let all = self.correlated_union((0..self.len() as u32).map(NodeId));
        all.len() as f64 / self.len() as f64
    }
}

/// Correlated set of `n`: `C(n)`, every `i` with `n` in `C(i)`, and the
/// forward cascade `C(i)` for `i` in `C(n)` (repeated up to `depth` levels).
pub fn correlate(critical: &[BTreeSet<NodeId>], n: NodeId, depth: u32) -> BTreeSet<NodeId> {
    let mut out: BTreeSet<NodeId> = critical[n.index()].clone();
    for (i, c) in critical.iter().enumerate() {
        if i != n.index() && c.contains(&n) {
            out.insert(NodeId(i as u32));
        }
    }
    let mut frontier = critical[n.index()].clone();
    for _ in 1..depth.max(1) {
        let mut next = BTreeSet::new();
        for i in &frontier {
            for &j in &critical[i.index()] {
                if out.insert(j) {
                    next.insert(j);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    out.remove(&n);
    out
}

pub fn critical_set(net: &Network, n: NodeId, threshold: f64) -> BTreeSet<NodeId> {
    DependencyTable::compute(net).critical_set(n, threshold)
}

pub fn correlated_set(net: &Network, n: NodeId, threshold: f64) -> Result<BTreeSet<NodeId>, StructureError> {
    let profile = DependencyProfile::build(net, threshold, DEFAULT_CASCADE_DEPTH)?;
    Ok(profile.correlated(n).clone())
}
