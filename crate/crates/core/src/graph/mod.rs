//! Sparse undirected graphs, normalized propagation operators, node deletion
//! and the synthetic contextual stochastic block model.

mod csbm;
mod io;
mod nodeset;

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

pub use csbm::{generate_csbm, CsbmParams};
pub use io::{read_edge_list, write_edge_list};
pub use nodeset::NodeSet;

/// Immutable undirected graph in CSR form. Neighbor lists are sorted and
/// contain no duplicates and no self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    node_ids: Option<Vec<u64>>,
}

impl Graph {
    /// Builds a graph from undirected pairs. Each pair may be listed in either
    /// or both directions; duplicates collapse.
    pub fn from_edges(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
        for &(u, v) in edges {
            for index in [u, v] {
                if index >= num_nodes {
                    return Err(Error::NodeOutOfRange { index, num_nodes });
                }
            }
            if u == v {
                return Err(Error::InvalidInput(format!("self-loop on node {u}")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        Ok(Self::from_adjacency(adjacency))
    }

    fn from_adjacency(mut adjacency: Vec<Vec<usize>>) -> Self {
        let mut offsets = Vec::with_capacity(adjacency.len() + 1);
        offsets.push(0);
        let mut neighbors = Vec::new();
        for list in adjacency.iter_mut() {
            list.sort_unstable();
            list.dedup();
            neighbors.extend_from_slice(list);
            offsets.push(neighbors.len());
        }
        Graph {
            offsets,
            neighbors,
            node_ids: None,
        }
    }

    /// Attaches stable external identifiers (one per node).
    pub fn with_node_ids(mut self, ids: Vec<u64>) -> Result<Self> {
        if ids.len() != self.num_nodes() {
            return Err(Error::DimensionMismatch(format!(
                "{} node ids for {} nodes",
                ids.len(),
                self.num_nodes()
            )));
        }
        self.node_ids = Some(ids);
        Ok(self)
    }

    pub fn node_ids(&self) -> Option<&[u64]> {
        self.node_ids.as_deref()
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.num_nodes()).map(|i| self.degree(i)).collect()
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[self.offsets[node]..self.offsets[node + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Each undirected edge once, as `(min, max)`, in ascending order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.num_nodes())
            .flat_map(|u| {
                self.neighbors(u)
                    .iter()
                    .filter(move |&&v| v > u)
                    .map(move |&v| (u, v))
            })
            .collect()
    }

    /// Number of connected components (isolated nodes count as components).
    pub fn connected_components(&self) -> usize {
        let n = self.num_nodes();
        let mut seen = vec![false; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &v in self.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        count
    }
}

/// Old-to-new index correspondence produced by [`delete_nodes`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexMap {
    old_to_new: Vec<Option<usize>>,
    new_to_old: Vec<usize>,
}

impl IndexMap {
    pub fn identity(n: usize) -> Self {
        IndexMap {
            old_to_new: (0..n).map(Some).collect(),
            new_to_old: (0..n).collect(),
        }
    }

    pub fn new_index(&self, old: usize) -> Option<usize> {
        self.old_to_new.get(old).copied().flatten()
    }

    pub fn old_index(&self, new: usize) -> usize {
        self.new_to_old[new]
    }

    /// Surviving old indices, in new-index order.
    pub fn kept(&self) -> &[usize] {
        &self.new_to_old
    }

    /// Maps a set of old indices into the new numbering, dropping deleted ones.
    pub fn map_set(&self, set: &NodeSet) -> NodeSet {
        set.iter().filter_map(|i| self.new_index(i)).collect()
    }
}

/// Induced subgraph on the nodes not in `to_delete`.
pub fn delete_nodes(graph: &Graph, to_delete: &NodeSet) -> Result<(Graph, IndexMap)> {
    let n = graph.num_nodes();
    if let Some(index) = to_delete.max().filter(|&m| m >= n) {
        return Err(Error::NodeOutOfRange {
            index,
            num_nodes: n,
        });
    }
    if to_delete.len() == n && n > 0 {
        return Err(Error::EmptyRemaining("cannot delete every node of the graph".into()));
    }
    let deleted = to_delete.mask(n);
    let mut old_to_new = vec![None; n];
    let mut new_to_old = Vec::with_capacity(n - to_delete.len());
    for (old, slot) in old_to_new.iter_mut().enumerate() {
        if !deleted[old] {
            *slot = Some(new_to_old.len());
            new_to_old.push(old);
        }
    }
    let adjacency = new_to_old
        .iter()
        .map(|&old| {
            graph
                .neighbors(old)
                .iter()
                .filter_map(|&v| old_to_new[v])
                .collect()
        })
        .collect();
    let mut subgraph = Graph::from_adjacency(adjacency);
    if let Some(ids) = graph.node_ids() {
        subgraph.node_ids = Some(new_to_old.iter().map(|&o| ids[o]).collect());
    }
    Ok((
        subgraph,
        IndexMap {
            old_to_new,
            new_to_old,
        },
    ))
}

/// Nodes whose shortest-path distance to some deleted node is strictly less
/// than `hops`. Distance 0 covers the deleted nodes themselves.
pub fn affected_set(graph: &Graph, deleted: &NodeSet, hops: usize) -> Result<NodeSet> {
    if hops == 0 {
        return Err(Error::InvalidInput("affected_set requires hops >= 1".into()));
    }
    let n = graph.num_nodes();
    if let Some(index) = deleted.max().filter(|&m| m >= n) {
        return Err(Error::NodeOutOfRange {
            index,
            num_nodes: n,
        });
    }
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for u in deleted.iter() {
        dist[u] = 0;
        queue.push_back(u);
    }
    while let Some(u) = queue.pop_front() {
        let next = dist[u] + 1;
        if next >= hops {
            continue;
        }
        for &v in graph.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = next;
                queue.push_back(v);
            }
        }
    }
    Ok((0..n).filter(|&v| dist[v] < hops).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    /// `D^-1 A`
    #[default]
    #[serde(alias = "row")]
    RowNormalized,
    /// `D^-1/2 A D^-1/2`
    #[serde(alias = "symmetric", alias = "sym")]
    SymmetricNormalized,
}

/// Sparse normalized propagation operator with the same pattern as the
/// adjacency (plus the diagonal when self-loops were requested).
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationMatrix {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
    mode: NormalizationMode,
    self_loops: bool,
}

/// Builds the normalized operator. Zero-degree rows stay all-zero.
pub fn build_propagation(
    graph: &Graph,
    mode: NormalizationMode,
    add_self_loops: bool,
) -> PropagationMatrix {
    let n = graph.num_nodes();
    let loop_extra = usize::from(add_self_loops);
    let degree: Vec<f64> = (0..n)
        .map(|i| (graph.degree(i) + loop_extra) as f64)
        .collect();
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    let mut cols = Vec::with_capacity(graph.neighbors.len() + n * loop_extra);
    let mut values = Vec::with_capacity(cols.capacity());
    for i in 0..n {
        let mut row: Vec<usize> = graph.neighbors(i).to_vec();
        if add_self_loops {
            let at = row.partition_point(|&j| j < i);
            row.insert(at, i);
        }
        for j in row {
            let value = match mode {
                NormalizationMode::RowNormalized => 1.0 / degree[i],
                NormalizationMode::SymmetricNormalized => 1.0 / (degree[i] * degree[j]).sqrt(),
            };
            cols.push(j);
            values.push(value);
        }
        offsets.push(cols.len());
    }
    PropagationMatrix {
        offsets,
        cols,
        values,
        mode,
        self_loops: add_self_loops,
    }
}

impl PropagationMatrix {
    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn mode(&self) -> NormalizationMode {
        self.mode
    }

    pub fn has_self_loops(&self) -> bool {
        self.self_loops
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.offsets[i]..self.offsets[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    /// Dense row-major copy. Only for small graphs and tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.num_nodes();
        let mut dense = vec![vec![0.0; n]; n];
        for (i, row) in dense.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        dense
    }

    /// One sparse-dense product `P * X`.
    pub fn apply(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        let n = self.num_nodes();
        if x.rows() != n {
            return Err(Error::DimensionMismatch(format!(
                "propagation over {n} nodes applied to {} feature rows",
                x.rows()
            )));
        }
        let d = x.dim();
        let mut out = vec![0.0; n * d];
        if d > 0 {
            out.par_chunks_mut(d).enumerate().for_each(|(i, dst)| {
                for (j, p) in self.row(i) {
                    for (o, &v) in dst.iter_mut().zip(x.row(j)) {
                        *o += p * v;
                    }
                }
            });
        }
        FeatureMatrix::new(n, d, out)
    }
}

/// `P^hops * X` by repeated sparse-dense products. `hops = 0` returns `X`.
pub fn propagate(p: &PropagationMatrix, x: &FeatureMatrix, hops: usize) -> Result<FeatureMatrix> {
    if x.rows() != p.num_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "propagation over {} nodes applied to {} feature rows",
            p.num_nodes(),
            x.rows()
        )));
    }
    let mut h = x.clone();
    for _ in 0..hops {
        h = p.apply(&h)?;
    }
    Ok(h)
}

/// `[X | PX | ... | P^(max_hop-1) X]`, hop blocks in ascending order.
pub fn multi_hop_features(
    p: &PropagationMatrix,
    x: &FeatureMatrix,
    max_hop: usize,
) -> Result<FeatureMatrix> {
    if max_hop == 0 {
        return Err(Error::InvalidInput("multi_hop_features requires max_hop >= 1".into()));
    }
    if x.rows() != p.num_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "propagation over {} nodes applied to {} feature rows",
            p.num_nodes(),
            x.rows()
        )));
    }
    let mut blocks = Vec::with_capacity(max_hop);
    blocks.push(x.clone());
    for k in 1..max_hop {
        let next = p.apply(&blocks[k - 1])?;
        blocks.push(next);
    }
    let refs: Vec<&FeatureMatrix> = blocks.iter().collect();
    FeatureMatrix::hcat(&refs)
}
