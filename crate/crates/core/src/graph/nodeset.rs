use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sorted, deduplicated set of node indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeSet(Vec<usize>);

impl NodeSet {
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        NodeSet(indices)
    }

    pub fn empty() -> Self {
        NodeSet(Vec::new())
    }

    /// All nodes `0..n`.
    pub fn full(n: usize) -> Self {
        NodeSet((0..n).collect())
    }

    /// Builds a set and checks every index against `num_nodes`.
    pub fn checked(indices: Vec<usize>, num_nodes: usize) -> Result<Self> {
        if let Some(&index) = indices.iter().find(|&&i| i >= num_nodes) {
            return Err(Error::NodeOutOfRange { index, num_nodes });
        }
        Ok(NodeSet::new(indices))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, node: usize) -> bool {
        self.0.binary_search(&node).is_ok()
    }

    pub fn max(&self) -> Option<usize> {
        self.0.last().copied()
    }

    /// Nodes of `0..num_nodes` not in this set.
    pub fn complement(&self, num_nodes: usize) -> NodeSet {
        let mask = self.mask(num_nodes);
        NodeSet((0..num_nodes).filter(|&i| !mask[i]).collect())
    }

    pub fn difference(&self, other: &NodeSet) -> NodeSet {
        NodeSet(self.0.iter().copied().filter(|&i| !other.contains(i)).collect())
    }

    pub fn intersection(&self, other: &NodeSet) -> NodeSet {
        NodeSet(self.0.iter().copied().filter(|&i| other.contains(i)).collect())
    }

    pub fn union(&self, other: &NodeSet) -> NodeSet {
        let mut all = self.0.clone();
        all.extend_from_slice(&other.0);
        NodeSet::new(all)
    }

    pub fn is_subset(&self, other: &NodeSet) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }

    /// Boolean membership mask of length `num_nodes`. Indices past the end are ignored.
    pub fn mask(&self, num_nodes: usize) -> Vec<bool> {
        let mut mask = vec![false; num_nodes];
        for &i in &self.0 {
            if i < num_nodes {
                mask[i] = true;
            }
        }
        mask
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

impl FromIterator<usize> for NodeSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        NodeSet::new(iter.into_iter().collect())
    }
}
