use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Disjoint hyperedges covering `0..n`, plus optional intra-hyperedge edges.
///
/// Members of each hyperedge are kept ascending; hyperedges keep formation
/// order. Edges are undirected `(a, b)` pairs with `a < b`, sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperedgePartition {
    n: usize,
    p: usize,
    hyperedges: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

impl HyperedgePartition {
    pub fn new(n: usize, p: usize, hyperedges: Vec<Vec<usize>>) -> Result<Self> {
        let mut hyperedges = hyperedges;
        for h in &mut hyperedges {
            h.sort_unstable();
        }
        let part = HyperedgePartition {
            n,
            p,
            hyperedges,
            edges: Vec::new(),
        };
        part.validate()?;
        Ok(part)
    }

    /// Replaces the edge list; every edge must stay inside one hyperedge.
    pub fn with_edges(mut self, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut edges: Vec<(usize, usize)> =
            edges.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        edges.sort_unstable();
        edges.dedup();
        self.edges = edges;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::Validation(format!("hyperedge length {} is below 2", self.p)));
        }
        let mut owner = vec![usize::MAX; self.n];
        for (k, h) in self.hyperedges.iter().enumerate() {
            if h.len() + 1 < self.p || h.len() > self.p {
                return Err(Error::Validation(format!(
                    "hyperedge {k} has {} members, expected {} or {}",
                    h.len(),
                    self.p - 1,
                    self.p
                )));
            }
            for &v in h {
                if v >= self.n {
                    return Err(Error::Validation(format!("node {v} out of range 0..{}", self.n)));
                }
                if owner[v] != usize::MAX {
                    return Err(Error::Validation(format!(
                        "node {v} belongs to hyperedges {} and {k}",
                        owner[v]
                    )));
                }
                owner[v] = k;
            }
        }
        if let Some(v) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(Error::Validation(format!("node {v} is in no hyperedge")));
        }
        for &(a, b) in &self.edges {
            if a == b || a >= self.n || b >= self.n || owner[a] != owner[b] {
                return Err(Error::Validation(format!(
                    "edge ({a}, {b}) does not lie inside a single hyperedge"
                )));
            }
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn max_len(&self) -> usize {
        self.p
    }

    pub fn num_hyperedges(&self) -> usize {
        self.hyperedges.len()
    }

    pub fn hyperedges(&self) -> &[Vec<usize>] {
        &self.hyperedges
    }

    pub fn hyperedge(&self, k: usize) -> &[usize] {
        &self.hyperedges[k]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Hyperedge index of every node.
    pub fn membership(&self) -> Vec<usize> {
        let mut owner = vec![0; self.n];
        for (k, h) in self.hyperedges.iter().enumerate() {
            for &v in h {
                owner[v] = k;
            }
        }
        owner
    }

    /// Rebuilds a partition from a node-to-hyperedge map.
    pub fn from_membership(p: usize, membership: &[usize]) -> Result<Self> {
        let k = membership.iter().max().map_or(0, |m| m + 1);
        let mut hyperedges = vec![Vec::new(); k];
        for (v, &h) in membership.iter().enumerate() {
            hyperedges[h].push(v);
        }
        Self::new(membership.len(), p, hyperedges)
    }

    /// Same structure after renaming node `v` to `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::dim("node permutation", self.n, perm.len()));
        }
        let hyperedges = self
            .hyperedges
            .iter()
            .map(|h| h.iter().map(|&v| perm[v]).collect())
            .collect();
        Self::new(self.n, self.p, hyperedges)?
            .with_edges(self.edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect())
    }

    pub fn export(&self, subsignal: usize) -> PartitionExport {
        PartitionExport {
            subsignal,
            hyperedges: self.hyperedges.clone(),
            edges: self.edges.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}

/// One line of the partition export (JSON lines).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionExport {
    pub subsignal: usize,
    pub hyperedges: Vec<Vec<usize>>,
    pub edges: Vec<[usize; 2]>,
}
