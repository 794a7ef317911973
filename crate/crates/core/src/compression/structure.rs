use std::sync::Arc;

use crate::autodiff::Segments;
use crate::error::{Error, Result};
use crate::inference::HyperedgePartition;

/// Index tables for message passing over binary edges between `num_nodes`
/// nodes.
#[derive(Clone, Debug)]
pub struct EdgeIndex {
    pub num_nodes: usize,
    pub num_edges: usize,
    /// Edge -> its two endpoints.
    pub ends: Arc<Segments>,
    /// Edge-to-edge messages: receiver and sender edge per message.
    pub nb_recv: Arc<[usize]>,
    pub nb_send: Arc<[usize]>,
    /// Edge -> its incoming edge-to-edge message ids.
    pub nb_segments: Arc<Segments>,
    /// Node-edge incidences.
    pub inc_node: Arc<[usize]>,
    pub inc_edge: Arc<[usize]>,
    /// Node -> its incidence ids.
    pub node_incidences: Arc<Segments>,
    /// Edge -> its incidence ids.
    pub edge_incidences: Arc<Segments>,
}

impl EdgeIndex {
    pub fn new(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
        for (e, &(a, b)) in edges.iter().enumerate() {
            if a >= num_nodes || b >= num_nodes || a == b {
                return Err(Error::Contract(format!(
                    "edge ({a}, {b}) is not a pair of distinct nodes below {num_nodes}"
                )));
            }
            incident[a].push(e);
            incident[b].push(e);
        }
        let mut inc_node = Vec::with_capacity(2 * edges.len());
        let mut inc_edge = Vec::with_capacity(2 * edges.len());
        let mut node_inc: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
        let mut edge_inc: Vec<Vec<usize>> = vec![Vec::new(); edges.len()];
        for (v, list) in incident.iter().enumerate() {
            for &e in list {
                let id = inc_node.len();
                inc_node.push(v);
                inc_edge.push(e);
                node_inc[v].push(id);
                edge_inc[e].push(id);
            }
        }
        let mut nb_recv = Vec::new();
        let mut nb_send = Vec::new();
        let mut nb_groups = Vec::with_capacity(edges.len());
        for (e, &(a, b)) in edges.iter().enumerate() {
            let mut nbrs: Vec<usize> = incident[a]
                .iter()
                .chain(&incident[b])
                .copied()
                .filter(|&f| f != e)
                .collect();
            nbrs.sort_unstable();
            nbrs.dedup();
            let start = nb_recv.len();
            for f in nbrs {
                nb_recv.push(e);
                nb_send.push(f);
            }
            nb_groups.push(start..nb_recv.len());
        }
        Ok(EdgeIndex {
            num_nodes,
            num_edges: edges.len(),
            ends: Arc::new(Segments::from_groups(edges.iter().map(|&(a, b)| [a, b]))),
            nb_recv: nb_recv.into(),
            nb_send: nb_send.into(),
            nb_segments: Arc::new(Segments::from_groups(nb_groups)),
            inc_node: inc_node.into(),
            inc_edge: inc_edge.into(),
            node_incidences: Arc::new(Segments::from_groups(node_inc)),
            edge_incidences: Arc::new(Segments::from_groups(edge_inc)),
        })
    }
}

/// Edge tables plus the edge/hyperedge containment used by CombMP.
#[derive(Clone, Debug)]
pub struct EdgeStructure {
    pub index: EdgeIndex,
    /// Edge -> hyperedge containing it.
    pub owner: Arc<[usize]>,
    /// Hyperedge -> contained edges.
    pub by_hyperedge: Arc<Segments>,
    /// Edge -> itself, the one-hyperedge aggregation of the downward step.
    pub singleton: Arc<Segments>,
}

/// Stacked structure of one or more subsignals.
///
/// Node `v` of sample `b` becomes global node `b * N + v`; hyperedges and
/// edges are numbered sample by sample in the same way.
#[derive(Clone, Debug)]
pub struct Structure {
    pub num_nodes: usize,
    pub num_hyperedges: usize,
    /// Node -> hyperedge.
    pub node_owner: Arc<[usize]>,
    /// Hyperedge -> member nodes.
    pub members: Arc<Segments>,
    /// Node -> itself.
    pub node_singleton: Arc<Segments>,
    pub edges: Option<EdgeStructure>,
}

impl Structure {
    /// Stacks partitions; with `with_edges` the partitions' edge lists are
    /// indexed too (and must not all be empty).
    pub fn from_partitions(parts: &[&HyperedgePartition], with_edges: bool) -> Result<Self> {
        let mut node_owner = Vec::new();
        let mut members = Vec::new();
        let mut edges = Vec::new();
        let mut edge_owner = Vec::new();
        let mut node_base = 0;
        let mut hyper_base = 0;
        for part in parts {
            let owner = part.membership();
            node_owner.extend(owner.iter().map(|&k| k + hyper_base));
            for h in part.hyperedges() {
                members.push(h.iter().map(|&v| v + node_base).collect::<Vec<_>>());
            }
            if with_edges {
                for &(a, b) in part.edges() {
                    edges.push((a + node_base, b + node_base));
                    edge_owner.push(owner[a] + hyper_base);
                }
            }
            node_base += part.num_nodes();
            hyper_base += part.num_hyperedges();
        }
        let edges = if with_edges {
            if edges.is_empty() {
                return Err(Error::EmptyEdgeSet);
            }
            let mut by_h: Vec<Vec<usize>> = vec![Vec::new(); hyper_base];
            for (e, &k) in edge_owner.iter().enumerate() {
                by_h[k].push(e);
            }
            Some(EdgeStructure {
                index: EdgeIndex::new(node_base, &edges)?,
                singleton: Arc::new(Segments::from_groups((0..edges.len()).map(|e| [e]))),
                owner: edge_owner.into(),
                by_hyperedge: Arc::new(Segments::from_groups(by_h)),
            })
        } else {
            None
        };
        Ok(Structure {
            num_nodes: node_base,
            num_hyperedges: hyper_base,
            node_owner: node_owner.into(),
            members: Arc::new(Segments::from_groups(members)),
            node_singleton: Arc::new(Segments::from_groups((0..node_base).map(|v| [v]))),
            edges,
        })
    }
}
