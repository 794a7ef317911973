use crate::ingestion::NetworkTopology;

/// Links as nodes, adjacent when the underlying directed links share any
/// endpoint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineGraph {
    neighbors: Vec<Vec<usize>>,
}

impl LineGraph {
    pub fn num_nodes(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, link: usize) -> &[usize] {
        &self.neighbors[link]
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.neighbors[a].binary_search(&b).is_ok()
    }

    /// Undirected `(a, b)` pairs with `a < b`, ascending.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, nb) in self.neighbors.iter().enumerate() {
            out.extend(nb.iter().filter(|&&b| b > a).map(|&b| (a, b)));
        }
        out
    }

    pub fn num_edges(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }
}

pub fn build_line_graph(topology: &NetworkTopology) -> LineGraph {
    let mut touching: Vec<Vec<usize>> = vec![Vec::new(); topology.num_nodes()];
    for (id, l) in topology.links().iter().enumerate() {
        touching[l.source].push(id);
        touching[l.target].push(id);
    }
    let neighbors = topology
        .links()
        .iter()
        .enumerate()
        .map(|(id, l)| {
            let mut nb: Vec<usize> = touching[l.source]
                .iter()
                .chain(&touching[l.target])
                .copied()
                .filter(|&o| o != id)
                .collect();
            nb.sort_unstable();
            nb.dedup();
            nb
        })
        .collect();
    LineGraph { neighbors }
}
