use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::ingestion::series::LinkSeries;
use crate::ingestion::sndlib::DemandMatrix;
use crate::ingestion::topology::NetworkTopology;

/// Single shortest path (hop count) per origin-destination pair.
///
/// Among equally short paths the one whose node-index sequence is
/// lexicographically smallest wins. Paths are returned as link ids.
pub struct ShortestPaths {
    n: usize,
    paths: Vec<Option<Vec<usize>>>,
}

impl ShortestPaths {
    pub fn new(topology: &NetworkTopology) -> Self {
        let n = topology.num_nodes();
        let out = topology.out_links();
        let links = topology.links();
        let mut into: Vec<Vec<usize>> = vec![Vec::new(); n];
        for l in links {
            into[l.target].push(l.source);
        }
        let mut paths = vec![None; n * n];
        for dst in 0..n {
            // hop distance of every node to `dst`
            let mut dist = vec![usize::MAX; n];
            dist[dst] = 0;
            let mut queue = VecDeque::from([dst]);
            while let Some(v) = queue.pop_front() {
                for &u in &into[v] {
                    if dist[u] == usize::MAX {
                        dist[u] = dist[v] + 1;
                        queue.push_back(u);
                    }
                }
            }
            for src in 0..n {
                if src == dst || dist[src] == usize::MAX {
                    continue;
                }
                let mut path = Vec::with_capacity(dist[src]);
                let mut cur = src;
                while cur != dst {
                    // out links are sorted by target, so the first hop that
                    // stays on a shortest path is the smallest next node
                    let next = out[cur]
                        .iter()
                        .copied()
                        .find(|&id| dist[links[id].target] + 1 == dist[cur])
                        .expect("a node at finite distance has a shortest-path successor");
                    path.push(next);
                    cur = links[next].target;
                }
                paths[src * n + dst] = Some(path);
            }
        }
        ShortestPaths { n, paths }
    }

    pub fn path(&self, src: usize, dst: usize) -> Option<&[usize]> {
        self.paths[src * self.n + dst].as_deref()
    }
}

/// Routes every interval's demands onto links and returns per-link loads.
pub fn route_demands(
    topology: &NetworkTopology,
    demands: &[DemandMatrix],
    interval_minutes: Option<f64>,
) -> Result<LinkSeries> {
    let sp = ShortestPaths::new(topology);
    let mut unreachable: Vec<(usize, usize)> = Vec::new();
    for m in demands {
        for d in &m.demands {
            if sp.path(d.source, d.target).is_none() && !unreachable.contains(&(d.source, d.target)) {
                unreachable.push((d.source, d.target));
            }
        }
    }
    if !unreachable.is_empty() {
        let pairs: Vec<String> = unreachable
            .iter()
            .map(|&(s, t)| format!("{}->{}", topology.node_name(s), topology.node_name(t)))
            .collect();
        return Err(Error::Validation(format!(
            "disconnected origin-destination pairs: {}",
            pairs.join(", ")
        )));
    }
    let n_links = topology.num_links();
    let t = demands.len();
    let mut values = vec![0.0; n_links * t];
    for (col, m) in demands.iter().enumerate() {
        for d in &m.demands {
            for &link in sp.path(d.source, d.target).expect("checked above") {
                values[link * t + col] += d.volume;
            }
        }
    }
    LinkSeries::new(topology.link_names(), t, values, vec![false; n_links * t], interval_minutes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingestion::sndlib::Demand;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn one(source: usize, target: usize, volume: f64) -> Vec<DemandMatrix> {
        vec![DemandMatrix {
            time: None,
            demands: vec![Demand {
                source,
                target,
                volume,
            }],
        }]
    }

    #[test]
    fn one_hop_demand_loads_only_its_link() {
        let mut t = NetworkTopology::new(["v0", "v1"]).unwrap();
        t.add_link("v0", "v1").unwrap();
        t.add_link("v1", "v0").unwrap();
        let s = route_demands(&t, &one(0, 1, 7.0), None).unwrap();
        assert_eq!(s.link_row(0), &[7.0]);
        assert_eq!(s.link_row(1), &[0.0]);
    }

    #[test]
    fn forced_two_hop_path() {
        let mut t = NetworkTopology::new(["v0", "v1", "v2"]).unwrap();
        t.add_link("v0", "v1").unwrap();
        t.add_link("v1", "v2").unwrap();
        let s = route_demands(&t, &one(0, 2, 5.0), None).unwrap();
        assert_eq!(s.link_row(0), &[5.0]);
        assert_eq!(s.link_row(1), &[5.0]);
    }

    #[test]
    fn disconnected_pair_is_listed() {
        let mut t = NetworkTopology::new(["a", "b", "c"]).unwrap();
        t.add_link("a", "b").unwrap();
        let err = route_demands(&t, &one(2, 0, 1.0), None).unwrap_err();
        assert!(err.to_string().contains("c->a"), "{err}");
    }

    /// Exhaustive simple-path enumeration; keeps the shortest, then the
    /// lexicographically smallest node sequence.
    fn brute_force_path(t: &NetworkTopology, s: usize, d: usize) -> Option<Vec<usize>> {
        fn dfs(
            t: &NetworkTopology,
            cur: usize,
            d: usize,
            seen: &mut Vec<bool>,
            nodes: &mut Vec<usize>,
            best: &mut Option<Vec<usize>>,
        ) {
            if cur == d {
                let better = match best {
                    None => true,
                    Some(b) => nodes.len() < b.len() || (nodes.len() == b.len() && *nodes < *b),
                };
                if better {
                    *best = Some(nodes.clone());
                }
                return;
            }
            for l in t.links() {
                if l.source == cur && !seen[l.target] {
                    seen[l.target] = true;
                    nodes.push(l.target);
                    dfs(t, l.target, d, seen, nodes, best);
                    nodes.pop();
                    seen[l.target] = false;
                }
            }
        }
        let mut seen = vec![false; t.num_nodes()];
        seen[s] = true;
        let mut best = None;
        dfs(t, s, d, &mut seen, &mut vec![s], &mut best);
        best.map(|nodes| {
            nodes
                .windows(2)
                .map(|w| {
                    t.links()
                        .iter()
                        .position(|l| l.source == w[0] && l.target == w[1])
                        .unwrap()
                })
                .collect()
        })
    }

    #[test]
    fn loads_match_brute_force_enumeration() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let names: Vec<String> = (0..5).map(|i| format!("n{i}")).collect();
            let mut t = NetworkTopology::new(names.clone()).unwrap();
            // ring guarantees strong connectivity, chords add ties
            for i in 0..5 {
                t.add_link(&names[i], &names[(i + 1) % 5]).unwrap();
            }
            for _ in 0..6 {
                let (a, b) = (rng.random_range(0..5), rng.random_range(0..5));
                if a != b {
                    let _ = t.add_link(&names[a], &names[b]);
                }
            }
            let mut demands = Vec::new();
            while demands.len() < 10 {
                let (a, b) = (rng.random_range(0..5), rng.random_range(0..5));
                if a != b {
                    demands.push(Demand {
                        source: a,
                        target: b,
                        volume: rng.random_range(1.0..10.0),
                    });
                }
            }
            let m = vec![DemandMatrix { time: None, demands: demands.clone() }];
            let got = route_demands(&t, &m, None).unwrap();
            let mut want = vec![0.0; t.num_links()];
            let mut total = 0.0;
            for d in &demands {
                let path = brute_force_path(&t, d.source, d.target).unwrap();
                total += d.volume * path.len() as f64;
                for l in path {
                    want[l] += d.volume;
                }
            }
            for (l, w) in want.iter().enumerate() {
                assert!((got.link_row(l)[0] - w).abs() < 1e-9, "seed {seed} link {l}");
            }
            let sum: f64 = (0..t.num_links()).map(|l| got.link_row(l)[0]).sum();
            assert!((sum - total).abs() < 1e-9);
        }
    }
}
