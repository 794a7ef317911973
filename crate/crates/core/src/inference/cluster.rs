use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::inference::partition::HyperedgePartition;
use crate::inference::similarity::SimilarityMatrix;

/// Peers each node links to when edges are inferred.
pub const DEFAULT_EDGE_FANOUT: usize = 2;

/// `round(n / p)`, halves rounded up.
pub fn hyperedge_count(n: usize, p: usize) -> usize {
    (2 * n + p) / (2 * p)
}

/// Sizes of the hyperedges in formation order: size `p` while the remaining
/// nodes can still be split into `p - 1`-sized sets, `p - 1` afterwards.
///
/// Fails when `p <= 4`, `n < p`, or `round(n / p)` sets of sizes `p - 1` and
/// `p` cannot cover exactly `n` nodes (e.g. `n = 6, p = 5`).
pub fn hyperedge_sizes(n: usize, p: usize) -> Result<Vec<usize>> {
    if p <= 4 {
        return Err(Error::Parameter(format!("hyperedge length p={p} must exceed 4")));
    }
    if n < p {
        return Err(Error::Parameter(format!("N={n} is smaller than the hyperedge length p={p}")));
    }
    let k = hyperedge_count(n, p);
    if n > k * p || n < k * (p - 1) {
        return Err(Error::Parameter(format!(
            "N={n} cannot be split into round(N/p)={k} hyperedges of sizes {} and {p}",
            p - 1
        )));
    }
    let mut sizes = Vec::with_capacity(k);
    let mut m = n;
    for left in (1..=k).rev() {
        let size = if left == 1 {
            m
        } else if m >= p + (left - 1) * (p - 1) {
            p
        } else {
            p - 1
        };
        sizes.push(size);
        m -= size;
    }
    Ok(sizes)
}

/// Greedy clustering of the similarity rows into disjoint hyperedges.
///
/// Each step scores every remaining row by the sum of its `size - 1` largest
/// entries over the remaining columns, takes the best row together with
/// those columns, and removes them. Ties go to the smaller row, and within a
/// row to the smaller column.
pub fn greedy_cluster(sim: &SimilarityMatrix, p: usize) -> Result<HyperedgePartition> {
    let n = sim.len();
    let sizes = hyperedge_sizes(n, p)?;
    let mut active = vec![true; n];
    let mut hyperedges = Vec::with_capacity(sizes.len());
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n);
    for &size in &sizes {
        let take = size - 1;
        let mut best: Option<(f64, usize, Vec<usize>)> = None;
        for u in (0..n).filter(|&u| active[u]) {
            let row = sim.row(u);
            cand.clear();
            cand.extend((0..n).filter(|&v| v != u && active[v]).map(|v| (row[v], v)));
            cand.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let score: f64 = cand[..take].iter().map(|c| c.0).sum();
            if best.as_ref().is_none_or(|b| score > b.0) {
                best = Some((score, u, cand[..take].iter().map(|c| c.1).collect()));
            }
        }
        let (_, u, mut members) = best.expect("active rows remain until all sizes are served");
        members.push(u);
        for &v in &members {
            active[v] = false;
        }
        hyperedges.push(members);
    }
    HyperedgePartition::new(n, p, hyperedges)
}

/// Links every node to its `k` most similar peers inside its hyperedge
/// (ties to the smaller index), deduplicated as undirected pairs.
pub fn infer_edges(
    sim: &SimilarityMatrix,
    partition: &HyperedgePartition,
    k: usize,
) -> Result<Vec<(usize, usize)>> {
    if k == 0 {
        return Err(Error::Parameter("edge fan-out must be at least 1".into()));
    }
    if sim.len() != partition.num_nodes() {
        return Err(Error::dim("similarity vs partition size", partition.num_nodes(), sim.len()));
    }
    let mut edges = BTreeSet::new();
    for h in partition.hyperedges() {
        for &u in h {
            let mut peers: Vec<usize> = h.iter().copied().filter(|&v| v != u).collect();
            peers.sort_by(|&a, &b| sim.get(u, b).total_cmp(&sim.get(u, a)).then(a.cmp(&b)));
            for &v in peers.iter().take(k) {
                edges.insert((u.min(v), u.max(v)));
            }
        }
    }
    Ok(edges.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;
    use crate::inference::similarity::snr_similarity;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sim(n: usize, seed: u64) -> SimilarityMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..n * n).map(|_| rng.random_range(-1.0..0.0)).collect();
        SimilarityMatrix::from_values(n, v).unwrap()
    }

    /// Straight re-implementation: explicit reduced matrices and a
    /// precomputed size list.
    #[allow(clippy::needless_range_loop)]
    fn oracle(full: &SimilarityMatrix, p: usize) -> Vec<Vec<usize>> {
        let n = full.len();
        let k = (2 * n + p) / (2 * p);
        let short = k * p - n;
        let mut sizes = vec![p; k - short];
        sizes.extend(std::iter::repeat_n(p - 1, short));
        let mut ids: Vec<usize> = (0..n).collect();
        let mut m: Vec<Vec<f64>> = (0..n).map(|i| full.row(i).to_vec()).collect();
        let mut out = Vec::new();
        for size in sizes {
            let mut best_score = f64::NEG_INFINITY;
            let mut best_row = usize::MAX;
            let mut best_cols = Vec::new();
            for i in 0..ids.len() {
                let mut entries: Vec<(f64, usize)> =
                    (0..ids.len()).filter(|&j| j != i).map(|j| (m[i][j], j)).collect();
                entries.sort_by(|a, b| {
                    if a.0 == b.0 {
                        a.1.cmp(&b.1)
                    } else if a.0 > b.0 {
                        std::cmp::Ordering::Less
                    } else {
                        std::cmp::Ordering::Greater
                    }
                });
                let mut score = 0.0;
                for e in &entries[..size - 1] {
                    score += e.0;
                }
                if best_row == usize::MAX || score > best_score {
                    best_score = score;
                    best_row = i;
                    best_cols = entries[..size - 1].iter().map(|e| e.1).collect();
                }
            }
            let mut local = best_cols.clone();
            local.push(best_row);
            let mut group: Vec<usize> = local.iter().map(|&j| ids[j]).collect();
            group.sort();
            out.push(group);
            let keep: Vec<usize> = (0..ids.len()).filter(|j| !local.contains(j)).collect();
            m = keep.iter().map(|&a| keep.iter().map(|&b| m[a][b]).collect()).collect();
            ids = keep.iter().map(|&j| ids[j]).collect();
        }
        out
    }

    #[test]
    fn whole_set_when_n_equals_p() {
        let part = greedy_cluster(&random_sim(7, 1), 7).unwrap();
        assert_eq!(part.hyperedges(), &[vec![0, 1, 2, 3, 4, 5, 6]]);
    }

    #[test]
    fn abilene_sizes() {
        assert_eq!(hyperedge_sizes(30, 8).unwrap(), vec![8, 8, 7, 7]);
        assert_eq!(hyperedge_sizes(30, 6).unwrap(), vec![6; 5]);
        assert_eq!(hyperedge_sizes(72, 8).unwrap(), vec![8; 9]);
        assert_eq!(hyperedge_sizes(72, 6).unwrap(), vec![6; 12]);
        let part = greedy_cluster(&random_sim(30, 4), 8).unwrap();
        let sizes: Vec<usize> = part.hyperedges().iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![8, 8, 7, 7]);
    }

    #[test]
    fn parameter_errors() {
        assert!(matches!(greedy_cluster(&random_sim(10, 1), 4), Err(Error::Parameter(_))));
        assert!(matches!(greedy_cluster(&random_sim(5, 1), 6), Err(Error::Parameter(_))));
        assert!(matches!(greedy_cluster(&random_sim(6, 1), 5), Err(Error::Parameter(_))));
    }

    #[test]
    fn matches_oracle_on_12_nodes() {
        for seed in 0..50 {
            let sim = random_sim(12, seed);
            let got = greedy_cluster(&sim, 6).unwrap();
            assert_eq!(got.hyperedges(), oracle(&sim, 6).as_slice(), "seed {seed}");
        }
    }

    #[test]
    fn ties_break_to_smallest_indices() {
        let sim = SimilarityMatrix::from_values(10, vec![0.0; 100]).unwrap();
        let part = greedy_cluster(&sim, 5).unwrap();
        assert_eq!(part.hyperedges(), &[vec![0, 1, 2, 3, 4], vec![5, 6, 7, 8, 9]]);
    }

    fn planted(groups: &[usize], d: usize, seed: u64) -> (Tensor<f64>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut label = Vec::new();
        for (g, &size) in groups.iter().enumerate() {
            let center: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            for _ in 0..size {
                rows.push(center.iter().map(|c| c + rng.random_range(-1e-3..1e-3)).collect());
                label.push(g);
            }
        }
        // interleave so groups are not contiguous in index space
        let n = rows.len();
        let perm: Vec<usize> = (0..n).map(|i| (i * 7) % n).collect();
        let rows: Vec<Vec<f64>> = perm.iter().map(|&i| rows[i].clone()).collect();
        let label = perm.iter().map(|&i| label[i]).collect();
        (Tensor::from_rows(&rows).unwrap(), label)
    }

    #[test]
    fn recovers_planted_groups() {
        let (emb, label) = planted(&[8, 8, 7, 7], 20, 5);
        let part = greedy_cluster(&snr_similarity(&emb).unwrap(), 8).unwrap();
        for h in part.hyperedges() {
            assert!(h.iter().all(|&v| label[v] == label[h[0]]));
        }
    }

    #[test]
    fn saturated_fanout_connects_everything() {
        let sim = random_sim(12, 2);
        let part = greedy_cluster(&sim, 6).unwrap();
        let edges = infer_edges(&sim, &part, 5).unwrap();
        assert_eq!(edges.len(), 2 * 15);
    }

    #[test]
    fn pair_gets_single_edge() {
        let sim = random_sim(2, 0);
        let part = HyperedgePartition::new(2, 2, vec![vec![0, 1]]).unwrap();
        assert_eq!(infer_edges(&sim, &part, 1).unwrap(), vec![(0, 1)]);
    }

    #[test]
    fn top2_matches_brute_force() {
        let sim = random_sim(8, 77);
        let part = HyperedgePartition::new(8, 4, vec![vec![0, 3, 5, 6], vec![1, 2, 4, 7]]).unwrap();
        let got = infer_edges(&sim, &part, 2).unwrap();
        let owner = part.membership();
        let mut want = BTreeSet::new();
        for u in 0..8 {
            // rank every same-hyperedge peer by how many peers beat it
            for v in 0..8 {
                if v == u || owner[v] != owner[u] {
                    continue;
                }
                let better = (0..8)
                    .filter(|&w| w != u && w != v && owner[w] == owner[u])
                    .filter(|&w| sim.get(u, w) > sim.get(u, v) || (sim.get(u, w) == sim.get(u, v) && w < v))
                    .count();
                if better < 2 {
                    want.insert((u.min(v), u.max(v)));
                }
            }
        }
        assert_eq!(got, want.into_iter().collect::<Vec<_>>());
    }

    fn feasible(n: usize, p: usize) -> bool {
        hyperedge_sizes(n, p).is_ok()
    }

    proptest! {
        #[test]
        fn partition_invariants(n in 6usize..=100, p in 5usize..=10, seed in any::<u64>()) {
            prop_assume!(n >= p && feasible(n, p));
            let part = greedy_cluster(&random_sim(n, seed), p).unwrap();
            prop_assert!(part.validate().is_ok());
            prop_assert_eq!(part.num_hyperedges(), hyperedge_count(n, p));
            let mut seen: Vec<usize> = part.hyperedges().concat();
            seen.sort();
            prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        }

        #[test]
        fn invariant_to_global_shift(n in 10usize..=40, p in 5usize..=8, seed in any::<u64>(), c in -64i32..64) {
            prop_assume!(feasible(n, p));
            // dyadic entries keep every sum exact under the shift
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let raw: Vec<f64> = (0..n * n).map(|_| rng.random_range(-512i32..0) as f64 / 64.0).collect();
            let shifted: Vec<f64> = raw.iter().map(|v| v + c as f64).collect();
            let a = greedy_cluster(&SimilarityMatrix::from_values(n, raw).unwrap(), p).unwrap();
            let b = greedy_cluster(&SimilarityMatrix::from_values(n, shifted).unwrap(), p).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn inferred_edges_stay_inside_hyperedges(seed in any::<u64>(), k in 1usize..6) {
            let sim = random_sim(20, seed);
            let part = greedy_cluster(&sim, 5).unwrap();
            let edges = infer_edges(&sim, &part, k).unwrap();
            prop_assert!(part.with_edges(edges).is_ok());
        }
    }
}
