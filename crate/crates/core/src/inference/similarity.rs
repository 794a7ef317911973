use crate::autodiff::{mlp_forward, MlpSpec, ParamStore, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Guards the anchor variance in the SNR distance.
pub const SNR_EPS: f64 = 1e-8;

/// Applies the encoder row-wise: one `d'`-dimensional embedding per measurement.
pub fn embed_nodes<S: Scalar>(
    subsignal: &Tensor<S>,
    encoder: &MlpSpec,
    params: &ParamStore<S>,
    prefix: &str,
) -> Result<Tensor<S>> {
    mlp_forward(encoder, params, prefix, subsignal)
}

/// Dense `N x N` similarity, row = anchor. The diagonal holds `-inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    /// Wraps raw values; the diagonal is overwritten with `-inf`.
    pub fn from_values(n: usize, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::dim("similarity matrix", n * n, values.len()));
        }
        for (i, v) in values.iter().enumerate() {
            if i % (n + 1) != 0 && !v.is_finite() {
                return Err(Error::Validation(format!(
                    "similarity entry ({}, {}) is not finite",
                    i / n,
                    i % n
                )));
            }
        }
        for i in 0..n {
            values[i * n + i] = f64::NEG_INFINITY;
        }
        Ok(SimilarityMatrix { n, values })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.n..(row + 1) * self.n]
    }
}

fn population_variance(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let (sum, count) = xs.clone().fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    let mean = sum / count as f64;
    xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / count as f64
}

/// `m_uv = -Var(h_u - h_v) / (Var(h_u) + eps)` over embedding components.
pub fn snr_similarity<S: Scalar>(emb: &Tensor<S>) -> Result<SimilarityMatrix> {
    let n = emb.rows();
    let d = emb.cols();
    if d < 2 {
        return Err(Error::Parameter(format!(
            "SNR similarity needs embeddings of width at least 2, got {d}"
        )));
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| emb.row(i).iter().map(|v| v.to_f64_lossy()).collect())
        .collect();
    let anchor_var: Vec<f64> = rows
        .iter()
        .map(|r| population_variance(r.iter().copied()))
        .collect();
    let mut values = vec![0.0; n * n];
    for u in 0..n {
        for v in 0..n {
            if u != v {
                let diff = rows[u].iter().zip(&rows[v]).map(|(a, b)| a - b);
                values[u * n + v] = -population_variance(diff) / (anchor_var[u] + SNR_EPS);
            }
        }
    }
    SimilarityMatrix::from_values(n, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Activation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_vectors_have_zero_distance() {
        let e = Tensor::from_rows(&[vec![0.3f64, 1.0, -2.0], vec![0.3, 1.0, -2.0]]).unwrap();
        let s = snr_similarity(&e).unwrap();
        assert_eq!(s.get(0, 1), 0.0);
        assert_eq!(s.get(0, 0), f64::NEG_INFINITY);
    }

    #[test]
    fn two_component_example() {
        let e = Tensor::from_rows(&[vec![0.0f64, 1.0], vec![1.0, 0.0]]).unwrap();
        let s = snr_similarity(&e).unwrap();
        // Var([-1, 1]) = 1, Var([0, 1]) = 0.25
        let want = -1.0 / (0.25 + SNR_EPS);
        assert!((s.get(0, 1) - want).abs() < 1e-12);
        assert!((s.get(0, 1) + 4.0).abs() < 1e-6);
    }

    #[test]
    fn shift_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..4).map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let shifted: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|x| x + 0.75).collect()).collect();
        let a = snr_similarity(&Tensor::from_rows(&rows).unwrap()).unwrap();
        let b = snr_similarity(&Tensor::from_rows(&shifted).unwrap()).unwrap();
        for u in 0..4 {
            for v in 0..4 {
                if u != v {
                    assert!((a.get(u, v) - b.get(u, v)).abs() < 1e-9 * a.get(u, v).abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn width_one_is_rejected() {
        let e = Tensor::from_rows(&[vec![1.0f64], vec![2.0]]).unwrap();
        assert!(matches!(snr_similarity(&e), Err(Error::Parameter(_))));
    }

    #[test]
    fn identity_encoder_returns_measurements() {
        let spec = MlpSpec::new(vec![3, 3], Activation::Identity).unwrap();
        let mut p = ParamStore::new();
        let eye = vec![1.0f64, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        p.insert("enc.0.weight", Tensor::matrix(3, 3, eye).unwrap());
        p.insert("enc.0.bias", Tensor::matrix(1, 3, vec![0.0; 3]).unwrap());
        let x = Tensor::from_rows(&[vec![1.0, 2.0, 3.0], vec![-1.0, 0.5, 4.0]]).unwrap();
        assert_eq!(embed_nodes(&x, &spec, &p, "enc").unwrap().values(), x.values());
    }

    #[test]
    fn embedding_matches_row_by_row_forward() {
        let spec = MlpSpec::relu(vec![10, 20, 20]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut p = ParamStore::<f64>::new();
        spec.init_params("enc", &mut p, &mut rng);
        let rows: Vec<Vec<f64>> = (0..5).map(|_| (0..10).map(|_| rng.random()).collect()).collect();
        let mut dup = rows.clone();
        dup[4] = dup[1].clone();
        let all = embed_nodes(&Tensor::from_rows(&dup).unwrap(), &spec, &p, "enc").unwrap();
        for (i, r) in dup.iter().enumerate() {
            let single = mlp_forward(&spec, &p, "enc", &Tensor::matrix(1, 10, r.clone()).unwrap()).unwrap();
            for (a, b) in all.row(i).iter().zip(single.values()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert_eq!(all.row(1), all.row(4));
    }
}
