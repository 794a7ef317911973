//! Training with validation-based model selection, and evaluation.

mod eval;
mod model;
mod train;

pub use eval::{
    compare_external, evaluate, read_reconstructions, reconstruct_split, split_report, write_reconstructions,
    EvalReport, SplitReport, SubsignalError,
};
pub use model::{Architecture, Forward, Model, ModelConfig, ModelKind, TrainConfig};
pub use train::{train, train_observed, EpochRecord, TrainOutcome};

#[cfg(test)]
pub(crate) mod fixtures {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::ingestion::{Normalization, Split, TrafficDataset};

    /// 12 links of a bidirectional 6-ring, windows of 10, values in [0, 1].
    pub fn ring_dataset(splits: &[Split], seed: u64) -> TrafficDataset {
        let mut links = Vec::new();
        for i in 0..6 {
            let j = (i + 1) % 6;
            links.push(format!("r{i}->r{j}"));
            links.push(format!("r{j}->r{i}"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let subsignals = splits
            .iter()
            .map(|_| {
                let phase: f64 = rng.random_range(0.0..6.0);
                (0..120)
                    .map(|k| {
                        let (l, t) = (k / 10, k % 10);
                        let base = 0.5 + 0.3 * ((t as f64 + phase) * 0.6 + (l % 3) as f64).sin();
                        base + rng.random_range(-0.05..0.05)
                    })
                    .collect()
            })
            .collect();
        TrafficDataset::from_subsignals(links, 10, subsignals, splits.to_vec(), Normalization::identity()).unwrap()
    }
}
