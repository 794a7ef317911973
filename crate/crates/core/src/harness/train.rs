use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{AdamConfig, AdamState, Graph, ParamStore};
use crate::error::{Error, Result};
use crate::harness::eval::split_mse;
use crate::harness::model::{Model, TrainConfig};
use crate::ingestion::{Split, TrafficDataset};
use crate::scalar::Scalar;

/// One line of the training history.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<S> {
    pub model: Model,
    /// Parameters of the best validation epoch.
    pub params: ParamStore<S>,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
}

impl<S> TrainOutcome<S> {
    pub fn best(&self) -> &EpochRecord {
        &self.history[self.best_epoch - 1]
    }
}

pub fn train<S: Scalar>(config: &TrainConfig, data: &TrafficDataset) -> Result<TrainOutcome<S>> {
    train_observed(config, data, |_| {})
}

/// Adam over shuffled mini-batches; `observe` sees every epoch record as it
/// is produced. All randomness (initialization, batch order) derives from
/// `config.seed`.
pub fn train_observed<S: Scalar>(
    config: &TrainConfig,
    data: &TrafficDataset,
    mut observe: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome<S>> {
    let model = Model::new(config.model_config(data.num_links(), data.window)?, &data.links)?;
    let mut train_idx = data.indices(Split::Train);
    let val_idx = data.indices(Split::Val);
    if train_idx.is_empty() || val_idx.is_empty() {
        return Err(Error::Validation("training needs nonempty train and validation splits".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params: ParamStore<S> = model.config.init_params(&mut rng);
    let mut adam = AdamState::new(AdamConfig {
        lr: config.lr,
        eps: config.eps,
        ..AdamConfig::default()
    });
    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, ParamStore<S>)> = None;
    for epoch in 1..=config.epochs {
        let diverged = || Error::Divergence {
            epoch,
            last_finite: (epoch > 1).then_some(epoch - 1),
        };
        train_idx.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in train_idx.chunks(config.batch_size) {
            let samples: Vec<&[f64]> = batch.iter().map(|&i| data.subsignal(i)).collect();
            let mut g = Graph::new();
            let f = model.forward(&mut g, &params, &samples)?;
            let loss = g.value(f.loss)[0].to_f64_lossy();
            if !loss.is_finite() {
                return Err(diverged());
            }
            total += loss * batch.len() as f64;
            let grads = g.backward(f.loss)?;
            adam.step(&mut params, &grads)?;
        }
        let val_mse = split_mse(&model, &params, data, Split::Val)?;
        if !val_mse.is_finite() {
            return Err(diverged());
        }
        let record = EpochRecord {
            epoch,
            train_mse: total / train_idx.len() as f64,
            val_mse,
        };
        observe(&record);
        history.push(record);
        if best.as_ref().is_none_or(|b| val_mse < b.0) {
            best = Some((val_mse, epoch, params.clone()));
        }
    }
    let (_, best_epoch, params) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        model,
        params,
        history,
        best_epoch,
    })
}
