use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::autodiff::graph::Gradients;
use crate::autodiff::tensor::ParamStore;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.003,
            beta1: 0.9,
            beta2: 0.999,
            eps: 0.001,
        }
    }
}

/// Adam with bias correction.
///
/// A parameter without a gradient in a given step is left untouched and its
/// moments are not decayed; the step counter still advances.
#[derive(Clone, Debug)]
pub struct AdamState<S> {
    pub config: AdamConfig,
    step: u64,
    first: BTreeMap<String, Vec<S>>,
    second: BTreeMap<String, Vec<S>>,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(config: AdamConfig) -> Self {
        AdamState {
            config,
            step: 0,
            first: BTreeMap::new(),
            second: BTreeMap::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: &mut ParamStore<S>, grads: &Gradients<S>) -> Result<()> {
        for (name, g) in grads {
            let p = params
                .get(name)
                .map_err(|_| Error::Contract(format!("gradient for unknown parameter `{name}`")))?;
            if p.len() != g.len() {
                return Err(Error::dim(format!("gradient of {name}"), p.len(), g.len()));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let c = self.config;
        let b1 = S::from_f64_lossy(c.beta1);
        let b2 = S::from_f64_lossy(c.beta2);
        let one = S::one();
        let corr1 = S::from_f64_lossy(1.0 - c.beta1.powi(t));
        let corr2 = S::from_f64_lossy(1.0 - c.beta2.powi(t));
        let lr = S::from_f64_lossy(c.lr);
        let eps = S::from_f64_lossy(c.eps);

        for (name, p) in params.iter_mut() {
            let Some(g) = grads.get(name) else { continue };
            let n = p.len();
            let m = self.first.entry(name.clone()).or_insert_with(|| vec![S::zero(); n]);
            let v = self.second.entry(name.clone()).or_insert_with(|| vec![S::zero(); n]);
            for (((w, &gi), mi), vi) in p
                .values_mut()
                .iter_mut()
                .zip(g.values())
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                *mi = b1 * *mi + (one - b1) * gi;
                *vi = b2 * *vi + (one - b2) * gi * gi;
                let m_hat = *mi / corr1;
                let v_hat = *vi / corr2;
                *w -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
