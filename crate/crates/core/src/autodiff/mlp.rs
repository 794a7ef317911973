use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::graph::{Graph, Var};
use crate::autodiff::tensor::{ParamStore, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Hidden-layer nonlinearity. The final layer is always linear.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

/// Layer widths `[input, hidden..., output]` of a dense network.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    widths: Vec<usize>,
    activation: Activation,
}

impl MlpSpec {
    pub fn new(widths: Vec<usize>, activation: Activation) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::Parameter(format!(
                "an MLP needs at least one layer, got widths {widths:?}"
            )));
        }
        if widths.contains(&0) {
            return Err(Error::Parameter(format!(
                "MLP widths must be positive, got {widths:?}"
            )));
        }
        Ok(MlpSpec { widths, activation })
    }

    /// ReLU on hidden layers, linear output.
    pub fn relu(widths: Vec<usize>) -> Result<Self> {
        Self::new(widths, Activation::Relu)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.widths.last().expect("at least two widths")
    }

    pub fn weight_name(prefix: &str, layer: usize) -> String {
        format!("{prefix}.{layer}.weight")
    }

    pub fn bias_name(prefix: &str, layer: usize) -> String {
        format!("{prefix}.{layer}.bias")
    }

    pub fn num_params(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn init_params<S: Scalar, R: Rng>(&self, prefix: &str, store: &mut ParamStore<S>, rng: &mut R) {
        for (l, w) in self.widths.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let values = (0..fan_in * fan_out)
                .map(|_| S::from_f64_lossy(rng.random_range(-limit..limit)))
                .collect();
            store.insert(
                Self::weight_name(prefix, l),
                Tensor::matrix(fan_in, fan_out, values).expect("shape is consistent"),
            );
            store.insert(Self::bias_name(prefix, l), Tensor::zeros(vec![1, fan_out]));
        }
    }

    /// Records the network applied row-wise to `x` on `g`.
    pub fn forward<S: Scalar>(
        &self,
        g: &mut Graph<S>,
        params: &ParamStore<S>,
        prefix: &str,
        x: Var,
    ) -> Result<Var> {
        let (_, cols) = g.shape(x);
        if cols != self.input_width() {
            return Err(Error::dim(format!("{prefix} layer 0 input"), self.input_width(), cols));
        }
        let mut h = x;
        for l in 0..self.layers() {
            let wname = Self::weight_name(prefix, l);
            let bname = Self::bias_name(prefix, l);
            let wt = params.get(&wname)?;
            if wt.rows() != self.widths[l] || wt.cols() != self.widths[l + 1] {
                return Err(Error::dim(
                    format!("{prefix} layer {l} weight"),
                    self.widths[l] * self.widths[l + 1],
                    wt.len(),
                ));
            }
            let bt = params.get(&bname)?;
            if bt.len() != self.widths[l + 1] {
                return Err(Error::dim(
                    format!("{prefix} layer {l} bias"),
                    self.widths[l + 1],
                    bt.len(),
                ));
            }
            let w = g.param(&wname, wt);
            let b = g.param(&bname, bt);
            let z = g.matmul(h, w)?;
            h = g.add_row(z, b)?;
            if l + 1 < self.layers() && self.activation == Activation::Relu {
                h = g.relu(h);
            }
        }
        Ok(h)
    }
}

/// Applies the network to every row of `input` without recording gradients
/// for the caller.
pub fn mlp_forward<S: Scalar>(
    spec: &MlpSpec,
    params: &ParamStore<S>,
    prefix: &str,
    input: &Tensor<S>,
) -> Result<Tensor<S>> {
    let mut g = Graph::new();
    let x = g.constant_tensor(input);
    let y = spec.forward(&mut g, params, prefix, x)?;
    Ok(g.to_tensor(y))
}
