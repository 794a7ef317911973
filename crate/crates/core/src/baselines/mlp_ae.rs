use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{mlp_forward, Graph, MlpSpec, ParamStore, Tensor, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const ENCODER: &str = "ae_enc";
pub const DECODER: &str = "ae_dec";

/// `ceil(r_c * N * d)`.
pub fn bottleneck_size(n: usize, d: usize, rc: Ratio<u64>) -> Result<usize> {
    if *rc.numer() == 0 || rc > Ratio::from_integer(1) {
        return Err(Error::Parameter(format!("compression factor {rc} must lie in (0, 1]")));
    }
    let b = (rc * Ratio::from_integer((n * d) as u64)).ceil().to_integer();
    Ok(b as usize)
}

/// Flat auto-encoder `[N d, h1, h2, b]` / `[b, h2, h1, N d]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpAeConfig {
    pub n: usize,
    pub d: usize,
    pub hidden: Vec<usize>,
    pub bottleneck: usize,
}

impl MlpAeConfig {
    pub fn new(n: usize, d: usize, rc: Ratio<u64>) -> Result<Self> {
        Ok(MlpAeConfig {
            n,
            d,
            hidden: vec![1024, 512],
            bottleneck: bottleneck_size(n, d, rc)?,
        })
    }

    pub fn encoder(&self) -> MlpSpec {
        let mut w = vec![self.n * self.d];
        w.extend(&self.hidden);
        w.push(self.bottleneck);
        MlpSpec::relu(w).expect("positive widths")
    }

    pub fn decoder(&self) -> MlpSpec {
        let mut w = vec![self.bottleneck];
        w.extend(self.hidden.iter().rev());
        w.push(self.n * self.d);
        MlpSpec::relu(w).expect("positive widths")
    }

    /// `sum over layers of (in + 1) * out`, both halves.
    pub fn num_params(&self) -> usize {
        let mut w = vec![self.n * self.d];
        w.extend(&self.hidden);
        w.push(self.bottleneck);
        let half: usize = w.windows(2).map(|p| (p[0] + 1) * p[1]).sum();
        let back: usize = w.windows(2).map(|p| (p[1] + 1) * p[0]).sum();
        half + back
    }

    pub fn init_params<S: Scalar, R: Rng>(&self, rng: &mut R) -> ParamStore<S> {
        let mut p = ParamStore::new();
        self.encoder().init_params(ENCODER, &mut p, rng);
        self.decoder().init_params(DECODER, &mut p, rng);
        p
    }

    /// Records encoder and decoder on flattened rows `x` (`B x N d`); returns
    /// `(codes, reconstruction)`.
    pub fn forward<S: Scalar>(&self, g: &mut Graph<S>, params: &ParamStore<S>, x: Var) -> Result<(Var, Var)> {
        let code = self.encoder().forward(g, params, ENCODER, x)?;
        let out = self.decoder().forward(g, params, DECODER, code)?;
        Ok((code, out))
    }
}

/// Reconstructs one `N x d` subsignal.
pub fn mlp_ae<S: Scalar>(subsignal: &Tensor<S>, params: &ParamStore<S>, cfg: &MlpAeConfig) -> Result<Tensor<S>> {
    if subsignal.rows() * subsignal.cols() != cfg.n * cfg.d {
        return Err(Error::dim("flattened subsignal", cfg.n * cfg.d, subsignal.len()));
    }
    let flat = Tensor::matrix(1, cfg.n * cfg.d, subsignal.values().to_vec())?;
    let code = mlp_forward(&cfg.encoder(), params, ENCODER, &flat)?;
    let out = mlp_forward(&cfg.decoder(), params, DECODER, &code)?;
    Tensor::matrix(cfg.n, cfg.d, out.into_values())
}
