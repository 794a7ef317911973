use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, ParamStore, Tensor, Var};
use crate::baselines::{build_line_graph, mpnn_forward, MlpAeConfig, MpnnConfig};
use crate::compression::{
    combmp_rounds, compress_combmp, compress_setmp, compression_ratio, flat_ratio,
    init_structure_embeddings, per_node_ratio, pipeline, role, CompressedArtifact, CompressionRatio, EdgeIndex,
    Pipeline, Structure, TopoConfig,
};
use crate::error::{Error, Result};
use crate::inference::{embed_nodes, greedy_cluster, hyperedge_count, infer_edges, snr_similarity, HyperedgePartition};
use crate::ingestion::{NetworkTopology, TrafficDataset};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "setmp")]
    SetMp,
    #[serde(rename = "combmp")]
    CombMp,
    #[serde(rename = "mpnn")]
    Mpnn,
    #[serde(rename = "mlp_ae")]
    MlpAe,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::SetMp, ModelKind::CombMp, ModelKind::Mpnn, ModelKind::MlpAe];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::SetMp => "setmp",
            ModelKind::CombMp => "combmp",
            ModelKind::Mpnn => "mpnn",
            ModelKind::MlpAe => "mlp_ae",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            ModelKind::SetMp => 0,
            ModelKind::CombMp => 1,
            ModelKind::Mpnn => 2,
            ModelKind::MlpAe => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        ModelKind::ALL.into_iter().find(|k| k.code() == code)
    }

    pub fn is_topological(self) -> bool {
        matches!(self, ModelKind::SetMp | ModelKind::CombMp)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown model `{s}` (setmp|combmp|mpnn|mlp_ae)")))
    }
}

/// Architecture-specific hyperparameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Architecture {
    #[serde(rename = "setmp")]
    SetMp(TopoConfig),
    #[serde(rename = "combmp")]
    CombMp(TopoConfig),
    #[serde(rename = "mpnn")]
    Mpnn(MpnnConfig),
    #[serde(rename = "mlp_ae")]
    MlpAe(MlpAeConfig),
}

/// Everything needed to rebuild a model's networks for `n` links and
/// windows of length `d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n: usize,
    pub d: usize,
    pub architecture: Architecture,
}

impl ModelConfig {
    pub fn kind(&self) -> ModelKind {
        match self.architecture {
            Architecture::SetMp(_) => ModelKind::SetMp,
            Architecture::CombMp(_) => ModelKind::CombMp,
            Architecture::Mpnn(_) => ModelKind::Mpnn,
            Architecture::MlpAe(_) => ModelKind::MlpAe,
        }
    }

    pub fn topo(&self) -> Option<(Pipeline, &TopoConfig)> {
        match &self.architecture {
            Architecture::SetMp(c) => Some((Pipeline::SetMp, c)),
            Architecture::CombMp(c) => Some((Pipeline::CombMp, c)),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::Parameter("model needs at least one link and a positive window".into()));
        }
        let d = match &self.architecture {
            Architecture::SetMp(c) | Architecture::CombMp(c) => {
                c.validate()?;
                crate::inference::hyperedge_sizes(self.n, c.p)?;
                c.d
            }
            Architecture::Mpnn(c) => {
                if c.hidden == 0 || c.mlp_hidden == 0 || c.final_dim == 0 {
                    return Err(Error::Parameter("MPNN widths must be positive".into()));
                }
                c.d
            }
            Architecture::MlpAe(c) => {
                if c.n != self.n {
                    return Err(Error::Parameter(format!("auto-encoder built for {} links, model for {}", c.n, self.n)));
                }
                if c.bottleneck == 0 || c.hidden.contains(&0) {
                    return Err(Error::Parameter("auto-encoder widths must be positive".into()));
                }
                c.d
            }
        };
        if d != self.d {
            return Err(Error::Parameter(format!("architecture window {d} differs from model window {}", self.d)));
        }
        Ok(())
    }

    /// Floats stored per subsignal over raw floats.
    pub fn achieved_ratio(&self) -> Result<CompressionRatio> {
        match &self.architecture {
            Architecture::SetMp(c) | Architecture::CombMp(c) => {
                compression_ratio(self.n, self.d, hyperedge_count(self.n, c.p), c.dvc, c.dwc)
            }
            Architecture::Mpnn(c) => per_node_ratio(self.n, self.d, c.final_dim),
            Architecture::MlpAe(c) => flat_ratio(self.n, self.d, c.bottleneck),
        }
    }

    pub fn init_params<S: Scalar, R: Rng>(&self, rng: &mut R) -> ParamStore<S> {
        match &self.architecture {
            Architecture::SetMp(c) => c.init_params(Pipeline::SetMp, rng),
            Architecture::CombMp(c) => c.init_params(Pipeline::CombMp, rng),
            Architecture::Mpnn(c) => c.init_params(rng),
            Architecture::MlpAe(c) => c.init_params(rng),
        }
    }

    /// Errors unless the dataset has this model's link count and window.
    pub fn check_dataset(&self, data: &TrafficDataset) -> Result<()> {
        if data.num_links() != self.n || data.window != self.d {
            return Err(Error::Compatibility(format!(
                "model expects {} links x window {}, dataset has {} x {}",
                self.n,
                self.d,
                data.num_links(),
                data.window
            )));
        }
        Ok(())
    }

    /// Errors unless `params` holds exactly this model's tensors.
    pub fn check_params<S: Scalar>(&self, params: &ParamStore<S>) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let want: ParamStore<S> = self.init_params(&mut rng);
        if want.len() != params.len() {
            return Err(Error::Compatibility(format!(
                "model has {} parameter tensors, store has {}",
                want.len(),
                params.len()
            )));
        }
        for (name, t) in want.iter() {
            let got = params
                .get(name)
                .map_err(|_| Error::Compatibility(format!("parameter `{name}` missing")))?;
            if got.shape() != t.shape() {
                return Err(Error::Compatibility(format!(
                    "parameter `{name}` has shape {:?}, model needs {:?}",
                    got.shape(),
                    t.shape()
                )));
            }
        }
        Ok(())
    }
}

/// A model configuration bound to its link set.
#[derive(Clone, Debug)]
pub struct Model {
    pub config: ModelConfig,
    line_edges: Option<Vec<(usize, usize)>>,
}

/// Graph handles of one batched forward pass.
#[derive(Clone, Copy, Debug)]
pub struct Forward {
    pub input: Var,
    pub output: Var,
    pub loss: Var,
}

impl Model {
    pub fn new(config: ModelConfig, links: &[String]) -> Result<Self> {
        config.validate()?;
        if links.len() != config.n {
            return Err(Error::Compatibility(format!(
                "model expects {} links, got {}",
                config.n,
                links.len()
            )));
        }
        let line_edges = match config.architecture {
            Architecture::Mpnn(_) => {
                let topo = NetworkTopology::from_link_names(links)?;
                Some(build_line_graph(&topo).edges())
            }
            _ => None,
        };
        Ok(Model { config, line_edges })
    }

    pub fn kind(&self) -> ModelKind {
        self.config.kind()
    }

    /// Hyperedges (and, for CombMP, intra-hyperedge edges) inferred from
    /// node embeddings `N x d'`.
    pub fn infer_partition<S: Scalar>(&self, embeddings: &Tensor<S>) -> Result<HyperedgePartition> {
        let (pipeline, cfg) = self
            .config
            .topo()
            .ok_or_else(|| Error::Contract("structure inference needs a topological model".into()))?;
        let sim = snr_similarity(embeddings)?;
        let part = greedy_cluster(&sim, cfg.p)?;
        match pipeline {
            Pipeline::SetMp => Ok(part),
            Pipeline::CombMp => {
                let edges = infer_edges(&sim, &part, cfg.edge_fanout)?;
                part.with_edges(edges)
            }
        }
    }

    /// Records the reconstruction of `samples` (each `N x d`, row-major)
    /// and the mean squared error over all of their entries.
    ///
    /// Structure inference reads the encoder values and contributes no
    /// gradient.
    pub fn forward<S: Scalar>(&self, g: &mut Graph<S>, params: &ParamStore<S>, samples: &[&[f64]]) -> Result<Forward> {
        let (n, d) = (self.config.n, self.config.d);
        if samples.is_empty() {
            return Err(Error::Contract("forward pass needs at least one sample".into()));
        }
        let mut values = Vec::with_capacity(samples.len() * n * d);
        for s in samples {
            if s.len() != n * d {
                return Err(Error::dim("subsignal size", n * d, s.len()));
            }
            values.extend(s.iter().map(|&v| S::from_f64_lossy(v)));
        }
        let b = samples.len();
        let (x, out) = match &self.config.architecture {
            Architecture::SetMp(cfg) | Architecture::CombMp(cfg) => {
                let x = g.constant(b * n, d, values)?;
                let h0 = pipeline::encode(g, params, cfg, x)?;
                let h = g.value(h0).to_vec();
                let mut parts = Vec::with_capacity(b);
                for chunk in h.chunks(n * cfg.hidden) {
                    let emb = Tensor::matrix(n, cfg.hidden, chunk.to_vec())?;
                    parts.push(self.infer_partition(&emb)?);
                }
                let refs: Vec<&HyperedgePartition> = parts.iter().collect();
                let with_edges = refs.iter().any(|p| !p.edges().is_empty());
                let st = Structure::from_partitions(&refs, with_edges)?;
                let (pl, _) = self.config.topo().expect("topological");
                let (hvc, hwc) = pipeline::codes(pl, g, params, cfg, &st, x, h0)?;
                (x, pipeline::decode(g, params, cfg, &st.node_owner, hvc, hwc)?)
            }
            Architecture::Mpnn(cfg) => {
                let x = g.constant(b * n, d, values)?;
                let local = self.line_edges.as_ref().expect("line graph of an MPNN model");
                let mut edges = Vec::with_capacity(local.len() * b);
                for k in 0..b {
                    edges.extend(local.iter().map(|&(u, v)| (u + k * n, v + k * n)));
                }
                let index = EdgeIndex::new(b * n, &edges)?;
                let (_, out) = mpnn_forward(g, params, cfg, &index, x)?;
                (x, out)
            }
            Architecture::MlpAe(cfg) => {
                let x = g.constant(b, n * d, values)?;
                let (_, out) = cfg.forward(g, params, x)?;
                (x, out)
            }
        };
        let loss = g.mse(out, x)?;
        Ok(Forward {
            input: x,
            output: out,
            loss,
        })
    }

    /// Reconstructions of `samples`, each `N x d` row-major, as `f64`.
    pub fn reconstruct<S: Scalar>(&self, params: &ParamStore<S>, samples: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
        let mut g = Graph::new();
        let f = self.forward(&mut g, params, samples)?;
        let per = self.config.n * self.config.d;
        Ok(g.value(f.output)
            .chunks(per)
            .map(|c| c.iter().map(|v| v.to_f64_lossy()).collect())
            .collect())
    }

    /// Compressed artifact of one normalized subsignal (`N x d`).
    pub fn compress<S: Scalar>(&self, params: &ParamStore<S>, subsignal: &Tensor<S>) -> Result<CompressedArtifact<S>> {
        let (pl, cfg) = self.config.topo().ok_or_else(|| {
            Error::Compatibility(format!("{} models do not produce compressed artifacts", self.kind()))
        })?;
        let encoder = cfg.spec(pl, role::ENCODER)?;
        let emb = embed_nodes(subsignal, &encoder, params, role::ENCODER)?;
        let part = self.infer_partition(&emb)?;
        match pl {
            Pipeline::SetMp => compress_setmp(subsignal, &emb, &part, cfg, params),
            Pipeline::CombMp => {
                let state = init_structure_embeddings(&emb, &part, cfg, params)?;
                let rounds = if part.edges().is_empty() { 0 } else { cfg.rounds };
                let state = combmp_rounds(state, &part, rounds, cfg, params)?;
                compress_combmp(subsignal, &state, &part, cfg, params)
            }
        }
    }
}

/// Architecture presets and training protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub model: ModelKind,
    /// Target compression factor.
    pub rc: Ratio<u64>,
    pub p: usize,
    pub hidden: usize,
    pub dvc: usize,
    pub dwc: usize,
    pub rounds: usize,
    /// MPNN code width; derived from `rc` when unset.
    pub final_dim: Option<usize>,
    pub ae_hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub eps: f64,
    pub seed: u64,
}

impl TrainConfig {
    /// Defaults: `p = 8, dvc = 2, dwc = 10` up to `rc = 1/3`, otherwise
    /// `p = 6, dvc = 5, dwc = 10`; d' = 20, T = 1, 200 epochs, batches of 25,
    /// Adam with learning rate 0.003 and epsilon 0.001.
    pub fn new(model: ModelKind, rc: Ratio<u64>, seed: u64) -> Self {
        let (p, dvc, dwc) = if rc <= Ratio::new(1, 3) { (8, 2, 10) } else { (6, 5, 10) };
        TrainConfig {
            model,
            rc,
            p,
            hidden: 20,
            dvc,
            dwc,
            rounds: 1,
            final_dim: None,
            ae_hidden: vec![1024, 512],
            epochs: 200,
            batch_size: 25,
            lr: 0.003,
            eps: 0.001,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Parameter("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Parameter("batch size must be at least 1".into()));
        }
        if *self.rc.numer() == 0 || self.rc > Ratio::from_integer(1) {
            return Err(Error::Parameter(format!("compression factor {} must lie in (0, 1]", self.rc)));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::Parameter(format!("learning rate {} must be finite and non-negative", self.lr)));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Parameter(format!("epsilon {} must be positive", self.eps)));
        }
        Ok(())
    }

    /// MPNN code width: 4 for `rc = 1/3`, 7 for `rc = 2/3`, otherwise
    /// `ceil(rc d)`.
    pub fn mpnn_final_dim(&self, d: usize) -> usize {
        if let Some(f) = self.final_dim {
            return f;
        }
        if self.rc == Ratio::new(1, 3) {
            4
        } else if self.rc == Ratio::new(2, 3) {
            7
        } else {
            (self.rc * Ratio::from_integer(d as u64)).ceil().to_integer() as usize
        }
    }

    /// Model for `n` links and windows of length `d`.
    pub fn model_config(&self, n: usize, d: usize) -> Result<ModelConfig> {
        self.validate()?;
        let topo = || TopoConfig {
            hidden: self.hidden,
            mlp_hidden: self.hidden,
            rounds: self.rounds,
            ..TopoConfig::new(d, self.p, self.dvc, self.dwc)
        };
        let architecture = match self.model {
            ModelKind::SetMp => Architecture::SetMp(topo()),
            ModelKind::CombMp => Architecture::CombMp(topo()),
            ModelKind::Mpnn => Architecture::Mpnn(MpnnConfig {
                hidden: self.hidden,
                mlp_hidden: self.hidden,
                ..MpnnConfig::new(d, self.mpnn_final_dim(d))
            }),
            ModelKind::MlpAe => Architecture::MlpAe(MlpAeConfig {
                hidden: self.ae_hidden.clone(),
                ..MlpAeConfig::new(n, d, self.rc)?
            }),
        };
        let cfg = ModelConfig { n, d, architecture };
        cfg.validate()?;
        Ok(cfg)
    }
}
