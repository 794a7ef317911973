use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{MlpSpec, ParamStore};
use crate::error::{Error, Result};
use crate::inference::DEFAULT_EDGE_FANOUT;
use crate::scalar::Scalar;

/// Which topological pipeline runs between the encoder and the decoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    SetMp,
    CombMp,
}

/// Parameter-name prefixes of every learnable function.
pub mod role {
    pub const ENCODER: &str = "enc";
    pub const INIT_EDGE: &str = "init_e.phi";
    pub const INIT_HYPEREDGE: &str = "init_w.phi";
    pub const EE_PSI: &str = "ee.psi";
    pub const EE_PHI: &str = "ee.phi";
    pub const EW_PSI: &str = "ew.psi";
    pub const EW_PHI: &str = "ew.phi";
    pub const WE_PSI: &str = "we.psi";
    pub const WE_PHI: &str = "we.phi";
    pub const EV_PSI: &str = "ev.psi";
    pub const EV_PHI: &str = "ev.phi";
    pub const WV_PSI: &str = "wv.psi";
    pub const WV_PHI: &str = "wv.phi";
    pub const VW_PSI: &str = "vw.psi";
    pub const VW_PHI: &str = "vw.phi";
    pub const DECODER: &str = "dec";
}

/// Widths of the SetMP / CombMP networks.
///
/// Every ψ and φ is a one-hidden-layer MLP of width `mlp_hidden`; ψ outputs
/// and all intermediate states have width `hidden` (d').
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopoConfig {
    /// Window length d.
    pub d: usize,
    /// State width d'.
    pub hidden: usize,
    pub mlp_hidden: usize,
    pub dvc: usize,
    pub dwc: usize,
    /// Maximum hyperedge length.
    pub p: usize,
    /// CombMP rounds T.
    pub rounds: usize,
    pub edge_fanout: usize,
}

impl TopoConfig {
    pub fn new(d: usize, p: usize, dvc: usize, dwc: usize) -> Self {
        TopoConfig {
            d,
            hidden: 20,
            mlp_hidden: 20,
            dvc,
            dwc,
            p,
            rounds: 1,
            edge_fanout: DEFAULT_EDGE_FANOUT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("d", self.d),
            ("hidden", self.hidden),
            ("mlp_hidden", self.mlp_hidden),
            ("dvc", self.dvc),
            ("dwc", self.dwc),
            ("edge_fanout", self.edge_fanout),
        ];
        for (name, v) in named {
            if v == 0 {
                return Err(Error::Parameter(format!("{name} must be positive")));
            }
        }
        if self.hidden < 2 {
            return Err(Error::Parameter("hidden width must be at least 2 for the SNR similarity".into()));
        }
        Ok(())
    }

    fn mlp(&self, input: usize, output: usize) -> MlpSpec {
        MlpSpec::relu(vec![input, self.mlp_hidden, output]).expect("widths are positive")
    }

    pub fn encoder(&self) -> MlpSpec {
        self.mlp(self.d, self.hidden)
    }

    /// φ over a `3 * hidden` aggregate.
    pub fn update(&self, output: usize) -> MlpSpec {
        self.mlp(3 * self.hidden, output)
    }

    /// ψ over concatenated arguments.
    pub fn message(&self, input: usize) -> MlpSpec {
        self.mlp(input, self.hidden)
    }

    pub fn decoder(&self) -> MlpSpec {
        self.mlp(self.dvc + self.dwc, self.d)
    }

    /// Every (prefix, network) the pipeline uses.
    pub fn roles(&self, pipeline: Pipeline) -> Vec<(&'static str, MlpSpec)> {
        let h = self.hidden;
        let mut out = vec![
            (role::ENCODER, self.encoder()),
            (role::INIT_HYPEREDGE, self.update(h)),
        ];
        match pipeline {
            Pipeline::SetMp => {
                out.push((role::WV_PSI, self.message(self.d + 2 * h)));
                out.push((role::WV_PHI, self.update(self.dvc)));
            }
            Pipeline::CombMp => {
                out.push((role::INIT_EDGE, self.update(h)));
                for (psi, phi) in [
                    (role::EE_PSI, role::EE_PHI),
                    (role::EW_PSI, role::EW_PHI),
                    (role::WE_PSI, role::WE_PHI),
                ] {
                    out.push((psi, self.message(2 * h)));
                    out.push((phi, self.update(h)));
                }
                out.push((role::EV_PSI, self.message(self.d + 2 * h)));
                out.push((role::EV_PHI, self.update(self.dvc)));
            }
        }
        out.push((role::VW_PSI, self.message(self.d + self.dvc + h)));
        out.push((role::VW_PHI, self.update(self.dwc)));
        out.push((role::DECODER, self.decoder()));
        out
    }

    pub fn spec(&self, pipeline: Pipeline, prefix: &str) -> Result<MlpSpec> {
        self.roles(pipeline)
            .into_iter()
            .find(|(p, _)| *p == prefix)
            .map(|(_, s)| s)
            .ok_or_else(|| Error::MissingParam(prefix.to_string()))
    }

    pub fn init_params<S: Scalar, R: Rng>(&self, pipeline: Pipeline, rng: &mut R) -> ParamStore<S> {
        let mut store = ParamStore::new();
        for (prefix, spec) in self.roles(pipeline) {
            spec.init_params(prefix, &mut store, rng);
        }
        store
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roles_cover_both_pipelines() {
        let cfg = TopoConfig::new(10, 8, 2, 10);
        let set: Vec<&str> = cfg.roles(Pipeline::SetMp).iter().map(|r| r.0).collect();
        assert_eq!(set, vec!["enc", "init_w.phi", "wv.psi", "wv.phi", "vw.psi", "vw.phi", "dec"]);
        assert_eq!(cfg.roles(Pipeline::CombMp).len(), 14);
        let p: ParamStore<f32> = cfg.init_params(Pipeline::SetMp, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(p.len(), 7 * 4);
        assert_eq!(p.get("vw.psi.0.weight").unwrap().shape(), &[10 + 2 + 20, 20]);
        assert_eq!(p.get("dec.0.weight").unwrap().shape(), &[12, 20]);
    }
}
