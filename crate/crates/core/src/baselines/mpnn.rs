use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, MlpSpec, ParamStore, Tensor, Var};
use crate::baselines::line_graph::LineGraph;
use crate::compression::pipeline::{message_step, set_update};
use crate::compression::EdgeIndex;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub mod role {
    pub const ENCODER: &str = "enc";
    pub const INIT_EDGE: &str = "init_e.phi";
    pub const EE_PSI: &str = "ee.psi";
    pub const EE_PHI: &str = "ee.phi";
    pub const EV_PSI: &str = "ev.psi";
    pub const EV_PHI: &str = "ev.phi";
    pub const VE_PSI: &str = "ve.psi";
    pub const VE_PHI: &str = "ve.phi";
    pub const OUT_PSI: &str = "out.psi";
    pub const OUT_PHI: &str = "out.phi";
    pub const DECODER: &str = "dec";
}

/// Message passing over the line graph: edges to edges, edges to nodes,
/// nodes to edges, and a final edge-to-node step with the raw signal as
/// residual input that yields a `final_dim` code per link.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MpnnConfig {
    pub d: usize,
    pub hidden: usize,
    pub mlp_hidden: usize,
    pub final_dim: usize,
}

impl MpnnConfig {
    pub fn new(d: usize, final_dim: usize) -> Self {
        MpnnConfig {
            d,
            hidden: 20,
            mlp_hidden: 20,
            final_dim,
        }
    }

    fn mlp(&self, input: usize, output: usize) -> MlpSpec {
        MlpSpec::relu(vec![input, self.mlp_hidden, output]).expect("positive widths")
    }

    pub fn roles(&self) -> Vec<(&'static str, MlpSpec)> {
        let h = self.hidden;
        vec![
            (role::ENCODER, self.mlp(self.d, h)),
            (role::INIT_EDGE, self.mlp(3 * h, h)),
            (role::EE_PSI, self.mlp(2 * h, h)),
            (role::EE_PHI, self.mlp(3 * h, h)),
            (role::EV_PSI, self.mlp(2 * h, h)),
            (role::EV_PHI, self.mlp(3 * h, h)),
            (role::VE_PSI, self.mlp(2 * h, h)),
            (role::VE_PHI, self.mlp(3 * h, h)),
            (role::OUT_PSI, self.mlp(self.d + 2 * h, h)),
            (role::OUT_PHI, self.mlp(3 * h, self.final_dim)),
            (role::DECODER, self.mlp(self.final_dim, self.d)),
        ]
    }

    pub fn spec(&self, prefix: &str) -> MlpSpec {
        self.roles()
            .into_iter()
            .find(|(p, _)| *p == prefix)
            .map(|(_, s)| s)
            .expect("known MPNN role")
    }

    pub fn init_params<S: Scalar, R: Rng>(&self, rng: &mut R) -> ParamStore<S> {
        let mut p = ParamStore::new();
        for (prefix, spec) in self.roles() {
            spec.init_params(prefix, &mut p, rng);
        }
        p
    }
}

/// Records the four message steps and the decoder; `x` holds one row per
/// line-graph node. Returns `(codes, reconstruction)`.
pub fn mpnn_forward<S: Scalar>(
    g: &mut Graph<S>,
    params: &ParamStore<S>,
    cfg: &MpnnConfig,
    index: &EdgeIndex,
    x: Var,
) -> Result<(Var, Var)> {
    let spec = |r| cfg.spec(r);
    let h0 = spec(role::ENCODER).forward(g, params, role::ENCODER, x)?;
    let he0 = set_update(g, params, (&spec(role::INIT_EDGE), role::INIT_EDGE), h0, &index.ends)?;

    // edges to edges
    let recv = g.gather_rows(he0, index.nb_recv.clone())?;
    let send = g.gather_rows(he0, index.nb_send.clone())?;
    let he1 = message_step(
        g,
        params,
        (&spec(role::EE_PSI), role::EE_PSI),
        (&spec(role::EE_PHI), role::EE_PHI),
        &[recv, send],
        &index.nb_segments,
    )?;

    // edges to nodes
    let hv_inc = g.gather_rows(h0, index.inc_node.clone())?;
    let he_inc = g.gather_rows(he1, index.inc_edge.clone())?;
    let hv1 = message_step(
        g,
        params,
        (&spec(role::EV_PSI), role::EV_PSI),
        (&spec(role::EV_PHI), role::EV_PHI),
        &[hv_inc, he_inc],
        &index.node_incidences,
    )?;

    // nodes to edges
    let he_inc = g.gather_rows(he1, index.inc_edge.clone())?;
    let hv_inc = g.gather_rows(hv1, index.inc_node.clone())?;
    let he2 = message_step(
        g,
        params,
        (&spec(role::VE_PSI), role::VE_PSI),
        (&spec(role::VE_PHI), role::VE_PHI),
        &[he_inc, hv_inc],
        &index.edge_incidences,
    )?;

    // edges to nodes with the raw signal as residual input
    let x_inc = g.gather_rows(x, index.inc_node.clone())?;
    let hv_inc = g.gather_rows(hv1, index.inc_node.clone())?;
    let he_inc = g.gather_rows(he2, index.inc_edge.clone())?;
    let code = message_step(
        g,
        params,
        (&spec(role::OUT_PSI), role::OUT_PSI),
        (&spec(role::OUT_PHI), role::OUT_PHI),
        &[x_inc, hv_inc, he_inc],
        &index.node_incidences,
    )?;
    let out = spec(role::DECODER).forward(g, params, role::DECODER, code)?;
    Ok((code, out))
}

/// Codes (`N x final_dim`) and reconstruction (`N x d`) of one subsignal.
pub fn mpnn_compress<S: Scalar>(
    subsignal: &Tensor<S>,
    line_graph: &LineGraph,
    params: &ParamStore<S>,
    cfg: &MpnnConfig,
) -> Result<(Tensor<S>, Tensor<S>)> {
    if subsignal.rows() != line_graph.num_nodes() {
        return Err(Error::dim("subsignal rows vs line graph", line_graph.num_nodes(), subsignal.rows()));
    }
    if subsignal.cols() != cfg.d {
        return Err(Error::dim("subsignal window", cfg.d, subsignal.cols()));
    }
    let index = EdgeIndex::new(line_graph.num_nodes(), &line_graph.edges())?;
    let mut g = Graph::new();
    let x = g.constant_tensor(subsignal);
    let (code, out) = mpnn_forward(&mut g, params, cfg, &index, x)?;
    Ok((g.to_tensor(code), g.to_tensor(out)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::mlp_forward;
    use crate::baselines::build_line_graph;
    use crate::ingestion::NetworkTopology;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> MpnnConfig {
        MpnnConfig {
            d: 3,
            hidden: 4,
            mlp_hidden: 5,
            final_dim: 2,
        }
    }

    fn path4() -> LineGraph {
        let mut t = NetworkTopology::new(["a", "b", "c", "d", "e"]).unwrap();
        for (s, d) in [("a", "b"), ("b", "c"), ("c", "d"), ("d", "e")] {
            t.add_link(s, d).unwrap();
        }
        build_line_graph(&t)
    }

    fn f(cfg: &MpnnConfig, p: &ParamStore<f64>, r: &str, input: Vec<f64>) -> Vec<f64> {
        let n = input.len();
        mlp_forward(&cfg.spec(r), p, r, &Tensor::matrix(1, n, input).unwrap()).unwrap().into_values()
    }

    fn agg(rows: &[Vec<f64>], w: usize) -> Vec<f64> {
        if rows.is_empty() {
            return vec![0.0; 3 * w];
        }
        let mut out = vec![0.0; 3 * w];
        for j in 0..w {
            let c: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            out[j] = c.iter().sum::<f64>() / c.len() as f64;
            out[w + j] = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            out[2 * w + j] = c.iter().cloned().fold(f64::INFINITY, f64::min);
        }
        out
    }

    #[test]
    fn path_topology_matches_manual_trace() {
        let cfg = small();
        let lg = path4();
        let edges = lg.edges();
        assert_eq!(edges, vec![(0, 1), (1, 2), (2, 3)]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p: ParamStore<f64> = cfg.init_params(&mut rng);
        let x: Vec<Vec<f64>> = (0..4).map(|_| (0..3).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let (codes, recon) = mpnn_compress(&Tensor::from_rows(&x).unwrap(), &lg, &p, &cfg).unwrap();

        let h = cfg.hidden;
        let h0: Vec<Vec<f64>> = x.iter().map(|r| f(&cfg, &p, role::ENCODER, r.clone())).collect();
        let he0: Vec<Vec<f64>> = edges
            .iter()
            .map(|&(a, b)| f(&cfg, &p, role::INIT_EDGE, agg(&[h0[a].clone(), h0[b].clone()], h)))
            .collect();
        let touches = |e: usize, v: usize| edges[e].0 == v || edges[e].1 == v;
        let he1: Vec<Vec<f64>> = (0..edges.len())
            .map(|e| {
                let ms: Vec<Vec<f64>> = (0..edges.len())
                    .filter(|&o| o != e && (touches(o, edges[e].0) || touches(o, edges[e].1)))
                    .map(|o| f(&cfg, &p, role::EE_PSI, [he0[e].clone(), he0[o].clone()].concat()))
                    .collect();
                f(&cfg, &p, role::EE_PHI, agg(&ms, h))
            })
            .collect();
        let hv1: Vec<Vec<f64>> = (0..4)
            .map(|v| {
                let ms: Vec<Vec<f64>> = (0..edges.len())
                    .filter(|&e| touches(e, v))
                    .map(|e| f(&cfg, &p, role::EV_PSI, [h0[v].clone(), he1[e].clone()].concat()))
                    .collect();
                f(&cfg, &p, role::EV_PHI, agg(&ms, h))
            })
            .collect();
        let he2: Vec<Vec<f64>> = edges
            .iter()
            .enumerate()
            .map(|(e, &(a, b))| {
                let ms: Vec<Vec<f64>> = [a, b]
                    .iter()
                    .map(|&v| f(&cfg, &p, role::VE_PSI, [he1[e].clone(), hv1[v].clone()].concat()))
                    .collect();
                f(&cfg, &p, role::VE_PHI, agg(&ms, h))
            })
            .collect();
        for v in 0..4 {
            let ms: Vec<Vec<f64>> = (0..edges.len())
                .filter(|&e| touches(e, v))
                .map(|e| f(&cfg, &p, role::OUT_PSI, [x[v].clone(), hv1[v].clone(), he2[e].clone()].concat()))
                .collect();
            let code = f(&cfg, &p, role::OUT_PHI, agg(&ms, h));
            for (a, b) in codes.row(v).iter().zip(&code) {
                assert!((a - b).abs() < 1e-12);
            }
            let rec = f(&cfg, &p, role::DECODER, code);
            for (a, b) in recon.row(v).iter().zip(&rec) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn isolated_link_gets_defined_code() {
        let cfg = small();
        let mut t = NetworkTopology::new(["a", "b", "c", "d"]).unwrap();
        t.add_link("a", "b").unwrap();
        t.add_link("c", "d").unwrap();
        let lg = build_line_graph(&t);
        assert_eq!(lg.num_edges(), 0);
        let p: ParamStore<f64> = cfg.init_params(&mut ChaCha8Rng::seed_from_u64(0));
        let x = Tensor::matrix(2, 3, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
        let (codes, recon) = mpnn_compress(&x, &lg, &p, &cfg).unwrap();
        assert!(codes.values().iter().chain(recon.values()).all(|v| v.is_finite()));
        // with no incidences both links aggregate zeros and coincide
        assert_eq!(codes.row(0), codes.row(1));
    }

    #[test]
    fn invariant_to_edge_enumeration_order() {
        let cfg = MpnnConfig::new(10, 4);
        let topo = crate::ingestion::Preset::Abilene.topology();
        let lg = build_line_graph(&topo);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p: ParamStore<f32> = cfg.init_params(&mut rng);
        let x = Tensor::matrix(30, 10, (0..300).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
        let run = |edges: &[(usize, usize)]| {
            let index = EdgeIndex::new(30, edges).unwrap();
            let mut g = Graph::new();
            let xv = g.constant_tensor(&x);
            let (c, _) = mpnn_forward(&mut g, &p, &cfg, &index, xv).unwrap();
            g.to_tensor(c)
        };
        let base = run(&lg.edges());
        for _ in 0..5 {
            let mut e = lg.edges();
            e.shuffle(&mut rng);
            let e: Vec<(usize, usize)> = e.into_iter().map(|(a, b)| if rng.random() { (b, a) } else { (a, b) }).collect();
            assert_eq!(run(&e), base);
        }
    }
}
