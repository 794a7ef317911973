//! Per-subsignal compression and decompression on plain tensors.

use crate::autodiff::{Graph, MlpSpec, ParamStore, Tensor, Var};
use crate::compression::artifact::{ArtifactMeta, CompressedArtifact};
use crate::compression::config::{role, TopoConfig};
use crate::compression::pipeline::{self, StateVars};
use crate::compression::structure::Structure;
use crate::error::{Error, Result};
use crate::inference::HyperedgePartition;
use crate::ingestion::Normalization;
use crate::scalar::Scalar;

/// Node, edge and hyperedge states after `round` CombMP rounds.
#[derive(Clone, Debug, PartialEq)]
pub struct TopoState<S> {
    pub nodes: Tensor<S>,
    /// `None` when the partition has no edges.
    pub edges: Option<Tensor<S>>,
    pub hyperedges: Tensor<S>,
    pub round: usize,
}

fn structure(partition: &HyperedgePartition) -> Result<Structure> {
    Structure::from_partitions(&[partition], !partition.edges().is_empty())
}

fn check_rows<S: Scalar>(what: &str, t: &Tensor<S>, rows: usize, cols: usize) -> Result<()> {
    if t.rows() != rows {
        return Err(Error::dim(format!("{what} rows"), rows, t.rows()));
    }
    if t.cols() != cols {
        return Err(Error::dim(format!("{what} columns"), cols, t.cols()));
    }
    Ok(())
}

fn state_vars<S: Scalar>(g: &mut Graph<S>, state: &TopoState<S>) -> StateVars {
    StateVars {
        nodes: g.constant_tensor(&state.nodes),
        edges: state.edges.as_ref().map(|e| g.constant_tensor(e)),
        hyperedges: g.constant_tensor(&state.hyperedges),
    }
}

fn read_state<S: Scalar>(g: &Graph<S>, v: StateVars, round: usize) -> TopoState<S> {
    TopoState {
        nodes: g.to_tensor(v.nodes),
        edges: v.edges.map(|e| g.to_tensor(e)),
        hyperedges: g.to_tensor(v.hyperedges),
        round,
    }
}

/// `h_e^0` and `h_w^0` from node embeddings (`N x d'`).
pub fn init_structure_embeddings<S: Scalar>(
    node_emb: &Tensor<S>,
    partition: &HyperedgePartition,
    cfg: &TopoConfig,
    params: &ParamStore<S>,
) -> Result<TopoState<S>> {
    check_rows("node embeddings", node_emb, partition.num_nodes(), cfg.hidden)?;
    let st = structure(partition)?;
    let mut g = Graph::new();
    let h0 = g.constant_tensor(node_emb);
    let v = pipeline::init_states(&mut g, params, cfg, h0, &st)?;
    Ok(read_state(&g, v, 0))
}

/// Runs `rounds` CombMP rounds. Zero rounds return the state unchanged.
pub fn combmp_rounds<S: Scalar>(
    state: TopoState<S>,
    partition: &HyperedgePartition,
    rounds: usize,
    cfg: &TopoConfig,
    params: &ParamStore<S>,
) -> Result<TopoState<S>> {
    if rounds == 0 {
        return Ok(state);
    }
    if partition.edges().is_empty() || state.edges.is_none() {
        return Err(Error::EmptyEdgeSet);
    }
    let st = structure(partition)?;
    let mut g = Graph::new();
    let mut v = state_vars(&mut g, &state);
    for _ in 0..rounds {
        v = pipeline::combmp_round(&mut g, params, cfg, &st, v)?;
    }
    Ok(read_state(&g, v, state.round + rounds))
}

fn artifact<S: Scalar>(
    g: &Graph<S>,
    partition: &HyperedgePartition,
    cfg: &TopoConfig,
    (hvc, hwc): (Var, Var),
) -> CompressedArtifact<S> {
    CompressedArtifact {
        meta: ArtifactMeta {
            n: partition.num_nodes(),
            d: cfg.d,
            k: partition.num_hyperedges(),
            p: partition.max_len(),
            dvc: cfg.dvc,
            dwc: cfg.dwc,
            model_id: 0,
            normalization: Normalization::identity(),
        },
        membership: partition.membership(),
        node_codes: g.to_tensor(hvc),
        hyper_codes: g.to_tensor(hwc),
    }
}

/// CombMP node and hyperedge codes from the state after its rounds.
///
/// Without edges the node step falls back to the SetMP hyperedge-to-node
/// compression, which needs the `wv.*` parameters.
pub fn compress_combmp<S: Scalar>(
    subsignal: &Tensor<S>,
    state: &TopoState<S>,
    partition: &HyperedgePartition,
    cfg: &TopoConfig,
    params: &ParamStore<S>,
) -> Result<CompressedArtifact<S>> {
    let n = partition.num_nodes();
    check_rows("subsignal", subsignal, n, cfg.d)?;
    check_rows("node states", &state.nodes, n, cfg.hidden)?;
    if !partition.edges().is_empty() && state.round == 0 {
        return Err(Error::Contract("CombMP compression expects at least one executed round".into()));
    }
    let st = structure(partition)?;
    let mut g = Graph::new();
    let x = g.constant_tensor(subsignal);
    let v = state_vars(&mut g, state);
    let codes = pipeline::combmp_codes_from_state(&mut g, params, cfg, &st, x, v)?;
    Ok(artifact(&g, partition, cfg, codes))
}

/// SetMP node and hyperedge codes.
pub fn compress_setmp<S: Scalar>(
    subsignal: &Tensor<S>,
    node_emb: &Tensor<S>,
    partition: &HyperedgePartition,
    cfg: &TopoConfig,
    params: &ParamStore<S>,
) -> Result<CompressedArtifact<S>> {
    let n = partition.num_nodes();
    check_rows("subsignal", subsignal, n, cfg.d)?;
    check_rows("node embeddings", node_emb, n, cfg.hidden)?;
    let st = Structure::from_partitions(&[partition], false)?;
    let mut g = Graph::new();
    let x = g.constant_tensor(subsignal);
    let h0 = g.constant_tensor(node_emb);
    let codes = pipeline::setmp_codes(&mut g, params, cfg, &st, x, h0)?;
    Ok(artifact(&g, partition, cfg, codes))
}

/// Reconstructs the normalized `N x d` subsignal from an artifact.
pub fn decompress<S: Scalar>(
    artifact: &CompressedArtifact<S>,
    decoder: &MlpSpec,
    params: &ParamStore<S>,
) -> Result<Tensor<S>> {
    artifact.validate()?;
    let m = &artifact.meta;
    if decoder.input_width() != m.dvc + m.dwc {
        return Err(Error::Compatibility(format!(
            "decoder takes {} inputs but the artifact stores {} + {} code values per node",
            decoder.input_width(),
            m.dvc,
            m.dwc
        )));
    }
    if decoder.output_width() != m.d {
        return Err(Error::Compatibility(format!(
            "decoder produces {} values per node but the artifact encodes windows of {}",
            decoder.output_width(),
            m.d
        )));
    }
    let mut g = Graph::new();
    let hvc = g.constant_tensor(&artifact.node_codes);
    let hwc = g.constant_tensor(&artifact.hyper_codes);
    let owner: std::sync::Arc<[usize]> = artifact.membership.clone().into();
    let hw = g.gather_rows(hwc, owner)?;
    let z = g.concat_cols(&[hvc, hw])?;
    let out = decoder.forward(&mut g, params, role::DECODER, z)?;
    Ok(g.to_tensor(out))
}
