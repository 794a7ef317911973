//! Graph-level building blocks shared by training and inference.

use std::sync::Arc;

use crate::autodiff::{Graph, MlpSpec, ParamStore, Segments, Var};
use crate::compression::config::{role, Pipeline, TopoConfig};
use crate::compression::structure::{EdgeStructure, Structure};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `phi(⊕_segments psi(concat(args)))`.
#[allow(clippy::too_many_arguments)]
pub fn message_step<S: Scalar>(
    g: &mut Graph<S>,
    params: &ParamStore<S>,
    psi: (&MlpSpec, &str),
    phi: (&MlpSpec, &str),
    args: &[Var],
    segments: &Arc<Segments>,
) -> Result<Var> {
    let input = if args.len() == 1 {
        args[0]
    } else {
        g.concat_cols(args)?
    };
    let m = psi.0.forward(g, params, psi.1, input)?;
    let a = g.aggregate(m, segments.clone())?;
    phi.0.forward(g, params, phi.1, a)
}

/// `phi(⊕_segments rows)`.
pub fn set_update<S: Scalar>(
    g: &mut Graph<S>,
    params: &ParamStore<S>,
    phi: (&MlpSpec, &str),
    rows: Var,
    segments: &Arc<Segments>,
) -> Result<Var> {
    let a = g.aggregate(rows, segments.clone())?;
    phi.0.forward(g, params, phi.1, a)
}

/// Node, edge and hyperedge states during CombMP.
#[derive(Clone, Copy, Debug)]
pub struct StateVars {
    pub nodes: Var,
    pub edges: Option<Var>,
    pub hyperedges: Var,
}

fn gather<S: Scalar>(g: &mut Graph<S>, v: Var, index: &Arc<[usize]>) -> Result<Var> {
    g.gather_rows(v, index.clone())
}

pub fn encode<S: Scalar>(g: &mut Graph<S>, params: &ParamStore<S>, cfg: &TopoConfig, x: Var) -> Result<Var> {
    cfg.encoder().forward(g, params, role::ENCODER, x)
}

/// Initial edge and hyperedge states from node embeddings.
pub fn init_states<S: Scalar>(
    g: &mut Graph<S>,
    params: &ParamStore<S>,
    cfg: &TopoConfig,
    h0: Var,
    st: &Structure,
) -> Result<StateVars> {
    let upd = cfg.update(cfg.hidden);
    let hw = set_update(g, params, (&upd, role::INIT_HYPEREDGE), h0, &st.members)?;
    let he = match &st.edges {
        Some(es) => Some(set_update(g, params, (&upd, role::INIT_EDGE), h0, &es.index.ends)?),
        None => None,
    };
    Ok(StateVars {
        nodes: h0,
        edges: he,
        hyperedges: hw,
    })
}

fn edge_edge<S: Scalar>(
    g: &mut Graph<S>,
    params: &ParamStore<S>,
    cfg: &TopoConfig,
    es: &EdgeStructure,
    he: Var,
) -> Result<Var> {
    let recv = gather(g, he, &es.index.nb_recv)?;
    let send = gather(g, he, &es.index.nb_send)?;
    message_step(
        g,
        params,
        (&cfg.message(2 * cfg.hidden), role::EE_PSI),
        (&cfg.update(cfg.hidden), role::EE_PHI),
        &[recv, send],
        &es.index.nb_segments,
    )
}

/// One CombMP round: edge-edge, edge->hyperedge, hyperedge->edge, edge-edge.
/// Both edge-edge steps use the same parameters.
pub fn combmp_round<S: Scalar>(
    g: &mut Graph<S>,
    params: &ParamStore<S>,
    cfg: &TopoConfig,
    st: &Structure,
    state: StateVars,
) -> Result<StateVars> {
    let es = st.edges.as_ref().ok_or(Error::EmptyEdgeSet)?;
    let he0 = state.edges.ok_or(Error::EmptyEdgeSet)?;
    let msg = cfg.message(2 * cfg.hidden);
    let upd = cfg.update(cfg.hidden);

    let he1 = edge_edge(g, params, cfg, es, he0)?;
    let hw_per_edge = gather(g, state.hyperedges, &es.owner)?;
    let hw1 = message_step(
        g,
        params,
        (&msg, role::EW_PSI),
        (&upd, role::EW_PHI),
        &[hw_per_edge, he1],
        &es.by_hyperedge,
    )?;
    let hw1_per_edge = gather(g, hw1, &es.owner)?;
    let he2 = message_step(
        g,
        params,
        (&msg, role::WE_PSI),
        (&upd, role::WE_PHI),
        &[he1, hw1_per_edge],
        &es.singleton,
    )?;
    let he3 = edge_edge(g, params, cfg, es, he2)?;
    Ok(StateVars {
        nodes: state.nodes,
        edges: Some(he3),
        hyperedges: hw1,
    })
}

/// Node->hyperedge compression shared by both pipelines.
fn hyperedge_codes<S: Scalar>(
    g: &mut Graph<S>,
    params: &ParamStore<S>,
    cfg: &TopoConfig,
    st: &Structure,
    x: Var,
    hvc: Var,
    hw: Var,
) -> Result<Var> {
    let hw_per_node = gather(g, hw, &st.node_owner)?;
    message_step(
        g,
        params,
        (&cfg.message(cfg.d + cfg.dvc + cfg.hidden), role::VW_PSI),
        (&cfg.update(cfg.dwc), role::VW_PHI),
        &[x, hvc, hw_per_node],
        &st.members,
    )
}

/// SetMP codes `(node codes, hyperedge codes)` from raw rows `x` and
/// embeddings `h0`.
pub fn setmp_codes<S: Scalar>(
    g: &mut Graph<S>,
    params: &ParamStore<S>,
    cfg: &TopoConfig,
    st: &Structure,
    x: Var,
    h0: Var,
) -> Result<(Var, Var)> {
    let upd = cfg.update(cfg.hidden);
    let hw0 = set_update(g, params, (&upd, role::INIT_HYPEREDGE), h0, &st.members)?;
    setmp_codes_from(g, params, cfg, st, x, h0, hw0)
}

fn setmp_codes_from<S: Scalar>(
    g: &mut Graph<S>,
    params: &ParamStore<S>,
    cfg: &TopoConfig,
    st: &Structure,
    x: Var,
    h0: Var,
    hw0: Var,
) -> Result<(Var, Var)> {
    let hw_per_node = gather(g, hw0, &st.node_owner)?;
    let hvc = message_step(
        g,
        params,
        (&cfg.message(cfg.d + 2 * cfg.hidden), role::WV_PSI),
        (&cfg.update(cfg.dvc), role::WV_PHI),
        &[x, h0, hw_per_node],
        &st.node_singleton,
    )?;
    let hwc = hyperedge_codes(g, params, cfg, st, x, hvc, hw0)?;
    Ok((hvc, hwc))
}

/// CombMP compression of a state after its rounds. Without edges this is the
/// SetMP node step on the (un-updated) hyperedge states.
pub fn combmp_codes_from_state<S: Scalar>(
    g: &mut Graph<S>,
    params: &ParamStore<S>,
    cfg: &TopoConfig,
    st: &Structure,
    x: Var,
    state: StateVars,
) -> Result<(Var, Var)> {
    let (Some(es), Some(he)) = (st.edges.as_ref(), state.edges) else {
        return setmp_codes_from(g, params, cfg, st, x, state.nodes, state.hyperedges);
    };
    let x_inc = gather(g, x, &es.index.inc_node)?;
    let h0_inc = gather(g, state.nodes, &es.index.inc_node)?;
    let he_inc = gather(g, he, &es.index.inc_edge)?;
    let hvc = message_step(
        g,
        params,
        (&cfg.message(cfg.d + 2 * cfg.hidden), role::EV_PSI),
        (&cfg.update(cfg.dvc), role::EV_PHI),
        &[x_inc, h0_inc, he_inc],
        &es.index.node_incidences,
    )?;
    let hwc = hyperedge_codes(g, params, cfg, st, x, hvc, state.hyperedges)?;
    Ok((hvc, hwc))
}

/// Full CombMP: initial states, `cfg.rounds` rounds, compression.
pub fn combmp_codes<S: Scalar>(
    g: &mut Graph<S>,
    params: &ParamStore<S>,
    cfg: &TopoConfig,
    st: &Structure,
    x: Var,
    h0: Var,
) -> Result<(Var, Var)> {
    let mut state = init_states(g, params, cfg, h0, st)?;
    for _ in 0..cfg.rounds {
        state = combmp_round(g, params, cfg, st, state)?;
    }
    combmp_codes_from_state(g, params, cfg, st, x, state)
}

pub fn codes<S: Scalar>(
    pipeline: Pipeline,
    g: &mut Graph<S>,
    params: &ParamStore<S>,
    cfg: &TopoConfig,
    st: &Structure,
    x: Var,
    h0: Var,
) -> Result<(Var, Var)> {
    match pipeline {
        Pipeline::SetMp => setmp_codes(g, params, cfg, st, x, h0),
        Pipeline::CombMp => combmp_codes(g, params, cfg, st, x, h0),
    }
}

/// Per-node reconstruction from its code and its hyperedge's code.
pub fn decode<S: Scalar>(
    g: &mut Graph<S>,
    params: &ParamStore<S>,
    cfg: &TopoConfig,
    node_owner: &Arc<[usize]>,
    hvc: Var,
    hwc: Var,
) -> Result<Var> {
    let hw = gather(g, hwc, node_owner)?;
    let z = g.concat_cols(&[hvc, hw])?;
    cfg.decoder().forward(g, params, role::DECODER, z)
}
