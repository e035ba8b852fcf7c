//! Forward pass: input embedding, K rounds of typed message passing,
//! and the sigmoid output head over protein-group nodes.
//!
//! Node rows are laid out as [proteins | peptides | PSMs]. The trace
//! keeps every pre-activation so the backward pass can recover ReLU
//! masks exactly and the gradient checker can measure how close any
//! unit sits to a kink.

use super::exec;
use super::params::{LayerParams, ModelParams};
use super::NnError;
use crate::graph::TripartiteGraph;
use crate::mat::Mat;

/// Per-node incident-edge lists in ascending edge-index order; built
/// once per graph and shared by forward and backward so every
/// aggregation runs in the same fixed order.
#[derive(Debug, Clone)]
pub struct Adjacency {
    /// Per protein group: its protein–peptide edge indices.
    pub pro: Vec<Vec<usize>>,
    /// Per peptide: its protein–peptide edge indices.
    pub pep_pro: Vec<Vec<usize>>,
    /// Per peptide: its peptide–PSM edge indices.
    pub pep_psm: Vec<Vec<usize>>,
    /// Per PSM: its single peptide–PSM edge index.
    pub psm: Vec<usize>,
}

impl Adjacency {
    pub fn build(graph: &TripartiteGraph) -> Adjacency {
        let mut pro = vec![Vec::new(); graph.n_pro()];
        let mut pep_pro = vec![Vec::new(); graph.n_pep()];
        for (e, edge) in graph.pro_pep_edges.iter().enumerate() {
            pro[edge.group].push(e);
            pep_pro[edge.pep].push(e);
        }
        let mut pep_psm = vec![Vec::new(); graph.n_pep()];
        let mut psm = vec![usize::MAX; graph.n_psm()];
        for (e, edge) in graph.pep_psm_edges.iter().enumerate() {
            pep_psm[edge.pep].push(e);
            psm[edge.psm] = e;
        }
        Adjacency {
            pro,
            pep_pro,
            pep_psm,
            psm,
        }
    }
}

/// Everything one layer computed, pre-activation (apply ReLU — and the
/// confidence gate for PSM-edge messages — to recover the values that
/// were aggregated).
#[derive(Debug, Clone)]
pub struct LayerTrace {
    /// Rows = protein–peptide edges; message toward the protein
    /// (source: peptide).
    pub msg_to_pro: Mat,
    /// Rows = protein–peptide edges; message toward the peptide.
    pub msg_to_pep_from_pro: Mat,
    /// Rows = peptide–PSM edges; message toward the peptide, before
    /// the E gate.
    pub msg_to_pep_from_psm: Mat,
    /// Rows = peptide–PSM edges; message toward the PSM, before the
    /// E gate.
    pub msg_to_psm: Mat,
    /// Aggregated incoming messages per node.
    pub agg: Mat,
    /// Update transform output per node, before ReLU.
    pub update_pre: Mat,
}

#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// K+1 state matrices (layer 0 = embedded inputs), each
    /// (n_pro + n_pep + n_psm) × h.
    pub states: Vec<Mat>,
    pub layers: Vec<LayerTrace>,
    /// Output-head values per protein group.
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn check_finite(m: &Mat, location: &str) -> Result<(), NnError> {
    if m.data().iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(NnError::NumericFault {
            location: location.to_string(),
        })
    }
}

/// Layer-0 states: shared type embedding for protein and peptide
/// nodes, affine feature projection for PSM nodes.
pub fn embed_inputs(graph: &TripartiteGraph, params: &ModelParams) -> Result<Mat, NnError> {
    if params.psm_proj.cols() != graph.feature_dim() {
        return Err(NnError::Shape(format!(
            "model projects {} PSM features but the graph has {}",
            params.psm_proj.cols(),
            graph.feature_dim()
        )));
    }
    let (n_pro, n_pep, n_psm) = (graph.n_pro(), graph.n_pep(), graph.n_psm());
    let mut state = Mat::zeros(n_pro + n_pep + n_psm, params.hidden);
    exec::for_each_row(&mut state, |n, row| {
        if n < n_pro {
            row.copy_from_slice(params.type_embed.row(TripartiteGraph::TYPE_PRO));
        } else if n < n_pro + n_pep {
            row.copy_from_slice(params.type_embed.row(TripartiteGraph::TYPE_PEP));
        } else {
            params.psm_proj.matvec_into(
                graph.psm_features.row(n - n_pro - n_pep),
                params.psm_proj_bias.row(0),
                row,
            );
        }
    });
    Ok(state)
}

/// Message along one protein–peptide edge:
/// ReLU(W · (source state ∥ sharing attribute) + b), identical weights
/// in both directions.
pub fn message_pep_pro(h_v: &[f64], s: f64, layer: &LayerParams) -> Vec<f64> {
    let mut out = vec![0.0; layer.msg_pro_pep_w.rows()];
    layer
        .msg_pro_pep_w
        .matvec2_into(h_v, &[s], layer.msg_pro_pep_b.row(0), &mut out);
    for v in &mut out {
        *v = v.max(0.0);
    }
    out
}

/// Message along one peptide–PSM edge: E · ReLU(W · source state + b);
/// the identification confidence gates the activated output.
pub fn message_pep_psm(h_v: &[f64], e: f64, layer: &LayerParams) -> Vec<f64> {
    let mut out = vec![0.0; layer.msg_pep_psm_w.rows()];
    layer
        .msg_pep_psm_w
        .matvec_into(h_v, layer.msg_pep_psm_b.row(0), &mut out);
    for v in &mut out {
        *v = e * v.max(0.0);
    }
    out
}

fn relu_add(out: &mut [f64], pre: &[f64]) {
    for (o, &z) in out.iter_mut().zip(pre) {
        *o += z.max(0.0);
    }
}

fn gated_relu_add(out: &mut [f64], pre: &[f64], gate: f64) {
    for (o, &z) in out.iter_mut().zip(pre) {
        *o += gate * z.max(0.0);
    }
}

pub(super) fn layer_pass(
    graph: &TripartiteGraph,
    adj: &Adjacency,
    prev: &Mat,
    lp: &LayerParams,
) -> (LayerTrace, Mat) {
    let (n_pro, n_pep, n_psm) = (graph.n_pro(), graph.n_pep(), graph.n_psm());
    let n = n_pro + n_pep + n_psm;
    let h = lp.msg_pep_psm_w.rows();

    let mut msg_to_pro = Mat::zeros(graph.pro_pep_edges.len(), h);
    exec::for_each_row(&mut msg_to_pro, |e, row| {
        let edge = graph.pro_pep_edges[e];
        lp.msg_pro_pep_w.matvec2_into(
            prev.row(n_pro + edge.pep),
            &[edge.s],
            lp.msg_pro_pep_b.row(0),
            row,
        );
    });
    let mut msg_to_pep_from_pro = Mat::zeros(graph.pro_pep_edges.len(), h);
    exec::for_each_row(&mut msg_to_pep_from_pro, |e, row| {
        let edge = graph.pro_pep_edges[e];
        lp.msg_pro_pep_w.matvec2_into(
            prev.row(edge.group),
            &[edge.s],
            lp.msg_pro_pep_b.row(0),
            row,
        );
    });
    let mut msg_to_pep_from_psm = Mat::zeros(graph.pep_psm_edges.len(), h);
    exec::for_each_row(&mut msg_to_pep_from_psm, |e, row| {
        let edge = graph.pep_psm_edges[e];
        lp.msg_pep_psm_w.matvec_into(
            prev.row(n_pro + n_pep + edge.psm),
            lp.msg_pep_psm_b.row(0),
            row,
        );
    });
    let mut msg_to_psm = Mat::zeros(graph.pep_psm_edges.len(), h);
    exec::for_each_row(&mut msg_to_psm, |e, row| {
        let edge = graph.pep_psm_edges[e];
        lp.msg_pep_psm_w
            .matvec_into(prev.row(n_pro + edge.pep), lp.msg_pep_psm_b.row(0), row);
    });

    // Sum incoming messages per node, each node walking its edge lists
    // in ascending order.
    let mut agg = Mat::zeros(n, h);
    exec::for_each_row(&mut agg, |u, row| {
        if u < n_pro {
            for &e in &adj.pro[u] {
                relu_add(row, msg_to_pro.row(e));
            }
        } else if u < n_pro + n_pep {
            let p = u - n_pro;
            for &e in &adj.pep_pro[p] {
                relu_add(row, msg_to_pep_from_pro.row(e));
            }
            for &e in &adj.pep_psm[p] {
                gated_relu_add(row, msg_to_pep_from_psm.row(e), graph.pep_psm_edges[e].e);
            }
        } else {
            let e = adj.psm[u - n_pro - n_pep];
            gated_relu_add(row, msg_to_psm.row(e), graph.pep_psm_edges[e].e);
        }
    });

    let mut update_pre = Mat::zeros(n, h);
    exec::for_each_row(&mut update_pre, |u, row| {
        let (w, b) = if u < n_pro {
            (&lp.update_pro_w, &lp.update_pro_b)
        } else if u < n_pro + n_pep {
            (&lp.update_pep_w, &lp.update_pep_b)
        } else {
            (&lp.update_psm_w, &lp.update_psm_b)
        };
        w.matvec2_into(prev.row(u), agg.row(u), b.row(0), row);
    });
    let mut next = Mat::zeros(n, h);
    exec::for_each_row(&mut next, |u, row| {
        for (o, &z) in row.iter_mut().zip(update_pre.row(u)) {
            *o = z.max(0.0);
        }
    });
    (
        LayerTrace {
            msg_to_pro,
            msg_to_pep_from_pro,
            msg_to_pep_from_psm,
            msg_to_psm,
            agg,
            update_pre,
        },
        next,
    )
}

/// One message-passing layer: aggregate typed neighbor messages, then
/// apply the per-node-type update transform.
pub fn aggregate_update(
    graph: &TripartiteGraph,
    prev: &Mat,
    layer: &LayerParams,
) -> (LayerTrace, Mat) {
    let adj = Adjacency::build(graph);
    layer_pass(graph, &adj, prev, layer)
}

/// Full forward pass with a prebuilt adjacency (the training loop
/// builds it once per graph).
pub fn forward_on(
    graph: &TripartiteGraph,
    adj: &Adjacency,
    params: &ModelParams,
) -> Result<ForwardTrace, NnError> {
    let mut states = vec![embed_inputs(graph, params)?];
    check_finite(&states[0], "input embedding")?;
    let mut layers = Vec::with_capacity(params.n_layers());
    for (k, lp) in params.layers.iter().enumerate() {
        let (trace, next) = layer_pass(graph, adj, states.last().unwrap(), lp);
        // ReLU (f64::max) silently swallows NaN, so scan the
        // pre-activation values, not the states.
        let loc = format!("layer {}", k + 1);
        for m in [
            &trace.msg_to_pro,
            &trace.msg_to_pep_from_pro,
            &trace.msg_to_pep_from_psm,
            &trace.msg_to_psm,
            &trace.update_pre,
        ] {
            check_finite(m, &loc)?;
        }
        layers.push(trace);
        states.push(next);
    }
    let last = states.last().unwrap();
    let wr = params.out_w.row(0);
    let b = params.out_b.get(0, 0);
    let mut logits = Vec::with_capacity(graph.n_pro());
    for i in 0..graph.n_pro() {
        let sr = last.row(i);
        let mut z = b;
        for c in 0..wr.len() {
            z += wr[c] * sr[c];
        }
        logits.push(z);
    }
    if !logits.iter().all(|z| z.is_finite()) {
        return Err(NnError::NumericFault {
            location: "output head".to_string(),
        });
    }
    let probs = logits.iter().map(|&z| sigmoid(z)).collect();
    Ok(ForwardTrace {
        states,
        layers,
        logits,
        probs,
    })
}

/// Full forward pass: embed, K layers, output head. Protein-group
/// probabilities land in `probs` (and their logits alongside).
pub fn forward(graph: &TripartiteGraph, params: &ModelParams) -> Result<ForwardTrace, NnError> {
    forward_on(graph, &Adjacency::build(graph), params)
}
