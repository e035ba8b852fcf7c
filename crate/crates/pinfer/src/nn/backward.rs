//! Reverse-mode gradients through the message-passing layers.
//!
//! The traversal mirrors the forward pass exactly, in reverse: output
//! head, then per layer — update ReLU, update weights, aggregate, the
//! four message slots, source states — and finally the input embedding
//! and projection. Every accumulated value has a fixed owner (a matrix
//! row) and a fixed accumulation order, so results are bit-identical
//! across runs and execution modes.

use super::exec;
use super::forward::{Adjacency, ForwardTrace};
use super::params::{LayerParams, ModelParams};
use super::NnError;
use crate::graph::TripartiteGraph;
use crate::mat::Mat;

fn update_w_of<'a>(lp: &'a LayerParams, u: usize, n_pro: usize, n_pep: usize) -> &'a Mat {
    if u < n_pro {
        &lp.update_pro_w
    } else if u < n_pro + n_pep {
        &lp.update_pep_w
    } else {
        &lp.update_psm_w
    }
}

/// Gradient of the loss w.r.t. every parameter, given the gradient
/// w.r.t. the protein logits. Needs the full forward trace.
pub fn backward(
    graph: &TripartiteGraph,
    adj: &Adjacency,
    params: &ModelParams,
    trace: &ForwardTrace,
    dlogits: &[f64],
) -> Result<ModelParams, NnError> {
    let (n_pro, n_pep, n_psm) = (graph.n_pro(), graph.n_pep(), graph.n_psm());
    let n = n_pro + n_pep + n_psm;
    let h = params.hidden;
    let k_layers = params.n_layers();
    if trace.states.len() != k_layers + 1 || trace.layers.len() != k_layers {
        return Err(NnError::TraceMismatch(format!(
            "trace retains {} state and {} layer records for a {}-layer model",
            trace.states.len(),
            trace.layers.len(),
            k_layers
        )));
    }
    if trace.states[0].rows() != n || trace.states[0].cols() != h {
        return Err(NnError::TraceMismatch(format!(
            "trace states are {}×{}, graph/model need {}×{}",
            trace.states[0].rows(),
            trace.states[0].cols(),
            n,
            h
        )));
    }
    if dlogits.len() != n_pro {
        return Err(NnError::Shape(format!(
            "{} logit gradients for {} protein groups",
            dlogits.len(),
            n_pro
        )));
    }

    let mut grads = params.zeros_like();

    // Output head: only protein rows receive a state gradient.
    let mut dstate = Mat::zeros(n, h);
    {
        let last = &trace.states[k_layers];
        let wr = params.out_w.row(0);
        exec::for_each_row(&mut dstate, |i, row| {
            if i < n_pro {
                let g = dlogits[i];
                for (o, &w) in row.iter_mut().zip(wr) {
                    *o = g * w;
                }
            }
        });
        let out_w_row = grads.out_w.row_mut(0);
        for i in 0..n_pro {
            let g = dlogits[i];
            let sr = last.row(i);
            for c in 0..h {
                out_w_row[c] += g * sr[c];
            }
        }
        let mut db = 0.0;
        for &g in dlogits {
            db += g;
        }
        grads.out_b.set(0, 0, db);
    }

    for k in (0..k_layers).rev() {
        let lp = &params.layers[k];
        let lt = &trace.layers[k];
        let prev = &trace.states[k];
        let n_pp = graph.pro_pep_edges.len();
        let n_ps = graph.pep_psm_edges.len();

        // Through the update ReLU.
        let mut g_upre = Mat::zeros(n, h);
        exec::for_each_row(&mut g_upre, |u, row| {
            let pre = lt.update_pre.row(u);
            let ds = dstate.row(u);
            for c in 0..h {
                row[c] = if pre[c] > 0.0 { ds[c] } else { 0.0 };
            }
        });
        // Split the update weight: columns [0,h) feed the previous
        // state, columns [h,2h) the aggregate.
        let mut da = Mat::zeros(n, h);
        exec::for_each_row(&mut da, |u, row| {
            update_w_of(lp, u, n_pro, n_pep).tr_matvec_acc(g_upre.row(u), h, row);
        });

        // Per-slot message gradients at the pre-activations. The E
        // gate sits outside the ReLU, so it scales the incoming
        // gradient before the mask.
        let mut g_to_pro = Mat::zeros(n_pp, h);
        exec::for_each_row(&mut g_to_pro, |e, row| {
            let edge = graph.pro_pep_edges[e];
            let pre = lt.msg_to_pro.row(e);
            let d = da.row(edge.group);
            for c in 0..h {
                row[c] = if pre[c] > 0.0 { d[c] } else { 0.0 };
            }
        });
        let mut g_to_pep_from_pro = Mat::zeros(n_pp, h);
        exec::for_each_row(&mut g_to_pep_from_pro, |e, row| {
            let edge = graph.pro_pep_edges[e];
            let pre = lt.msg_to_pep_from_pro.row(e);
            let d = da.row(n_pro + edge.pep);
            for c in 0..h {
                row[c] = if pre[c] > 0.0 { d[c] } else { 0.0 };
            }
        });
        let mut g_to_pep_from_psm = Mat::zeros(n_ps, h);
        exec::for_each_row(&mut g_to_pep_from_psm, |e, row| {
            let edge = graph.pep_psm_edges[e];
            let pre = lt.msg_to_pep_from_psm.row(e);
            let d = da.row(n_pro + edge.pep);
            for c in 0..h {
                row[c] = if pre[c] > 0.0 { edge.e * d[c] } else { 0.0 };
            }
        });
        let mut g_to_psm = Mat::zeros(n_ps, h);
        exec::for_each_row(&mut g_to_psm, |e, row| {
            let edge = graph.pep_psm_edges[e];
            let pre = lt.msg_to_psm.row(e);
            let d = da.row(n_pro + n_pep + edge.psm);
            for c in 0..h {
                row[c] = if pre[c] > 0.0 { edge.e * d[c] } else { 0.0 };
            }
        });

        // Source-state gradients: each node folds in its own-update
        // part first, then the message slots it sourced, edge lists
        // ascending.
        let mut dprev = Mat::zeros(n, h);
        exec::for_each_row(&mut dprev, |u, row| {
            update_w_of(lp, u, n_pro, n_pep).tr_matvec_acc(g_upre.row(u), 0, row);
            if u < n_pro {
                for &e in &adj.pro[u] {
                    lp.msg_pro_pep_w.tr_matvec_acc(g_to_pep_from_pro.row(e), 0, row);
                }
            } else if u < n_pro + n_pep {
                let p = u - n_pro;
                for &e in &adj.pep_pro[p] {
                    lp.msg_pro_pep_w.tr_matvec_acc(g_to_pro.row(e), 0, row);
                }
                for &e in &adj.pep_psm[p] {
                    lp.msg_pep_psm_w.tr_matvec_acc(g_to_psm.row(e), 0, row);
                }
            } else {
                let e = adj.psm[u - n_pro - n_pep];
                lp.msg_pep_psm_w.tr_matvec_acc(g_to_pep_from_psm.row(e), 0, row);
            }
        });

        // Parameter gradients. Weight rows accumulate over items in
        // ascending order (slot A then B for the protein–peptide
        // transform, C then D for the PSM one); the zero-gradient skip
        // only elides additions of exact zeros.
        let gl = &mut grads.layers[k];
        exec::for_each_row(&mut gl.msg_pro_pep_w, |r, row| {
            for (e, edge) in graph.pro_pep_edges.iter().enumerate() {
                let g = g_to_pro.row(e)[r];
                if g != 0.0 {
                    let src = prev.row(n_pro + edge.pep);
                    for c in 0..h {
                        row[c] += g * src[c];
                    }
                    row[h] += g * edge.s;
                }
            }
            for (e, edge) in graph.pro_pep_edges.iter().enumerate() {
                let g = g_to_pep_from_pro.row(e)[r];
                if g != 0.0 {
                    let src = prev.row(edge.group);
                    for c in 0..h {
                        row[c] += g * src[c];
                    }
                    row[h] += g * edge.s;
                }
            }
        });
        {
            let db = gl.msg_pro_pep_b.row_mut(0);
            for e in 0..n_pp {
                let g = g_to_pro.row(e);
                for c in 0..h {
                    db[c] += g[c];
                }
            }
            for e in 0..n_pp {
                let g = g_to_pep_from_pro.row(e);
                for c in 0..h {
                    db[c] += g[c];
                }
            }
        }
        exec::for_each_row(&mut gl.msg_pep_psm_w, |r, row| {
            for (e, edge) in graph.pep_psm_edges.iter().enumerate() {
                let g = g_to_pep_from_psm.row(e)[r];
                if g != 0.0 {
                    let src = prev.row(n_pro + n_pep + edge.psm);
                    for c in 0..h {
                        row[c] += g * src[c];
                    }
                }
            }
            for (e, edge) in graph.pep_psm_edges.iter().enumerate() {
                let g = g_to_psm.row(e)[r];
                if g != 0.0 {
                    let src = prev.row(n_pro + edge.pep);
                    for c in 0..h {
                        row[c] += g * src[c];
                    }
                }
            }
        });
        {
            let db = gl.msg_pep_psm_b.row_mut(0);
            for e in 0..n_ps {
                let g = g_to_pep_from_psm.row(e);
                for c in 0..h {
                    db[c] += g[c];
                }
            }
            for e in 0..n_ps {
                let g = g_to_psm.row(e);
                for c in 0..h {
                    db[c] += g[c];
                }
            }
        }
        let update_grads = |w: &mut Mat, b: &mut Mat, start: usize, end: usize| {
            exec::for_each_row(w, |r, row| {
                for u in start..end {
                    let g = g_upre.row(u)[r];
                    if g != 0.0 {
                        let s = prev.row(u);
                        let a = lt.agg.row(u);
                        for c in 0..h {
                            row[c] += g * s[c];
                            row[h + c] += g * a[c];
                        }
                    }
                }
            });
            let db = b.row_mut(0);
            for u in start..end {
                let g = g_upre.row(u);
                for c in 0..h {
                    db[c] += g[c];
                }
            }
        };
        update_grads(&mut gl.update_pro_w, &mut gl.update_pro_b, 0, n_pro);
        update_grads(&mut gl.update_pep_w, &mut gl.update_pep_b, n_pro, n_pro + n_pep);
        update_grads(&mut gl.update_psm_w, &mut gl.update_psm_b, n_pro + n_pep, n);

        dstate = dprev;
    }

    // Input embedding and projection (layer 0 is affine — no mask).
    exec::for_each_row(&mut grads.psm_proj, |r, row| {
        for m in 0..n_psm {
            let g = dstate.row(n_pro + n_pep + m)[r];
            if g != 0.0 {
                let x = graph.psm_features.row(m);
                for c in 0..row.len() {
                    row[c] += g * x[c];
                }
            }
        }
    });
    {
        let db = grads.psm_proj_bias.row_mut(0);
        for m in 0..n_psm {
            let g = dstate.row(n_pro + n_pep + m);
            for c in 0..h {
                db[c] += g[c];
            }
        }
    }
    exec::for_each_row(&mut grads.type_embed, |t, row| {
        let (start, end) = if t == TripartiteGraph::TYPE_PRO {
            (0, n_pro)
        } else {
            (n_pro, n_pro + n_pep)
        };
        for u in start..end {
            let g = dstate.row(u);
            for c in 0..h {
                row[c] += g[c];
            }
        }
    });

    Ok(grads)
}
