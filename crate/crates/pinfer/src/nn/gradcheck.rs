//! Finite-difference verification of the analytic gradients.
//!
//! Central differences with step 1e-4 per parameter entry, compared by
//! relative error with an absolute floor so near-zero gradients don't
//! blow up the ratio. ReLU kinks make the numeric derivative garbage
//! when a pre-activation sits within the step of zero; [`relu_gap`]
//! reports the closest approach so fixtures can re-seed away from it.

use super::backward::backward;
use super::forward::{forward, Adjacency, ForwardTrace};
use super::loss::bce_loss;
use super::params::ModelParams;
use super::NnError;
use crate::graph::TripartiteGraph;

const FD_STEP: f64 = 1e-4;
const REL_FLOOR: f64 = 1e-4;

/// Outcome of one analytic-vs-numeric comparison.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_tensor: String,
    pub worst_entry: (usize, usize),
    pub entries: usize,
    pub tolerance: f64,
    pub passed: bool,
}

fn loss_at(
    graph: &TripartiteGraph,
    params: &ModelParams,
    labels: &[u8],
    mask: &[bool],
) -> Result<f64, NnError> {
    let trace = forward(graph, params)?;
    Ok(bce_loss(&trace.logits, labels, mask)?.0)
}

/// Smallest |pre-activation| anywhere in the trace. A gap comfortably
/// above the finite-difference step keeps every unit on one side of
/// its kink while parameters are probed; a pre-activation at exactly
/// zero gives a gap of zero, since probing its own bias would straddle
/// the kink.
pub fn relu_gap(trace: &ForwardTrace) -> f64 {
    let mut gap = f64::INFINITY;
    for lt in &trace.layers {
        for m in [
            &lt.msg_to_pro,
            &lt.msg_to_pep_from_pro,
            &lt.msg_to_pep_from_psm,
            &lt.msg_to_psm,
            &lt.update_pre,
        ] {
            for &v in m.data() {
                gap = gap.min(v.abs());
            }
        }
    }
    gap
}

/// Compare a caller-supplied gradient against central differences of
/// the masked mean BCE over protein logits.
pub fn compare_grads(
    graph: &TripartiteGraph,
    params: &ModelParams,
    labels: &[u8],
    analytic: &ModelParams,
    tolerance: f64,
) -> Result<GradCheckReport, NnError> {
    let mask = vec![true; graph.n_pro()];
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_tensor: String::new(),
        worst_entry: (0, 0),
        entries: 0,
        tolerance,
        passed: true,
    };
    let mut probe = params.clone();
    let names: Vec<String> = params.tensors().into_iter().map(|(n, _)| n).collect();
    for (ti, name) in names.iter().enumerate() {
        let (rows, cols) = {
            let t = params.tensors()[ti].1;
            (t.rows(), t.cols())
        };
        for r in 0..rows {
            for c in 0..cols {
                let base = params.tensors()[ti].1.get(r, c);
                {
                    let mut pt = probe.tensors_mut();
                    pt[ti].1.set(r, c, base + FD_STEP);
                }
                let up = loss_at(graph, &probe, labels, &mask)?;
                {
                    let mut pt = probe.tensors_mut();
                    pt[ti].1.set(r, c, base - FD_STEP);
                }
                let down = loss_at(graph, &probe, labels, &mask)?;
                {
                    let mut pt = probe.tensors_mut();
                    pt[ti].1.set(r, c, base);
                }
                let numeric = (up - down) / (2.0 * FD_STEP);
                let a = analytic.tensors()[ti].1.get(r, c);
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
                report.entries += 1;
                if rel > report.max_rel_err {
                    report.max_rel_err = rel;
                    report.worst_tensor = name.clone();
                    report.worst_entry = (r, c);
                }
            }
        }
    }
    report.passed = report.max_rel_err < tolerance;
    Ok(report)
}

/// Run backward and compare it against finite differences.
pub fn grad_check(
    graph: &TripartiteGraph,
    params: &ModelParams,
    labels: &[u8],
    tolerance: f64,
) -> Result<GradCheckReport, NnError> {
    let adj = Adjacency::build(graph);
    let trace = forward(graph, params)?;
    let mask = vec![true; graph.n_pro()];
    let (_, dlogits) = bce_loss(&trace.logits, labels, &mask)?;
    let analytic = backward(graph, &adj, params, &trace, &dlogits)?;
    compare_grads(graph, params, labels, &analytic, tolerance)
}
