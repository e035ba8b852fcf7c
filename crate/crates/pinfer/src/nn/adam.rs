//! Adam optimizer over the model's parameter tensors.

use super::params::ModelParams;
use super::NnError;

/// First/second moment estimates plus the step counter. Moments are
/// stored in parameter shape so the update walks tensors pairwise.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: ModelParams,
    pub v: ModelParams,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        AdamState {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One Adam step with bias correction, in place.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &ModelParams,
    state: &mut AdamState,
    lr: f64,
) -> Result<(), NnError> {
    state.t += 1;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);

    let mut p_tensors = params.tensors_mut();
    let mut m_tensors = state.m.tensors_mut();
    let mut v_tensors = state.v.tensors_mut();
    let g_tensors = grads.tensors();
    if g_tensors.len() != p_tensors.len() {
        return Err(NnError::Shape(format!(
            "gradient has {} tensors, parameters have {}",
            g_tensors.len(),
            p_tensors.len()
        )));
    }
    for i in 0..p_tensors.len() {
        let (pn, p) = &mut p_tensors[i];
        let (_, m) = &mut m_tensors[i];
        let (_, v) = &mut v_tensors[i];
        let (gn, g) = &g_tensors[i];
        if p.rows() != g.rows() || p.cols() != g.cols() || pn != gn {
            return Err(NnError::Shape(format!(
                "parameter {pn} is {}×{}, gradient {gn} is {}×{}",
                p.rows(),
                p.cols(),
                g.rows(),
                g.cols()
            )));
        }
        let pd = p.data_mut();
        let md = m.data_mut();
        let vd = v.data_mut();
        let gd = g.data();
        for i in 0..pd.len() {
            md[i] = b1 * md[i] + (1.0 - b1) * gd[i];
            vd[i] = b2 * vd[i] + (1.0 - b2) * gd[i] * gd[i];
            pd[i] -= lr * (md[i] / c1) / ((vd[i] / c2).sqrt() + eps);
        }
    }
    drop(p_tensors);
    if !params.is_finite() {
        return Err(NnError::NumericFault {
            location: "optimizer step".into(),
        });
    }
    Ok(())
}
