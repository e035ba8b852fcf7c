//! Parameter tensors, shape bookkeeping, and seeded initialization.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::NetConfig;
use crate::mat::Mat;

/// Per-layer weights: one shared message transform per edge type (used
/// in both directions) and one update transform per node type.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// h × (h+1): acts on (state ∥ sharing attribute) for
    /// protein–peptide edges.
    pub msg_pro_pep_w: Mat,
    pub msg_pro_pep_b: Mat,
    /// h × h: acts on the source state for peptide–PSM edges; the edge
    /// confidence gates the activated output.
    pub msg_pep_psm_w: Mat,
    pub msg_pep_psm_b: Mat,
    /// h × 2h each: act on (previous state ∥ aggregated messages).
    pub update_pro_w: Mat,
    pub update_pro_b: Mat,
    pub update_pep_w: Mat,
    pub update_pep_b: Mat,
    pub update_psm_w: Mat,
    pub update_psm_b: Mat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub hidden: usize,
    pub feature_dim: usize,
    /// h × feature_dim projection giving PSM nodes their layer-0 state.
    pub psm_proj: Mat,
    pub psm_proj_bias: Mat,
    /// 2 × h: row 0 is the protein embedding, row 1 the peptide one.
    pub type_embed: Mat,
    pub layers: Vec<LayerParams>,
    /// 1 × h output head producing per-protein logits.
    pub out_w: Mat,
    pub out_b: Mat,
}

impl ModelParams {
    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    /// All-zero parameters of the given shape.
    pub fn zeros(hidden: usize, feature_dim: usize, layers: usize) -> ModelParams {
        assert!(hidden >= 1 && feature_dim >= 1 && layers >= 1, "dims must be positive");
        let h = hidden;
        let layer = || LayerParams {
            msg_pro_pep_w: Mat::zeros(h, h + 1),
            msg_pro_pep_b: Mat::zeros(1, h),
            msg_pep_psm_w: Mat::zeros(h, h),
            msg_pep_psm_b: Mat::zeros(1, h),
            update_pro_w: Mat::zeros(h, 2 * h),
            update_pro_b: Mat::zeros(1, h),
            update_pep_w: Mat::zeros(h, 2 * h),
            update_pep_b: Mat::zeros(1, h),
            update_psm_w: Mat::zeros(h, 2 * h),
            update_psm_b: Mat::zeros(1, h),
        };
        ModelParams {
            hidden: h,
            feature_dim,
            psm_proj: Mat::zeros(h, feature_dim),
            psm_proj_bias: Mat::zeros(1, h),
            type_embed: Mat::zeros(2, h),
            layers: (0..layers).map(|_| layer()).collect(),
            out_w: Mat::zeros(1, h),
            out_b: Mat::zeros(1, 1),
        }
    }

    pub fn zeros_like(&self) -> ModelParams {
        ModelParams::zeros(self.hidden, self.feature_dim, self.n_layers())
    }

    /// Tensors in declared order with stable names; this order defines
    /// the checkpoint layout and the optimizer/grad-check traversal.
    pub fn tensors(&self) -> Vec<(String, &Mat)> {
        let mut out: Vec<(String, &Mat)> = vec![
            ("psm_proj".into(), &self.psm_proj),
            ("psm_proj_bias".into(), &self.psm_proj_bias),
            ("type_embed".into(), &self.type_embed),
        ];
        for (i, l) in self.layers.iter().enumerate() {
            out.push((format!("layers.{i}.msg_pro_pep_w"), &l.msg_pro_pep_w));
            out.push((format!("layers.{i}.msg_pro_pep_b"), &l.msg_pro_pep_b));
            out.push((format!("layers.{i}.msg_pep_psm_w"), &l.msg_pep_psm_w));
            out.push((format!("layers.{i}.msg_pep_psm_b"), &l.msg_pep_psm_b));
            out.push((format!("layers.{i}.update_pro_w"), &l.update_pro_w));
            out.push((format!("layers.{i}.update_pro_b"), &l.update_pro_b));
            out.push((format!("layers.{i}.update_pep_w"), &l.update_pep_w));
            out.push((format!("layers.{i}.update_pep_b"), &l.update_pep_b));
            out.push((format!("layers.{i}.update_psm_w"), &l.update_psm_w));
            out.push((format!("layers.{i}.update_psm_b"), &l.update_psm_b));
        }
        out.push(("out_w".into(), &self.out_w));
        out.push(("out_b".into(), &self.out_b));
        out
    }

    /// Mutable counterpart of [`Self::tensors`], same order.
    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Mat)> {
        let mut out: Vec<(String, &mut Mat)> = vec![
            ("psm_proj".into(), &mut self.psm_proj),
            ("psm_proj_bias".into(), &mut self.psm_proj_bias),
            ("type_embed".into(), &mut self.type_embed),
        ];
        for (i, l) in self.layers.iter_mut().enumerate() {
            out.push((format!("layers.{i}.msg_pro_pep_w"), &mut l.msg_pro_pep_w));
            out.push((format!("layers.{i}.msg_pro_pep_b"), &mut l.msg_pro_pep_b));
            out.push((format!("layers.{i}.msg_pep_psm_w"), &mut l.msg_pep_psm_w));
            out.push((format!("layers.{i}.msg_pep_psm_b"), &mut l.msg_pep_psm_b));
            out.push((format!("layers.{i}.update_pro_w"), &mut l.update_pro_w));
            out.push((format!("layers.{i}.update_pro_b"), &mut l.update_pro_b));
            out.push((format!("layers.{i}.update_pep_w"), &mut l.update_pep_w));
            out.push((format!("layers.{i}.update_pep_b"), &mut l.update_pep_b));
            out.push((format!("layers.{i}.update_psm_w"), &mut l.update_psm_w));
            out.push((format!("layers.{i}.update_psm_b"), &mut l.update_psm_b));
        }
        out.push(("out_w".into(), &mut self.out_w));
        out.push(("out_b".into(), &mut self.out_b));
        out
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, m)| m.data().iter().all(|v| v.is_finite()))
    }
}

/// Draw every weight and bias uniformly from ±1/√fan_in (fan_in =
/// input width of the tensor's linear map). Nonzero biases keep
/// pre-activations away from exact zero, so dead inputs cannot pin a
/// unit onto its kink. A single seeded stream visits the tensors in
/// declared order, so the result is fully determined by
/// `(config, feature_dim, seed)`.
pub fn init_params(config: &NetConfig, feature_dim: usize, seed: u64) -> ModelParams {
    let mut params = ModelParams::zeros(config.hidden, feature_dim, config.layers);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let fill = |m: &mut Mat, fan_in: usize, rng: &mut ChaCha20Rng| {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound);
        for v in m.data_mut() {
            *v = dist.sample(rng);
        }
    };
    let h = config.hidden;
    fill(&mut params.psm_proj, feature_dim, &mut rng);
    fill(&mut params.psm_proj_bias, feature_dim, &mut rng);
    // The embedding table is a 1-of-2 linear map, so its fan_in is 2.
    fill(&mut params.type_embed, 2, &mut rng);
    for l in &mut params.layers {
        fill(&mut l.msg_pro_pep_w, h + 1, &mut rng);
        fill(&mut l.msg_pro_pep_b, h + 1, &mut rng);
        fill(&mut l.msg_pep_psm_w, h, &mut rng);
        fill(&mut l.msg_pep_psm_b, h, &mut rng);
        fill(&mut l.update_pro_w, 2 * h, &mut rng);
        fill(&mut l.update_pro_b, 2 * h, &mut rng);
        fill(&mut l.update_pep_w, 2 * h, &mut rng);
        fill(&mut l.update_pep_b, 2 * h, &mut rng);
        fill(&mut l.update_psm_w, 2 * h, &mut rng);
        fill(&mut l.update_psm_b, 2 * h, &mut rng);
    }
    fill(&mut params.out_w, h, &mut rng);
    fill(&mut params.out_b, h, &mut rng);
    params
}
