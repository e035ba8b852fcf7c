//! Binary cross-entropy over protein-group predictions, computed in
//! logit space so extreme confidences cannot overflow the log.

use super::forward::sigmoid;
use super::NnError;

/// Mean negative log-likelihood over the masked entries, plus its
/// gradient with respect to each logit: (σ(z) − y)/|mask| on masked
/// entries, 0 elsewhere.
pub fn bce_loss(
    logits: &[f64],
    labels: &[u8],
    mask: &[bool],
) -> Result<(f64, Vec<f64>), NnError> {
    if logits.len() != labels.len() || logits.len() != mask.len() {
        return Err(NnError::Shape(format!(
            "bce got {} logits, {} labels, {} mask entries",
            logits.len(),
            labels.len(),
            mask.len()
        )));
    }
    let m = mask.iter().filter(|&&b| b).count();
    if m == 0 {
        return Err(NnError::EmptyMask);
    }
    let mut loss = 0.0;
    let mut grad = vec![0.0; logits.len()];
    for i in 0..logits.len() {
        if !mask[i] {
            continue;
        }
        debug_assert!(labels[i] <= 1, "labels must be 0/1");
        let z = logits[i];
        let y = labels[i] as f64;
        // −[y ln σ(z) + (1−y) ln(1−σ(z))] = max(z,0) − zy + ln(1+e^−|z|)
        loss += z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
        grad[i] = (sigmoid(z) - y) / m as f64;
    }
    Ok((loss / m as f64, grad))
}
