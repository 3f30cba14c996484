use super::{ensure_finite, NumError, Tensor};

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Two-class cross entropy `-log softmax(logits)[label]` and its gradient
/// `softmax(logits) - one_hot(label)`, via log-sum-exp.
pub fn softmax_cross_entropy(logits: &Tensor, label: usize) -> Result<(f64, Tensor), NumError> {
    if logits.len() != 2 {
        return Err(NumError::shape("softmax_cross_entropy", "2 logits", format!("{}", logits.len())));
    }
    if label > 1 {
        return Err(NumError::invalid("softmax_cross_entropy", format!("label {label} outside {{0, 1}}")));
    }
    let l = logits.data();
    ensure_finite("softmax_cross_entropy", l)?;
    let max = l[0].max(l[1]);
    let lse = max + ((l[0] - max).exp() + (l[1] - max).exp()).ln();
    let loss = lse - l[label];
    let mut grad: Vec<f64> = l.iter().map(|x| (x - lse).exp()).collect();
    grad[label] -= 1.0;
    Ok((loss, Tensor::vector(grad)))
}
