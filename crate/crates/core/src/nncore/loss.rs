use super::{NnError, Result, Scalar, Tensor};

/// Row-wise softmax of an N×K tensor (max-shifted for stability).
pub fn softmax<T: Scalar>(logits: &Tensor<T>) -> Result<Tensor<T>> {
    let (_, k) = logits.dims2()?;
    let mut p = logits.clone();
    for row in p.data_mut().chunks_mut(k) {
        let max = row.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v = *v / sum;
        }
    }
    Ok(p)
}

/// Mean cross-entropy of softmax(logits) against class indices, and its
/// gradient with respect to the logits.
pub fn softmax_xent<T: Scalar>(logits: &Tensor<T>, gold: &[usize]) -> Result<(T, Tensor<T>)> {
    let (n, k) = logits.dims2()?;
    if gold.len() != n {
        return Err(NnError::ShapeMismatch(format!("{} labels for {n} rows", gold.len())));
    }
    if let Some(&index) = gold.iter().find(|&&g| g >= k) {
        return Err(NnError::InvalidClassIndex { index, classes: k });
    }
    let mut grad = softmax(logits)?;
    let nf = T::from_f64(n as f64);
    let mut loss = T::zero();
    for (row, &g) in grad.data_mut().chunks_mut(k).zip(gold) {
        loss += -(row[g].max(T::min_positive_value())).ln();
        row[g] -= T::one();
        for v in row.iter_mut() {
            *v = *v / nf;
        }
    }
    Ok((loss / nf, grad))
}
