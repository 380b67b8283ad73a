use crate::error::{dim_err, Result};
use crate::tensor::Tensor;

fn check(pred: &Tensor, target: &Tensor) -> Result<()> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(dim_err!(
            "mse needs equal non-empty lengths, got {} and {}",
            pred.len(),
            target.len()
        ));
    }
    Ok(())
}

/// `(1/b) Σ (pred - target)²`
pub fn mse_loss(pred: &Tensor, target: &Tensor) -> Result<f64> {
    check(pred, target)?;
    let b = pred.len() as f64;
    Ok(pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / b)
}

/// `2 (pred - target) / b`, shaped like `pred`.
pub fn mse_grad(pred: &Tensor, target: &Tensor) -> Result<Tensor> {
    check(pred, target)?;
    let b = pred.len() as f64;
    let mut g = pred.clone();
    for (gv, t) in g.data_mut().iter_mut().zip(target.data()) {
        *gv = 2.0 * (*gv - t) / b;
    }
    Ok(g)
}
