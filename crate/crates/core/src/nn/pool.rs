use alloc::vec::Vec;

use crate::error::{dim_err, Error, Result};
use crate::tensor::Tensor;

/// Pooled map plus, per output cell, the flat input index that won.
#[derive(Debug, Clone)]
pub struct PoolOutput {
    pub output: Tensor,
    pub argmax: Vec<usize>,
}

/// Non-overlapping `w_h×w_w` max pooling over a `C×H×W` tensor.
///
/// Stride equals the window. Ties go to the first maximum in row-major
/// window order.
pub fn max_pool(input: &Tensor, w_h: usize, w_w: usize) -> Result<PoolOutput> {
    let [c, h, w] = *input.shape() else {
        return Err(dim_err!("max_pool input must be C×H×W, got {:?}", input.shape()));
    };
    if w_h == 0 || w_w == 0 || h % w_h != 0 || w % w_w != 0 {
        return Err(Error::Config(alloc::format!(
            "pool window {}×{} does not tile a {}×{} map",
            w_h, w_w, h, w
        )));
    }
    let (oh, ow) = (h / w_h, w / w_w);
    let x = input.data();
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut argmax = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        let base = ch * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = base + oy * w_h * w + ox * w_w;
                for dy in 0..w_h {
                    let row = base + (oy * w_h + dy) * w + ox * w_w;
                    for i in row..row + w_w {
                        if x[i] > x[best] {
                            best = i;
                        }
                    }
                }
                out.push(x[best]);
                argmax.push(best);
            }
        }
    }
    Ok(PoolOutput {
        output: Tensor::new(&[c, oh, ow], out)?,
        argmax,
    })
}

/// Routes each output gradient to the input cell recorded in `argmax`.
pub fn max_pool_backward(input_shape: &[usize], argmax: &[usize], grad_out: &Tensor) -> Result<Tensor> {
    if argmax.len() != grad_out.len() {
        return Err(dim_err!(
            "{} argmax entries for {} gradients",
            argmax.len(),
            grad_out.len()
        ));
    }
    let mut d = Tensor::zeros(input_shape);
    let dx = d.data_mut();
    for (&i, &g) in argmax.iter().zip(grad_out.data()) {
        dx[i] += g;
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn shapes() {
        let x = Tensor::zeros(&[1, 40, 40]);
        assert_eq!(max_pool(&x, 4, 4).unwrap().output.shape(), &[1, 10, 10]);
        assert_eq!(max_pool(&x, 40, 40).unwrap().output.shape(), &[1, 1, 1]);
        assert_eq!(max_pool(&x, 1, 1).unwrap().output.shape(), &[1, 40, 40]);
        assert!(matches!(max_pool(&x, 3, 4), Err(Error::Config(_))));
    }

    #[test]
    fn max_of_four() {
        let x = Tensor::new(&[1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let p = max_pool(&x, 2, 2).unwrap();
        assert_eq!(p.output.data(), &[4.0]);
        assert_eq!(p.argmax, vec![3]); // (1, 1)
    }

    #[test]
    fn identity_window() {
        let x = Tensor::from_fn(&[2, 3, 3], |i| i as f64 * 0.5);
        let p = max_pool(&x, 1, 1).unwrap();
        assert_eq!(p.output, x);
    }

    proptest! {
        #[test]
        fn routes_each_gradient_once(vals in proptest::collection::vec(-1.0f64..1.0, 2 * 8 * 8),
                                     grads in proptest::collection::vec(-1.0f64..1.0, 2 * 4 * 2)) {
            let x = Tensor::new(&[2, 8, 8], vals).unwrap();
            let p = max_pool(&x, 2, 4).unwrap();
            let g = Tensor::new(&[2, 4, 2], grads).unwrap();
            let d = max_pool_backward(x.shape(), &p.argmax, &g).unwrap();
            prop_assert!((d.sum() - g.sum()).abs() < 1e-12);
            let nonzero = d.data().iter().filter(|v| **v != 0.0).count();
            prop_assert!(nonzero <= g.len());
            for (o, &i) in p.argmax.iter().enumerate() {
                prop_assert_eq!(d.data()[i], g.data()[o]);
                prop_assert_eq!(x.data()[i], p.output.data()[o]);
            }
        }
    }
}
