use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::Parameters;
use crate::error::{dim_err, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Padding {
    /// Zero padding of `(k - 1) / 2` on each side; output keeps the input size.
    Same,
    Valid,
}

struct Geometry {
    c_in: usize,
    h: usize,
    w: usize,
    c_out: usize,
    kh: usize,
    kw: usize,
    pad_h: usize,
    pad_w: usize,
    oh: usize,
    ow: usize,
}

fn geometry(input: &[usize], kernel: &[usize], padding: Padding) -> Result<Geometry> {
    let [c_in, h, w] = input else {
        return Err(dim_err!("conv2d input must be C×H×W, got {:?}", input));
    };
    let [c_out, k_in, kh, kw] = kernel else {
        return Err(dim_err!("conv2d kernel must be Cout×Cin×kh×kw, got {:?}", kernel));
    };
    if c_in != k_in {
        return Err(dim_err!("input has {} channels, kernel expects {}", c_in, k_in));
    }
    let (pad_h, pad_w) = match padding {
        Padding::Same => {
            if kh % 2 == 0 || kw % 2 == 0 {
                return Err(dim_err!("same padding needs odd kernel dims, got {}×{}", kh, kw));
            }
            ((kh - 1) / 2, (kw - 1) / 2)
        }
        Padding::Valid => {
            if kh > h || kw > w {
                return Err(dim_err!("kernel {}×{} larger than input {}×{}", kh, kw, h, w));
            }
            (0, 0)
        }
    };
    Ok(Geometry {
        c_in: *c_in,
        h: *h,
        w: *w,
        c_out: *c_out,
        kh: *kh,
        kw: *kw,
        pad_h,
        pad_w,
        oh: h + 2 * pad_h + 1 - kh,
        ow: w + 2 * pad_w + 1 - kw,
    })
}

/// Output positions `o` in `0..out` whose source `o + k - pad` lies in `0..len`.
#[inline]
fn valid_range(k: usize, pad: usize, len: usize, out: usize) -> (usize, usize) {
    let lo = pad.saturating_sub(k);
    let hi = (len + pad).saturating_sub(k).min(out);
    (lo, hi.max(lo))
}

/// 2-d cross-correlation of a `C_in×H×W` input with a `C_out×C_in×kh×kw` kernel.
pub fn conv2d(
    input: &Tensor,
    kernel: &Tensor,
    bias: Option<&Tensor>,
    padding: Padding,
) -> Result<Tensor> {
    let g = geometry(input.shape(), kernel.shape(), padding)?;
    if let Some(b) = bias {
        if b.shape() != [g.c_out] {
            return Err(dim_err!("bias shape {:?}, expected [{}]", b.shape(), g.c_out));
        }
    }
    let mut out = Tensor::zeros(&[g.c_out, g.oh, g.ow]);
    let x = input.data();
    let k = kernel.data();
    let y = out.data_mut();
    for co in 0..g.c_out {
        let y_c = &mut y[co * g.oh * g.ow..(co + 1) * g.oh * g.ow];
        if let Some(b) = bias {
            y_c.fill(b.data()[co]);
        }
        for ci in 0..g.c_in {
            let x_c = &x[ci * g.h * g.w..(ci + 1) * g.h * g.w];
            for ky in 0..g.kh {
                let (oy_lo, oy_hi) = valid_range(ky, g.pad_h, g.h, g.oh);
                for kx in 0..g.kw {
                    let wv = k[((co * g.c_in + ci) * g.kh + ky) * g.kw + kx];
                    let (ox_lo, ox_hi) = valid_range(kx, g.pad_w, g.w, g.ow);
                    for oy in oy_lo..oy_hi {
                        let iy = oy + ky - g.pad_h;
                        let ix0 = ox_lo + kx - g.pad_w;
                        let src = &x_c[iy * g.w + ix0..iy * g.w + ix0 + (ox_hi - ox_lo)];
                        let dst = &mut y_c[oy * g.ow + ox_lo..oy * g.ow + ox_hi];
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d += wv * s;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Conv2dGrads {
    pub input: Tensor,
    pub kernel: Tensor,
    pub bias: Tensor,
}

/// Gradients of [`conv2d`] with respect to input, kernel and bias.
pub fn conv2d_backward(
    input: &Tensor,
    kernel: &Tensor,
    padding: Padding,
    grad_out: &Tensor,
) -> Result<Conv2dGrads> {
    let g = geometry(input.shape(), kernel.shape(), padding)?;
    if grad_out.shape() != [g.c_out, g.oh, g.ow] {
        return Err(dim_err!(
            "upstream gradient {:?}, expected [{}, {}, {}]",
            grad_out.shape(),
            g.c_out,
            g.oh,
            g.ow
        ));
    }
    let mut d_in = Tensor::zeros(input.shape());
    let mut d_k = Tensor::zeros(kernel.shape());
    let mut d_b = Tensor::zeros(&[g.c_out]);
    let x = input.data();
    let k = kernel.data();
    let gy = grad_out.data();
    {
        let dx = d_in.data_mut();
        let dk = d_k.data_mut();
        let db = d_b.data_mut();
        for co in 0..g.c_out {
            let g_c = &gy[co * g.oh * g.ow..(co + 1) * g.oh * g.ow];
            db[co] = g_c.iter().sum();
            for ci in 0..g.c_in {
                let x_c = &x[ci * g.h * g.w..(ci + 1) * g.h * g.w];
                let dx_c = &mut dx[ci * g.h * g.w..(ci + 1) * g.h * g.w];
                for ky in 0..g.kh {
                    let (oy_lo, oy_hi) = valid_range(ky, g.pad_h, g.h, g.oh);
                    for kx in 0..g.kw {
                        let ki = ((co * g.c_in + ci) * g.kh + ky) * g.kw + kx;
                        let wv = k[ki];
                        let (ox_lo, ox_hi) = valid_range(kx, g.pad_w, g.w, g.ow);
                        let n = ox_hi - ox_lo;
                        let mut acc = 0.0;
                        for oy in oy_lo..oy_hi {
                            let iy = oy + ky - g.pad_h;
                            let ix0 = ox_lo + kx - g.pad_w;
                            let go = &g_c[oy * g.ow + ox_lo..oy * g.ow + ox_hi];
                            let xs = &x_c[iy * g.w + ix0..iy * g.w + ix0 + n];
                            let dxs = &mut dx_c[iy * g.w + ix0..iy * g.w + ix0 + n];
                            for ((gv, xv), dxv) in go.iter().zip(xs).zip(dxs.iter_mut()) {
                                acc += gv * xv;
                                *dxv += wv * gv;
                            }
                        }
                        dk[ki] += acc;
                    }
                }
            }
        }
    }
    Ok(Conv2dGrads {
        input: d_in,
        kernel: d_k,
        bias: d_b,
    })
}

/// Convolution layer with an optional bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conv2d {
    pub kernel: Tensor,
    pub bias: Option<Tensor>,
    pub padding: Padding,
}

impl Conv2d {
    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        conv2d(input, &self.kernel, self.bias.as_ref(), self.padding)
    }

    /// Returns the input gradient and a parameter-gradient layer.
    pub fn backward(&self, input: &Tensor, grad_out: &Tensor) -> Result<(Tensor, Conv2d)> {
        let g = conv2d_backward(input, &self.kernel, self.padding, grad_out)?;
        let grads = Conv2d {
            kernel: g.kernel,
            bias: self.bias.as_ref().map(|_| g.bias),
            padding: self.padding,
        };
        Ok((g.input, grads))
    }

    /// Number of kernel weights, bias excluded.
    pub fn weight_count(&self) -> usize {
        self.kernel.len()
    }

    pub fn out_channels(&self) -> usize {
        self.kernel.shape()[0]
    }
}

impl Parameters for Conv2d {
    fn blocks(&self) -> Vec<&Tensor> {
        let mut v = alloc::vec![&self.kernel];
        v.extend(self.bias.as_ref());
        v
    }

    fn blocks_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = alloc::vec![&mut self.kernel];
        v.extend(self.bias.as_mut());
        v
    }
}
