//! Central finite differences, used as the reference when checking
//! analytic gradients.

use crate::tensor::Tensor;

/// `(f(x + h e_i) - f(x - h e_i)) / 2h` for every coordinate `i`.
pub fn central_difference(mut f: impl FnMut(&Tensor) -> f64, x: &Tensor, h: f64) -> Tensor {
    let mut probe = x.clone();
    let mut out = Tensor::zeros(x.shape());
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + h;
        let up = f(&probe);
        probe.data_mut()[i] = orig - h;
        let down = f(&probe);
        probe.data_mut()[i] = orig;
        out.data_mut()[i] = (up - down) / (2.0 * h);
    }
    out
}

/// Largest `|a - b| / max(|a|, |b|, floor)` over all elements.
///
/// The floor keeps coordinates whose true gradient is (nearly) zero from
/// turning round-off into huge ratios: with a step of `1e-5` and O(1)
/// function values the central difference carries about `1e-11` of
/// rounding noise, which stays below `1e-5` relative above the floor.
pub fn max_relative_error(analytic: &Tensor, numeric: &Tensor) -> f64 {
    const FLOOR: f64 = 1e-6;
    assert_eq!(analytic.shape(), numeric.shape(), "gradient shapes differ");
    analytic
        .data()
        .iter()
        .zip(numeric.data())
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(FLOOR))
        .fold(0.0, f64::max)
}
