use multsl_core::models::{cut_gradient, variant_input, ModelConfig, SplitModel, Variant};
use multsl_core::nn::gradcheck::{central_difference, max_relative_error};
use multsl_core::nn::Parameters;
use multsl_core::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn toy(variant: Variant) -> ModelConfig {
    ModelConfig {
        seq_len: 3,
        frame_height: 8,
        frame_width: 8,
        pool_height: 2,
        pool_width: 2,
        conv1_channels: 3,
        lstm_hidden_channels: 2,
        ..ModelConfig::desk(variant)
    }
}

fn loss(model: &SplitModel, frames: &Tensor, powers: &[f64], target: f64) -> f64 {
    let cfg = &model.config;
    let feats = if cfg.variant.uses_images() {
        Some(model.ue.forward(frames).unwrap().0)
    } else {
        None
    };
    let x = variant_input(cfg.variant, feats.as_ref(), powers, cfg.feature_size()).unwrap();
    let y = model.bs.forward(&x).unwrap().0;
    (y - target) * (y - target)
}

/// Analytic gradients of the squared error, UE blocks then BS blocks.
fn analytic(model: &SplitModel, frames: &Tensor, powers: &[f64], target: f64) -> Vec<Tensor> {
    let cfg = &model.config;
    let ue_pass = cfg.variant.uses_images().then(|| model.ue.forward(frames).unwrap());
    let x = variant_input(cfg.variant, ue_pass.as_ref().map(|p| &p.0), powers, cfg.feature_size()).unwrap();
    let (y, trace) = model.bs.forward(&x).unwrap();
    let (bs_grads, d_input) = model.bs.backward(&trace, 2.0 * (y - target)).unwrap();
    let mut out: Vec<Tensor> = match &ue_pass {
        Some((_, tr)) => {
            let g = cut_gradient(cfg.variant, &d_input).unwrap();
            model.ue.backward(tr, &g).unwrap().blocks().into_iter().cloned().collect()
        }
        None => model.ue.blocks().iter().map(|b| Tensor::zeros(b.shape())).collect(),
    };
    out.extend(bs_grads.blocks().into_iter().cloned());
    out
}

#[test]
fn composed_model_matches_finite_differences() {
    for variant in Variant::ALL {
        for seed in 0..20u64 {
            let model = SplitModel::init(&toy(variant), seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let frames = Tensor::from_fn(&[3, 1, 8, 8], |_| rng.random_range(0.0..1.0));
            let powers: Vec<f64> = (0..3).map(|_| rng.random_range(-1.5..1.5)).collect();
            let target = rng.random_range(-1.0..1.0);

            let grads = analytic(&model, &frames, &powers, target);
            let n_ue = model.ue.blocks().len();
            for (b, g) in grads.iter().enumerate() {
                let numeric = central_difference(
                    |p| {
                        let mut m = model.clone();
                        if b < n_ue {
                            *m.ue.blocks_mut()[b] = p.clone();
                        } else {
                            *m.bs.blocks_mut()[b - n_ue] = p.clone();
                        }
                        loss(&m, &frames, &powers, target)
                    },
                    if b < n_ue { model.ue.blocks()[b] } else { model.bs.blocks()[b - n_ue] },
                    1e-5,
                );
                let err = max_relative_error(g, &numeric);
                assert!(err < 1e-4, "{variant} seed {seed} block {b}: rel err {err:e}");
            }
        }
    }
}

#[test]
fn identical_passes_give_identical_gradients() {
    let model = SplitModel::init(&toy(Variant::ImgRf), 5).unwrap();
    let frames = Tensor::from_fn(&[3, 1, 8, 8], |i| ((i * 37) % 17) as f64 / 17.0);
    let a = analytic(&model, &frames, &[0.1, -0.2, 0.3], 0.5);
    let b = analytic(&model, &frames, &[0.1, -0.2, 0.3], 0.5);
    assert_eq!(a, b);
}

#[test]
fn zero_upstream_gradient_gives_zero_gradients() {
    let model = SplitModel::init(&toy(Variant::ImgRf), 2).unwrap();
    let frames = Tensor::from_fn(&[3, 1, 8, 8], |i| (i % 5) as f64 / 5.0);
    let (feats, trace) = model.ue.forward(&frames).unwrap();
    let x = variant_input(Variant::ImgRf, Some(&feats), &[0.0, 1.0, 2.0], (4, 4)).unwrap();
    let (_, bs_trace) = model.bs.forward(&x).unwrap();
    let (g, d) = model.bs.backward(&bs_trace, 0.0).unwrap();
    assert!(g.blocks().iter().all(|b| b.max_abs() == 0.0));
    let ue_g = model.ue.backward(&trace, &cut_gradient(Variant::ImgRf, &d).unwrap()).unwrap();
    assert!(ue_g.blocks().iter().all(|b| b.max_abs() == 0.0));
}
