use multsl_core::channel::ChannelParams;
use multsl_core::models::{ModelConfig, SampleBatch, SplitModel, Standardizer, Variant};
use multsl_core::nn::{mse_loss, AdamHyper, Parameters};
use multsl_core::protocol::{
    Accounting, Direction, InProcessLink, Link, MonolithicTrainer, SplitSession, WireDtype,
};
use multsl_core::{Error, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn toy(variant: Variant) -> ModelConfig {
    ModelConfig {
        frame_height: 8,
        frame_width: 8,
        pool_height: 2,
        pool_width: 2,
        conv1_channels: 4,
        lstm_hidden_channels: 3,
        ..ModelConfig::desk(variant)
    }
}

fn batch(cfg: &ModelConfig, b: usize, seed: u64) -> SampleBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (l, h, w) = (cfg.seq_len, cfg.frame_height, cfg.frame_width);
    SampleBatch {
        frames: Tensor::from_fn(&[b, l, 1, h, w], |_| rng.random_range(0.0..1.0)),
        powers: Tensor::from_fn(&[b, l], |_| rng.random_range(-1.0..1.0)),
        targets: Tensor::from_fn(&[b], |_| rng.random_range(-1.0..1.0)),
        anchors: (0..b).map(|i| i + l).collect(),
    }
}

fn session(model: SplitModel, wire: WireDtype) -> SplitSession {
    SplitSession::new(
        model,
        AdamHyper::default(),
        wire,
        Accounting::default(),
        ChannelParams::default(),
        Standardizer::identity(),
    )
    .unwrap()
}

fn flat(model: &SplitModel) -> Vec<f64> {
    let mut v: Vec<f64> = model.ue.blocks().iter().flat_map(|b| b.data().to_vec()).collect();
    v.extend(model.bs.blocks().iter().flat_map(|b| b.data().to_vec()));
    v
}

#[test]
fn binary64_wire_matches_monolithic_bitwise() {
    for variant in Variant::ALL {
        for seed in 0..5 {
            let model = SplitModel::init(&toy(variant), seed).unwrap();
            let b = batch(&model.config, 6, 50 + seed);
            let mut split = session(model.clone(), WireDtype::F64);
            let mut mono = MonolithicTrainer::new(model, AdamHyper::default());
            for _ in 0..3 {
                let l1 = split.run_training_step(&b, &mut InProcessLink::default(), -60.0).unwrap().loss;
                let l2 = mono.step(&b).unwrap();
                assert_eq!(l1.to_bits(), l2.to_bits());
            }
            let a = flat(&split.model());
            let m = flat(&mono.model);
            assert!(a.iter().zip(&m).all(|(x, y)| x.to_bits() == y.to_bits()), "{variant} seed {seed}");
        }
    }
}

#[test]
fn binary32_wire_stays_close_to_monolithic() {
    for seed in 0..5 {
        let model = SplitModel::init(&toy(Variant::ImgRf), seed).unwrap();
        let b = batch(&model.config, 6, 70 + seed);
        let before = flat(&model);
        let mut split = session(model.clone(), WireDtype::F32);
        let mut mono = MonolithicTrainer::new(model, AdamHyper::default());
        split.run_training_step(&b, &mut InProcessLink::default(), -60.0).unwrap();
        mono.step(&b).unwrap();
        let a = flat(&split.model());
        let m = flat(&mono.model);
        let diff = a.iter().zip(&m).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        let norm = before.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(diff / norm <= 1e-5, "seed {seed}: {:e}", diff / norm);
    }
}

/// Flips one bit of every frame sent in `target` direction.
struct Corrupting {
    target: Direction,
    bit: usize,
}

impl Link for Corrupting {
    fn carry(&mut self, direction: Direction, mut frame: Vec<u8>) -> Vec<u8> {
        if direction == self.target {
            let i = self.bit % (frame.len() * 8);
            frame[i / 8] ^= 1 << (i % 8);
        }
        frame
    }
}

#[test]
fn corrupted_messages_leave_parameters_untouched() {
    let model = SplitModel::init(&toy(Variant::ImgRf), 3).unwrap();
    let b = batch(&model.config, 4, 9);
    for target in [Direction::Uplink, Direction::Downlink] {
        for bit in [0usize, 17, 130, 1001, 4000] {
            let mut s = session(model.clone(), WireDtype::F32);
            let before = s.model();
            let err = s.run_training_step(&b, &mut Corrupting { target, bit }, -60.0).unwrap_err();
            assert!(matches!(err, Error::Protocol(_)), "{err}");
            assert_eq!(s.model(), before);
            assert!(!s.ue.has_pending());
            assert_eq!(s.ue.optimizer.state.step_count, 0);
            assert_eq!(s.bs.optimizer.state.step_count, 0);
            // the session is still usable afterwards
            s.run_training_step(&b, &mut InProcessLink::default(), -60.0).unwrap();
        }
    }
}

#[test]
fn bp_before_fp_is_a_protocol_error() {
    let model = SplitModel::init(&toy(Variant::Img), 0).unwrap();
    let mut s = session(model, WireDtype::F32);
    let bp = multsl_core::protocol::BpMessage::from_samples(&[Tensor::zeros(&[4, 1, 4, 4])], 0).unwrap();
    assert!(matches!(s.ue.backward(&bp), Err(Error::Protocol(_))));
}

#[test]
fn one_step_lowers_the_loss_for_most_seeds() {
    let mut lower = 0;
    for seed in 0..20 {
        let model = SplitModel::init(&toy(Variant::ImgRf), seed).unwrap();
        let b = batch(&model.config, 8, 200 + seed);
        let mut s = session(model, WireDtype::F32);
        let before = s.run_training_step(&b, &mut InProcessLink::default(), -60.0).unwrap().loss;
        let mut link = InProcessLink::default();
        let preds: Vec<f64> = (0..b.len())
            .map(|i| s.predict_std(&b.sample_frames(i), b.sample_powers(i), &mut link).unwrap())
            .collect();
        let after = mse_loss(&Tensor::new(&[b.len()], preds).unwrap(), &b.targets).unwrap();
        if after < before {
            lower += 1;
        }
    }
    assert!(lower >= 18, "{lower}/20");
}

#[test]
fn rf_steps_send_nothing() {
    let model = SplitModel::init(&toy(Variant::Rf), 1).unwrap();
    let b = batch(&model.config, 4, 1);
    let mut s = session(model, WireDtype::F32);
    let mut link = InProcessLink::default();
    let r = s.run_training_step(&b, &mut link, -60.0).unwrap();
    assert_eq!(link.frames_carried, 0);
    assert_eq!((r.timing.t_fp, r.timing.t_bp), (0.0, 0.0));
    assert_eq!(r.timing.t_step, ChannelParams::default().t_comp_rf_s);
    let (_, t) = s.predict(&b.sample_frames(0), b.sample_powers(0), &mut link, -60.0).unwrap();
    assert_eq!(t, 0.0);
}

#[test]
fn inference_sends_one_fp_message() {
    let model = SplitModel::init(&ModelConfig::paper(Variant::ImgRf), 4).unwrap();
    let s = session(model, WireDtype::F32);
    let frames = Tensor::from_fn(&[4, 1, 40, 40], |i| (i % 7) as f64 / 7.0);
    let mut link = InProcessLink::default();
    let (p1, t) = s.predict(&frames, &[0.0; 4], &mut link, -60.0).unwrap();
    let (p2, _) = s.predict(&frames, &[0.0; 4], &mut link, -60.0).unwrap();
    assert_eq!(p1.to_bits(), p2.to_bits());
    assert_eq!(link.frames_carried, 2);
    assert!((t - 12800.0 / 4.9137e8).abs() / t < 1e-3);
}
