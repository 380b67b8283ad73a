use multsl_core::scenario::{
    anchors, generate, make_batch, split_dataset, Batcher, IndexRange, Label, ScenarioConfig, SplitMode,
};
use multsl_core::models::Standardizer;

fn runs(labels: &[Label], of: Label) -> Vec<usize> {
    let mut out = Vec::new();
    let mut len = 0;
    for &l in labels.iter().chain(std::iter::once(&Label::Los)) {
        if l == of {
            len += 1;
        } else if len > 0 {
            out.push(len);
            len = 0;
        }
    }
    out
}

#[test]
fn nlos_drop_is_about_fifteen_db() {
    for seed in 1..=3 {
        let d = generate(&ScenarioConfig { seed, ..ScenarioConfig::desk() }).unwrap();
        assert!(d.episodes.len() >= 10);
        let mean = |l: Label| {
            let v: Vec<f64> = d.powers_dbm.iter().zip(&d.labels).filter(|(_, &x)| x == l).map(|(p, _)| *p).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let delta = mean(Label::Nlos) - mean(Label::Los);
        assert!((delta + 15.0).abs() <= 1.0, "seed {seed}: {delta}");
    }
}

#[test]
fn nlos_runs_last_as_configured() {
    let cfg = ScenarioConfig::desk();
    let d = generate(&cfg).unwrap();
    let r = runs(&d.labels, Label::Nlos);
    assert_eq!(r.len(), d.episodes.iter().filter(|e| e.nlos_end_s() < d.time_s(d.len())).count());
    for len in r {
        let ms = len as f64 * cfg.tau_ms;
        assert!(ms >= cfg.nlos_duration_ms.lo - cfg.tau_ms && ms <= cfg.nlos_duration_ms.hi + cfg.tau_ms, "{ms} ms");
    }
}

#[test]
fn pedestrian_reaches_link_column_before_the_drop() {
    for cfg in [ScenarioConfig::desk(), ScenarioConfig { n_samples: 3000, ..ScenarioConfig::paper() }] {
        let d = generate(&cfg).unwrap();
        let col = cfg.link_column();
        let w = cfg.frame_width;
        let mut checked = 0;
        for ep in &d.episodes {
            let first = (1..=d.len()).find(|&k| {
                let f = d.frame(k);
                (0..cfg.frame_height).any(|i| f[i * w + col] > cfg.background as f32 && ep.covers_column(d.time_s(k), col, col))
            });
            let Some(k) = first else { continue };
            assert!(d.time_s(k) <= ep.onset_s - ep.ramp_down_s + 1e-9, "episode at {}", ep.onset_s);
            // something was visible in the frame before that too
            assert!(d.frame(k - 1).iter().any(|&p| p > cfg.background as f32));
            checked += 1;
        }
        assert!(checked + 1 >= d.episodes.len(), "{checked} of {}", d.episodes.len());
    }
}

#[test]
fn windows_stay_inside_their_split() {
    let d = generate(&ScenarioConfig::desk()).unwrap();
    for mode in [SplitMode::Paper, SplitMode::Disjoint] {
        let s = split_dataset(d.len(), mode).unwrap();
        for range in [s.train, s.valid, s.test] {
            let ks = anchors(range, 4, 4);
            assert!(ks.iter().all(|&k| range.contains(k - 3) && range.contains(k + 4)));
            let b = make_batch(&d, &ks[..5], 4, 4, &Standardizer::identity()).unwrap();
            assert_eq!(b.targets.data()[0], d.power(ks[0] + 4));
        }
        let b = Batcher::new(s.train, 4, 4, 64, 1).unwrap();
        for batch in b.epoch(2) {
            assert!(batch.iter().all(|&k| s.train.contains(k - 3) && s.train.contains(k + 4)));
        }
    }
}

#[test]
fn paper_split_is_verbatim() {
    let s = split_dataset(15325, SplitMode::Paper).unwrap();
    assert_eq!(s.train, IndexRange { start: 1, end: 9928 });
    assert_eq!(s.valid, IndexRange { start: 9929, end: 13228 });
    assert_eq!(s.test, IndexRange { start: 9929, end: 15325 });
}

#[test]
fn zero_pedestrians_give_all_los() {
    let d = generate(&ScenarioConfig { pedestrians: 0, ..ScenarioConfig::desk() }).unwrap();
    assert_eq!(d.len(), 2000);
    assert!(d.labels.iter().all(|&l| l == Label::Los));
}
