use multsl::config::ExperimentConfig;
use multsl::experiment::cmd_train;
use multsl_core::scenario::generate;

/// Desk-mode ImgRF runs: the untrained model should validate worse than
/// the selected epoch on nearly every seed.
#[test]
fn training_improves_validation_rmse() {
    let mut improved = 0;
    let mut lines = Vec::new();
    for seed in 100..120u64 {
        let mut cfg = ExperimentConfig::desk();
        cfg.set_seed(seed);
        let data = generate(&cfg.scenario).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let run = cmd_train(&cfg, &data, dir.path(), None).unwrap();
        let h = &run.outcome.history;
        let best = h[run.outcome.best_epoch].valid_rmse_db;
        if h[0].valid_rmse_db > best {
            improved += 1;
        }
        lines.push(format!("seed {seed}: {:.3} -> {best:.3}", h[0].valid_rmse_db));
    }
    assert!(improved >= 18, "{improved}/20\n{}", lines.join("\n"));
}
