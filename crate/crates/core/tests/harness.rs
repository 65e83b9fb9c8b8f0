use lgd_core::data::{self, NoiseSource, NoiseSpec, SynthSpec};
use lgd_core::harness::{self, DataSource, ExperimentConfig, ScaleExpSpec, TraceFormat, Training};
use lgd_core::lgd::{LgdConfig, RelabelConfig};
use lgd_core::nn::{LossSpec, TrainHyper};
use lgd_core::Error;

fn synth_source(per_class: usize) -> DataSource {
    DataSource::Synthetic {
        spec: SynthSpec {
            k: 4,
            per_class,
            d: 16,
            separation: 5.0,
            seed: 3,
        },
        test_per_class: 100,
    }
}

fn config(eta: Option<f64>, repeats: usize, epochs: usize) -> ExperimentConfig {
    ExperimentConfig {
        data: synth_source(150),
        noise: eta.map(|e| NoiseSpec::new(NoiseSource::Symmetric, e).unwrap()),
        training: Training::Lgd(LgdConfig {
            epochs,
            hidden: vec![16],
            ..LgdConfig::default()
        }),
        repeats,
        seed: 4,
        strict: false,
        out: None,
    }
}

#[test]
fn single_repeat_has_zero_spread() {
    let out = harness::run_noise_experiment(&config(Some(0.3), 1, 4)).unwrap();
    assert_eq!(out.summary.std_test_acc, Some(0.0));
    assert_eq!(out.summary.mean_test_acc, out.summary.repeats[0].selected_test_acc);
}

#[test]
fn summary_statistics_recompute() {
    let out = harness::run_noise_experiment(&config(Some(0.3), 3, 4)).unwrap();
    let s = &out.summary;
    assert_eq!(s.selected_test_accs.len(), 3);
    let n = 3.0;
    let mean = s.selected_test_accs.iter().sum::<f64>() / n;
    let var = s.selected_test_accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((s.mean_test_acc.unwrap() - mean).abs() < 1e-12);
    assert!((s.std_test_acc.unwrap() - var.sqrt()).abs() < 1e-12);
    assert_eq!(s.peak_epochs, s.repeats.iter().map(|r| r.peak_epoch).collect::<Vec<_>>());
    // repeats draw their own noise and runs
    assert_ne!(s.repeats[0].noise_seed, s.repeats[1].noise_seed);
    assert_ne!(s.repeats[0].run_seed, s.repeats[1].run_seed);
}

#[test]
fn emitted_files_round_trip() {
    let out = harness::run_noise_experiment(&config(Some(0.3), 2, 5)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = harness::emit_results(&out, dir.path(), TraceFormat::Csv).unwrap();
    assert_eq!(paths.len(), 2 + 2 + 1);
    let back = harness::load_summary(&dir.path().join("summary.json")).unwrap();
    assert_eq!(back, out.summary);

    let csv = std::fs::read_to_string(dir.path().join("trace_r0_i0.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("epoch,"));
    assert_eq!(lines.count(), 5);

    let json = tempfile::tempdir().unwrap();
    harness::emit_results(&out, json.path(), TraceFormat::Json).unwrap();
    let text = std::fs::read_to_string(json.path().join("trace_r1_i0.json")).unwrap();
    let trace: lgd_core::lgd::LoRTrace = serde_json::from_str(&text).unwrap();
    assert_eq!(trace, out.traces[1][0]);
}

#[test]
fn refuses_exactly_the_infeasible_configs() {
    for eta in [0.2, 0.5, 0.74, 0.76, 0.9] {
        let cfg = config(Some(eta), 1, 2);
        let report = cfg.feasibility(4).unwrap();
        match harness::run_noise_experiment(&cfg) {
            Err(Error::Infeasible(r)) => {
                assert!(!report.feasible, "eta {eta}");
                assert_eq!(*r, report);
            }
            Ok(_) => assert!(report.feasible, "eta {eta}"),
            Err(e) => panic!("eta {eta}: {e}"),
        }
    }
    assert!(config(None, 1, 2).feasibility(4).is_none());
}

#[test]
fn strict_mode_reports_no_oracle_numbers() {
    let mut cfg = config(Some(0.3), 2, 4);
    let diag = harness::run_noise_experiment(&cfg).unwrap();
    cfg.strict = true;
    let strict = harness::run_noise_experiment(&cfg).unwrap();
    assert_eq!(strict.summary.mean_test_acc, None);
    assert!(strict.summary.selected_test_accs.is_empty());
    for r in &strict.summary.repeats {
        assert!(r.selected_test_acc.is_none() && r.oracle_best_test_acc.is_none());
        assert!(r.label_agreement.is_empty());
    }
    for (a, b) in diag.checkpoints.iter().zip(&strict.checkpoints) {
        assert_eq!(serde_json::to_string(a).unwrap(), serde_json::to_string(b).unwrap());
    }
}

#[test]
fn clean_labels_match_plain_training() {
    let cfg = ExperimentConfig {
        data: synth_source(500),
        ..config(None, 1, 15)
    };
    let (train, test) = cfg.data.load().unwrap();
    let out = harness::run_noise_experiment_on(&cfg, &train, &test).unwrap();
    let selected = out.summary.repeats[0].selected_test_acc.unwrap();
    let plain = harness::plain_train(&train, &test, &[16], &LossSpec::Cce, &TrainHyper::default(), 15, 4).unwrap();
    let best = plain.iter().copied().fold(0.0, f64::max);
    assert!(selected >= best - 0.01, "selected {selected}, plain best {best}");
}

#[test]
fn config_json_round_trip() {
    let mut cfg = config(Some(0.4), 2, 3);
    cfg.training = Training::Relabel(RelabelConfig {
        outer_iters: 2,
        inner: cfg.training.inner().clone(),
    });
    cfg.data = DataSource::mnist("/data", Some(100), None);
    let text = serde_json::to_string(&cfg).unwrap();
    let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn zero_repeats_rejected() {
    let cfg = config(None, 0, 2);
    assert!(matches!(harness::run_noise_experiment(&cfg), Err(Error::Config(_))));
}

#[test]
fn scale_spec_validation() {
    let ok = ScaleExpSpec::default();
    assert!(ok.validate(7000).is_ok());
    assert!(ok.validate(6999).is_err());
    let flat = ScaleExpSpec { n_large: 1000, ..ScaleExpSpec::default() };
    assert!(matches!(flat.validate(10_000), Err(Error::Config(_))));
    let no_chaos = ScaleExpSpec { n_chaos: 0, ..ScaleExpSpec::default() };
    assert!(no_chaos.validate(10_000).is_err());
}

#[test]
fn scale_experiment_starts_at_chance() {
    let base = data::synth_gaussian(&SynthSpec {
        k: 4,
        per_class: 2000,
        d: 16,
        separation: 5.0,
        seed: 6,
    })
    .unwrap();
    let spec = ScaleExpSpec {
        epochs: 2,
        hidden: vec![16],
        seed: 7,
        ..ScaleExpSpec::default()
    };
    let report = harness::run_scale_experiment(&base, &spec).unwrap();
    assert_eq!(report.accuracy.len(), 3);
    assert_eq!(report.accuracy[0].epoch, 0);
    assert!(report.accuracy[0].train_loss.is_none());
    // random labels stay near chance whatever the network predicts
    let sd = (0.25 * 0.75 / 4000.0f64).sqrt();
    assert!((report.accuracy[0].chaos - 0.25).abs() < 4.0 * sd, "{}", report.accuracy[0].chaos);
    assert_eq!(report.probes.len(), 5);

    let mut csv = Vec::new();
    report.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "epoch,acc_large,acc_small,acc_chaos,train_loss");
    assert_eq!(text.lines().count(), 4);
}
