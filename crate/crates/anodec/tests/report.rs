use anodec::report::{export_report, import_report, SUMMARY_CSV};
use anodec_core::baseline::PidConfig;
use anodec_core::eval::{evaluate_suite, ControllerSpec, Distribution, SuiteCounts};
use anodec_core::nets::init_controller_params;
use anodec_core::plant::PlantConfig;

fn report() -> anodec_core::eval::SuiteReport {
    let cfg = PlantConfig { trial_duration: 2.0, ..PlantConfig::setup1() };
    let specs = [
        ControllerSpec::anodec("anodec", init_controller_params(2), cfg.input_range),
        ControllerSpec::pid("pid", PidConfig::default()),
    ];
    evaluate_suite(&cfg, &specs, &SuiteCounts { steps: 2, double_steps: 1, splines: 3 }, 17).unwrap()
}

#[test]
fn export_then_import_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let r = report();
    export_report(&r, dir.path()).unwrap();
    assert_eq!(import_report(dir.path()).unwrap(), r);
}

#[test]
fn summary_has_one_row_per_distribution_and_controller() {
    let dir = tempfile::tempdir().unwrap();
    let r = report();
    export_report(&r, dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join(SUMMARY_CSV)).unwrap();
    assert_eq!(text.lines().count(), 1 + Distribution::ALL.len() * 2);
    assert_eq!(r.summary.len(), 6);
}

#[test]
fn summary_means_recompute_from_logs() {
    let dir = tempfile::tempdir().unwrap();
    export_report(&report(), dir.path()).unwrap();
    let back = import_report(dir.path()).unwrap();
    for row in &back.summary {
        let rmses: Vec<f64> = back
            .trials
            .iter()
            .filter(|t| t.distribution == row.distribution && t.record.controller == row.controller)
            .map(|t| {
                let r = &t.record;
                let ms = r.reference.values().iter().zip(r.phi.values()).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
                    / r.phi.len() as f64;
                ms.sqrt().to_degrees()
            })
            .collect();
        assert_eq!(rmses.len(), row.n);
        let mean = rmses.iter().sum::<f64>() / rmses.len() as f64;
        assert!((mean - row.mean_rmse_deg).abs() < 1e-9);
    }
}

#[test]
fn log_names_embed_controller_distribution_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let r = report();
    export_report(&r, dir.path()).unwrap();
    for t in &r.trials {
        let name = anodec::report::log_name(t);
        assert!(name.starts_with(&t.record.controller));
        assert!(name.contains(t.distribution.label()));
        assert!(name.contains(&format!("seed{}", t.reference_seed)));
        assert!(dir.path().join("trials").join(name).exists());
    }
}
