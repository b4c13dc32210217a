use anodec::formats::{read_trial, write_trial, Checkpoint, NetKind};
use anodec::PipelineError;
use anodec_core::learn::collect_dataset;
use anodec_core::nets::{init_controller_params, init_model_params};
use anodec_core::plant::PlantConfig;
use anodec_core::siggen::probing_plan;
use anodec_core::Grid;

#[test]
fn trial_csv_round_trips_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PlantConfig::setup1();
    let grid = Grid::with_duration(cfg.trial_duration).unwrap();
    let plan = probing_plan(&grid, &cfg.input_range, 3).unwrap();
    let ds = collect_dataset(&cfg, &plan, 3).unwrap();
    for (i, trial) in ds.trials().iter().enumerate() {
        let path = dir.path().join(format!("{i}.csv"));
        write_trial(&path, trial).unwrap();
        let back = read_trial(&path).unwrap();
        assert_eq!(&back, trial);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next(), Some("t,u,phi,phi_meas"));
        assert_eq!(text.lines().count(), 502);
    }
}

#[test]
fn checkpoints_round_trip_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let mut model = init_model_params(5);
    model.as_mut_slice()[7] = 0.1 + 0.2;
    model.as_mut_slice()[8] = -1.0e-300;
    let mp = dir.path().join("m.json");
    Checkpoint::model(&model).write(&mp).unwrap();
    assert_eq!(Checkpoint::read_model(&mp).unwrap(), model);

    let ctrl = init_controller_params(6);
    let cp = dir.path().join("c.json");
    Checkpoint::controller(&ctrl).write(&cp).unwrap();
    assert_eq!(Checkpoint::read_controller(&cp).unwrap(), ctrl);

    let header: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&mp).unwrap()).unwrap();
    assert_eq!(header["param_count"], 109);
    assert_eq!(header["latent"], 9);
    assert_eq!(header["inputs"], 10);
    let header: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&cp).unwrap()).unwrap();
    assert_eq!(header["param_count"], 46);
    assert_eq!(header["net"], "controller");
}

#[test]
fn mismatched_checkpoints_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.json");
    Checkpoint::controller(&init_controller_params(1)).write(&p).unwrap();
    assert!(matches!(Checkpoint::read_model(&p), Err(PipelineError::Format { .. })));

    let mut short = Checkpoint::new(NetKind::Model, &[0.0; 108]);
    short.param_count = 109;
    short.write(&p).unwrap();
    assert!(Checkpoint::read_model(&p).is_err());

    std::fs::write(&p, "{\"format_version\": 1, \"net\": \"model\"}").unwrap();
    assert!(Checkpoint::read_model(&p).is_err());
}

#[test]
fn off_grid_times_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.csv");
    std::fs::write(&p, "t,u,phi,phi_meas\n0,0,0,0\n0.02,0,0,0\n").unwrap();
    assert!(read_trial(&p).is_err());
    std::fs::write(&p, "t,u,phi\n0,0,0\n0.01,0,0\n").unwrap();
    assert!(read_trial(&p).is_err());
}
