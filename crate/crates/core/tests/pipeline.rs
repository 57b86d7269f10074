use std::fs;

use ndarray::{array, Array2};

use reverb_rc::cavity::{build_cavity, CavityConfig};
use reverb_rc::harness::{
    evaluate_config, load_external_features, run_experiment, sweep_heatmap, train_external,
    ExperimentConfig, ExternalOptions,
};
use reverb_rc::readout::{predict, ReadoutWeights};
use reverb_rc::ret::{boundary_perturb, FeatureMatrix};
use reverb_rc::series::TimeSeries;
use reverb_rc::Error;

const SMALL_HENON: &str = r#"
[task]
name = "henon"
train_len = 600
test_len = 200

[cavity]
t_decay = 3e-10
bandwidth = 3e9

[ensemble]
n_boundary = 3

[timing]
t_bin = 6e-11

[seeds]
cavity = 1
ensemble = 2
task = 3
"#;

fn small_henon() -> ExperimentConfig {
    ExperimentConfig::from_toml_str(SMALL_HENON).unwrap()
}

#[test]
fn external_fixture_loads() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.csv");
    fs::write(
        &path,
        "feature,0,1,2\nb0.f0.p0.t0,1,2,3\nb0.f0.p1.t0,-1,0.5,4e-1\nbias,1,1,1\n",
    )
    .unwrap();
    let f = load_external_features(&path).unwrap();
    assert_eq!((f.n_features(), f.n_cols()), (2, 3));
    assert_eq!(
        f.data(),
        &array![[1.0, 2.0, 3.0], [-1.0, 0.5, 0.4], [1.0, 1.0, 1.0]]
    );
    assert_eq!(f.labels()[1].port, 1);
}

#[test]
fn external_fixture_without_bias_names_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.csv");
    fs::write(
        &path,
        "feature,0,1,2\nb0.f0.p0.t0,1,2,3\nb0.f0.p1.t0,-1,0.5,4e-1\n",
    )
    .unwrap();
    match load_external_features(&path) {
        Err(Error::Parse { line, msg, .. }) => {
            assert_eq!(line, 4);
            assert!(msg.contains("bias"), "{msg}");
        }
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn predict_matches_hand_product() {
    let f = FeatureMatrix::from_data(
        array![[1.0, 2.0, 3.0], [-1.0, 0.5, 0.4], [1.0, 1.0, 1.0]],
        vec![
            "b0.f0.p0.t0".parse().unwrap(),
            "b0.f0.p1.t0".parse().unwrap(),
        ],
    )
    .unwrap();
    let w = ReadoutWeights::new(
        array![[2.0, -1.0, 0.5]],
        0.0,
        vec!["b0.f0.p0.t0".into(), "b0.f0.p1.t0".into(), "bias".into()],
        vec!["y".into()],
        1.0,
    )
    .unwrap();
    let y = predict(&w, &f, 1..3).unwrap();
    assert_eq!(
        y.channel(0).to_vec(),
        vec![2.0 * 2.0 - 0.5 + 0.5, 2.0 * 3.0 - 0.4 + 0.5]
    );
}

#[test]
fn train_external_recovers_linear_target() {
    let dir = tempfile::tempdir().unwrap();
    let n = 300;
    let data = Array2::from_shape_fn((3, n), |(r, c)| ((r + 1) as f64 * 0.37 * c as f64).sin());
    let labels = (0..3)
        .map(|p| format!("b0.f0.p{p}.t0").parse().unwrap())
        .collect();
    let f = FeatureMatrix::from_features(data.clone(), labels).unwrap();
    let y: Vec<f64> = (0..n)
        .map(|c| 0.5 * data[[0, c]] - 2.0 * data[[2, c]] + 0.25)
        .collect();
    f.save_csv(&dir.path().join("features.csv")).unwrap();
    TimeSeries::scalar("y", y, 1.0)
        .unwrap()
        .save_csv(&dir.path().join("targets.csv"))
        .unwrap();
    let opts = ExternalOptions {
        out_dir: dir.path().join("out"),
        ..Default::default()
    };
    let report = train_external(
        &dir.path().join("features.csv"),
        &dir.path().join("targets.csv"),
        &opts,
    )
    .unwrap();
    assert!(report.nmse[0] < 1e-6, "{:?}", report.nmse);
    for file in ["report.csv", "predictions.csv", "weights.json"] {
        assert!(opts.out_dir.join(file).is_file(), "{file}");
    }
}

#[test]
fn full_strength_perturbation_decorrelates_couplings() {
    let base = build_cavity::<f64>(&CavityConfig::default(), 5).unwrap();
    let k = base.n_modes() as f64;
    let member = boundary_perturb(&base, 1.0, 1, 9).unwrap();
    let (c0, c1) = (base.port_couplings(), member.port_couplings());
    for p in 0..base.n_ports() {
        let norm = c1.row(p).dot(&c1.row(p)).sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        let inner = c0.row(p).dot(&c1.row(p));
        assert!(inner.abs() < 4.0 / k.sqrt(), "port {p}: {inner}");
    }
    let (b0, b1) = (base.input_couplings(), member.input_couplings());
    let dot: f64 = b0.iter().zip(b1).map(|(a, b)| a * b).sum();
    let norms =
        (b0.iter().map(|v| v * v).sum::<f64>() * b1.iter().map(|v| v * v).sum::<f64>()).sqrt();
    assert!((dot / norms).abs() < 4.0 / k.sqrt());
    let (lo, hi) = base.band();
    assert!(member.mode_freqs().iter().all(|w| (lo..=hi).contains(w)));
}

#[test]
fn run_writes_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_henon();
    let mut files = Vec::new();
    for sub in ["one", "two"] {
        cfg.output.dir = dir.path().join(sub);
        let record = run_experiment(&cfg).unwrap();
        assert_eq!(record.config_hash, cfg.hash().unwrap());
        let read = |f: &str| fs::read(cfg.output.dir.join(f)).unwrap();
        files.push([
            read("report.csv"),
            read("predictions.csv"),
            read("reservoir.json"),
            read("weights.json"),
        ]);
        assert!(cfg.output.dir.join("run_record.json").is_file());
    }
    assert_eq!(files[0], files[1]);
    let leftovers: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().contains("partial"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn function_simulator_without_test_split_is_config_error() {
    let cfg = ExperimentConfig::from_toml_str(
        "[task]\nname = \"function_simulator\"\ntrain_fraction = 1.0\n[ensemble]\nn_boundary = 1\n",
    )
    .unwrap();
    let err = evaluate_config(&cfg).unwrap_err();
    let text = err.to_string();
    assert!(text.starts_with("task:"), "{text}");
    assert!(text.contains("degenerate"), "{text}");
}

#[test]
fn invalid_config_is_tagged_with_stage() {
    let mut cfg = small_henon();
    cfg.cavity.t_decay = -1.0;
    let text = evaluate_config(&cfg).unwrap_err().to_string();
    assert!(text.starts_with("config:"), "{text}");
}

#[test]
fn single_cell_sweep_has_zero_deviation() {
    let cfg = small_henon();
    let result = sweep_heatmap(&cfg, &[6e-11], &[3e-10]).unwrap();
    assert_eq!(result.argmin(), Some((0, 0)));
    assert_eq!(result.deviation_percent(), vec![Some(0.0)]);
}

#[test]
fn sweep_cells_do_not_depend_on_axis_order() {
    let cfg = small_henon();
    let forward = sweep_heatmap(&cfg, &[6e-11, 1.2e-10], &[2e-10, 4e-10]).unwrap();
    let reversed = sweep_heatmap(&cfg, &[1.2e-10, 6e-11], &[4e-10, 2e-10]).unwrap();
    for ti in 0..2 {
        for di in 0..2 {
            let a = forward.cell(ti, di);
            let b = reversed.cell(1 - ti, 1 - di);
            assert_eq!((a.t, a.t_decay), (b.t, b.t_decay));
            assert_eq!(a.nmse, b.nmse);
        }
    }
}

#[test]
fn sweep_writes_grids() {
    let dir = tempfile::tempdir().unwrap();
    let result = sweep_heatmap(&small_henon(), &[6e-11], &[2e-10, 4e-10]).unwrap();
    result.write(dir.path()).unwrap();
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().skip(1).all(|l| l.contains(",done,")), "{text}");
}
