use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
[task]
name = "henon"
train_len = 400
test_len = 100

[cavity]
t_decay = 3e-10
bandwidth = 3e9

[ensemble]
n_boundary = 2

[timing]
t_bin = 6e-11

[seeds]
cavity = 1
ensemble = 2
task = 3
ablation = 4

[sweep]
t_axis = [6e-11]
decay_axis = [2e-10, 3e-10]

[ablation]
sizes = [2, 4, 6]
n_seeds = 2

[output]
dir = "unused"
"#;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reverb-rc"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("exp.toml");
    fs::write(&path, CONFIG).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out_dir = dir.path().join("run");
    let out = cli(&[
        "run",
        &cfg,
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--jobs",
        "1",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("nmse.y = "));
    for f in [
        "report.csv",
        "predictions.csv",
        "weights.json",
        "reservoir.json",
        "config.toml",
        "run_record.json",
    ] {
        assert!(out_dir.join(f).is_file(), "{f}");
    }
}

#[test]
fn seed_override_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let report = |seed: &str| {
        let out_dir = dir.path().join(seed);
        let out = cli(&[
            "run",
            &cfg,
            "--seed-override",
            seed,
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        fs::read_to_string(out_dir.join("report.csv")).unwrap()
    };
    let (a, b, a2) = (report("5"), report("6"), report("5"));
    assert_eq!(a, a2);
    assert_ne!(a, b);
}

#[test]
fn sweep_and_ablate_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let sweep_dir = dir.path().join("sweep");
    let out = cli(&["sweep", &cfg, "--out-dir", sweep_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(sweep_dir.join("sweep.csv").is_file());
    assert!(sweep_dir.join("sweep_nmse.csv").is_file());

    let ablate_dir = dir.path().join("ablate");
    let out = cli(&["ablate", &cfg, "--out-dir", ablate_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = fs::read_to_string(ablate_dir.join("ablation.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
}

#[test]
fn gen_task_then_train_external() {
    let dir = tempfile::tempdir().unwrap();
    let task = dir.path().join("data/nce.csv");
    let out = cli(&["gen-task", "nce", task.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&task).unwrap();
    assert!(text.starts_with("input.q,target.d"), "{}", &text[..40]);

    // Delayed copies of the received signal as stand-in features.
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.starts_with(|c: char| c.is_alphabetic() || c == '#'))
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    let n = rows.len();
    let mut features = String::from("feature");
    for c in 0..n {
        features.push_str(&format!(",{c}"));
    }
    features.push('\n');
    for lag in 0..6 {
        features.push_str(&format!("b0.f0.p{lag}.t0"));
        for c in 0..n {
            features.push_str(&format!(
                ",{}",
                if c >= lag { rows[c - lag][0] } else { 0.0 }
            ));
        }
        features.push('\n');
    }
    features.push_str("bias");
    features.push_str(&",1".repeat(n));
    features.push('\n');
    let mut targets = String::from("d\n#dt=1e0\n");
    for r in &rows {
        targets.push_str(&format!("{}\n", r[1]));
    }
    let (fp, tp) = (dir.path().join("f.csv"), dir.path().join("t.csv"));
    fs::write(&fp, features).unwrap();
    fs::write(&tp, targets).unwrap();

    let out_dir = dir.path().join("ext");
    let out = cli(&[
        "train-external",
        fp.to_str().unwrap(),
        tp.to_str().unwrap(),
        "--washout",
        "10",
        "--levels=-3,-1,1,3",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("ser = "), "{stdout}");
    assert!(out_dir.join("weights.json").is_file());
}

#[test]
fn missing_config_fails_with_stage() {
    let out = cli(&["run", "/nonexistent/exp.toml"]);
    assert!(!out.status.success());
    assert!(
        stderr(&out).starts_with("error: config:"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn sweep_without_table_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bare.toml");
    fs::write(&path, "[task]\nname = \"henon\"\n").unwrap();
    let out = cli(&["sweep", path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("[sweep]"), "{}", stderr(&out));
}

#[test]
fn zero_jobs_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = cli(&["run", &cfg, "--jobs", "0"]);
    assert!(!out.status.success());
    assert!(
        stderr(&out).starts_with("error: config:"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn unknown_task_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&[
        "gen-task",
        "lorenz",
        dir.path().join("x.csv").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("config:"), "{}", stderr(&out));
}
