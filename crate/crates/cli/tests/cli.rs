use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn haegan(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_haegan"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

/// The single run directory created under `out`.
fn run_dir(out: &Path) -> PathBuf {
    let dirs: Vec<PathBuf> = fs::read_dir(out).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    dirs.into_iter().next().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn selftest_run_directory_has_config_schema_and_marker() {
    let out = tempfile::tempdir().unwrap();
    let o = haegan(out.path(), &["manifold-selftest", "--scale", "ci", "--seed", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dir = run_dir(out.path());
    let name = dir.file_name().unwrap().to_string_lossy().into_owned();
    assert!(name.starts_with("manifold-selftest-") && name.ends_with("-s4"), "{name}");
    let stdout = String::from_utf8_lossy(&o.stdout).into_owned();
    assert_eq!(stdout.lines().last(), Some(dir.display().to_string().as_str()));
    assert!(stdout.contains("hyperboloid_closure"));

    let config = fs::read_to_string(dir.join("config.toml")).unwrap();
    assert!(config.contains("seed = 4"), "{config}");
    let schema = fs::read_to_string(dir.join("SCHEMA")).unwrap();
    assert!(schema.starts_with("schema_version 1"));
    assert!(schema.contains("properties.csv:"));
    assert!(dir.join("COMPLETE").exists());
    let table = fs::read_to_string(dir.join("properties.csv")).unwrap();
    assert!(table.lines().next().unwrap().starts_with("property,"));
    assert!(table.contains("hyperboloid_closure"));
}

#[test]
fn injected_fault_fails_with_exit_one_and_no_marker() {
    let out = tempfile::tempdir().unwrap();
    let o = haegan(out.path(), &["manifold-selftest", "--scale", "ci", "--set", "fault_time_clamp=1.5"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let dir = run_dir(out.path());
    assert!(dir.join("SCHEMA").exists());
    assert!(dir.join("properties.csv").exists());
    assert!(!dir.join("COMPLETE").exists());
}

#[test]
fn configuration_mistakes_exit_with_two() {
    let out = tempfile::tempdir().unwrap();
    for args in [
        &["concat-distance", "--set", "bogus=1"][..],
        &["concat-distance", "--set", "curvature=1.0"],
        &["concat-distance", "--set", "dims=oops"],
        &["concat-distance", "--set", "no-equals-sign"],
        &["tree-gen", "--set", "ae.unknown=3"],
    ] {
        let o = haegan(out.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).contains("configuration error"), "{args:?}");
    }
    let missing = out.path().join("missing.toml");
    let o = haegan(out.path(), &["concat-distance", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn training_blow_up_exits_with_three() {
    let out = tempfile::tempdir().unwrap();
    let o = haegan(
        out.path(),
        &[
            "toy2d",
            "--set",
            "gan.lr=1e8",
            "--set",
            "gan.epochs=1",
            "--set",
            "train_points=256",
            "--set",
            "eval_points=32",
            "--set",
            "gan.hidden_dim=8",
            "--set",
            "gan.latent_dim=4",
        ],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("numerical abort"));
    assert!(!run_dir(out.path()).join("COMPLETE").exists());
}

#[test]
fn file_then_flags_then_seed() {
    let out = tempfile::tempdir().unwrap();
    let file = out.path().join("distance.toml");
    fs::write(&file, "dims = [4]\ntrials = 50\nseed = 1\ncurvature = -0.5\n").unwrap();
    let runs = out.path().join("runs");
    let o = Command::new(env!("CARGO_BIN_EXE_haegan"))
        .args(["concat-distance", "--scale", "ci", "--config", file.to_str().unwrap(), "--set", "trials=30", "--seed", "9"])
        .arg("--out")
        .arg(&runs)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dir = run_dir(&runs);
    let config: toml::Table = fs::read_to_string(dir.join("config.toml")).unwrap().parse().unwrap();
    assert_eq!(config["trials"].as_integer(), Some(30));
    assert_eq!(config["seed"].as_integer(), Some(9));
    assert_eq!(config["curvature"].as_float(), Some(-0.5));
    let rows = fs::read_to_string(dir.join("deviations-wrapped_normal-n4.csv")).unwrap().lines().count();
    assert_eq!(rows, 31);
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn reruns_are_byte_identical() {
    let commands: [&[&str]; 3] = [
        &["concat-distance", "--scale", "ci", "--set", "trials=200"],
        &["concat-grad-surface", "--scale", "ci", "--set", "points=11", "--set", "random_inputs=500"],
        &["concat-depth", "--scale", "ci", "--set", "blocks=[4]", "--set", "steps=5", "--set", "dim=8"],
    ];
    for args in commands {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let (oa, ob) = (haegan(a.path(), args), haegan(b.path(), args));
        assert_eq!(oa.status.code(), Some(0), "{args:?}: {}", stderr(&oa));
        assert_eq!(ob.status.code(), Some(0), "{args:?}: {}", stderr(&ob));
        let (da, db) = (run_dir(a.path()), run_dir(b.path()));
        assert_eq!(da.file_name(), db.file_name());
        assert_eq!(files(&da), files(&db), "{args:?}");
    }
}

#[test]
fn different_settings_get_different_directories() {
    let out = tempfile::tempdir().unwrap();
    for trials in ["10", "20"] {
        let o = haegan(out.path(), &["concat-distance", "--scale", "ci", "--set", &format!("trials={trials}")]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(fs::read_dir(out.path()).unwrap().count(), 2);
}
