use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const TINY: &str = r#"
[run]
task = "NP"
seed = 3

[data]
window = 30
step = 15

[optimizer]
preset = "desk"
epochs = 2
batch_size = 16

[eval]
timing_repeats = 1
benchmark_windows = [30]

[synth]
subjects = 3
trials_per_subject = 5
length_min = 70
length_max = 80
"#;

fn skillnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skillnet")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes the tiny config and synthesizes its corpus under `root/data`.
fn setup(root: &Path) -> (PathBuf, PathBuf) {
    let config = root.join("tiny.toml");
    fs::write(&config, TINY).unwrap();
    let data = root.join("data");
    let out = skillnet(&["synth", "--config", path(&config), "--out", path(&data)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    (config, data)
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    entries.sort();
    entries
}

#[test]
fn synth_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("tiny.toml");
    fs::write(&config, TINY).unwrap();
    for name in ["a", "b"] {
        let out = skillnet(&["synth", "--config", path(&config), "--out", path(&dir.path().join(name))]);
        assert!(out.status.success());
    }
    let a = files(&dir.path().join("a/kinematics"));
    assert_eq!(a.len(), 45);
    assert_eq!(a, files(&dir.path().join("b/kinematics")));
    assert_eq!(files(&dir.path().join("a")), files(&dir.path().join("b")));
}

#[test]
fn single_subject_corpus_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = skillnet(&["synth", "--subjects", "1", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("subjects"));
}

#[test]
fn missing_manifest_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = skillnet(&["evaluate", "--data", path(dir.path()), "--out", path(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("manifest"));
}

#[test]
fn bad_flag_value_is_rejected() {
    let out = skillnet(&["show-config", "--task", "xx"]);
    assert_eq!(out.status.code(), Some(2));
    let out = skillnet(&["show-config", "--window", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flag_overrides_file_overrides_default() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("tiny.toml");
    fs::write(&config, TINY).unwrap();
    let out = skillnet(&["show-config", "--config", path(&config), "--seed", "42", "--labeling", "grs"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("seed = 42"), "{text}");
    assert!(text.contains("labeling = \"grs\""));
    assert!(text.contains("task = \"NP\""));
    assert!(text.contains("window = 30"));
    assert!(text.contains("fc_dropout = 0.5"));
    // the emitted text reads back as the same configuration
    let again = dir.path().join("again.toml");
    fs::write(&again, &text).unwrap();
    let out = skillnet(&["show-config", "--config", path(&again)]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), text);
}

#[test]
fn preprocess_counts_follow_the_window_formula() {
    let dir = tempfile::tempdir().unwrap();
    let (config, data) = setup(dir.path());
    let out_dir = dir.path().join("pre");
    let out = skillnet(&["preprocess", "--config", path(&config), "--data", path(&data), "--out", path(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let manifest = fs::read_to_string(data.join("manifest.csv")).unwrap();
    for task in ["Suturing", "Needle_Passing", "Knot_Tying"] {
        let code = match task {
            "Suturing" => "SU",
            "Needle_Passing" => "NP",
            _ => "KT",
        };
        let mut expected = 0;
        for line in manifest.lines().filter(|l| l.starts_with(code)) {
            let kin = line.split(',').nth(3).unwrap();
            let frames = fs::read_to_string(data.join(kin)).unwrap().lines().count();
            expected += 2 * ((frames - 30) / 15 + 1);
        }
        let row = stdout.lines().find(|l| l.starts_with(task)).unwrap();
        assert_eq!(row.split_whitespace().last().unwrap(), expected.to_string(), "{stdout}");
    }
    assert!(out_dir.join("crops_np_w30_l15_self.bin").is_file());
}

#[test]
fn evaluate_and_train_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (config, data) = setup(dir.path());
    let mut runs = Vec::new();
    for name in ["r1", "r2"] {
        let out_dir = dir.path().join(name);
        let common = ["--config", path(&config), "--data", path(&data), "--out", path(&out_dir)];
        let out = skillnet(&[&["evaluate", "--scheme", "holdout"], &common[..]].concat());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stdout).contains("aggregate accuracy"));
        let out = skillnet(&[&["train"], &common[..]].concat());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let mut f = files(&out_dir);
        f.retain(|(n, _)| !n.contains("timing"));
        runs.push(f);
    }
    let names: Vec<&str> = runs[0].iter().map(|(n, _)| n.as_str()).collect();
    for expected in [
        "np_holdout_w30_self_seed3.json",
        "np_holdout_w30_self_seed3_fold1.ckpt",
        "np_holdout_w30_self_seed3_fold1_curve.csv",
        "np_holdout_w30_self_seed3_fold1_confusion.csv",
        "np_holdout_w30_self_seed3_aggregate_confusion.csv",
        "np_train_w30_self_seed3.ckpt",
    ] {
        assert!(names.contains(&expected), "{names:?}");
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn benchmark_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let (config, data) = setup(dir.path());
    let out_dir = dir.path().join("bench");
    let out = skillnet(&["benchmark", "--config", path(&config), "--data", path(&data), "--out", path(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("benchmark_np_self_seed3.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3, "{csv}");
    assert!(csv.lines().nth(1).unwrap().starts_with("NP,loso,30,"));
    assert!(csv.lines().nth(2).unwrap().starts_with("NP,holdout,30,"));
    assert!(out_dir.join("benchmark_np_self_seed3_timing.csv").is_file());
    assert!(String::from_utf8_lossy(&out.stdout).contains("time (ms)"));
}

#[test]
fn divergence_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let (config, data) = setup(dir.path());
    let text = fs::read_to_string(&config).unwrap().replace("epochs = 2", "epochs = 3\nlearning_rate = 1e300");
    fs::write(&config, text).unwrap();
    let out_dir = dir.path().join("o");
    let out = skillnet(&["evaluate", "--scheme", "holdout", "--config", path(&config), "--data", path(&data), "--out", path(&out_dir)]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("np_holdout_w30_self_seed3.json").is_file());
}
