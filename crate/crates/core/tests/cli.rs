use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn silscreen(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_silscreen"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("SILSCREEN_OUT")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &[&str] = &["--pool-size", "3", "--repetitions", "2"];

#[test]
fn help_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(silscreen(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(silscreen(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(silscreen(dir.path(), &["run", "three-step"]).status.code(), Some(1));
}

#[test]
fn bad_config_is_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = silscreen(dir.path(), &["run", "one-step", "--set", "pool_sise=3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("pool_sise"));

    let o = silscreen(dir.path(), &["run", "one-step", "--set", "pool_size=lots"]);
    assert_eq!(o.status.code(), Some(1));

    let o = silscreen(dir.path(), &["run", "one-step", "--train", "missing.csv"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn divergence_is_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = silscreen(
        dir.path(),
        &["run", "constituent1", "--pool-size", "1", "--repetitions", "1", "--set", "learning_rate=1e6"],
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("diverged"));
}

#[test]
fn generate_is_reproducible_from_its_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(silscreen(&a, &["generate", "--seed", "7"]).status.success());
    let manifest = a.join("manifest.txt");
    let text = fs::read_to_string(&manifest).unwrap();
    assert!(text.contains("seed = 7"));
    assert!(text.contains("NS=94 NC=13 INFL=15 LGSIL=23 HGSIL=35"));
    assert!(silscreen(&b, &["generate", "--config", manifest.to_str().unwrap()]).status.success());
    for f in ["train.csv", "test.csv", "manifest.txt"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let header = fs::read_to_string(a.join("train.csv")).unwrap();
    let header = header.lines().next().unwrap();
    assert!(header.starts_with("patient_id,site_id,histology,I_337_395"));
    assert_eq!(header.split(',').count(), 163);
}

#[test]
fn preprocess_and_reduce_wavelengths() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    assert!(silscreen(root, &["generate"]).status.success());
    let train = root.join("train.csv");
    let train = train.to_str().unwrap();

    let o = silscreen(root, &["preprocess", "--input", train, "--mode", "nms"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let features = fs::read_to_string(root.join("features.csv")).unwrap();
    assert_eq!(features.lines().next(), Some("# preprocessing=normalized_mean_scaled"));
    assert_eq!(features.lines().count(), 182);

    let o = silscreen(root, &["reduce-wavelengths", "--input", train, "--top-k", "13"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let pairs = fs::read_to_string(root.join("pairs.txt")).unwrap();
    assert_eq!(pairs.lines().count(), 13);
    assert!(pairs.lines().all(|l| l.starts_with("I_")));
    assert!(root.join("loadings.csv").is_file() && root.join("pca_model.txt").is_file());

    let o = silscreen(root, &["reduce-wavelengths", "--input", train, "--negative", "INFL"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = silscreen(root, &["reduce-wavelengths", "--input", train, "--negative", "XX"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn run_on_csv_files_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    assert!(silscreen(root, &["generate"]).status.success());
    let (train, test) = (root.join("train.csv"), root.join("test.csv"));
    let out = root.join("run");
    let mut args = vec!["run", "one-step", "--combiner", "med"];
    args.extend_from_slice(&["--train", train.to_str().unwrap(), "--test", test.to_str().unwrap()]);
    args.extend_from_slice(SMALL);
    let o = silscreen(&out, &args);
    assert!(o.status.success(), "{}", stderr(&o));

    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("combiner,cost,sensitivity,specificity,sens_std,spec_std"));
    let combiners: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(combiners, ["single", "med"]);
    assert!(csv.contains("med,2.5,"));
    assert_eq!(fs::read_to_string(out.join("runs.csv")).unwrap().lines().count(), 5);

    // Same data from CSV and from the generator gives the same numbers.
    let synth = root.join("synth");
    let mut args = vec!["run", "one-step", "--combiner", "med"];
    args.extend_from_slice(SMALL);
    assert!(silscreen(&synth, &args).status.success());
    assert_eq!(csv, fs::read_to_string(synth.join("report.csv")).unwrap());

    let o = silscreen(root, &["report", out.to_str().unwrap()]);
    assert!(o.status.success());
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.contains("(med, N=3)"));
    assert!(table.contains("[literature]"));
}

#[test]
fn sweep_writes_tradeoff_curves() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep", "--costs", "5,1"];
    args.extend_from_slice(SMALL);
    let o = silscreen(dir.path(), &args);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let rows: Vec<String> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').take(2).collect::<Vec<_>>().join(","))
        .collect();
    assert_eq!(rows, ["ave,1", "med,1", "ave,5", "med,5"]);
    for c in ["ave", "med"] {
        let t = fs::read_to_string(dir.path().join(format!("tradeoff_{c}.csv"))).unwrap();
        assert_eq!(t.lines().next(), Some("specificity,sensitivity"));
        assert_eq!(t.lines().count(), 3);
    }
}

#[test]
fn out_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_silscreen"))
        .args(["generate"])
        .env("SILSCREEN_OUT", &target)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(target.join("train.csv").is_file());
}

#[test]
fn failed_run_leaves_no_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let o = silscreen(&out, &["run", "one-step", "--set", "nope=1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}
