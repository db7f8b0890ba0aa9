use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asymscore"))
        .args(args)
        .env_remove("ASYMSCORE_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Two forecasters over two tasks, plus one crossing forecast from a third.
fn write_rank_inputs(dir: &Path) {
    let mut f = String::from("forecaster,location,date,horizon,level,value\n");
    let levels = [0.1, 0.25, 0.5, 0.75, 0.9];
    let z = [-1.2816, -0.6745, 0.0, 0.6745, 1.2816];
    for (who, m, s) in [("alpha", 0.0, 1.0), ("beta", 1.5, 3.0)] {
        for loc in ["US", "CA"] {
            for (t, q) in levels.iter().zip(z) {
                f += &format!("{who},{loc},2024-01-06,1,{t},{}\n", m + s * q);
            }
        }
    }
    for (t, v) in levels.iter().zip([0.0, 1.0, 0.5, 2.0, 3.0]) {
        f += &format!("gamma,US,2024-01-06,1,{t},{v}\n");
    }
    fs::write(dir.join("forecasts.csv"), f).unwrap();
    fs::write(
        dir.join("targets.csv"),
        "location,date,horizon,observed\nUS,2024-01-06,1,0.2\nCA,2024-01-06,1,-0.4\n",
    )
    .unwrap();
}

#[test]
fn score_example() {
    let o = run(&["score", "--loss", "ds", "--dist", "normal:0,1", "--y", "0"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains(": 0"), "{}", stdout(&o));
}

#[test]
fn asymmetry_example() {
    let o = run(&["asymmetry", "--loss", "crps", "--family", "exponential-scale", "--sigma", "2"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("over_penalized"), "{}", stdout(&o));
}

#[test]
fn hedge_example() {
    let o = run(&["hedge", "--loss", "log", "--expfam", "exponential-scale", "--shift", "two-point:2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("η*=0.8"), "{}", stdout(&o));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["score", "--loss", "nope", "--dist", "normal:0,1", "--y", "0"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["asymmetry", "--loss", "crps", "--family", "exponential-scale", "--sigma", "0.5"]).status.code(), Some(2));
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.csv");
    let o = run(&["rank", "--forecasts", missing.to_str().unwrap(), "--targets", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "forecaster,level\nx,0.5\n").unwrap();
    let o = run(&["rank", "--forecasts", bad.to_str().unwrap(), "--targets", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn rank_writes_table_and_rejected_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    write_rank_inputs(dir.path());
    let out = dir.path().join("out");
    let o = run(&[
        "rank",
        "--forecasts",
        dir.path().join("forecasts.csv").to_str().unwrap(),
        "--targets",
        dir.path().join("targets.csv").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--json",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ranking = fs::read_to_string(out.join("ranking.csv")).unwrap();
    assert!(ranking.contains("alpha") && ranking.contains("beta"), "{ranking}");
    assert!(!ranking.contains("gamma"));
    let rejected = fs::read_to_string(out.join("rejected.csv")).unwrap();
    assert!(rejected.lines().any(|l| l.contains("gamma") && l.contains("crossing")), "{rejected}");
    assert!(out.join("ranking.json").exists());
}

#[test]
fn same_seed_gives_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (tag, seed) in [("a", "7"), ("b", "7"), ("c", "8")] {
        let out = dir.path().join(tag);
        let o = run(&[
            "dispersion", "--synthetic", "5", "--draws", "100", "--seed", seed, "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(fs::read(out.join("dispersion.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_ne!(outputs[0], outputs[2]);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# defaults\nloss=ds\ndist=normal:0,1\ny=0\n").unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "score"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("score ds"), "{}", stdout(&o));
    let o = run(&["--config", cfg.to_str().unwrap(), "score", "--loss", "crps"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("score crps"), "{}", stdout(&o));
}

#[test]
fn nothing_written_without_out() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_asymscore"))
        .args(["asymmetry", "--loss", "crps", "--family", "exponential-scale", "--sigma", "2"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}
