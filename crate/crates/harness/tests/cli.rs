use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bmlab::config::ExperimentConfig;
use bmlab::experiment::run_experiment;
use bmlab::report::{metrics_csv, parse_metrics_csv, METRICS_HEADER};

fn bmlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bmlab"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn missing_config_fails_with_message() {
    let out = bmlab().args(["run", "--config", "missing.cfg"]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("missing.cfg"), "{err}");
}

#[test]
fn bad_config_key_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "dataset = bas:3\nchian_count = 5\n").unwrap();
    let out = bmlab().arg("train").arg("--config").arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("chian_count"));
}

#[test]
fn train_then_run_matches_in_process() {
    let dir = tempfile::tempdir().unwrap();
    let models = dir.path().join("models");
    let out = dir.path().join("out");
    ok(bmlab()
        .arg("train")
        .arg("--config")
        .arg(fixture("desk_bas3.cfg"))
        .arg("--out-dir")
        .arg(&models)
        .output()
        .unwrap());
    assert!(models.join("model_r0.ckpt").exists() && models.join("model_r1.ckpt").exists());
    ok(bmlab()
        .arg("run")
        .arg("--config")
        .arg(fixture("desk_bas3.cfg"))
        .arg("--checkpoint-dir")
        .arg(&models)
        .arg("--out-dir")
        .arg(&out)
        .output()
        .unwrap());

    let cfg = ExperimentConfig::load(&fixture("desk_bas3.cfg")).unwrap();
    let series = run_experiment(&cfg).unwrap();
    assert_eq!(series.len(), 3);
    for s in &series {
        let written = std::fs::read_to_string(out.join(format!("metrics_{}.csv", s.condition))).unwrap();
        assert_eq!(written, metrics_csv(s), "condition {}", s.condition);
        assert_eq!(parse_metrics_csv(&written).unwrap(), s.replicates);
        assert!(out.join(format!("aggregate_{}.csv", s.condition)).exists());
    }
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str, sub: &str| {
        let out = dir.path().join(sub);
        ok(bmlab()
            .arg("run")
            .arg("--config")
            .arg(fixture("desk_bas3.cfg"))
            .args(["--seed", seed, "--backend", "exact", "--temperature", "4"])
            .arg("--out-dir")
            .arg(&out)
            .output()
            .unwrap());
        std::fs::read_to_string(out.join("metrics_annealer_T4.csv")).unwrap()
    };
    let a = run("3", "a");
    assert_eq!(a, run("3", "b"));
    assert_ne!(a, run("4", "c"));
}

#[test]
fn eval_scores_fixture_sample_file() {
    let stdout = ok(bmlab()
        .args(["eval", "--dataset", "bas:2", "--samples"])
        .arg(fixture("dwave_bas2.txt"))
        .output()
        .unwrap());
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some(METRICS_HEADER));
    let fields: Vec<f64> = lines.next().unwrap().split(',').map(|f| f.parse().unwrap()).collect();
    // 2x2 positives: 0000 1111 1100 0011 1010 0101. Samples hold 5 positives
    // covering 4 distinct members; negatives 1000, 0110, 1110 sit at 1, 2, 1.
    let counts = [1.0, 1.0, 2.0, 1.0, 0.0, 0.0];
    let l2 = counts.iter().map(|c: &f64| (c / 5.0 - 1.0 / 6.0).powi(2)).sum::<f64>().sqrt();
    let expected = [0.0, 0.0, 5.0 / 8.0, 4.0 / 6.0, 5.0 / 6.0, l2, 4.0 / 8.0, 5.0];
    assert_eq!(fields.len(), expected.len());
    for (got, want) in fields.iter().zip(expected) {
        assert!((got - want).abs() < 1e-12, "{fields:?} vs {expected:?}");
    }
}

#[test]
fn eval_rejects_width_mismatch() {
    let out = bmlab()
        .args(["eval", "--dataset", "bas:3", "--samples"])
        .arg(fixture("dwave_bas2.txt"))
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn init_samples_then_eval_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let models = dir.path().join("models");
    ok(bmlab()
        .arg("train")
        .arg("--config")
        .arg(fixture("desk_bas3.cfg"))
        .arg("--out-dir")
        .arg(&models)
        .output()
        .unwrap());
    let samples = dir.path().join("samples.txt");
    ok(bmlab()
        .arg("init-samples")
        .arg("--checkpoint")
        .arg(models.join("model_r0.ckpt"))
        .args(["--temperature", "2", "--chains", "300", "--sweeps", "50", "--seed", "9", "--out"])
        .arg(&samples)
        .output()
        .unwrap());
    let text = std::fs::read_to_string(&samples).unwrap();
    assert!(text.contains("# temperature=2"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 300);
    let stdout = ok(bmlab()
        .args(["eval", "--dataset", "bas:3", "--samples"])
        .arg(&samples)
        .output()
        .unwrap());
    assert!(stdout.lines().nth(1).unwrap().starts_with("0,0,"));

    // plot the run outputs
    let out = dir.path().join("out");
    ok(bmlab()
        .arg("run")
        .arg("--config")
        .arg(fixture("desk_bas3.cfg"))
        .arg("--checkpoint-dir")
        .arg(&models)
        .arg("--out-dir")
        .arg(&out)
        .output()
        .unwrap());
    let plots = dir.path().join("plots");
    ok(bmlab().arg("plot").arg("--input").arg(&out).arg("--out-dir").arg(&plots).output().unwrap());
    let svg = std::fs::read_to_string(plots.join("precision.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("annealer_T2"));

    let empty = dir.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    assert!(!bmlab().arg("plot").arg("--input").arg(&empty).output().unwrap().status.success());
}

#[test]
fn bench_prints_report() {
    let stdout = ok(bmlab()
        .args(["bench", "--visible", "8", "--hidden", "8", "--chains", "200", "--reps", "5"])
        .output()
        .unwrap());
    assert!(stdout.contains("8 visible x 8 hidden"));
    assert!(stdout.contains("repetitions: 5"));
    assert!(stdout.contains("annealer budget"));
}
