use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sfw(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfw")).current_dir(dir).args(args).output().expect("spawn sfw")
}

fn dumped_config(dir: &Path) -> String {
    let out = sfw(dir, &["--dump-config"]);
    assert!(out.status.success());
    String::from_utf8(out.stdout).unwrap()
}

/// Default configuration shrunk to two frames of five molecules.
fn small_config(dir: &Path) -> std::path::PathBuf {
    let text = dumped_config(dir).replace("n_total = 1000", "n_total = 10");
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn dump_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let text = dumped_config(dir.path());
    fs::write(dir.path().join("c.toml"), &text).unwrap();
    let again = sfw(dir.path(), &["--config", "c.toml", "--dump-config"]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
    let seeded = sfw(dir.path(), &["--config", "c.toml", "--seed", "42", "--dump-config"]);
    assert!(String::from_utf8(seeded.stdout).unwrap().starts_with("seed = 42\n"));
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = dumped_config(dir.path());
    fs::write(dir.path().join("missing.toml"), text.replace("variance = 0.0001\n", "")).unwrap();
    let out = sfw(dir.path(), &["--config", "missing.toml", "simulate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("variance"));

    fs::write(dir.path().join("extra.toml"), text.replace("[noise]\n", "[noise]\nphotons = 3\n")).unwrap();
    assert_eq!(sfw(dir.path(), &["--config", "extra.toml", "simulate"]).status.code(), Some(2));
    assert_eq!(sfw(dir.path(), &[]).status.code(), Some(2));
}

#[test]
fn simulate_reconstruct_evaluate_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let cfg = cfg.to_str().unwrap();
    assert!(sfw(dir.path(), &["--config", cfg, "simulate"]).status.success());
    let out = dir.path().join("out");
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["frames"], 2);
    assert_eq!(manifest["observation_length"], 2 * 64 * 64);
    assert!(out.join("frames/frame_00000.bin").exists() && out.join("frames/frame_00001.bin").exists());

    let rec = sfw(dir.path(), &["--config", cfg, "reconstruct"]);
    assert!(rec.status.success(), "{}", String::from_utf8_lossy(&rec.stderr));
    let report = json(&out.join("reconstruct_report.json"));
    assert_eq!(report["frames"], 2);
    let trace = json(&out.join("traces/frame_00001.json"));
    assert_eq!(trace["termination"], "certificate-bounded");
    assert!(trace["final_certificate_max"].as_f64().unwrap() <= 1.0 + 1e-9);

    assert!(sfw(dir.path(), &["--config", cfg, "evaluate"]).status.success());
    let scores = json(&out.join("scores.json"));
    assert_eq!(scores["frames"].as_array().unwrap().len(), 2);
    let j = scores["pooled"]["jaccard"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&j));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().starts_with("astigmatism,2,5,2,"));

    // ground truth scored against itself
    let self_score = sfw(
        dir.path(),
        &["--config", cfg, "evaluate", "--estimates", "out/ground_truth.csv", "--ground-truth", "out/ground_truth.csv"],
    );
    assert!(self_score.status.success());
    let scores = json(&out.join("scores.json"));
    assert_eq!(scores["pooled"]["jaccard"].as_f64().unwrap(), 1.0);
    assert_eq!(scores["pooled"]["rmse"][0].as_f64().unwrap(), 0.0);
}

#[test]
fn mismatched_frames_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    assert!(sfw(dir.path(), &["--config", cfg.to_str().unwrap(), "simulate"]).status.success());
    let one_plane = fs::read_to_string(&cfg).unwrap().replace("planes = 2", "planes = 1");
    fs::write(dir.path().join("one.toml"), one_plane).unwrap();
    let out = sfw(dir.path(), &["--config", "one.toml", "reconstruct"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn corrupt_frame_file_exits_with_4_after_writing_the_rest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let cfg = cfg.to_str().unwrap();
    assert!(sfw(dir.path(), &["--config", cfg, "simulate"]).status.success());
    let bad = dir.path().join("out/frames/frame_00001.bin");
    let bytes = fs::read(&bad).unwrap();
    fs::write(&bad, &bytes[..bytes.len() / 2]).unwrap();
    let out = sfw(dir.path(), &["--config", cfg, "reconstruct"]);
    assert_eq!(out.status.code(), Some(4));
    let report = json(&dir.path().join("out/reconstruct_report.json"));
    assert_eq!(report["frames"], 1);
    assert_eq!(report["failures"].as_array().unwrap().len(), 1);
    let loc = fs::read_to_string(dir.path().join("out/localizations.csv")).unwrap();
    assert!(loc.lines().skip(1).all(|l| l.starts_with("0,")));
}

#[test]
fn certify_laplace_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = sfw(dir.path(), &["certify", "laplace", "--order", "3", "--xc", "2", "--samples", "120"]);
    assert!(out.status.success());
    let report = json(&dir.path().join("out/certificate.json"));
    assert!(report["continuous_sup_error"].as_f64().unwrap() < 1e-12);
    assert!(report["continuous_nondegeneracy"]["nondegenerate"].as_bool().unwrap());
    assert!(report["sampled_sup_error"].as_f64().unwrap() > 0.0);
    let csv = fs::read_to_string(dir.path().join("out/certificate.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "x,closed_form,continuous,sampled");
    assert_eq!(csv.lines().count(), 402);
}

#[test]
fn certify_eta_v_on_the_demo_measure() {
    let dir = tempfile::tempdir().unwrap();
    let text = dumped_config(dir.path());
    let start = text.find("[kernel]").unwrap();
    let end = text.find("[solver]").unwrap();
    let gaussian = format!("{}[kernel]\nmodel = \"gaussian1d\"\nsigma = 0.05\nsamples = 100\n\n{}", &text[..start], &text[end..]);
    fs::write(dir.path().join("g.toml"), gaussian).unwrap();
    let out = sfw(dir.path(), &["--config", "g.toml", "certify", "eta-v"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("out/eta_v.json"));
    assert!(report["interpolation_error"].as_f64().unwrap() < 1e-8);
    assert!(report["nondegeneracy"]["nondegenerate"].as_bool().unwrap());
}

#[test]
fn demo1d_runs_three_iterations() {
    let dir = tempfile::tempdir().unwrap();
    let out = sfw(dir.path(), &["demo1d"]);
    assert!(out.status.success());
    let trace = json(&dir.path().join("out/demo1d/trace.json"));
    assert_eq!(trace["trace"]["outer_iterations"], 3);
    assert_eq!(trace["trace"]["termination"], "certificate-bounded");
    let cert = fs::read_to_string(dir.path().join("out/demo1d/certificates.csv")).unwrap();
    assert_eq!(cert.lines().next().unwrap(), "x,eta_lambda_0,eta_lambda_1,eta_lambda_2,eta_lambda_3,eta_v");
}
