mod common;

use am2r_bench::output::{read_csv, CompareRecord, SweepRecord, TrainingRecord, TranscriptRecord};
use common::*;

fn stderr(o: &std::process::Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn unreadable_config_is_a_config_error() {
    let o = am2r(&["sweep", "--config", "/nonexistent/run.cfg"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error kind=config message=\""), "{}", stderr(&o));
}

#[test]
fn unknown_key_and_bad_value_are_rejected() {
    let out = tempfile::tempdir().unwrap();
    let cfg = config("lshape_sweep.cfg");
    for bad in ["nope.key=1", "env.eta_target=abc", "env.mode=sideways", "run.workers=0"] {
        let o = am2r(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.path().to_str().unwrap(), bad]);
        assert_eq!(o.status.code(), Some(2), "{bad}");
        assert!(stderr(&o).contains("error kind=config"), "{bad}: {}", stderr(&o));
    }
}

#[test]
fn usage_errors_are_machine_readable() {
    let o = am2r(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error kind=usage"));
    let o = am2r(&["sweep"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(am2r(&["--help"]).status.success());
}

#[test]
fn missing_checkpoint_has_its_own_code() {
    let out = tempfile::tempdir().unwrap();
    let o = am2r(&["deploy", "--config", config("lshape_train.cfg").to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("error kind=missing_checkpoint"));
}

#[test]
fn checkpoint_for_another_mode_is_a_mismatch() {
    let out = tempfile::tempdir().unwrap();
    am2r_ok("train", &config("lshape_train.cfg"), out.path(), QUICK_PPO);
    let o = am2r(&["deploy", "--config", config("pacman_hp_compare.cfg").to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error kind=config_mismatch"), "{}", stderr(&o));
}

#[test]
fn sweep_outputs_reparse() {
    let out = tempfile::tempdir().unwrap();
    let o = am2r_ok("sweep", &config("lshape_sweep.cfg"), out.path(), QUICK_H);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("argmin theta="));
    let header = std::fs::read_to_string(out.path().join("sweep.csv")).unwrap();
    assert!(header.starts_with("theta,rho,problem_id,final_eta,final_J,steps,done_reason\n"));
    let rows: Vec<SweepRecord> = read_csv(&out.path().join("sweep.csv")).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.done_reason == "target" && r.final_eta <= 1e-2));

    let t = out.path().join("transcript_l-shape_theta0.3.csv");
    let header = std::fs::read_to_string(&t).unwrap();
    assert!(header.starts_with("k,theta,rho,n_elems,ndofs,J_k,eta_k,b_k,s1,s2,reward,done_reason\n"));
    let rows: Vec<TranscriptRecord> = read_csv(&t).unwrap();
    let mut j = 0;
    for r in &rows {
        j += r.ndofs as u64;
        assert_eq!(r.j_k, j);
    }
    assert_eq!(rows.last().unwrap().done_reason.as_deref(), Some("target"));
}

#[test]
fn manifest_reruns_identically() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    am2r_ok("sweep", &config("lshape_sweep.cfg"), a.path(), &["--seed", "17", QUICK_H[0], QUICK_H[1]]);
    let manifest = a.path().join("manifest.cfg");
    let text = std::fs::read_to_string(&manifest).unwrap();
    assert!(text.contains("run.seed = 17") && text.contains("run.command = sweep") && text.contains("software.version = "));
    am2r_ok("sweep", &manifest, b.path(), &[]);
    assert_eq!(differing_csvs(a.path(), b.path()), Vec::<String>::new());
}

#[test]
fn train_deploy_compare_roundtrip() {
    let out = tempfile::tempdir().unwrap();
    let cfg = config("lshape_train.cfg");
    am2r_ok("train", &cfg, out.path(), QUICK_PPO);
    let log: Vec<TrainingRecord> = read_csv(&out.path().join("training.csv")).unwrap();
    assert_eq!(log.len(), 2);
    am2r_ok("deploy", &cfg, out.path(), &["env.eta_target=1e-2"]);
    for f in ["deploy.csv", "transcript_l-shape_policy.csv", "actions_l-shape_policy.csv", "mesh_l-shape_policy.txt"] {
        assert!(out.path().join(f).exists(), "{f}");
    }
    let ckpt = out.path().join("checkpoint.txt");
    let self_compare = format!("compare.baseline_checkpoint={}", ckpt.display());
    am2r_ok("compare", &cfg, out.path(), &["env.eta_target=1e-2", &self_compare]);
    let rows: Vec<CompareRecord> = read_csv(&out.path().join("compare.csv")).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].factor, 1.0);
    assert_eq!(rows[0].exponent, 0.0);
}

#[test]
fn every_subcommand_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_all(a.path(), "11");
    run_all(b.path(), "11");
    assert!(csv_files(a.path()).len() >= 8);
    assert_eq!(differing_csvs(a.path(), b.path()), Vec::<String>::new());
    assert_eq!(std::fs::read(a.path().join("checkpoint.txt")).unwrap(), std::fs::read(b.path().join("checkpoint.txt")).unwrap());
}

#[test]
fn plot_reports_missing_columns_and_renders_the_rest() {
    let out = tempfile::tempdir().unwrap();
    am2r_ok("sweep", &config("lshape_sweep.cfg"), out.path(), QUICK_H);
    std::fs::write(out.path().join("transcript_broken.csv"), "k,theta,eta_k\n0,,0.5\n").unwrap();
    let o = am2r_ok("plot", &config("lshape_sweep.cfg"), out.path(), QUICK_H);
    let err = stderr(&o);
    assert!(err.contains("warning kind=plot_skipped plot=error_vs_dofs_broken.svg"), "{err}");
    assert!(out.path().join("sweep_landscape.svg").exists());
    assert!(out.path().join("error_vs_dofs_l-shape_theta0.3.svg").exists());
    assert!(out.path().join("actions_broken.svg").exists());
}

#[test]
fn thread_count_does_not_change_results() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = config("lshape_sweep.cfg");
    am2r_ok("sweep", &cfg, a.path(), &["run.workers=1", "env.eta_target=1e-2", "sweep.theta=0.2,0.4,0.6,0.8"]);
    am2r_ok("sweep", &cfg, b.path(), &["run.workers=3", "env.eta_target=1e-2", "sweep.theta=0.2,0.4,0.6,0.8"]);
    assert_eq!(differing_csvs(a.path(), b.path()), Vec::<String>::new());
    let train = config("lshape_train.cfg");
    am2r_ok("train", &train, a.path(), &[&["run.workers=1"], QUICK_PPO].concat());
    am2r_ok("train", &train, b.path(), &[&["run.workers=3"], QUICK_PPO].concat());
    assert_eq!(std::fs::read(a.path().join("checkpoint.txt")).unwrap(), std::fs::read(b.path().join("checkpoint.txt")).unwrap());
}
