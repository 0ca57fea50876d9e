#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

pub fn config(name: &str) -> PathBuf {
    configs_dir().join(name)
}

/// Runs the `am2r` binary.
pub fn am2r(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_am2r")).args(args).output().expect("spawn am2r")
}

/// Runs `am2r <command> --config <config> --out <out> <extra..>` and panics on failure.
pub fn am2r_ok(command: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![command, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = am2r(&args);
    assert!(o.status.success(), "am2r {args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    o
}

/// CSV files in `dir`, sorted by name.
pub fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    v.sort();
    v
}

/// Names of the CSVs that differ byte-for-byte between two run directories,
/// or that exist in only one of them.
pub fn differing_csvs(a: &Path, b: &Path) -> Vec<String> {
    let names = |d: &Path| csv_files(d).into_iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect::<Vec<_>>();
    let (na, nb) = (names(a), names(b));
    let mut diff: Vec<String> = na.iter().filter(|n| !nb.contains(n)).cloned().collect();
    diff.extend(nb.iter().filter(|n| !na.contains(n)).cloned());
    for n in na.iter().filter(|n| nb.contains(n)) {
        if std::fs::read(a.join(n)).unwrap() != std::fs::read(b.join(n)).unwrap() {
            diff.push(n.clone());
        }
    }
    diff
}

/// Small h-efficiency settings that finish in well under a second per run.
pub const QUICK_H: &[&str] = &["env.eta_target=1e-2", "sweep.theta=0.3,0.6"];

/// Tiny PPO run on top of [`QUICK_H`].
pub const QUICK_PPO: &[&str] =
    &["env.eta_target=1e-2", "ppo.batches=2", "ppo.workers=2", "ppo.fragment_len=10", "ppo.minibatch=10", "ppo.epochs=2"];

/// Runs sweep, train, deploy, compare and plot into `dir`.
pub fn run_all(dir: &Path, seed: &str) {
    let sweep = config("lshape_sweep.cfg");
    let train = config("lshape_train.cfg");
    let with_seed = |v: &[&'static str]| {
        let mut a = vec!["--seed", seed];
        a.extend_from_slice(v);
        a
    };
    am2r_ok("sweep", &sweep, dir, &with_seed(QUICK_H));
    am2r_ok("train", &train, dir, &with_seed(QUICK_PPO));
    am2r_ok("deploy", &train, dir, &with_seed(&["env.eta_target=1e-2"]));
    am2r_ok("compare", &train, dir, &with_seed(&["env.eta_target=1e-2", "compare.baseline_theta=0.5"]));
    am2r_ok("plot", &sweep, dir, &with_seed(QUICK_H));
}
