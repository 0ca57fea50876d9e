//! The five subcommands. Each takes resolved settings and an output
//! directory, writes its artifacts plus `manifest.cfg`, and returns the
//! in-memory tables it wrote.

use std::path::{Path, PathBuf};

use am2r_core::env::{improvement_metrics, run_fixed, AmrEnv, EpisodeState, Mode, GUARD_PENALTY};
use am2r_core::policy::{deploy as deploy_policy, BatchLog, Checkpoint, Trainer};
use am2r_core::{Policy, Problem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::Settings;
use crate::error::{BenchError, Result};
use crate::output::*;
use crate::plot;

/// Seed of independent stream `i` derived from the run seed.
pub fn stream_seed(seed: u64, i: usize) -> u64 {
    seed ^ (i as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

fn pool(settings: &Settings) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(settings.workers)
        .build()
        .map_err(|e| BenchError::Config(format!("cannot start {} workers: {e}", settings.workers)))
}

/// Final cost of an episode: `log2 J_K` (efficiency) or `log2 eta_K`
/// (accuracy), plus the guard penalty magnitude if a guard ended it.
pub fn episode_cost(state: &EpisodeState<f64>) -> f64 {
    let base = match state.config.mode {
        Mode::HEfficiency { .. } => state.cost(),
        _ => state.eta.max(f64::MIN_POSITIVE).log2(),
    };
    let guard = state.done.is_some_and(|d| d.is_guard());
    if guard {
        base - GUARD_PENALTY
    } else {
        base
    }
}

/// One grid cell of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub theta: f64,
    pub rho: Option<f64>,
    pub problem_id: String,
    /// `None` if the episode failed.
    pub cost: Option<f64>,
    pub record: SweepRecord,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutcome {
    pub cells: Vec<SweepCell>,
    pub summary: Vec<SweepSummaryRecord>,
    pub letter_values: Vec<LetterValueRecord>,
    /// Index into `summary` of the lowest mean cost.
    pub argmin: Option<usize>,
}

impl SweepOutcome {
    pub fn best(&self) -> Option<&SweepSummaryRecord> {
        self.argmin.map(|i| &self.summary[i])
    }
}

fn grid(settings: &Settings) -> Vec<(f64, Option<f64>)> {
    let mut g = Vec::new();
    for &t in &settings.sweep_theta {
        if settings.is_hp() {
            g.extend(settings.sweep_rho.iter().map(|&r| (t, Some(r))));
        } else {
            g.push((t, None));
        }
    }
    g
}

fn transcript_label(id: &str, theta: f64, rho: Option<f64>) -> String {
    match rho {
        Some(r) => format!("{id}_theta{theta}_rho{r}"),
        None => format!("{id}_theta{theta}"),
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn summarize(grid: &[(f64, Option<f64>)], cells: &[SweepCell], n_problems: usize) -> SweepOutcome {
    let mut summary = Vec::new();
    let mut letter_values = Vec::new();
    for (g, &(theta, rho)) in grid.iter().enumerate() {
        let group = &cells[g * n_problems..(g + 1) * n_problems];
        let mut costs: Vec<f64> = group.iter().filter_map(|c| c.cost).collect();
        costs.sort_by(f64::total_cmp);
        let failures = group.len() - costs.len();
        let (mean, median, min, max) = if costs.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
        } else {
            (costs.iter().sum::<f64>() / costs.len() as f64, quantile(&costs, 0.5), costs[0], costs[costs.len() - 1])
        };
        summary.push(SweepSummaryRecord { theta, rho, cells: group.len(), failures, mean_cost: mean, median_cost: median, min_cost: min, max_cost: max });
        let mut depth = 2;
        while !costs.is_empty() && (1usize << depth) <= costs.len().max(4) {
            let q = 0.5f64.powi(depth as i32);
            letter_values.push(LetterValueRecord { theta, rho, depth, lower: quantile(&costs, q), upper: quantile(&costs, 1.0 - q) });
            depth += 1;
        }
    }
    let argmin = summary
        .iter()
        .enumerate()
        .filter(|(_, s)| s.mean_cost.is_finite())
        .min_by(|a, b| a.1.mean_cost.total_cmp(&b.1.mean_cost))
        .map(|(i, _)| i);
    SweepOutcome { cells: cells.to_vec(), summary, letter_values, argmin }
}

fn run_cell(settings: &Settings, spec: &Problem, theta: f64, rho: Option<f64>, seed: u64) -> Result<EpisodeState<f64>> {
    let cfg = settings.episode_config(spec)?;
    Ok(run_fixed(&cfg, theta, rho, &mut ChaCha8Rng::seed_from_u64(seed))?)
}

/// Runs every `(theta, rho)` cell on every evaluation problem.
pub fn compute_sweep(settings: &Settings, transcripts: Option<&Path>) -> Result<SweepOutcome> {
    let problems = settings.problems()?;
    let grid = grid(settings);
    let jobs: Vec<(usize, f64, Option<f64>, usize)> = grid
        .iter()
        .flat_map(|&(t, r)| (0..problems.len()).map(move |p| (t, r, p)))
        .enumerate()
        .map(|(i, (t, r, p))| (i, t, r, p))
        .collect();
    let results: Vec<(SweepCell, Option<Vec<TranscriptRecord>>)> = pool(settings)?.install(|| {
        jobs.par_iter()
            .map(|&(i, theta, rho, p)| {
                let id = problem_id(&problems[p]);
                match run_cell(settings, &problems[p], theta, rho, stream_seed(settings.seed, i)) {
                    Ok(state) => {
                        let record = SweepRecord {
                            theta,
                            rho,
                            problem_id: id.clone(),
                            final_eta: state.eta,
                            final_j: state.cumulative_dofs,
                            steps: state.k,
                            done_reason: state.done.map_or("none", |d| d.as_str()).to_string(),
                        };
                        let t = transcripts.map(|_| transcript_records(&state));
                        (SweepCell { theta, rho, problem_id: id, cost: Some(episode_cost(&state)), record }, t)
                    }
                    Err(e) => {
                        eprintln!("warning kind=cell_failed theta={theta} rho={rho:?} problem={id} message=\"{e}\"");
                        let record = SweepRecord {
                            theta,
                            rho,
                            problem_id: id.clone(),
                            final_eta: f64::NAN,
                            final_j: 0,
                            steps: 0,
                            done_reason: "error".into(),
                        };
                        (SweepCell { theta, rho, problem_id: id, cost: None, record }, None)
                    }
                }
            })
            .collect()
    });
    let mut cells = Vec::with_capacity(results.len());
    for (cell, transcript) in results {
        if let (Some(dir), Some(rows)) = (transcripts, transcript) {
            write_csv(&dir.join(format!("transcript_{}.csv", transcript_label(&cell.problem_id, cell.theta, cell.rho))), &rows)?;
        }
        cells.push(cell);
    }
    Ok(summarize(&grid, &cells, problems.len()))
}

pub fn sweep(settings: &Settings, out: &Path) -> Result<SweepOutcome> {
    std::fs::create_dir_all(out)?;
    write_manifest(out, "sweep", settings)?;
    let outcome = compute_sweep(settings, settings.sweep_transcripts.then_some(out))?;
    let records: Vec<SweepRecord> = outcome.cells.iter().map(|c| c.record.clone()).collect();
    write_csv(&out.join("sweep.csv"), &records)?;
    write_csv(&out.join("sweep_summary.csv"), &outcome.summary)?;
    write_csv(&out.join("sweep_letter_values.csv"), &outcome.letter_values)?;
    if let Some(best) = outcome.best() {
        println!(
            "argmin theta={} rho={} mean_cost={}",
            best.theta,
            best.rho.map_or(String::new(), |r| r.to_string()),
            best.mean_cost
        );
    }
    Ok(outcome)
}

fn training_record(b: &BatchLog) -> TrainingRecord {
    TrainingRecord {
        batch: b.batch,
        transitions: b.transitions,
        episodes: b.episodes,
        truncated: b.truncated,
        mean_return: b.mean_return,
        mean_cost: b.mean_cost,
        mean_length: b.mean_length,
        surrogate: b.surrogate,
        value_loss: b.value_loss,
        clip_fraction: b.clip_fraction,
    }
}

/// Trains a policy, streaming `training.csv` and writing `checkpoint.txt`.
pub fn train(settings: &Settings, out: &Path) -> Result<(Policy, Vec<TrainingRecord>)> {
    std::fs::create_dir_all(out)?;
    write_manifest(out, "train", settings)?;
    let env_config = settings.training_config()?;
    let ppo = settings.ppo.clone();
    let mut log = Vec::with_capacity(ppo.batches);
    let mut writer = csv::Writer::from_path(out.join("training.csv"))?;
    let params = pool(settings)?.install(|| -> Result<Policy> {
        let mut trainer = Trainer::new(ppo.clone(), |_| AmrEnv::new(env_config))?;
        for _ in 0..ppo.batches {
            let b = trainer.train_batch()?;
            if b.guard_dominated() {
                eprintln!("warning kind=guard_dominated batch={} episodes={}", b.batch, b.episodes);
            }
            let rec = training_record(&b);
            writer.serialize(&rec)?;
            writer.flush()?;
            log.push(rec);
        }
        Ok(trainer.params)
    })?;
    let mut checkpoint = Checkpoint::new(params.clone(), ppo, log.len());
    checkpoint.meta = settings.environment_tags();
    checkpoint.meta.insert("problem".into(), settings.kind.as_str().into());
    checkpoint.save(out.join("checkpoint.txt"))?;
    Ok((params, log))
}

fn checkpoint_path(settings: &Settings, out: &Path) -> PathBuf {
    settings.checkpoint.clone().unwrap_or_else(|| out.join("checkpoint.txt"))
}

/// Loads a checkpoint and checks it was trained for the configured environment.
pub fn load_policy(settings: &Settings, path: &Path) -> Result<Policy> {
    if !path.exists() {
        return Err(BenchError::MissingCheckpoint(path.display().to_string()));
    }
    let c = Checkpoint::<f64>::load(path)?;
    let expected = settings.environment_tags();
    for (k, v) in &expected {
        match c.meta.get(k) {
            Some(found) if found != v => {
                return Err(BenchError::Mismatch(format!("checkpoint was trained with {k}={found}, config has {k}={v}")))
            }
            _ => {}
        }
    }
    if c.params.action_dim != settings.mode_value().action_dim() {
        return Err(BenchError::Mismatch(format!(
            "checkpoint has action dimension {}, mode {} needs {}",
            c.params.action_dim,
            settings.mode,
            settings.mode_value().action_dim()
        )));
    }
    Ok(c.params)
}

fn run_policy(settings: &Settings, params: &Policy, spec: &Problem, seed: u64) -> Result<EpisodeState<f64>> {
    let cfg = settings.episode_config(spec)?;
    Ok(deploy_policy(params, &cfg, settings.deterministic, &mut ChaCha8Rng::seed_from_u64(seed))?)
}

/// Deploys the checkpoint on every evaluation problem.
pub fn deploy(settings: &Settings, out: &Path) -> Result<Vec<DeployRecord>> {
    let params = load_policy(settings, &checkpoint_path(settings, out))?;
    std::fs::create_dir_all(out)?;
    write_manifest(out, "deploy", settings)?;
    let problems = settings.problems()?;
    let states: Vec<Result<EpisodeState<f64>>> = pool(settings)?.install(|| {
        problems.par_iter().enumerate().map(|(i, p)| run_policy(settings, &params, p, stream_seed(settings.seed, i))).collect()
    });
    let mut summary = Vec::new();
    for (spec, state) in problems.iter().zip(states) {
        let state = state?;
        let id = problem_id(spec);
        write_csv(&out.join(format!("transcript_{id}_policy.csv")), &transcript_records(&state))?;
        write_csv(&out.join(format!("actions_{id}_policy.csv")), &action_records(&state))?;
        write_snapshot(&out.join(format!("mesh_{id}_policy.txt")), &state.mesh)?;
        summary.push(DeployRecord {
            problem_id: id,
            final_eta: state.eta,
            final_j: state.cumulative_dofs,
            steps: state.k,
            done_reason: state.done.map_or("none", |d| d.as_str()).to_string(),
            cost: episode_cost(&state),
        });
    }
    write_csv(&out.join("deploy.csv"), &summary)?;
    Ok(summary)
}

enum Baseline {
    Fixed(f64, Option<f64>),
    Policy(Policy, PathBuf),
}

impl Baseline {
    fn label(&self) -> String {
        match self {
            Baseline::Fixed(t, Some(r)) => format!("fixed theta={t} rho={r}"),
            Baseline::Fixed(t, None) => format!("fixed theta={t}"),
            Baseline::Policy(_, p) => format!("policy {}", p.display()),
        }
    }
}

/// Policy versus baseline on every evaluation problem.
pub fn compare(settings: &Settings, out: &Path) -> Result<Vec<CompareRecord>> {
    let params = load_policy(settings, &checkpoint_path(settings, out))?;
    std::fs::create_dir_all(out)?;
    write_manifest(out, "compare", settings)?;
    let baseline = if let Some(path) = &settings.baseline_checkpoint {
        Baseline::Policy(load_policy(settings, path)?, path.clone())
    } else if let Some(theta) = settings.baseline_theta {
        Baseline::Fixed(theta, if settings.is_hp() { Some(settings.baseline_rho.unwrap_or(1.0)) } else { None })
    } else {
        let swept = compute_sweep(settings, None)?;
        let best = swept.best().ok_or_else(|| BenchError::Config("every baseline sweep cell failed".into()))?;
        Baseline::Fixed(best.theta, best.rho)
    };
    let problems = settings.problems()?;
    let rows: Vec<Result<CompareRecord>> = pool(settings)?.install(|| {
        problems
            .par_iter()
            .enumerate()
            .map(|(i, spec)| {
                let seed = stream_seed(settings.seed, i);
                let base = match &baseline {
                    Baseline::Fixed(t, r) => run_cell(settings, spec, *t, *r, seed)?,
                    Baseline::Policy(p, _) => run_policy(settings, p, spec, seed)?,
                };
                let pol = run_policy(settings, &params, spec, seed)?;
                let (factor, exponent) = improvement_metrics(base.eta, pol.eta)?;
                Ok(CompareRecord {
                    problem_id: problem_id(spec),
                    baseline: baseline.label(),
                    baseline_final_eta: base.eta,
                    policy_final_eta: pol.eta,
                    baseline_final_j: base.cumulative_dofs,
                    policy_final_j: pol.cumulative_dofs,
                    factor,
                    exponent,
                })
            })
            .collect()
    });
    let rows: Vec<CompareRecord> = rows.into_iter().collect::<Result<_>>()?;
    write_csv(&out.join("compare.csv"), &rows)?;
    Ok(rows)
}

/// Renders every figure family whose CSVs are present in the input directory.
pub fn plot(settings: &Settings, out: &Path) -> Result<plot::PlotReport> {
    let input = settings.plot_input.clone().unwrap_or_else(|| out.to_path_buf());
    std::fs::create_dir_all(out)?;
    write_manifest(out, "plot", settings)?;
    let report = plot::render_dir(&input, out)?;
    for p in &report.problems {
        eprintln!("warning kind=plot_skipped {p}");
    }
    Ok(report)
}
