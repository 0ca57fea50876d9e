//! CSV schemas, mesh snapshots and run manifests.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use am2r_core::env::{EpisodeState, TranscriptRow};
use am2r_core::Mesh;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::config::Settings;
use crate::error::Result;

/// One transcript line; `theta`, `rho` and `reward` are empty on row 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub k: usize,
    pub theta: Option<f64>,
    pub rho: Option<f64>,
    pub n_elems: usize,
    pub ndofs: usize,
    #[serde(rename = "J_k")]
    pub j_k: u64,
    pub eta_k: f64,
    pub b_k: f64,
    pub s1: f64,
    pub s2: f64,
    pub reward: Option<f64>,
    pub done_reason: Option<String>,
}

impl From<&TranscriptRow> for TranscriptRecord {
    fn from(r: &TranscriptRow) -> Self {
        Self {
            k: r.k,
            theta: r.theta,
            rho: r.rho,
            n_elems: r.n_elems,
            ndofs: r.ndofs,
            j_k: r.cumulative_dofs,
            eta_k: r.eta,
            b_k: r.b,
            s1: r.s1,
            s2: r.s2,
            reward: r.reward,
            done_reason: r.done_reason.map(|d| d.as_str().to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub theta: f64,
    pub rho: Option<f64>,
    pub problem_id: String,
    pub final_eta: f64,
    #[serde(rename = "final_J")]
    pub final_j: u64,
    pub steps: usize,
    pub done_reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummaryRecord {
    pub theta: f64,
    pub rho: Option<f64>,
    pub cells: usize,
    pub failures: usize,
    pub mean_cost: f64,
    pub median_cost: f64,
    pub min_cost: f64,
    pub max_cost: f64,
}

/// Letter-value box at depth `1/2^depth`: quantiles `1/2^depth` and `1 - 1/2^depth`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LetterValueRecord {
    pub theta: f64,
    pub rho: Option<f64>,
    pub depth: u32,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub batch: usize,
    pub transitions: usize,
    pub episodes: usize,
    pub truncated: usize,
    pub mean_return: Option<f64>,
    pub mean_cost: Option<f64>,
    pub mean_length: Option<f64>,
    pub surrogate: f64,
    pub value_loss: f64,
    pub clip_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub k: usize,
    pub theta: f64,
    pub rho: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeployRecord {
    pub problem_id: String,
    pub final_eta: f64,
    #[serde(rename = "final_J")]
    pub final_j: u64,
    pub steps: usize,
    pub done_reason: String,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRecord {
    pub problem_id: String,
    pub baseline: String,
    pub baseline_final_eta: f64,
    pub policy_final_eta: f64,
    #[serde(rename = "baseline_final_J")]
    pub baseline_final_j: u64,
    #[serde(rename = "policy_final_J")]
    pub policy_final_j: u64,
    pub factor: f64,
    pub exponent: f64,
}

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: DeserializeOwned>(path: &Path) -> Result<Vec<R>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn transcript_records(state: &EpisodeState<f64>) -> Vec<TranscriptRecord> {
    state.transcript.iter().map(TranscriptRecord::from).collect()
}

pub fn action_records(state: &EpisodeState<f64>) -> Vec<ActionRecord> {
    state
        .transcript
        .iter()
        .filter_map(|r| r.theta.map(|theta| ActionRecord { k: r.k, theta, rho: r.rho }))
        .collect()
}

pub fn write_snapshot(path: &Path, mesh: &Mesh) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    mesh.write_snapshot(&mut w)?;
    w.flush()?;
    Ok(())
}

/// File-name-safe identifier of a problem.
pub fn problem_id(spec: &am2r_core::Problem) -> String {
    spec.geometry.name()
}

/// `manifest.cfg`: the resolved configuration plus command and version; it
/// is itself a valid `--config` file.
pub fn write_manifest(dir: &Path, command: &str, settings: &Settings) -> Result<()> {
    let text = format!(
        "# am2r run manifest\nrun.command = {command}\nsoftware.version = {}\n{}",
        env!("CARGO_PKG_VERSION"),
        settings.to_config_text()
    );
    std::fs::write(dir.join("manifest.cfg"), text)?;
    Ok(())
}
