//! Flat `key = value` run configuration.
//!
//! Keys carry a section prefix (`env.mode`); a `[env]` header line prefixes
//! the keys that follow it. `#` starts a comment. Lists are comma separated.
//! Command-line overrides are applied after the file and win.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use am2r_core::env::{EpisodeConfig, MarkingRule, Mode, ProblemSource, DEFAULT_BISECTIONS, DEFAULT_DOF_CAP, DEFAULT_MAX_STEPS};
use am2r_core::geometry::ProblemSpec;
use am2r_core::policy::PpoConfig;

use crate::error::{BenchError, Result};

/// Every accepted key. `run.command` and `software.version` appear in
/// manifests and are ignored on input.
pub const KNOWN_KEYS: &[&str] = &[
    "run.seed",
    "run.workers",
    "run.command",
    "software.version",
    "problem.kind",
    "problem.omega_pi",
    "problem.omega_lo_pi",
    "problem.omega_hi_pi",
    "env.mode",
    "env.eta_target",
    "env.budget",
    "env.order",
    "env.resolution",
    "env.marking",
    "env.bisections",
    "env.max_steps",
    "env.dof_cap",
    "sweep.theta",
    "sweep.rho",
    "sweep.transcripts",
    "ppo.workers",
    "ppo.fragment_len",
    "ppo.minibatch",
    "ppo.epochs",
    "ppo.learning_rate",
    "ppo.clip",
    "ppo.vf_coef",
    "ppo.ent_coef",
    "ppo.gamma",
    "ppo.lambda",
    "ppo.normalize_advantages",
    "ppo.hidden",
    "ppo.batches",
    "deploy.checkpoint",
    "deploy.deterministic",
    "compare.baseline_theta",
    "compare.baseline_rho",
    "compare.baseline_checkpoint",
    "plot.input",
];

/// Raw key-value pairs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| BenchError::Config(format!("line {}: expected `key = value`", n + 1)))?;
            let key = key.trim();
            let key = if section.is_empty() || key.contains('.') { key.to_string() } else { format!("{section}.{key}") };
            entries.insert(key, value.trim().to_string());
        }
        let config = Self { entries };
        config.check_keys()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies a `key=value` override.
    pub fn set_override(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| BenchError::Config(format!("override `{pair}` is not key=value")))?;
        self.set(k.trim(), v.trim());
        self.check_keys()
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    fn check_keys(&self) -> Result<()> {
        match self.entries.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            Some(k) => Err(BenchError::Config(format!("unknown key `{k}`"))),
            None => Ok(()),
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<V: FromStr>(&self, key: &str) -> Result<Option<V>> {
        self.raw(key)
            .map(|v| v.parse().map_err(|_| BenchError::Config(format!("bad value `{v}` for `{key}`"))))
            .transpose()
    }

    pub fn get_or<V: FromStr>(&self, key: &str, default: V) -> Result<V> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn list<V: FromStr>(&self, key: &str) -> Result<Option<Vec<V>>> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse().map_err(|_| BenchError::Config(format!("bad list entry `{s}` for `{key}`"))))
                    .collect()
            })
            .transpose()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    LShape,
    UnitSquare,
    /// Fixed pacman angles listed in `problem.omega_pi`.
    Pacman,
    /// Training draws `omega ~ U[lo, hi]`; evaluation uses `problem.omega_pi`.
    PacmanUniform,
}

impl ProblemKind {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "lshape" => Self::LShape,
            "unit_square" => Self::UnitSquare,
            "pacman" => Self::Pacman,
            "pacman_uniform" => Self::PacmanUniform,
            _ => return Err(BenchError::Config(format!("unknown problem.kind `{s}`"))),
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::LShape => "lshape",
            Self::UnitSquare => "unit_square",
            Self::Pacman => "pacman",
            Self::PacmanUniform => "pacman_uniform",
        }
    }
}

/// Fully resolved run settings, defaults filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub seed: u64,
    pub workers: usize,
    pub kind: ProblemKind,
    /// Pacman angles in units of pi.
    pub omega_pi: Vec<f64>,
    pub omega_lo_pi: f64,
    pub omega_hi_pi: f64,
    pub mode: String,
    pub eta_target: f64,
    pub budget: f64,
    pub order: u8,
    pub resolution: usize,
    pub marking: MarkingRule,
    pub bisections: usize,
    pub max_steps: usize,
    pub dof_cap: usize,
    pub sweep_theta: Vec<f64>,
    pub sweep_rho: Vec<f64>,
    /// Also write one transcript per sweep cell.
    pub sweep_transcripts: bool,
    pub ppo: PpoConfig,
    pub checkpoint: Option<PathBuf>,
    pub deterministic: bool,
    pub baseline_theta: Option<f64>,
    pub baseline_rho: Option<f64>,
    pub baseline_checkpoint: Option<PathBuf>,
    pub plot_input: Option<PathBuf>,
}

/// `0.1, 0.14, ..., 0.9`: the 21 test angles.
pub fn default_omega_grid() -> Vec<f64> {
    (0..21).map(|i| (10 + 4 * i) as f64 / 100.0).collect()
}

fn decile_grid(lo: usize) -> Vec<f64> {
    (lo..10).map(|i| i as f64 / 10.0).collect()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl Settings {
    pub fn resolve(c: &Config) -> Result<Self> {
        let kind = ProblemKind::parse(c.raw("problem.kind").unwrap_or("lshape"))?;
        let mode = c.raw("env.mode").unwrap_or("h_efficiency").to_string();
        if !["h_efficiency", "h_accuracy", "hp_accuracy"].contains(&mode.as_str()) {
            return Err(BenchError::Config(format!("unknown env.mode `{mode}`")));
        }
        let hp = mode == "hp_accuracy";
        let marking = match c.raw("env.marking").unwrap_or("greedy") {
            "greedy" => MarkingRule::Greedy,
            "dorfler" => MarkingRule::Dorfler,
            other => return Err(BenchError::Config(format!("unknown env.marking `{other}`"))),
        };
        let d = PpoConfig::default();
        let seed = c.get_or("run.seed", d.seed)?;
        let ppo = PpoConfig {
            workers: c.get_or("ppo.workers", d.workers)?,
            fragment_len: c.get_or("ppo.fragment_len", d.fragment_len)?,
            minibatch: c.get_or("ppo.minibatch", d.minibatch)?,
            epochs: c.get_or("ppo.epochs", d.epochs)?,
            learning_rate: c.get_or("ppo.learning_rate", d.learning_rate)?,
            clip: c.get_or("ppo.clip", d.clip)?,
            vf_coef: c.get_or("ppo.vf_coef", d.vf_coef)?,
            ent_coef: c.get_or("ppo.ent_coef", d.ent_coef)?,
            gamma: c.get_or("ppo.gamma", d.gamma)?,
            lambda: c.get_or("ppo.lambda", d.lambda)?,
            normalize_advantages: c.get_or("ppo.normalize_advantages", d.normalize_advantages)?,
            hidden: c.list("ppo.hidden")?.unwrap_or(d.hidden),
            batches: c.get_or("ppo.batches", d.batches)?,
            seed,
        };
        ppo.validate().map_err(|e| BenchError::Config(e.to_string()))?;
        let settings = Self {
            seed,
            workers: c.get_or("run.workers", 1)?,
            kind,
            omega_pi: c.list("problem.omega_pi")?.unwrap_or_else(|| match kind {
                ProblemKind::PacmanUniform => default_omega_grid(),
                _ => vec![0.5],
            }),
            omega_lo_pi: c.get_or("problem.omega_lo_pi", 0.1)?,
            omega_hi_pi: c.get_or("problem.omega_hi_pi", 0.9)?,
            eta_target: c.get_or("env.eta_target", 1e-4)?,
            budget: c.get_or("env.budget", 1e4)?,
            order: c.get_or("env.order", if hp { 2 } else { 1 })?,
            resolution: c.get_or("env.resolution", 1)?,
            marking,
            bisections: c.get_or("env.bisections", DEFAULT_BISECTIONS)?,
            max_steps: c.get_or("env.max_steps", DEFAULT_MAX_STEPS)?,
            dof_cap: c.get_or("env.dof_cap", DEFAULT_DOF_CAP)?,
            sweep_theta: c.list("sweep.theta")?.unwrap_or_else(|| if hp { decile_grid(0) } else { decile_grid(1) }),
            sweep_rho: if hp { c.list("sweep.rho")?.unwrap_or_else(|| decile_grid(0)) } else { Vec::new() },
            sweep_transcripts: c.get_or("sweep.transcripts", false)?,
            ppo,
            checkpoint: c.get("deploy.checkpoint")?,
            deterministic: c.get_or("deploy.deterministic", true)?,
            baseline_theta: c.get("compare.baseline_theta")?,
            baseline_rho: c.get("compare.baseline_rho")?,
            baseline_checkpoint: c.get("compare.baseline_checkpoint")?,
            plot_input: c.get("plot.input")?,
            mode,
        };
        if settings.workers == 0 {
            return Err(BenchError::Config("run.workers must be at least 1".into()));
        }
        if settings.omega_pi.is_empty() {
            return Err(BenchError::Config("problem.omega_pi is empty".into()));
        }
        if settings.sweep_theta.is_empty() || (hp && settings.sweep_rho.is_empty()) {
            return Err(BenchError::Config("sweep grid is empty".into()));
        }
        settings.episode_config(&settings.problem(0)?)?.validate().map_err(|e| BenchError::Config(e.to_string()))?;
        Ok(settings)
    }

    pub fn is_hp(&self) -> bool {
        self.mode == "hp_accuracy"
    }

    fn pacman(omega_pi: f64) -> Result<ProblemSpec<f64>> {
        ProblemSpec::pacman(omega_pi * PI).map_err(|e| BenchError::Config(e.to_string()))
    }

    /// Number of evaluation problems.
    pub fn n_problems(&self) -> usize {
        match self.kind {
            ProblemKind::Pacman | ProblemKind::PacmanUniform => self.omega_pi.len(),
            _ => 1,
        }
    }

    /// Evaluation problem `i`.
    pub fn problem(&self, i: usize) -> Result<ProblemSpec<f64>> {
        match self.kind {
            ProblemKind::LShape => Ok(ProblemSpec::lshape()),
            ProblemKind::UnitSquare => Ok(ProblemSpec::unit_square_sine()),
            ProblemKind::Pacman | ProblemKind::PacmanUniform => Self::pacman(self.omega_pi[i]),
        }
    }

    pub fn problems(&self) -> Result<Vec<ProblemSpec<f64>>> {
        (0..self.n_problems()).map(|i| self.problem(i)).collect()
    }

    /// Problem source for training episodes.
    pub fn training_source(&self) -> Result<ProblemSource<f64>> {
        match self.kind {
            ProblemKind::PacmanUniform => {
                if !(0.0 < self.omega_lo_pi && self.omega_lo_pi < self.omega_hi_pi && self.omega_hi_pi < 2.0) {
                    return Err(BenchError::Config("need 0 < problem.omega_lo_pi < problem.omega_hi_pi < 2".into()));
                }
                Ok(ProblemSource::PacmanUniform { lo: self.omega_lo_pi * PI, hi: self.omega_hi_pi * PI })
            }
            ProblemKind::Pacman if self.omega_pi.len() > 1 => {
                Err(BenchError::Config("training on pacman needs a single angle or problem.kind = pacman_uniform".into()))
            }
            _ => Ok(ProblemSource::Fixed(self.problem(0)?)),
        }
    }

    pub fn mode_value(&self) -> Mode<f64> {
        match self.mode.as_str() {
            "h_efficiency" => Mode::HEfficiency { eta_target: self.eta_target },
            "h_accuracy" => Mode::HAccuracy { budget: self.budget },
            _ => Mode::HpAccuracy { budget: self.budget },
        }
    }

    fn with_source(&self, source: ProblemSource<f64>) -> EpisodeConfig<f64> {
        let mut c = EpisodeConfig::new(self.mode_value(), source);
        c.order = self.order;
        c.resolution = self.resolution;
        c.marking = self.marking;
        c.bisections = self.bisections;
        c.max_steps = self.max_steps;
        c.dof_cap = self.dof_cap;
        c
    }

    pub fn episode_config(&self, spec: &ProblemSpec<f64>) -> Result<EpisodeConfig<f64>> {
        Ok(self.with_source(ProblemSource::Fixed(*spec)))
    }

    pub fn training_config(&self) -> Result<EpisodeConfig<f64>> {
        Ok(self.with_source(self.training_source()?))
    }

    /// Settings that must agree between training and deployment.
    pub fn environment_tags(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("mode".into(), self.mode.clone());
        m.insert("order".into(), self.order.to_string());
        m.insert("bisections".into(), self.bisections.to_string());
        m.insert("marking".into(), format!("{:?}", self.marking).to_lowercase());
        m
    }

    /// Resolved configuration in the input format, every key explicit.
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").expect("write to string");
        kv("run.seed", self.seed.to_string());
        kv("run.workers", self.workers.to_string());
        kv("problem.kind", self.kind.as_str().into());
        kv("problem.omega_pi", fmt_list(&self.omega_pi));
        kv("problem.omega_lo_pi", self.omega_lo_pi.to_string());
        kv("problem.omega_hi_pi", self.omega_hi_pi.to_string());
        kv("env.mode", self.mode.clone());
        kv("env.eta_target", self.eta_target.to_string());
        kv("env.budget", self.budget.to_string());
        kv("env.order", self.order.to_string());
        kv("env.resolution", self.resolution.to_string());
        kv("env.marking", format!("{:?}", self.marking).to_lowercase());
        kv("env.bisections", self.bisections.to_string());
        kv("env.max_steps", self.max_steps.to_string());
        kv("env.dof_cap", self.dof_cap.to_string());
        kv("sweep.theta", fmt_list(&self.sweep_theta));
        if self.is_hp() {
            kv("sweep.rho", fmt_list(&self.sweep_rho));
        }
        kv("sweep.transcripts", self.sweep_transcripts.to_string());
        let p = &self.ppo;
        kv("ppo.workers", p.workers.to_string());
        kv("ppo.fragment_len", p.fragment_len.to_string());
        kv("ppo.minibatch", p.minibatch.to_string());
        kv("ppo.epochs", p.epochs.to_string());
        kv("ppo.learning_rate", p.learning_rate.to_string());
        kv("ppo.clip", p.clip.to_string());
        kv("ppo.vf_coef", p.vf_coef.to_string());
        kv("ppo.ent_coef", p.ent_coef.to_string());
        kv("ppo.gamma", p.gamma.to_string());
        kv("ppo.lambda", p.lambda.to_string());
        kv("ppo.normalize_advantages", p.normalize_advantages.to_string());
        kv("ppo.hidden", p.hidden.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(","));
        kv("ppo.batches", p.batches.to_string());
        if let Some(c) = &self.checkpoint {
            kv("deploy.checkpoint", c.display().to_string());
        }
        kv("deploy.deterministic", self.deterministic.to_string());
        if let Some(t) = self.baseline_theta {
            kv("compare.baseline_theta", t.to_string());
        }
        if let Some(r) = self.baseline_rho {
            kv("compare.baseline_rho", r.to_string());
        }
        if let Some(c) = &self.baseline_checkpoint {
            kv("compare.baseline_checkpoint", c.display().to_string());
        }
        if let Some(p) = &self.plot_input {
            kv("plot.input", p.display().to_string());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_prefix_keys_and_overrides_win() {
        let mut c = Config::parse("# fig 1\nrun.seed = 3\n[env]\nmode = h_efficiency # inline\neta_target = 1e-3\n").unwrap();
        assert_eq!(c.get::<u64>("run.seed").unwrap(), Some(3));
        assert_eq!(c.raw("env.eta_target"), Some("1e-3"));
        c.set_override("env.eta_target=2e-3").unwrap();
        let s = Settings::resolve(&c).unwrap();
        assert_eq!(s.eta_target, 2e-3);
        assert_eq!(s.seed, 3);
        assert_eq!(s.ppo.seed, 3);
        assert_eq!(s.sweep_theta.len(), 9);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(Config::parse("env.mood = x").is_err());
        assert!(Config::parse("env.mode").is_err());
        let c = Config::parse("env.order = two").unwrap();
        assert!(Settings::resolve(&c).is_err());
        let c = Config::parse("env.mode = hq").unwrap();
        assert!(Settings::resolve(&c).is_err());
        assert!(Config::default().set_override("novalue").is_err());
    }

    #[test]
    fn resolved_text_round_trips() {
        let c = Config::parse("problem.kind = pacman_uniform\nenv.mode = hp_accuracy\nsweep.theta = 0.6\n").unwrap();
        let s = Settings::resolve(&c).unwrap();
        assert_eq!(s.omega_pi.len(), 21);
        assert_eq!(s.sweep_rho.len(), 10);
        assert_eq!(s.order, 2);
        let again = Settings::resolve(&Config::parse(&s.to_config_text()).unwrap()).unwrap();
        assert_eq!(again, s);
    }
}
