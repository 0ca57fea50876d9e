//! Refinement as a Markov decision process.
//!
//! An episode starts from a coarse mesh and applies solve, estimate, decide,
//! mark, refine until the target estimate is reached (efficiency mode) or the
//! cumulative dof budget is spent (accuracy modes). Rewards telescope, so the
//! undiscounted return is `log2 J_0 - log2 J_K` or `log2 eta_0 - log2 eta_K`.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::estimate::{estimate, normalized_stats_h, zeta_stats, LocalErrorField};
use crate::fem::{count_dofs, solve};
use crate::geometry::{build_initial_mesh, ProblemSpec, TriMesh};
use crate::marking::{mark_dorfler, mark_greedy, mark_hp, MarkResult};
use crate::real::Real;

pub const DEFAULT_MAX_STEPS: usize = 50;
pub const DEFAULT_DOF_CAP: usize = 1_000_000;
pub const GUARD_PENALTY: f64 = -10.0;
/// Two bisections per step halve the size of each marked element.
pub const DEFAULT_BISECTIONS: usize = 2;
/// Initial uniform order of hp episodes.
pub const HP_INITIAL_ORDER: u8 = 2;

pub const TRANSCRIPT_COLUMNS: [&str; 12] =
    ["k", "theta", "rho", "n_elems", "ndofs", "J_k", "eta_k", "b_k", "s1", "s2", "reward", "done_reason"];

/// Objective of an episode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode<T> {
    /// Reach `eta_k <= eta_target` with as few cumulative dofs as possible.
    HEfficiency { eta_target: T },
    /// Smallest final estimate once `J_k >= budget`.
    HAccuracy { budget: f64 },
    /// As [`Mode::HAccuracy`] but the action also splits marked elements
    /// between h- and p-refinement.
    HpAccuracy { budget: f64 },
}

impl<T: Real> Mode<T> {
    pub fn is_hp(&self) -> bool {
        matches!(self, Mode::HpAccuracy { .. })
    }

    pub fn action_dim(&self) -> usize {
        if self.is_hp() {
            2
        } else {
            1
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mode::HEfficiency { .. } => "h_efficiency",
            Mode::HAccuracy { .. } => "h_accuracy",
            Mode::HpAccuracy { .. } => "hp_accuracy",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MarkingRule {
    Greedy,
    Dorfler,
}

/// Where each episode's problem comes from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProblemSource<T> {
    Fixed(ProblemSpec<T>),
    /// Pacman with `omega ~ Uniform[lo, hi]`, redrawn at every reset.
    PacmanUniform { lo: T, hi: T },
}

impl<T: Real> ProblemSource<T> {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ProblemSpec<T>> {
        match *self {
            ProblemSource::Fixed(spec) => Ok(spec),
            ProblemSource::PacmanUniform { lo, hi } => {
                let u: f64 = rng.random();
                ProblemSpec::pacman(lo + (hi - lo) * T::lit(u))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeConfig<T> {
    pub mode: Mode<T>,
    pub problem: ProblemSource<T>,
    /// Uniform order of the initial mesh; hp episodes start from [`HP_INITIAL_ORDER`].
    pub order: u8,
    pub resolution: usize,
    /// Rule used by the h modes.
    pub marking: MarkingRule,
    /// Newest-vertex bisections applied to each marked element per step.
    pub bisections: usize,
    pub max_steps: usize,
    pub dof_cap: usize,
}

impl<T: Real> EpisodeConfig<T> {
    pub fn new(mode: Mode<T>, problem: ProblemSource<T>) -> Self {
        let order = if mode.is_hp() { HP_INITIAL_ORDER } else { 1 };
        Self {
            mode,
            problem,
            order,
            resolution: 1,
            marking: MarkingRule::Greedy,
            bisections: DEFAULT_BISECTIONS,
            max_steps: DEFAULT_MAX_STEPS,
            dof_cap: DEFAULT_DOF_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bisections == 0 {
            return Err(Error::InvalidArgument("bisections must be at least 1".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidArgument("max_steps must be at least 1".into()));
        }
        if self.resolution == 0 {
            return Err(Error::InvalidArgument("resolution must be at least 1".into()));
        }
        if !(1..=crate::geometry::P_MAX).contains(&self.order) {
            return Err(Error::InvalidArgument(format!("order {} outside 1..=8", self.order)));
        }
        match self.mode {
            Mode::HEfficiency { eta_target } if !(eta_target > T::zero()) => {
                Err(Error::InvalidArgument("eta_target must be positive".into()))
            }
            Mode::HAccuracy { budget } | Mode::HpAccuracy { budget } if !(budget > 0.0) => {
                Err(Error::InvalidArgument("budget must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Marking parameters, clamped into the unit interval on construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Action<T> {
    pub theta: T,
    pub rho: Option<T>,
}

impl<T: Real> Action<T> {
    pub fn h(theta: T) -> Self {
        Self { theta: clamp_unit(theta), rho: None }
    }

    pub fn hp(theta: T, rho: T) -> Self {
        Self { theta: clamp_unit(theta), rho: Some(clamp_unit(rho)) }
    }

    /// Reads `[theta]` or `[theta, rho]`.
    pub fn from_slice(a: &[T]) -> Self {
        match a {
            [theta] => Self::h(*theta),
            [theta, rho, ..] => Self::hp(*theta, *rho),
            [] => Self::h(T::zero()),
        }
    }
}

pub fn clamp_unit<T: Real>(x: T) -> T {
    if x.is_nan() {
        T::zero()
    } else {
        x.max(T::zero()).min(T::one())
    }
}

/// `(b_k, s1, s2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation<T>(pub [T; 3]);

impl<T: Real> Observation<T> {
    pub fn to_vec(self) -> Vec<T> {
        self.0.to_vec()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DoneReason {
    /// `eta_k <= eta_target`.
    Target,
    /// `J_k >= budget`.
    Budget,
    MaxSteps,
    DofCap,
}

impl DoneReason {
    pub fn is_guard(self) -> bool {
        matches!(self, DoneReason::MaxSteps | DoneReason::DofCap)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DoneReason::Target => "target",
            DoneReason::Budget => "budget",
            DoneReason::MaxSteps => "max_steps",
            DoneReason::DofCap => "dof_cap",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "target" => DoneReason::Target,
            "budget" => DoneReason::Budget,
            "max_steps" => DoneReason::MaxSteps,
            "dof_cap" => DoneReason::DofCap,
            _ => return None,
        })
    }
}

impl fmt::Display for DoneReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One line of an episode transcript. Row `k` describes mesh `k` and the
/// action that produced it; row 0 has no action and no reward.
#[derive(Clone, Debug, PartialEq)]
pub struct TranscriptRow {
    pub k: usize,
    pub theta: Option<f64>,
    pub rho: Option<f64>,
    pub n_elems: usize,
    pub ndofs: usize,
    pub cumulative_dofs: u64,
    pub eta: f64,
    pub b: f64,
    pub s1: f64,
    pub s2: f64,
    pub reward: Option<f64>,
    pub done_reason: Option<DoneReason>,
}

#[derive(Clone, Debug)]
pub struct EpisodeState<T> {
    pub config: EpisodeConfig<T>,
    /// Problem drawn at reset; the pacman angle is never observed.
    pub spec: ProblemSpec<T>,
    pub k: usize,
    pub mesh: TriMesh<T>,
    pub cumulative_dofs: u64,
    pub ndofs: usize,
    pub eta: T,
    pub field: LocalErrorField<T>,
    pub observation: Observation<T>,
    pub done: Option<DoneReason>,
    pub transcript: Vec<TranscriptRow>,
}

impl<T: Real> EpisodeState<T> {
    pub fn is_done(&self) -> bool {
        self.done.is_some()
    }

    /// Undiscounted sum of the rewards received so far.
    pub fn episode_return(&self) -> f64 {
        self.transcript.iter().filter_map(|r| r.reward).sum()
    }

    /// `log2 J_K`, the efficiency cost.
    pub fn cost(&self) -> f64 {
        (self.cumulative_dofs as f64).log2()
    }
}

fn observe<T: Real>(mode: &Mode<T>, field: &LocalErrorField<T>, cumulative: u64) -> Result<Observation<T>> {
    let b = match *mode {
        Mode::HEfficiency { eta_target } => eta_target / field.eta_global.max(T::log_floor()),
        Mode::HAccuracy { budget } | Mode::HpAccuracy { budget } => T::lit(cumulative as f64 / budget),
    };
    if mode.is_hp() {
        let z = zeta_stats(field);
        Ok(Observation([b, z.mean, z.sd]))
    } else {
        let s = normalized_stats_h(field)?;
        Ok(Observation([b, (T::one() + s.rms).log2(), (T::one() + s.sd).log2()]))
    }
}

fn natural_end<T: Real>(mode: &Mode<T>, eta: T, cumulative: u64) -> Option<DoneReason> {
    match *mode {
        Mode::HEfficiency { eta_target } if eta <= eta_target => Some(DoneReason::Target),
        Mode::HAccuracy { budget } | Mode::HpAccuracy { budget } if cumulative as f64 >= budget => {
            Some(DoneReason::Budget)
        }
        _ => None,
    }
}

fn row<T: Real>(state: &EpisodeState<T>, action: Option<Action<T>>, reward: Option<f64>) -> TranscriptRow {
    TranscriptRow {
        k: state.k,
        theta: action.map(|a| a.theta.as_f64()),
        rho: action.and_then(|a| a.rho.map(|r| r.as_f64())),
        n_elems: state.mesh.n_elems(),
        ndofs: state.ndofs,
        cumulative_dofs: state.cumulative_dofs,
        eta: state.eta.as_f64(),
        b: state.observation.0[0].as_f64(),
        s1: state.observation.0[1].as_f64(),
        s2: state.observation.0[2].as_f64(),
        reward,
        done_reason: state.done,
    }
}

/// Draws a problem, builds and solves on the initial mesh.
pub fn reset<T: Real, R: Rng + ?Sized>(config: &EpisodeConfig<T>, rng: &mut R) -> Result<EpisodeState<T>> {
    config.validate()?;
    let spec = config.problem.draw(rng)?;
    let order = if config.mode.is_hp() { HP_INITIAL_ORDER } else { config.order };
    let mesh = build_initial_mesh(&spec, config.resolution, order)?;
    let sol = solve(&mesh, &spec)?;
    let field = estimate(&sol, &mesh)?;
    let cumulative = sol.ndofs as u64;
    let observation = observe(&config.mode, &field, cumulative)?;
    let mut state = EpisodeState {
        config: *config,
        spec,
        k: 0,
        ndofs: sol.ndofs,
        eta: field.eta_global,
        cumulative_dofs: cumulative,
        mesh,
        field,
        observation,
        done: None,
        transcript: Vec::new(),
    };
    state.done = natural_end(&config.mode, state.eta, cumulative);
    state.transcript.push(row(&state, None, None));
    Ok(state)
}

/// Result of one transition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepResult<T> {
    pub observation: Observation<T>,
    pub reward: f64,
    pub done: Option<DoneReason>,
}

/// Marks with `action`, refines, re-solves and re-estimates.
pub fn step<T: Real>(state: &mut EpisodeState<T>, action: Action<T>) -> Result<StepResult<T>> {
    if state.is_done() {
        return Err(Error::EpisodeFinished);
    }
    let mode = state.config.mode;
    let marks = match (mode, action.rho) {
        (Mode::HpAccuracy { .. }, rho) => mark_hp(&state.field.eta, action.theta, rho.unwrap_or_else(T::one)),
        _ => match state.config.marking {
            MarkingRule::Greedy => mark_greedy(&state.field.eta, action.theta),
            MarkingRule::Dorfler => mark_dorfler(&state.field.eta, action.theta),
        },
    };
    let MarkResult { h_set, p_set } = marks;
    let mesh = state.mesh.refine_p(&p_set).refine_h_times(&h_set, state.config.bisections);
    let ndofs = count_dofs(&mesh);
    let prev_cumulative = state.cumulative_dofs;
    let prev_eta = state.eta;
    state.k += 1;
    state.cumulative_dofs += ndofs as u64;
    state.ndofs = ndofs;
    state.mesh = mesh;
    let cost_reward = (prev_cumulative as f64).log2() - (state.cumulative_dofs as f64).log2();
    if ndofs > state.config.dof_cap {
        // too large to solve; the estimate is carried over
        state.done = Some(DoneReason::DofCap);
        let reward = match mode {
            Mode::HEfficiency { .. } => cost_reward,
            _ => 0.0,
        } + GUARD_PENALTY;
        state.observation = observe(&mode, &state.field, state.cumulative_dofs)?;
        state.transcript.push(row(state, Some(action), Some(reward)));
        return Ok(StepResult { observation: state.observation, reward, done: state.done });
    }
    let sol = solve(&state.mesh, &state.spec)?;
    state.field = estimate(&sol, &state.mesh)?;
    state.eta = state.field.eta_global;
    state.observation = observe(&mode, &state.field, state.cumulative_dofs)?;
    let mut reward = match mode {
        Mode::HEfficiency { .. } => cost_reward,
        _ => {
            let floor = T::log_floor();
            (prev_eta.max(floor).log2() - state.eta.max(floor).log2()).as_f64()
        }
    };
    state.done = natural_end(&mode, state.eta, state.cumulative_dofs);
    if state.done.is_none() && state.k >= state.config.max_steps {
        state.done = Some(DoneReason::MaxSteps);
        reward += GUARD_PENALTY;
    }
    state.transcript.push(row(state, Some(action), Some(reward)));
    Ok(StepResult { observation: state.observation, reward, done: state.done })
}

/// Runs a whole episode with a constant action.
pub fn run_fixed<T: Real, R: Rng + ?Sized>(
    config: &EpisodeConfig<T>,
    theta: T,
    rho: Option<T>,
    rng: &mut R,
) -> Result<EpisodeState<T>> {
    let mut state = reset(config, rng)?;
    let action = match rho {
        Some(r) if config.mode.is_hp() => Action::hp(theta, r),
        _ if config.mode.is_hp() => Action::hp(theta, T::one()),
        _ => Action::h(theta),
    };
    while !state.is_done() {
        step(&mut state, action)?;
    }
    Ok(state)
}

/// Improvement factor `baseline / policy` and exponent `log2(factor)`.
pub fn improvement_metrics(final_eta_baseline: f64, final_eta_policy: f64) -> Result<(f64, f64)> {
    if !(final_eta_baseline > 0.0 && final_eta_policy > 0.0) {
        return Err(Error::InvalidArgument("final estimates must be positive".into()));
    }
    let factor = final_eta_baseline / final_eta_policy;
    Ok((factor, factor.log2()))
}

/// Episodic environment driven by the trainer.
pub trait Environment<T>: Send {
    fn obs_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    /// Starts a new episode and returns its first observation.
    fn reset(&mut self, seed: u64) -> Result<Vec<T>>;
    /// Applies an action already clamped into the unit box.
    fn step(&mut self, action: &[T]) -> Result<(Vec<T>, f64, bool)>;
    /// Objective value of the episode that just ended, if the environment has one.
    fn final_cost(&self) -> Option<f64> {
        None
    }
    /// Whether the episode that just ended was cut off by a guard.
    fn truncated(&self) -> bool {
        false
    }
}

/// [`Environment`] over refinement episodes.
#[derive(Clone, Debug)]
pub struct AmrEnv<T> {
    pub config: EpisodeConfig<T>,
    pub state: Option<EpisodeState<T>>,
}

impl<T: Real> AmrEnv<T> {
    pub fn new(config: EpisodeConfig<T>) -> Self {
        Self { config, state: None }
    }
}

impl<T: Real> Environment<T> for AmrEnv<T> {
    fn obs_dim(&self) -> usize {
        3
    }

    fn action_dim(&self) -> usize {
        self.config.mode.action_dim()
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<T>> {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let state = reset(&self.config, &mut rng)?;
        let obs = state.observation.to_vec();
        self.state = Some(state);
        Ok(obs)
    }

    fn step(&mut self, action: &[T]) -> Result<(Vec<T>, f64, bool)> {
        let state = self.state.as_mut().ok_or(Error::EpisodeFinished)?;
        let action = if self.config.mode.is_hp() {
            Action::hp(action[0], action.get(1).copied().unwrap_or_else(T::one))
        } else {
            Action::h(action[0])
        };
        let r = step(state, action)?;
        Ok((r.observation.to_vec(), r.reward, r.done.is_some()))
    }

    /// `log2 J_K` for efficiency episodes, `log2 eta_K` for accuracy episodes.
    fn final_cost(&self) -> Option<f64> {
        let state = self.state.as_ref()?;
        Some(match self.config.mode {
            Mode::HEfficiency { .. } => state.cost(),
            _ => state.eta.as_f64().max(f64::MIN_POSITIVE).log2(),
        })
    }

    fn truncated(&self) -> bool {
        self.state.as_ref().and_then(|s| s.done).is_some_and(DoneReason::is_guard)
    }
}
