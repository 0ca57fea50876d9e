//! Proximal policy optimization with a clipped surrogate.
//!
//! Rollouts are collected by a fixed pool of environment instances, each with
//! its own rng stream derived from the trainer seed, and stepped concurrently.
//! Results are gathered in worker order so training is reproducible
//! regardless of thread scheduling.

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::gaussian::{clamp_log_std, gaussian_log_density, PolicyParameters};
use super::mlp::Mlp;
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::real::Real;

/// Trainer settings. Defaults follow the reference configuration: 10 workers
/// with fragments of 50 steps (500 transitions per batch), minibatches of 100,
/// `gamma = 1`, learning rate `1e-4`, seed 4000.
#[derive(Clone, Debug, PartialEq)]
pub struct PpoConfig {
    pub workers: usize,
    pub fragment_len: usize,
    pub minibatch: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub clip: f64,
    pub vf_coef: f64,
    pub ent_coef: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub normalize_advantages: bool,
    pub hidden: Vec<usize>,
    pub batches: usize,
    pub seed: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            workers: 10,
            fragment_len: 50,
            minibatch: 100,
            epochs: 30,
            learning_rate: 1e-4,
            clip: 0.2,
            vf_coef: 0.5,
            ent_coef: 0.0,
            gamma: 1.0,
            lambda: 1.0,
            normalize_advantages: true,
            hidden: vec![128, 128],
            batches: 100,
            seed: 4000,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.workers == 0 || self.fragment_len == 0 || self.minibatch == 0 || self.epochs == 0 {
            return bad("workers, fragment_len, minibatch and epochs must be positive");
        }
        if !(self.learning_rate > 0.0) || !(self.clip > 0.0) {
            return bad("learning_rate and clip must be positive");
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.lambda) {
            return bad("gamma and lambda must lie in [0, 1]");
        }
        if self.vf_coef < 0.0 || self.ent_coef < 0.0 {
            return bad("loss coefficients must be nonnegative");
        }
        if self.hidden.contains(&0) {
            return bad("hidden widths must be positive");
        }
        Ok(())
    }

    pub fn train_batch_size(&self) -> usize {
        self.workers * self.fragment_len
    }
}

/// One recorded step under the behavior policy.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition<T> {
    pub obs: Vec<T>,
    pub raw: Vec<T>,
    pub action: Vec<T>,
    pub logp: T,
    pub reward: T,
    pub value: T,
    pub done: bool,
    pub episode: u64,
}

/// Consecutive transitions of one worker. `bootstrap` is the value of the
/// state after the last transition, or zero if that transition ended an episode.
#[derive(Clone, Debug, PartialEq)]
pub struct Fragment<T> {
    pub transitions: Vec<Transition<T>>,
    pub bootstrap: T,
}

/// Training example after advantage estimation.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample<T> {
    pub obs: Vec<T>,
    pub raw: Vec<T>,
    pub logp_old: T,
    pub advantage: T,
    pub target: T,
}

/// Generalized advantage estimates and value targets, restarting at episode
/// boundaries.
pub fn compute_advantages<T: Real>(fragment: &Fragment<T>, gamma: T, lambda: T) -> (Vec<T>, Vec<T>) {
    let n = fragment.transitions.len();
    let mut adv = vec![T::zero(); n];
    let mut next_value = fragment.bootstrap;
    let mut running = T::zero();
    for i in (0..n).rev() {
        let t = &fragment.transitions[i];
        if t.done {
            next_value = T::zero();
            running = T::zero();
        }
        let delta = t.reward + gamma * next_value - t.value;
        running = delta + gamma * lambda * running;
        adv[i] = running;
        next_value = t.value;
    }
    let targets = adv.iter().zip(&fragment.transitions).map(|(&a, t)| a + t.value).collect();
    (adv, targets)
}

/// Loss terms averaged over a minibatch. `total = -surrogate + vf value - ent entropy`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Losses<T> {
    pub total: T,
    pub surrogate: T,
    pub value: T,
    pub entropy: T,
    pub clip_fraction: T,
}

/// Gradient of [`Losses::total`] with respect to both networks.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient<T> {
    pub policy: Mlp<T>,
    pub value: Mlp<T>,
}

impl<T: Real> Gradient<T> {
    pub fn zeros(params: &PolicyParameters<T>) -> Self {
        Self { policy: params.policy.zeros_like(), value: params.value.zeros_like() }
    }

    pub fn flatten(&self) -> Vec<T> {
        let mut v = self.policy.flatten();
        v.extend(self.value.flatten());
        v
    }
}

/// Clipped-surrogate term for one sample and its derivative with respect to
/// the new log-density.
pub fn clipped_surrogate<T: Real>(ratio: T, advantage: T, clip: T) -> (T, T) {
    let unclipped = ratio * advantage;
    let clipped = ratio.max(T::one() - clip).min(T::one() + clip) * advantage;
    if unclipped <= clipped {
        (unclipped, unclipped)
    } else {
        (clipped, T::zero())
    }
}

fn evaluate<T: Real>(
    params: &PolicyParameters<T>,
    batch: &[Sample<T>],
    cfg: &PpoConfig,
    mut grad: Option<&mut Gradient<T>>,
) -> Losses<T> {
    let n = T::from_usize_lossy(batch.len());
    let clip = T::lit(cfg.clip);
    let vf = T::lit(cfg.vf_coef);
    let ent = T::lit(cfg.ent_coef);
    let d = params.action_dim;
    let entropy_const = T::lit(0.5) * (T::one() + (T::PI() + T::PI()).ln());
    let mut out = Losses::<T>::default();
    for s in batch {
        let (pcache, head) = params.policy.forward_cached(&s.obs);
        let mut logp = T::zero();
        let mut entropy = T::zero();
        let mut z = vec![T::zero(); d];
        let mut inside = vec![true; d];
        let mut sigma = vec![T::zero(); d];
        for k in 0..d {
            let (ls, free) = clamp_log_std(head[d + k]);
            inside[k] = free;
            sigma[k] = ls.exp();
            z[k] = (s.raw[k] - head[k]) / sigma[k];
            logp += gaussian_log_density(s.raw[k], head[k], ls);
            entropy += ls + entropy_const;
        }
        let ratio = (logp - s.logp_old).exp();
        let (surr, dsurr) = clipped_surrogate(ratio, s.advantage, clip);
        if (ratio - T::one()).abs() > clip {
            out.clip_fraction += T::one() / n;
        }
        let (vcache, v) = params.value.forward_cached(&s.obs);
        let err = v[0] - s.target;
        out.surrogate += surr / n;
        out.value += err * err / n;
        out.entropy += entropy / n;
        if let Some(g) = grad.as_deref_mut() {
            let mut dhead = vec![T::zero(); 2 * d];
            for k in 0..d {
                dhead[k] = -dsurr * z[k] / sigma[k] / n;
                if inside[k] {
                    dhead[d + k] = (-dsurr * (z[k] * z[k] - T::one()) - ent) / n;
                }
            }
            params.policy.backward(&pcache, &dhead, &mut g.policy);
            params.value.backward(&vcache, &[vf * (err + err) / n], &mut g.value);
        }
    }
    out.total = -out.surrogate + vf * out.value - ent * out.entropy;
    out
}

pub fn ppo_loss<T: Real>(params: &PolicyParameters<T>, batch: &[Sample<T>], cfg: &PpoConfig) -> Losses<T> {
    evaluate(params, batch, cfg, None)
}

/// Loss and its exact gradient. Fails if any gradient entry is not finite.
pub fn ppo_gradient<T: Real>(
    params: &PolicyParameters<T>,
    batch: &[Sample<T>],
    cfg: &PpoConfig,
) -> Result<(Losses<T>, Gradient<T>)> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty minibatch".into()));
    }
    let mut grad = Gradient::zeros(params);
    let losses = evaluate(params, batch, cfg, Some(&mut grad));
    if !grad.policy.all_finite() {
        return Err(Error::NonFiniteGradient(format!("policy network (loss {:?})", losses.total)));
    }
    if !grad.value.all_finite() {
        return Err(Error::NonFiniteGradient(format!("value network (value loss {:?})", losses.value)));
    }
    Ok((losses, grad))
}

/// Adam over the concatenated policy and value parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam<T> {
    pub learning_rate: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
}

impl<T: Real> Adam<T> {
    pub fn new(n_params: usize, learning_rate: T) -> Self {
        Self {
            learning_rate,
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
            m: vec![T::zero(); n_params],
            v: vec![T::zero(); n_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut PolicyParameters<T>, grad: &Gradient<T>) {
        self.t += 1;
        let bc1 = T::one() - self.beta1.powi(self.t);
        let bc2 = T::one() - self.beta2.powi(self.t);
        let g = grad.flatten();
        let mut i = 0;
        let mut update = |p: &mut T| {
            self.m[i] = self.beta1 * self.m[i] + (T::one() - self.beta1) * g[i];
            self.v[i] = self.beta2 * self.v[i] + (T::one() - self.beta2) * g[i] * g[i];
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            *p -= self.learning_rate * mhat / (vhat.sqrt() + self.eps);
            i += 1;
        };
        params.policy.for_each_param_mut(&mut update);
        params.value.for_each_param_mut(&mut update);
    }
}

/// Summary of one collect-and-update iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchLog {
    pub batch: usize,
    pub transitions: usize,
    pub episodes: usize,
    /// Episodes ended by a guard rather than their objective.
    pub truncated: usize,
    /// Means over the episodes completed in this batch.
    pub mean_return: Option<f64>,
    pub mean_cost: Option<f64>,
    pub mean_length: Option<f64>,
    pub surrogate: f64,
    pub value_loss: f64,
    pub clip_fraction: f64,
}

impl BatchLog {
    /// True when every episode that finished was truncated by a guard.
    pub fn guard_dominated(&self) -> bool {
        self.episodes > 0 && self.truncated == self.episodes
    }
}

#[derive(Clone, Debug, PartialEq)]
struct EpisodeEnd {
    ret: f64,
    cost: Option<f64>,
    length: usize,
    truncated: bool,
}

struct Worker<T, E> {
    id: u64,
    env: E,
    rng: ChaCha8Rng,
    obs: Option<Vec<T>>,
    episodes: u64,
    ret: f64,
    length: usize,
}

impl<T: Real, E: Environment<T>> Worker<T, E> {
    fn collect(&mut self, params: &PolicyParameters<T>, len: usize) -> Result<(Fragment<T>, Vec<EpisodeEnd>)> {
        let mut transitions = Vec::with_capacity(len);
        let mut ends = Vec::new();
        while transitions.len() < len {
            let obs = match self.obs.take() {
                Some(o) => o,
                None => {
                    let seed = self.rng.next_u64();
                    self.episodes += 1;
                    self.ret = 0.0;
                    self.length = 0;
                    self.env.reset(seed)?
                }
            };
            let sample = params.sample_action(&obs, &mut self.rng);
            let value = params.value_of(&obs);
            let (next, reward, done) = self.env.step(&sample.clamped)?;
            self.ret += reward;
            self.length += 1;
            transitions.push(Transition {
                obs,
                raw: sample.raw,
                action: sample.clamped,
                logp: sample.logp,
                reward: T::lit(reward),
                value,
                done,
                episode: (self.id << 40) | self.episodes,
            });
            if done {
                ends.push(EpisodeEnd {
                    ret: self.ret,
                    cost: self.env.final_cost(),
                    length: self.length,
                    truncated: self.env.truncated(),
                });
            } else {
                self.obs = Some(next);
            }
        }
        let bootstrap = self.obs.as_ref().map_or(T::zero(), |o| params.value_of(o));
        Ok((Fragment { transitions, bootstrap }, ends))
    }
}

/// PPO trainer owning the parameters, the optimizer and the rollout pool.
pub struct Trainer<T, E> {
    pub config: PpoConfig,
    pub params: PolicyParameters<T>,
    pub batches_done: usize,
    adam: Adam<T>,
    workers: Vec<Worker<T, E>>,
    rng: ChaCha8Rng,
}

impl<T: Real, E: Environment<T>> Trainer<T, E> {
    /// `make_env(i)` builds the environment of worker `i`.
    pub fn new(config: PpoConfig, make_env: impl Fn(usize) -> E) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let first = make_env(0);
        let params = PolicyParameters::new(first.obs_dim(), first.action_dim(), &config.hidden, &mut rng);
        Self::with_params(config, params, make_env, first)
    }

    /// Continues training from existing parameters.
    pub fn resume(config: PpoConfig, params: PolicyParameters<T>, make_env: impl Fn(usize) -> E) -> Result<Self> {
        config.validate()?;
        let first = make_env(0);
        if first.obs_dim() != params.obs_dim() || first.action_dim() != params.action_dim {
            return Err(Error::InvalidArgument("parameters do not match the environment's dimensions".into()));
        }
        Self::with_params(config, params, make_env, first)
    }

    fn with_params(
        config: PpoConfig,
        params: PolicyParameters<T>,
        make_env: impl Fn(usize) -> E,
        first: E,
    ) -> Result<Self> {
        let mut master = ChaCha8Rng::seed_from_u64(config.seed ^ 0x005e_ed0f_3011_0075);
        let mut envs = vec![first];
        envs.extend((1..config.workers).map(&make_env));
        let workers = envs
            .into_iter()
            .enumerate()
            .map(|(i, env)| Worker {
                id: i as u64,
                env,
                rng: ChaCha8Rng::seed_from_u64(master.next_u64()),
                obs: None,
                episodes: 0,
                ret: 0.0,
                length: 0,
            })
            .collect();
        let adam = Adam::new(params.n_params(), T::lit(config.learning_rate));
        let rng = ChaCha8Rng::seed_from_u64(master.next_u64());
        Ok(Self { config, params, batches_done: 0, adam, workers, rng })
    }

    /// Collects one train batch and runs the minibatch updates on it.
    pub fn train_batch(&mut self) -> Result<BatchLog> {
        let params = &self.params;
        let len = self.config.fragment_len;
        let collected: Vec<(Fragment<T>, Vec<EpisodeEnd>)> =
            self.workers.par_iter_mut().map(|w| w.collect(params, len)).collect::<Result<_>>()?;

        let gamma = T::lit(self.config.gamma);
        let lambda = T::lit(self.config.lambda);
        let mut samples = Vec::with_capacity(self.config.train_batch_size());
        let mut ends = Vec::new();
        for (fragment, e) in collected {
            let (adv, targets) = compute_advantages(&fragment, gamma, lambda);
            for ((t, a), r) in fragment.transitions.into_iter().zip(adv).zip(targets) {
                samples.push(Sample { obs: t.obs, raw: t.raw, logp_old: t.logp, advantage: a, target: r });
            }
            ends.extend(e);
        }
        if self.config.normalize_advantages {
            normalize_advantages(&mut samples);
        }

        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut last = Losses::default();
        let mut mb = Vec::with_capacity(self.config.minibatch);
        for _ in 0..self.config.epochs {
            order.shuffle(&mut self.rng);
            for chunk in order.chunks(self.config.minibatch) {
                mb.clear();
                mb.extend(chunk.iter().map(|&i| samples[i].clone()));
                let (losses, grad) = ppo_gradient(&self.params, &mb, &self.config)?;
                self.adam.step(&mut self.params, &grad);
                last = losses;
            }
        }
        if !self.params.all_finite() {
            return Err(Error::NonFiniteGradient("parameters after update".into()));
        }

        self.batches_done += 1;
        let mean = |f: &dyn Fn(&EpisodeEnd) -> Option<f64>| {
            let v: Vec<f64> = ends.iter().filter_map(f).collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        };
        Ok(BatchLog {
            batch: self.batches_done,
            transitions: samples.len(),
            episodes: ends.len(),
            truncated: ends.iter().filter(|e| e.truncated).count(),
            mean_return: mean(&|e| Some(e.ret)),
            mean_cost: mean(&|e| e.cost),
            mean_length: mean(&|e| Some(e.length as f64)),
            surrogate: last.surrogate.as_f64(),
            value_loss: last.value.as_f64(),
            clip_fraction: last.clip_fraction.as_f64(),
        })
    }
}

fn normalize_advantages<T: Real>(samples: &mut [Sample<T>]) {
    if samples.len() < 2 {
        return;
    }
    let n = T::from_usize_lossy(samples.len());
    let mean = samples.iter().map(|s| s.advantage).sum::<T>() / n;
    let var = samples.iter().map(|s| (s.advantage - mean) * (s.advantage - mean)).sum::<T>() / n;
    let scale = var.sqrt().max(T::lit(1e-8));
    for s in samples {
        s.advantage = (s.advantage - mean) / scale;
    }
}

/// Runs `config.batches` iterations, calling `on_batch` after each.
pub fn train<T: Real, E: Environment<T>>(
    config: PpoConfig,
    make_env: impl Fn(usize) -> E,
    mut on_batch: impl FnMut(&BatchLog),
) -> Result<(PolicyParameters<T>, Vec<BatchLog>)> {
    let mut trainer = Trainer::new(config, make_env)?;
    let mut log = Vec::with_capacity(trainer.config.batches);
    for _ in 0..trainer.config.batches {
        let entry = trainer.train_batch()?;
        on_batch(&entry);
        log.push(entry);
    }
    Ok((trainer.params, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// One-step bandit with reward `-(theta - 0.7)^2`.
    #[derive(Clone)]
    struct Bandit;

    impl Environment<f64> for Bandit {
        fn obs_dim(&self) -> usize {
            3
        }
        fn action_dim(&self) -> usize {
            1
        }
        fn reset(&mut self, _seed: u64) -> Result<Vec<f64>> {
            Ok(vec![1.0, 0.0, 0.0])
        }
        fn step(&mut self, a: &[f64]) -> Result<(Vec<f64>, f64, bool)> {
            Ok((vec![1.0, 0.0, 0.0], -(a[0] - 0.7).powi(2), true))
        }
    }

    fn random_batch(params: &PolicyParameters<f64>, n: usize, seed: u64) -> Vec<Sample<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let obs: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                let s = params.sample_action(&obs, &mut rng);
                // behavior density off by a random ratio in [0.6, 1.5]
                let logp_old = s.logp - rng.random_range(0.6f64..1.5).ln();
                Sample {
                    obs,
                    raw: s.raw,
                    logp_old,
                    advantage: rng.random_range(-2.0..2.0),
                    target: rng.random_range(-3.0..1.0),
                }
            })
            .collect()
    }

    fn check_gradient(params: &PolicyParameters<f64>, batch: &[Sample<f64>], cfg: &PpoConfig, probes: Option<usize>) {
        let (_, grad) = ppo_gradient(params, batch, cfg).unwrap();
        let analytic = grad.flatten();
        let np = params.policy.n_params();
        let mut flat = params.policy.flatten();
        flat.extend(params.value.flatten());
        let loss_at = |v: &[f64]| {
            let mut p = params.clone();
            p.policy.assign(&v[..np]);
            p.value.assign(&v[np..]);
            ppo_loss(&p, batch, cfg).total
        };
        let indices: Vec<usize> = match probes {
            None => (0..flat.len()).collect(),
            Some(k) => {
                let mut rng = ChaCha8Rng::seed_from_u64(99);
                (0..k).map(|_| rng.random_range(0..flat.len())).collect()
            }
        };
        let h = 1e-5;
        let mut worst = 0.0f64;
        for i in indices {
            let mut v = flat.clone();
            v[i] += h;
            let up = loss_at(&v);
            v[i] -= 2.0 * h;
            let down = loss_at(&v);
            let fd = (up - down) / (2.0 * h);
            let a = analytic[i];
            let rel = (fd - a).abs() / a.abs().max(fd.abs()).max(1e-6);
            worst = worst.max(rel);
        }
        assert!(worst <= 1e-4, "worst relative gradient error {worst:e}");
    }

    #[test]
    fn gradient_matches_finite_differences_small_net() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for action_dim in [1, 2] {
            let params = PolicyParameters::<f64>::new(3, action_dim, &[12, 10], &mut rng);
            let batch = random_batch(&params, 16, 12 + action_dim as u64);
            let cfg = PpoConfig { ent_coef: 0.01, ..PpoConfig::default() };
            check_gradient(&params, &batch, &cfg, None);
        }
    }

    #[test]
    fn gradient_matches_finite_differences_full_size() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let params = PolicyParameters::<f64>::new(3, 2, &[128, 128], &mut rng);
        let batch = random_batch(&params, 8, 14);
        check_gradient(&params, &batch, &PpoConfig::default(), Some(400));
    }

    #[test]
    fn clip_branches() {
        let (s, d) = clipped_surrogate(1.5, 2.0, 0.2);
        assert!((s - 2.4f64).abs() < 1e-15);
        assert_eq!(d, 0.0);
        let (s, d) = clipped_surrogate(1.5, -2.0, 0.2);
        assert_eq!((s, d), (-3.0, -3.0));
        let (s, d) = clipped_surrogate(0.5, -1.0, 0.2f64);
        assert!((s + 0.8).abs() < 1e-15);
        assert_eq!(d, 0.0);
        assert_eq!(clipped_surrogate(1.1, 1.0, 0.2f64), (1.1, 1.1));
    }

    #[test]
    fn zero_advantage_gives_zero_policy_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let params = PolicyParameters::<f64>::new(3, 1, &[16, 16], &mut rng);
        let mut batch = random_batch(&params, 10, 16);
        batch.iter_mut().for_each(|s| s.advantage = 0.0);
        let (_, grad) = ppo_gradient(&params, &batch, &PpoConfig::default()).unwrap();
        assert!(grad.policy.flatten().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn ratio_is_one_at_behavior_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let params = PolicyParameters::<f64>::new(3, 2, &[32, 32], &mut rng);
        for _ in 0..200 {
            let obs: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let s = params.sample_action(&obs, &mut rng);
            assert_eq!((params.log_prob(&obs, &s.raw) - s.logp).exp(), 1.0);
        }
    }

    #[test]
    fn advantages_respect_episode_boundaries() {
        let t = |reward: f64, value: f64, done: bool| Transition {
            obs: vec![0.0],
            raw: vec![0.0],
            action: vec![0.0],
            logp: 0.0,
            reward,
            value,
            done,
            episode: 0,
        };
        let frag = Fragment { transitions: vec![t(1.0, 0.5, false), t(2.0, 1.0, true), t(3.0, 0.0, false)], bootstrap: 10.0 };
        let (adv, targets) = compute_advantages(&frag, 1.0, 1.0);
        assert_eq!(targets, vec![3.0, 2.0, 13.0]);
        assert_eq!(adv, vec![2.5, 1.0, 13.0]);
    }

    #[test]
    fn bandit_converges_to_optimum() {
        let cfg = PpoConfig { workers: 2, fragment_len: 50, minibatch: 50, epochs: 10, batches: 200, ..PpoConfig::default() };
        let (params, log) = train(cfg, |_| Bandit, |_| {}).unwrap();
        let mu = params.distribution(&[1.0, 0.0, 0.0]).0[0];
        assert!((mu - 0.7).abs() <= 0.05, "mu = {mu}");
        assert!(log.last().unwrap().mean_return > log[0].mean_return);
    }

    #[test]
    fn training_is_reproducible() {
        let cfg = PpoConfig { workers: 3, fragment_len: 8, minibatch: 8, epochs: 2, batches: 3, hidden: vec![8], ..PpoConfig::default() };
        let a = train(cfg.clone(), |_| Bandit, |_| {}).unwrap();
        let b = train(cfg, |_| Bandit, |_| {}).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }
}
