//! Diagonal Gaussian policy over the unit box with a separate value network.
//!
//! Samples are drawn from `N(mu(o), sigma(o)^2)` and projected onto `[0, 1]`;
//! log-densities are always those of the unclamped normal at the raw sample.

use rand::Rng;
use rand_distr::StandardNormal;

use super::mlp::Mlp;
use crate::env::clamp_unit;
use crate::real::Real;

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;
pub const INIT_LOG_STD: f64 = -0.5;
pub const INIT_MEAN: f64 = 0.5;
/// Output-layer weight gain; small so the initial head is nearly the bias.
const HEAD_GAIN: f64 = 0.01;

/// Policy and value networks.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyParameters<T> {
    pub action_dim: usize,
    /// `obs -> [mu_1..mu_d, ln sigma_1..ln sigma_d]`.
    pub policy: Mlp<T>,
    /// `obs -> V(obs)`.
    pub value: Mlp<T>,
}

/// One draw from the policy.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionSample<T> {
    pub raw: Vec<T>,
    pub clamped: Vec<T>,
    pub logp: T,
}

/// `ln N(x; mu, e^{2 ls})`.
pub fn gaussian_log_density<T: Real>(x: T, mu: T, log_std: T) -> T {
    let z = (x - mu) / log_std.exp();
    -T::lit(0.5) * z * z - log_std - T::lit(0.5) * (T::PI() + T::PI()).ln()
}

/// Clamps the raw log-std head; the flag is false where the clamp is active.
pub fn clamp_log_std<T: Real>(raw: T) -> (T, bool) {
    let lo = T::lit(LOG_STD_MIN);
    let hi = T::lit(LOG_STD_MAX);
    if raw < lo {
        (lo, false)
    } else if raw > hi {
        (hi, false)
    } else {
        (raw, true)
    }
}

impl<T: Real> PolicyParameters<T> {
    /// Networks `obs_dim -> hidden.. -> 2 action_dim` and `obs_dim -> hidden.. -> 1`,
    /// with the policy head biased to `mu = 0.5`, `ln sigma = -0.5`.
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, action_dim: usize, hidden: &[usize], rng: &mut R) -> Self {
        let mut sizes = vec![obs_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(2 * action_dim);
        let mut policy = Mlp::new(&sizes, HEAD_GAIN, rng);
        let head = policy.layers.last_mut().expect("output layer");
        for d in 0..action_dim {
            head.bias[d] = T::lit(INIT_MEAN);
            head.bias[action_dim + d] = T::lit(INIT_LOG_STD);
        }
        *sizes.last_mut().expect("output width") = 1;
        let value = Mlp::new(&sizes, 1.0, rng);
        Self { action_dim, policy, value }
    }

    pub fn obs_dim(&self) -> usize {
        self.policy.n_inputs()
    }

    pub fn hidden(&self) -> Vec<usize> {
        let s = self.policy.sizes();
        s[1..s.len() - 1].to_vec()
    }

    /// `(mu, clamped ln sigma)`.
    pub fn distribution(&self, obs: &[T]) -> (Vec<T>, Vec<T>) {
        let out = self.policy.forward(obs);
        let (mu, ls) = out.split_at(self.action_dim);
        (mu.to_vec(), ls.iter().map(|&v| clamp_log_std(v).0).collect())
    }

    pub fn value_of(&self, obs: &[T]) -> T {
        self.value.forward(obs)[0]
    }

    pub fn log_prob(&self, obs: &[T], raw: &[T]) -> T {
        let (mu, ls) = self.distribution(obs);
        (0..self.action_dim).map(|d| gaussian_log_density(raw[d], mu[d], ls[d])).sum()
    }

    pub fn sample_action<R: Rng + ?Sized>(&self, obs: &[T], rng: &mut R) -> ActionSample<T> {
        let (mu, ls) = self.distribution(obs);
        let raw: Vec<T> = (0..self.action_dim)
            .map(|d| {
                let n: f64 = rng.sample(StandardNormal);
                mu[d] + ls[d].exp() * T::lit(n)
            })
            .collect();
        let logp = (0..self.action_dim).map(|d| gaussian_log_density(raw[d], mu[d], ls[d])).sum();
        let clamped = raw.iter().map(|&v| clamp_unit(v)).collect();
        ActionSample { raw, clamped, logp }
    }

    /// Clamped mean, the deterministic action.
    pub fn mean_action(&self, obs: &[T]) -> Vec<T> {
        self.distribution(obs).0.into_iter().map(clamp_unit).collect()
    }

    pub fn all_finite(&self) -> bool {
        self.policy.all_finite() && self.value.all_finite()
    }

    pub fn n_params(&self) -> usize {
        self.policy.n_params() + self.value.n_params()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(action_dim: usize) -> PolicyParameters<f64> {
        PolicyParameters::new(3, action_dim, &[128, 128], &mut ChaCha8Rng::seed_from_u64(4000))
    }

    #[test]
    fn initial_head_is_mid_action() {
        let p = params(2);
        assert_eq!(p.policy.sizes(), vec![3, 128, 128, 4]);
        assert_eq!(p.value.sizes(), vec![3, 128, 128, 1]);
        assert_eq!(p.hidden(), vec![128, 128]);
        let (mu, ls) = p.distribution(&[0.5, 0.1, 0.05]);
        for d in 0..2 {
            assert!((mu[d] - 0.5).abs() < 0.05, "{mu:?}");
            assert!((ls[d] + 0.5).abs() < 0.05, "{ls:?}");
        }
    }

    #[test]
    fn density_at_mean() {
        assert!((gaussian_log_density(0.3, 0.3, 0.0f64) + 0.918_938_533_204_672_7).abs() < 1e-15);
    }

    #[test]
    fn density_integrates_to_one() {
        // importance sampling from a wider uniform proposal
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (mu, ls) = (0.4, -0.7f64);
        let (lo, hi) = (mu - 8.0 * ls.exp(), mu + 8.0 * ls.exp());
        let n = 100_000;
        let mass: f64 =
            (0..n).map(|_| gaussian_log_density(rng.random_range(lo..hi), mu, ls).exp()).sum::<f64>() * (hi - lo)
                / n as f64;
        assert!((mass - 1.0).abs() < 0.01, "{mass}");
    }

    #[test]
    fn log_std_is_clamped() {
        assert_eq!(clamp_log_std(-7.0), (-5.0, false));
        assert_eq!(clamp_log_std(3.0), (2.0, false));
        assert_eq!(clamp_log_std(0.25), (0.25, true));
    }

    #[test]
    fn samples_report_raw_logp_and_clamp() {
        let p = params(1);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let obs = [0.2, 0.3, 0.1];
        let mut clamped_low = false;
        let mut clamped_high = false;
        for _ in 0..2000 {
            let s = p.sample_action(&obs, &mut rng);
            assert_eq!(s.logp, p.log_prob(&obs, &s.raw));
            assert_eq!(s.clamped[0], clamp_unit(s.raw[0]));
            assert!((0.0..=1.0).contains(&s.clamped[0]));
            clamped_low |= s.raw[0] < 0.0 && s.clamped[0] == 0.0;
            clamped_high |= s.raw[0] > 1.0 && s.clamped[0] == 1.0;
        }
        assert!(clamped_low && clamped_high);
    }

    #[test]
    fn narrow_policy_concentrates_at_clamped_mean() {
        let mut p = params(1);
        let head = p.policy.layers.last_mut().unwrap();
        head.bias[0] = 1.3;
        head.bias[1] = -4.0;
        let obs = [0.0; 3];
        let (_, ls) = p.distribution(&obs);
        let sigma = ls[0].exp();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let draws: Vec<f64> = (0..10_000).map(|_| p.sample_action(&obs, &mut rng).clamped[0]).collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let sd = (draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / draws.len() as f64).sqrt();
        assert!(sd <= sigma);
        assert_eq!(p.mean_action(&obs), vec![1.0]);
    }

    #[test]
    fn clamp_projection_is_idempotent() {
        for x in [-3.0, -0.0, 0.2, 1.0, 7.5, f64::INFINITY, f64::NEG_INFINITY, f64::NAN] {
            let c = clamp_unit(x);
            assert!((0.0..=1.0).contains(&c));
            assert_eq!(clamp_unit(c), c);
        }
    }
}
