use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use super::TrpoError;
use crate::numkit::{ensure_finite, Activation, Mlp};

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;
/// Hidden width of the policy and value networks.
pub const POLICY_HIDDEN: usize = 64;

/// Diagonal Gaussian policy: a tanh MLP for the mean and a free,
/// state-independent log standard deviation per action dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    pub mean: Mlp,
    pub log_std: Vec<f64>,
}

impl GaussianPolicy {
    pub fn new<R: Rng + ?Sized>(state_dim: usize, action_dim: usize, init_log_std: f64, rng: &mut R) -> Self {
        let mut mean = Mlp::new(&[state_dim, POLICY_HIDDEN, POLICY_HIDDEN, action_dim], Activation::Tanh, rng);
        // Start near a zero mean so early exploration is symmetric.
        let last = mean.layers.last_mut().expect("nonempty");
        last.weights.data_mut().iter_mut().for_each(|w| *w *= 0.01);
        Self { mean, log_std: vec![init_log_std.clamp(LOG_STD_MIN, LOG_STD_MAX); action_dim] }
    }

    pub fn state_dim(&self) -> usize {
        self.mean.input_len()
    }

    pub fn action_dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn mean_action(&self, state: &[f64]) -> Result<Vec<f64>, TrpoError> {
        self.check_state(state)?;
        Ok(self.mean.forward(state)?)
    }

    /// Samples `mean + std * noise` and returns it with its log-density.
    pub fn act<R: Rng + ?Sized>(&self, state: &[f64], rng: &mut R) -> Result<(Vec<f64>, f64), TrpoError> {
        let mu = self.mean_action(state)?;
        let noise: Vec<f64> = (0..mu.len()).map(|_| rng.sample(StandardNormal)).collect();
        let action: Vec<f64> = mu.iter().zip(&noise).zip(&self.log_std).map(|((m, z), ls)| m + ls.exp() * z).collect();
        let logp = gaussian_log_density(&mu, &self.log_std, &action);
        Ok((action, logp))
    }

    pub fn log_prob(&self, state: &[f64], action: &[f64]) -> Result<f64, TrpoError> {
        self.check_action(action)?;
        let mu = self.mean_action(state)?;
        Ok(gaussian_log_density(&mu, &self.log_std, action))
    }

    /// Weighted sum of log-densities over a batch and its gradient with
    /// respect to [`Self::params`].
    pub fn weighted_log_prob_grad(
        &self,
        states: &[Vec<f64>],
        actions: &[Vec<f64>],
        weights: &[f64],
    ) -> Result<(f64, Vec<f64>), TrpoError> {
        if states.len() != actions.len() || states.len() != weights.len() {
            return Err(TrpoError::Length(format!(
                "{} states, {} actions, {} weights",
                states.len(),
                actions.len(),
                weights.len()
            )));
        }
        let mut net = self.mean.clone();
        net.zero_grad();
        let inv_var: Vec<f64> = self.log_std.iter().map(|ls| (-2.0 * ls).exp()).collect();
        let mut g_ls = vec![0.0; self.action_dim()];
        let mut total = 0.0;
        for ((s, a), &w) in states.iter().zip(actions).zip(weights) {
            self.check_state(s)?;
            self.check_action(a)?;
            let (mu, cache) = net.forward_cached(s)?;
            total += w * gaussian_log_density(&mu, &self.log_std, a);
            let up: Vec<f64> = (0..mu.len()).map(|d| w * (a[d] - mu[d]) * inv_var[d]).collect();
            net.backward(&cache, &up)?;
            for d in 0..mu.len() {
                g_ls[d] += w * ((a[d] - mu[d]).powi(2) * inv_var[d] - 1.0);
            }
        }
        let mut grad = net.grads();
        grad.extend(g_ls);
        Ok((total, grad))
    }

    /// Differential entropy, independent of the state.
    pub fn entropy(&self) -> f64 {
        self.log_std.iter().map(|ls| ls + 0.5 * (2.0 * PI * std::f64::consts::E).ln()).sum()
    }

    pub fn num_params(&self) -> usize {
        self.mean.num_params() + self.log_std.len()
    }

    /// Mean-network parameters followed by `log_std`.
    pub fn params(&self) -> Vec<f64> {
        let mut p = self.mean.params();
        p.extend_from_slice(&self.log_std);
        p
    }

    /// Loads flat parameters; `log_std` is clamped to its range.
    pub fn set_params(&mut self, flat: &[f64]) -> Result<(), TrpoError> {
        if flat.len() != self.num_params() {
            return Err(TrpoError::Length(format!("expected {} policy parameters, got {}", self.num_params(), flat.len())));
        }
        ensure_finite("policy_set_params", flat)?;
        let split = self.mean.num_params();
        self.mean.set_params(&flat[..split])?;
        for (ls, v) in self.log_std.iter_mut().zip(&flat[split..]) {
            *ls = v.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
        Ok(())
    }

    fn check_state(&self, state: &[f64]) -> Result<(), TrpoError> {
        if state.len() != self.state_dim() {
            return Err(TrpoError::Length(format!("state of length {} for a {}-dim policy", state.len(), self.state_dim())));
        }
        ensure_finite("policy_state", state)?;
        Ok(())
    }

    fn check_action(&self, action: &[f64]) -> Result<(), TrpoError> {
        if action.len() != self.action_dim() {
            return Err(TrpoError::Length(format!("action of length {} for a {}-dim policy", action.len(), self.action_dim())));
        }
        Ok(())
    }
}

/// `log N(action; mu, diag(exp(log_std)^2))`.
pub fn gaussian_log_density(mu: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    mu.iter()
        .zip(log_std)
        .zip(action)
        .map(|((m, ls), a)| {
            let z = (a - m) * (-ls).exp();
            -0.5 * z * z - ls - 0.5 * (2.0 * PI).ln()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::finite_difference_check;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn log_prob_at_mean_is_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut pi = GaussianPolicy::new(3, 2, 0.0, &mut rng);
        pi.log_std = vec![-0.3, 0.4];
        let s = [0.1, -0.2, 0.3];
        let mu = pi.mean_action(&s).unwrap();
        let want = -(-0.3 + 0.4) - (2.0 * PI).ln();
        assert!((pi.log_prob(&s, &mu).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn tiny_std_acts_at_the_mean_and_seeds_repeat() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut pi = GaussianPolicy::new(2, 2, 0.0, &mut rng);
        pi.log_std = vec![LOG_STD_MIN; 2];
        let s = [0.5, -0.5];
        let mu = pi.mean_action(&s).unwrap();
        let (a, _) = pi.act(&s, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        for (x, m) in a.iter().zip(&mu) {
            assert!((x - m).abs() < 0.05);
        }
        assert_eq!(a, pi.act(&s, &mut ChaCha8Rng::seed_from_u64(9)).unwrap().0);
        assert!(pi.act(&[f64::NAN, 0.0], &mut rng).is_err());
        assert!(pi.act(&[0.0], &mut rng).is_err());
    }

    #[test]
    fn log_std_is_clamped() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut pi = GaussianPolicy::new(1, 1, 0.0, &mut rng);
        let mut p = pi.params();
        *p.last_mut().unwrap() = 10.0;
        pi.set_params(&p).unwrap();
        assert_eq!(pi.log_std, vec![LOG_STD_MAX]);
        *p.last_mut().unwrap() = -10.0;
        pi.set_params(&p).unwrap();
        assert_eq!(pi.log_std, vec![LOG_STD_MIN]);
    }

    #[test]
    fn log_prob_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut pi = GaussianPolicy::new(3, 2, -0.2, &mut rng);
        // Break the small-output initialisation so every weight matters.
        let p: Vec<f64> = pi.params().iter().map(|x| x + rng.gen_range(-0.3..0.3)).collect();
        pi.set_params(&p).unwrap();
        let states: Vec<Vec<f64>> = (0..4).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let actions: Vec<Vec<f64>> = (0..4).map(|_| (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let weights = [0.7, -1.2, 0.4, 2.0];
        let report = finite_difference_check(
            |th| {
                let mut q = pi.clone();
                q.set_params(th).unwrap();
                q.weighted_log_prob_grad(&states, &actions, &weights).unwrap()
            },
            &pi.params(),
            None,
        );
        assert!(report.max_rel_error <= 1e-5, "{report:?}");
    }

    #[test]
    fn entropy_of_unit_gaussian() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pi = GaussianPolicy::new(1, 3, 0.0, &mut rng);
        assert!((pi.entropy() - 3.0 * 1.4189385332046727).abs() < 1e-12);
    }
}
