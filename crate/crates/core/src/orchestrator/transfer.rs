use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use super::config::{ExperimentConfig, PolicyInput};
use super::rollout::{collect_episodes, evaluate_policy, Behavior, EvalStats};
use super::{stream, OrchestratorError, Purpose};
use crate::judge::FeatureExtractor;
use crate::numkit::{adam_step, Activation, AdamConfig, AdamState, Mlp, Tensor};
use crate::trpo::{gaussian_log_density, GaussianPolicy, POLICY_HIDDEN};
use crate::worlds::{Observation, World};

/// Filters per convolution layer of the pixel policy.
pub const PIXEL_FILTERS: usize = 4;
const PIXEL_FEATURES: usize = 11 * 11 * PIXEL_FILTERS;

/// Gaussian policy over pixels: the current and previous frame stacked into
/// six channels, a small conv stack, then a tanh MLP for the mean.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelPolicy {
    pub features: FeatureExtractor,
    pub head: Mlp,
    pub log_std: Vec<f64>,
}

fn stack(frame: &Observation, prev: &Observation) -> Result<Tensor, OrchestratorError> {
    let (a, b) = (frame.image.data(), prev.image.data());
    if a.len() != b.len() || frame.image.shape().len() != 3 {
        return Err(OrchestratorError::InputMode("frames of different shapes".into()));
    }
    let s = frame.image.shape();
    let mut out = Vec::with_capacity(2 * a.len());
    for (pa, pb) in a.chunks_exact(s[2]).zip(b.chunks_exact(s[2])) {
        out.extend_from_slice(pa);
        out.extend_from_slice(pb);
    }
    Ok(Tensor::new(vec![s[0], s[1], 2 * s[2]], out)?)
}

impl PixelPolicy {
    pub fn new<R: Rng + ?Sized>(action_dim: usize, log_std: Vec<f64>, rng: &mut R) -> Self {
        assert_eq!(log_std.len(), action_dim);
        Self {
            features: FeatureExtractor::with_shape(6, PIXEL_FILTERS, rng),
            head: Mlp::new(&[PIXEL_FEATURES, POLICY_HIDDEN, action_dim], Activation::Tanh, rng),
            log_std,
        }
    }

    pub fn mean_action(&self, frame: &Observation, prev: &Observation) -> Result<Vec<f64>, OrchestratorError> {
        let x = stack(frame, prev)?;
        Ok(self.head.forward(&self.features.forward(&x)?)?)
    }

    pub fn act<R: Rng + ?Sized>(
        &self,
        frame: &Observation,
        prev: &Observation,
        rng: &mut R,
    ) -> Result<(Vec<f64>, f64), OrchestratorError> {
        let mu = self.mean_action(frame, prev)?;
        let a: Vec<f64> =
            mu.iter().zip(&self.log_std).map(|(m, ls)| m + ls.exp() * rng.sample::<f64, _>(StandardNormal)).collect();
        let logp = gaussian_log_density(&mu, &self.log_std, &a);
        Ok((a, logp))
    }

    pub fn num_params(&self) -> usize {
        self.features.num_params() + self.head.num_params() + self.log_std.len()
    }

    /// Conv layers, head, then `log_std`.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.num_params());
        self.features.conv1.extend_params(&mut p);
        self.features.conv2.extend_params(&mut p);
        p.extend(self.head.params());
        p.extend_from_slice(&self.log_std);
        p
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<(), OrchestratorError> {
        if flat.len() != self.num_params() {
            return Err(OrchestratorError::InputMode(format!(
                "expected {} pixel-policy parameters, got {}",
                self.num_params(),
                flat.len()
            )));
        }
        let rest = self.features.conv1.load_params(flat);
        let rest = self.features.conv2.load_params(rest);
        let (head, ls) = rest.split_at(self.head.num_params());
        self.head.set_params(head)?;
        self.log_std.copy_from_slice(ls);
        Ok(())
    }

    /// Mean squared error to `targets` over the batch; gradients of that
    /// mean are left in the layers.
    fn regression_step(
        &mut self,
        inputs: &[(Tensor, Vec<f64>)],
    ) -> Result<f64, OrchestratorError> {
        self.features.conv1.zero_grad();
        self.features.conv2.zero_grad();
        self.head.zero_grad();
        let scale = 1.0 / inputs.len().max(1) as f64;
        let mut loss = 0.0;
        for (x, target) in inputs {
            let (sigma, cache) = self.features.forward_cached(x)?;
            let (mu, hcache) = self.head.forward_cached(&sigma)?;
            let up: Vec<f64> = mu.iter().zip(target).map(|(m, y)| 2.0 * (m - y) * scale).collect();
            loss += mu.iter().zip(target).map(|(m, y)| (m - y).powi(2)).sum::<f64>();
            let dsigma = self.head.backward(&hcache, &up)?;
            self.features.backward(x, &cache, &dsigma)?;
        }
        Ok(loss * scale)
    }
}

/// Fits a pixel policy to the expert's mean actions on expert-domain
/// renders (behavioral regression). Returns the policy and the mean loss of
/// each epoch.
pub fn train_pixel_policy(
    config: &ExperimentConfig,
    expert: &GaussianPolicy,
) -> Result<(PixelPolicy, Vec<f64>), OrchestratorError> {
    config.validate()?;
    let world = World::new(config.spec(), config.expert_domain.clone())?;
    let demos = collect_episodes(
        &world,
        Behavior::Gaussian(expert),
        config.transfer_episodes,
        config.seed,
        Purpose::PixelDemos,
        0,
        true,
        config.workers,
    )?;
    let mut index = Vec::new();
    let mut targets = Vec::new();
    for (e, ep) in demos.iter().enumerate() {
        for t in 0..ep.len() {
            index.push((e, t));
            targets.push(expert.mean_action(&ep.states[t])?);
        }
    }
    let mut policy =
        PixelPolicy::new(expert.action_dim(), expert.log_std.clone(), &mut stream(config.seed, Purpose::PixelFit, 0, 0));
    let adam_cfg = AdamConfig::default();
    let mut states: Vec<AdamState> = [&policy.features.conv1, &policy.features.conv2]
        .into_iter()
        .chain(policy.head.layers.iter())
        .map(|l| AdamState::new(l, adam_cfg))
        .collect();
    let mut order: Vec<usize> = (0..index.len()).collect();
    let mut history = Vec::with_capacity(config.transfer_epochs);
    for epoch in 0..config.transfer_epochs {
        order.shuffle(&mut stream(config.seed, Purpose::PixelFit, epoch as u64 + 1, 1));
        let mut total = 0.0;
        for chunk in order.chunks(config.disc_minibatch) {
            let batch = chunk
                .iter()
                .map(|&k| {
                    let (e, t) = index[k];
                    let f = &demos[e].frames;
                    Ok((stack(&f[t], &f[t.saturating_sub(1)])?, targets[k].clone()))
                })
                .collect::<Result<Vec<_>, OrchestratorError>>()?;
            total += policy.regression_step(&batch)? * chunk.len() as f64;
            let layers = [&mut policy.features.conv1, &mut policy.features.conv2]
                .into_iter()
                .chain(policy.head.layers.iter_mut());
            for (layer, st) in layers.zip(&mut states) {
                adam_step(layer, st)?;
            }
        }
        history.push(total / index.len().max(1) as f64);
        log::debug!("pixel policy epoch {epoch}: loss {:.5}", history[epoch]);
    }
    Ok((policy, history))
}

/// Evaluates a frozen pixel policy in the novice domain.
pub fn eval_transfer(config: &ExperimentConfig, policy: &PixelPolicy) -> Result<EvalStats, OrchestratorError> {
    if config.policy_input != PolicyInput::Pixel {
        return Err(OrchestratorError::InputMode("transfer evaluation needs policy_input = pixel".into()));
    }
    config.validate()?;
    let world = World::new(config.spec(), config.novice_domain.clone())?;
    evaluate_policy(
        &world,
        Behavior::Pixel(policy),
        config.final_eval_episodes,
        config.seed,
        Purpose::FinalEval,
        0,
        config.workers,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::finite_difference_check;
    use crate::worlds::EnvKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn frame(v: f64) -> Observation {
        Observation { image: Tensor::filled(&[50, 50, 3], v) }
    }

    #[test]
    fn stacking_interleaves_channels() {
        let mut a = frame(0.1);
        a.image.data_mut()[0] = 0.9;
        let s = stack(&a, &frame(0.5)).unwrap();
        assert_eq!(s.shape(), [50, 50, 6]);
        assert_eq!(&s.data()[..6], &[0.9, 0.1, 0.1, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn regression_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let policy = PixelPolicy::new(2, vec![-1.0; 2], &mut rng);
        let data: Vec<f64> = (0..50 * 50 * 3).map(|_| rng.gen_range(0.0..1.0)).collect();
        let img = Observation { image: Tensor::new(vec![50, 50, 3], data).unwrap() };
        let x = stack(&img, &frame(0.3)).unwrap();
        let batch = vec![(x, vec![0.4, -0.7])];
        let theta = policy.params();
        let n = theta.len() - 2;
        let idx: Vec<usize> = (0..n).step_by(37).collect();
        let report = finite_difference_check(
            |th| {
                let mut p = policy.clone();
                p.set_params(th).unwrap();
                let loss = p.regression_step(&batch).unwrap();
                let mut g = Vec::new();
                p.features.conv1.extend_grads(&mut g);
                p.features.conv2.extend_grads(&mut g);
                g.extend(p.head.grads());
                g.extend([0.0, 0.0]);
                (loss, g)
            },
            &theta,
            Some(&idx),
        );
        assert!(report.max_rel_error <= 1e-5, "{report:?}");
    }

    #[test]
    fn transfer_needs_pixel_mode_and_leaves_policy_untouched() {
        let mut c = ExperimentConfig::new(EnvKind::Point);
        c.final_eval_episodes = 2;
        let policy = PixelPolicy::new(2, vec![-1.0; 2], &mut ChaCha8Rng::seed_from_u64(1));
        assert!(matches!(eval_transfer(&c, &policy), Err(OrchestratorError::InputMode(_))));
        c.policy_input = PolicyInput::Pixel;
        let before = policy.clone();
        let a = eval_transfer(&c, &policy).unwrap();
        assert_eq!(policy, before);
        // No domain gap: the novice evaluation is the expert-domain evaluation.
        c.novice_domain = c.expert_domain.clone();
        let same = eval_transfer(&c, &policy).unwrap();
        let world = World::new(c.spec(), c.expert_domain.clone()).unwrap();
        let direct = evaluate_policy(&world, Behavior::Pixel(&policy), 2, c.seed, Purpose::FinalEval, 0, 1).unwrap();
        assert_eq!(same, direct);
        assert!(a.mean_return.is_finite());
    }
}
