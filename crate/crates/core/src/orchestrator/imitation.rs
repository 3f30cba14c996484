use rand::seq::index::sample;

use super::bank::{sample_bank_pairs, MemoryBank};
use super::config::{ExperimentConfig, PolicyInput};
use super::rollout::{collect_episodes, evaluate_policy, Behavior, Episode, EvalStats};
use super::{stream, OrchestratorError, Purpose};
use crate::judge::{
    train_discriminator, training_pairs, trajectory_rewards, ClassLabel, DiscriminatorOptim, DiscriminatorParams,
    DomainLabel, LabeledSample,
};
use crate::numkit::AdamConfig;
use crate::trpo::{
    gae_advantages, normalize_advantages, trpo_step, GaussianPolicy, SurrogateBatch, TrpoDiagnostics, ValueFunction,
};
use crate::worlds::{DomainConfig, World};

/// Consecutive iterations at perfect class accuracy before a collapse
/// warning is logged.
pub const COLLAPSE_PATIENCE: usize = 20;

/// One row per training iteration. Discriminator columns are NaN for runs
/// without a discriminator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub iter: usize,
    pub mean_true_return: f64,
    pub std_true_return: f64,
    pub disc_class_acc: f64,
    pub disc_domain_acc: f64,
    pub disc_loss: f64,
    pub policy_kl: f64,
    pub policy_entropy: f64,
}

#[derive(Debug, Clone)]
pub struct ExpertRun {
    pub policy: GaussianPolicy,
    pub curve: Vec<MetricsRow>,
    /// The TRPO update of each iteration.
    pub steps: Vec<TrpoDiagnostics>,
    pub final_eval: EvalStats,
}

#[derive(Debug, Clone)]
pub struct ImitationRun {
    pub policy: GaussianPolicy,
    pub discriminator: DiscriminatorParams,
    pub curve: Vec<MetricsRow>,
    pub steps: Vec<TrpoDiagnostics>,
    pub final_eval: EvalStats,
    /// Whether the collapse warning fired.
    pub collapsed: bool,
}

struct Learner {
    policy: GaussianPolicy,
    value: ValueFunction,
}

impl Learner {
    fn new(config: &ExperimentConfig, slot: u64) -> Self {
        let spec = config.spec();
        let policy = GaussianPolicy::new(
            spec.state_dim,
            spec.action_dim,
            config.init_log_std,
            &mut stream(config.seed, Purpose::PolicyInit, slot, 0),
        );
        let value = ValueFunction::new(
            spec.state_dim,
            AdamConfig::with_lr(config.value_lr),
            &mut stream(config.seed, Purpose::PolicyInit, slot, 1),
        );
        Self { policy, value }
    }

    /// GAE on `rewards`, one TRPO step, then a value refit.
    fn update(
        &mut self,
        episodes: &[Episode],
        rewards: &[Vec<f64>],
        config: &ExperimentConfig,
        iteration: usize,
    ) -> Result<TrpoDiagnostics, OrchestratorError> {
        let states: Vec<Vec<f64>> = episodes.iter().flat_map(|e| e.states.iter().cloned()).collect();
        let actions: Vec<Vec<f64>> = episodes.iter().flat_map(|e| e.actions.iter().cloned()).collect();
        let log_probs: Vec<f64> = episodes.iter().flat_map(|e| e.log_probs.iter().copied()).collect();
        let flat_rewards: Vec<f64> = rewards.iter().flatten().copied().collect();
        let lens: Vec<usize> = episodes.iter().map(Episode::len).collect();
        if flat_rewards.iter().any(|r| !r.is_finite()) {
            return Err(OrchestratorError::Diverged { iteration, detail: "non-finite reward".into() });
        }
        let values = self.value.predict_batch(&states)?;
        let (mut adv, targets) = gae_advantages(&flat_rewards, &values, &lens, config.gamma, config.gae_lambda)?;
        normalize_advantages(&mut adv);
        let batch = SurrogateBatch { states: &states, actions: &actions, old_log_probs: &log_probs, advantages: &adv };
        let diag = trpo_step(&mut self.policy, &batch, &config.trpo)?;
        if diag.nonfinite {
            log::warn!("iteration {iteration}: non-finite policy gradient, step skipped");
        }
        self.value.fit(
            &states,
            &targets,
            config.value_epochs,
            config.value_minibatch,
            &mut stream(config.seed, Purpose::ValueFit, iteration as u64, 0),
        )?;
        Ok(diag)
    }
}

fn require_state_input(config: &ExperimentConfig) -> Result<(), OrchestratorError> {
    if config.policy_input != PolicyInput::State {
        return Err(OrchestratorError::InputMode("policy optimization runs on state input only".into()));
    }
    Ok(())
}

/// TRPO on the true reward in `domain`. Doubles as the RL baseline.
pub fn train_expert(config: &ExperimentConfig, domain: &DomainConfig) -> Result<ExpertRun, OrchestratorError> {
    config.validate()?;
    require_state_input(config)?;
    let world = World::new(config.spec(), domain.clone())?;
    let mut learner = Learner::new(config, 0);
    let mut curve = Vec::with_capacity(config.expert_iters);
    let mut steps = Vec::with_capacity(config.expert_iters);
    for it in 0..config.expert_iters {
        let eps = collect_episodes(
            &world,
            Behavior::Gaussian(&learner.policy),
            config.expert_episodes_per_iter,
            config.seed,
            Purpose::TrainRollout,
            it as u64,
            false,
            config.workers,
        )?;
        let rewards: Vec<Vec<f64>> = eps.iter().map(|e| e.rewards.clone()).collect();
        let diag = learner.update(&eps, &rewards, config, it)?;
        let eval = evaluate_policy(
            &world,
            Behavior::Gaussian(&learner.policy),
            config.eval_episodes,
            config.seed,
            Purpose::Eval,
            it as u64,
            config.workers,
        )?;
        curve.push(MetricsRow {
            iter: it,
            mean_true_return: eval.mean_return,
            std_true_return: eval.std_return,
            disc_class_acc: f64::NAN,
            disc_domain_acc: f64::NAN,
            disc_loss: f64::NAN,
            policy_kl: diag.kl,
            policy_entropy: learner.policy.entropy(),
        });
        steps.push(diag);
        log::debug!("expert iter {it}: return {:.4} final distance {:.4}", eval.mean_return, eval.mean_final_distance);
    }
    let final_eval = final_evaluation(config, &world, Behavior::Gaussian(&learner.policy))?;
    Ok(ExpertRun { policy: learner.policy, curve, steps, final_eval })
}

fn final_evaluation(config: &ExperimentConfig, world: &World, behavior: Behavior) -> Result<EvalStats, OrchestratorError> {
    evaluate_policy(world, behavior, config.final_eval_episodes, config.seed, Purpose::FinalEval, 0, config.workers)
}

/// Adversarial imitation in the novice domain against `bank`, using the
/// effective domain weight and look-ahead of `config`.
pub fn train_imitation(config: &ExperimentConfig, bank: &MemoryBank) -> Result<ImitationRun, OrchestratorError> {
    config.validate()?;
    require_state_input(config)?;
    let lambda = config.effective_lambda();
    let n = config.effective_lookahead();
    bank.validate(n)?;
    let world = World::new(config.spec(), config.novice_domain.clone())?;
    let mut learner = Learner::new(config, 1);
    let mut disc = DiscriminatorParams::new(lambda, n, &mut stream(config.seed, Purpose::DiscInit, 0, 0))?;
    let mut optim = DiscriminatorOptim::new(&disc, AdamConfig::with_lr(config.disc_lr));
    let mut curve = Vec::with_capacity(config.numiters);
    let mut steps = Vec::with_capacity(config.numiters);
    let mut perfect_streak = 0usize;
    let mut collapsed = false;
    for it in 0..config.numiters {
        let iter = it as u64;
        // Discriminator step on fresh novice rollouts and bank samples.
        let novice = collect_episodes(
            &world,
            Behavior::Gaussian(&learner.policy),
            config.episodes_per_iter,
            config.seed,
            Purpose::TrainRollout,
            iter,
            true,
            config.workers,
        )?;
        let mut novice_pairs: Vec<(usize, usize)> = novice
            .iter()
            .enumerate()
            .flat_map(|(e, ep)| training_pairs(ep.len(), n).map(move |(t, _)| (e, t)))
            .collect();
        if config.disc_pairs_per_iter > 0 && novice_pairs.len() > config.disc_pairs_per_iter {
            let mut rng = stream(config.seed, Purpose::BankSample, iter, 1);
            let mut keep = sample(&mut rng, novice_pairs.len(), config.disc_pairs_per_iter).into_vec();
            keep.sort_unstable();
            novice_pairs = keep.into_iter().map(|k| novice_pairs[k]).collect();
        }
        let bank_pairs =
            sample_bank_pairs(bank, novice_pairs.len(), n, &mut stream(config.seed, Purpose::BankSample, iter, 0))?;
        let mut samples = Vec::with_capacity(2 * novice_pairs.len());
        for &(e, t) in &novice_pairs {
            let f = &novice[e].frames;
            samples.push(LabeledSample {
                obs_t: &f[t],
                obs_tn: &f[t + n],
                class: ClassLabel::NonExpert,
                domain: DomainLabel::NoviceDomain,
            });
        }
        for &(i, t) in &bank_pairs {
            let traj = &bank.trajectories[i];
            samples.push(LabeledSample {
                obs_t: &traj.observations[t],
                obs_tn: &traj.observations[t + n],
                class: traj.class,
                domain: DomainLabel::ExpertDomain,
            });
        }
        let stats = train_discriminator(
            &mut disc,
            &mut optim,
            &samples,
            config.disc_minibatch,
            &mut stream(config.seed, Purpose::DiscShuffle, iter, 0),
        )?;
        drop(samples);
        drop(novice);

        // Policy step on a second batch scored by the discriminator.
        let fresh = collect_episodes(
            &world,
            Behavior::Gaussian(&learner.policy),
            config.episodes_per_iter,
            config.seed,
            Purpose::RewardRollout,
            iter,
            true,
            config.workers,
        )?;
        let rewards = fresh
            .iter()
            .map(|ep| trajectory_rewards(&disc, &ep.frames, config.reward_mode))
            .collect::<Result<Vec<_>, _>>()?;
        let diag = learner.update(&fresh, &rewards, config, it)?;
        drop(fresh);

        let eval = evaluate_policy(
            &world,
            Behavior::Gaussian(&learner.policy),
            config.eval_episodes,
            config.seed,
            Purpose::Eval,
            iter,
            config.workers,
        )?;
        curve.push(MetricsRow {
            iter: it,
            mean_true_return: eval.mean_return,
            std_true_return: eval.std_return,
            disc_class_acc: stats.class_accuracy,
            disc_domain_acc: stats.domain_accuracy,
            disc_loss: stats.loss,
            policy_kl: diag.kl,
            policy_entropy: learner.policy.entropy(),
        });
        steps.push(diag);
        log::debug!(
            "imitation iter {it}: return {:.4} class acc {:.3} domain acc {:.3} loss {:.4}",
            eval.mean_return,
            stats.class_accuracy,
            stats.domain_accuracy,
            stats.loss
        );
        perfect_streak = if stats.class_accuracy >= 1.0 { perfect_streak + 1 } else { 0 };
        if perfect_streak == COLLAPSE_PATIENCE {
            collapsed = true;
            log::warn!(
                "iteration {it}: discriminator class accuracy has been 1.0 for {COLLAPSE_PATIENCE} iterations; \
                 rewards may carry little signal"
            );
        }
    }
    let final_eval = final_evaluation(config, &world, Behavior::Gaussian(&learner.policy))?;
    Ok(ImitationRun { policy: learner.policy, discriminator: disc, curve, steps, final_eval, collapsed })
}

/// Third-person imitation: `bank` holds expert-domain renders.
pub fn train_third_person(config: &ExperimentConfig, bank: &MemoryBank) -> Result<ImitationRun, OrchestratorError> {
    train_imitation(config, bank)
}

/// First-person imitation: `bank` must be rendered in the novice domain;
/// the domain term is switched off.
pub fn train_first_person(config: &ExperimentConfig, bank: &MemoryBank) -> Result<ImitationRun, OrchestratorError> {
    let mut c = config.clone();
    c.domain_confusion = false;
    train_imitation(&c, bank)
}
