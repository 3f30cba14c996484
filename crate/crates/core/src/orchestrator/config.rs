use std::fmt;
use std::str::FromStr;

use super::OrchestratorError;
use crate::judge::RewardMode;
use crate::trpo::TrpoConfig;
use crate::worlds::{DomainConfig, EnvKind, EnvSpec};

/// What the learner's policy observes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PolicyInput {
    #[default]
    State,
    Pixel,
}

impl fmt::Display for PolicyInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyInput::State => "state",
            PolicyInput::Pixel => "pixel",
        })
    }
}

impl FromStr for PolicyInput {
    type Err = OrchestratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "state" => Ok(PolicyInput::State),
            "pixel" => Ok(PolicyInput::Pixel),
            other => Err(OrchestratorError::Config(format!("unknown policy input '{other}' (expected state or pixel)"))),
        }
    }
}

/// Everything one experiment arm needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvKind,
    pub expert_domain: DomainConfig,
    pub novice_domain: DomainConfig,
    pub lambda: f64,
    pub lookahead: usize,
    pub reward_mode: RewardMode,
    /// Imitation iterations.
    pub numiters: usize,
    /// TRPO iterations used to train the expert on the true reward.
    pub expert_iters: usize,
    /// Episodes per imitation iteration.
    pub episodes_per_iter: usize,
    /// Episodes per TRPO iteration on the true reward.
    pub expert_episodes_per_iter: usize,
    pub disc_minibatch: usize,
    pub disc_lr: f64,
    /// Cap on on-policy pairs per discriminator pass (0 keeps all); the bank
    /// contributes the same number.
    pub disc_pairs_per_iter: usize,
    pub trpo: TrpoConfig,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub init_log_std: f64,
    pub value_lr: f64,
    pub value_epochs: usize,
    pub value_minibatch: usize,
    pub bank_expert: usize,
    pub bank_nonexpert: usize,
    /// Episodes behind each per-iteration evaluation row.
    pub eval_episodes: usize,
    /// Episodes behind the final-policy evaluation.
    pub final_eval_episodes: usize,
    /// Expert episodes used to fit the pixel policy of the transfer baseline.
    pub transfer_episodes: usize,
    pub transfer_epochs: usize,
    pub seed: u64,
    pub workers: usize,
    pub domain_confusion: bool,
    pub multistep: bool,
    pub policy_input: PolicyInput,
    /// See [`EnvSpec::point_goal`].
    pub point_goal: Option<[f64; 2]>,
}

impl ExperimentConfig {
    pub fn new(env: EnvKind) -> Self {
        Self {
            env,
            expert_domain: DomainConfig::expert(env),
            novice_domain: DomainConfig::novice(env),
            lambda: 0.2,
            lookahead: 4,
            reward_mode: RewardMode::Probability,
            numiters: 40,
            expert_iters: 50,
            episodes_per_iter: 20,
            expert_episodes_per_iter: 60,
            disc_minibatch: 32,
            disc_lr: 1e-3,
            disc_pairs_per_iter: 0,
            trpo: TrpoConfig::default(),
            gamma: 0.99,
            gae_lambda: 0.97,
            init_log_std: -0.5,
            value_lr: 3e-3,
            value_epochs: 10,
            value_minibatch: 64,
            bank_expert: 20,
            bank_nonexpert: 20,
            eval_episodes: 10,
            final_eval_episodes: 50,
            transfer_episodes: 10,
            transfer_epochs: 4,
            seed: 0,
            workers: 1,
            domain_confusion: true,
            multistep: true,
            policy_input: PolicyInput::State,
            point_goal: None,
        }
    }

    /// Domain-loss weight after the ablation switch.
    pub fn effective_lambda(&self) -> f64 {
        if self.domain_confusion {
            self.lambda
        } else {
            0.0
        }
    }

    /// Look-ahead after the ablation switch.
    pub fn effective_lookahead(&self) -> usize {
        if self.multistep {
            self.lookahead
        } else {
            0
        }
    }

    pub fn spec(&self) -> EnvSpec {
        EnvSpec { point_goal: self.point_goal, ..EnvSpec::new(self.env) }
    }

    /// Sets the novice camera yaw, keeping the expert at its own yaw.
    pub fn with_camera_gap(mut self, gap_deg: f64) -> Self {
        self.novice_domain.camera_yaw_deg = self.expert_domain.camera_yaw_deg + gap_deg;
        self
    }

    pub fn validate(&self) -> Result<(), OrchestratorError> {
        let bad = |msg: String| Err(OrchestratorError::Config(msg));
        self.spec().validate()?;
        self.expert_domain.validate()?;
        self.novice_domain.validate()?;
        if self.numiters == 0 || self.expert_iters == 0 {
            return bad("numiters and expert_iters must be at least 1".into());
        }
        if self.episodes_per_iter == 0 || self.expert_episodes_per_iter == 0 || self.eval_episodes == 0 || self.final_eval_episodes == 0 {
            return bad("episode counts must be at least 1".into());
        }
        if self.bank_expert == 0 || self.bank_nonexpert == 0 {
            return bad("the memory bank needs at least one trajectory of each class".into());
        }
        if self.disc_minibatch == 0 || self.value_minibatch == 0 || self.workers == 0 {
            return bad("minibatch sizes and worker count must be at least 1".into());
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be finite and >= 0, got {}", self.lambda));
        }
        if self.lookahead >= self.spec().horizon {
            return bad(format!("lookahead {} must be below the horizon {}", self.lookahead, self.spec().horizon));
        }
        for (name, v) in [("disc_lr", self.disc_lr), ("value_lr", self.value_lr), ("max_kl", self.trpo.max_kl)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gamma and gae_lambda must lie in [0, 1]".into());
        }
        if !(self.trpo.backtrack_ratio > 0.0 && self.trpo.backtrack_ratio < 1.0) || self.trpo.damping < 0.0 {
            return bad("backtrack_ratio must lie in (0, 1) and damping must be >= 0".into());
        }
        Ok(())
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::new(EnvKind::Point)
    }
}
