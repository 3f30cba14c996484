use std::fmt;
use std::str::FromStr;

use super::{reward_partner, DiscriminatorParams, JudgeError};
use crate::worlds::Observation;

/// How the class head's expert probability becomes a reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RewardMode {
    /// `P(expert)`.
    #[default]
    Probability,
    /// `-log(1 - P(expert) + 1e-8)`.
    NegLog,
}

impl RewardMode {
    pub fn apply(self, p_expert: f64) -> f64 {
        match self {
            RewardMode::Probability => p_expert,
            RewardMode::NegLog => -(1.0 - p_expert + 1e-8).ln(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RewardMode::Probability => "probability",
            RewardMode::NegLog => "neglog",
        }
    }
}

impl fmt::Display for RewardMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RewardMode {
    type Err = JudgeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "probability" => Ok(RewardMode::Probability),
            "neglog" => Ok(RewardMode::NegLog),
            other => Err(JudgeError::Invalid(format!("unknown reward mode '{other}' (expected probability or neglog)"))),
        }
    }
}

/// Reward for a single frame pair.
pub fn pair_reward(
    params: &DiscriminatorParams,
    obs_t: &Observation,
    obs_tn: &Observation,
    mode: RewardMode,
) -> Result<f64, JudgeError> {
    let a = params.extract_features(obs_t)?;
    let b = params.extract_features(obs_tn)?;
    Ok(mode.apply(params.classify_pair(&a, &b)?.p_expert))
}

/// Per-step rewards for a rendered trajectory. Step `t` is scored on the
/// pair `(t, min(t + n, T - 1))`; each frame's features are computed once.
pub fn trajectory_rewards(
    params: &DiscriminatorParams,
    frames: &[Observation],
    mode: RewardMode,
) -> Result<Vec<f64>, JudgeError> {
    let feats = frames.iter().map(|f| params.extract_features(f)).collect::<Result<Vec<_>, _>>()?;
    (0..frames.len())
        .map(|t| {
            let u = reward_partner(t, params.lookahead, frames.len());
            Ok(mode.apply(params.classify_pair(&feats[t], &feats[u])?.p_expert))
        })
        .collect()
}
