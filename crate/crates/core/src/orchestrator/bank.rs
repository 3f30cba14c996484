use rand::Rng;

use super::rollout::{collect_episodes, Behavior, Episode};
use super::{OrchestratorError, Purpose};
use crate::judge::{ClassLabel, DomainLabel};
use crate::trpo::GaussianPolicy;
use crate::worlds::{Observation, World};

/// A rendered demonstration with its labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub observations: Vec<Observation>,
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub class: ClassLabel,
    pub domain: DomainLabel,
}

impl Trajectory {
    pub fn from_episode(ep: Episode, class: ClassLabel, domain: DomainLabel) -> Self {
        Self { observations: ep.frames, states: ep.states, actions: ep.actions, class, domain }
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

/// Stored demonstrations of expert successes and non-expert failures.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MemoryBank {
    pub trajectories: Vec<Trajectory>,
}

impl MemoryBank {
    pub fn count(&self, class: ClassLabel) -> usize {
        self.trajectories.iter().filter(|t| t.class == class).count()
    }

    /// Both classes present and every trajectory long enough to yield at
    /// least one pair at look-ahead `n`.
    pub fn validate(&self, lookahead: usize) -> Result<(), OrchestratorError> {
        if self.count(ClassLabel::Expert) == 0 || self.count(ClassLabel::NonExpert) == 0 {
            return Err(OrchestratorError::Bank("needs trajectories of both classes".into()));
        }
        if let Some(i) = self.trajectories.iter().position(|t| t.len() <= lookahead) {
            return Err(OrchestratorError::Bank(format!("trajectory {i} is too short for look-ahead {lookahead}")));
        }
        Ok(())
    }
}

/// Renders `n_expert` expert-policy and `n_random` uniform-random rollouts
/// in `world`'s domain. Every trajectory is labelled expert-domain.
pub fn build_memory_bank(
    expert: &GaussianPolicy,
    world: &World,
    n_expert: usize,
    n_random: usize,
    seed: u64,
    workers: usize,
) -> Result<MemoryBank, OrchestratorError> {
    let good = collect_episodes(world, Behavior::Gaussian(expert), n_expert, seed, Purpose::BankExpert, 0, true, workers)?;
    let bad = collect_episodes(world, Behavior::Random, n_random, seed, Purpose::BankRandom, 0, true, workers)?;
    let trajectories = good
        .into_iter()
        .map(|e| Trajectory::from_episode(e, ClassLabel::Expert, DomainLabel::ExpertDomain))
        .chain(bad.into_iter().map(|e| Trajectory::from_episode(e, ClassLabel::NonExpert, DomainLabel::ExpertDomain)))
        .collect();
    Ok(MemoryBank { trajectories })
}

/// `count` pairs `(trajectory index, t)` from the bank, half expert and half
/// non-expert (the odd one out is expert), each pair valid at look-ahead `n`.
pub fn sample_bank_pairs<R: Rng + ?Sized>(
    bank: &MemoryBank,
    count: usize,
    lookahead: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>, OrchestratorError> {
    bank.validate(lookahead)?;
    let by_class = |c: ClassLabel| -> Vec<usize> {
        bank.trajectories.iter().enumerate().filter(|(_, t)| t.class == c).map(|(i, _)| i).collect()
    };
    let (experts, others) = (by_class(ClassLabel::Expert), by_class(ClassLabel::NonExpert));
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let pool = if k % 2 == 0 { &experts } else { &others };
        let i = pool[rng.gen_range(0..pool.len())];
        let t = rng.gen_range(0..bank.trajectories[i].len() - lookahead);
        out.push((i, t));
    }
    Ok(out)
}
