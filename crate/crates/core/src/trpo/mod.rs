//! Trust-region policy optimization over a diagonal Gaussian policy, with a
//! learned value baseline and generalized advantage estimation.

mod cg;
mod gae;
mod kl;
mod policy;
mod step;
mod value;

pub use cg::{conjugate_gradient, CgResult};
pub use gae::{discounted_return, gae_advantages, normalize_advantages};
pub use kl::{fisher_vector_product, gaussian_kl, gaussian_kl_1d, gaussian_kl_grad};
pub use policy::{gaussian_log_density, GaussianPolicy, LOG_STD_MAX, LOG_STD_MIN, POLICY_HIDDEN};
pub use step::{surrogate, surrogate_grad, trpo_step, SurrogateBatch, TrpoConfig, TrpoDiagnostics};
pub use value::{fit_value, ValueFunction};

use thiserror::Error;

use crate::numkit::NumError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrpoError {
    #[error("length mismatch: {0}")]
    Length(String),
    #[error("conjugate gradient failed: {0}")]
    Solver(String),
    #[error(transparent)]
    Num(#[from] NumError),
}

/// On-policy samples from whole episodes, concatenated in collection order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutBatch {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    /// True or discriminator-derived, depending on the caller.
    pub rewards: Vec<f64>,
    /// Log-densities under the sampling policy.
    pub log_probs: Vec<f64>,
    pub episode_lens: Vec<usize>,
}

impl RolloutBatch {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn validate(&self) -> Result<(), TrpoError> {
        let n = self.states.len();
        if self.actions.len() != n
            || self.rewards.len() != n
            || self.log_probs.len() != n
            || self.episode_lens.iter().sum::<usize>() != n
        {
            return Err(TrpoError::Length(format!(
                "{} states, {} actions, {} rewards, {} log-probs, episodes covering {}",
                n,
                self.actions.len(),
                self.rewards.len(),
                self.log_probs.len(),
                self.episode_lens.iter().sum::<usize>()
            )));
        }
        Ok(())
    }

    /// Appends another batch's episodes.
    pub fn extend(&mut self, other: RolloutBatch) {
        self.states.extend(other.states);
        self.actions.extend(other.actions);
        self.rewards.extend(other.rewards);
        self.log_probs.extend(other.log_probs);
        self.episode_lens.extend(other.episode_lens);
    }

    /// Index ranges of the episodes.
    pub fn episode_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.episode_lens
            .iter()
            .map(|&l| {
                let r = start..start + l;
                start += l;
                r
            })
            .collect()
    }
}
