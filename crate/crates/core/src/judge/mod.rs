//! Domain-confused discriminator.
//!
//! A shared convolutional feature extractor maps each observation to a
//! feature vector `sigma`. The class head judges a pair
//! `(sigma_t, sigma_{t+n})` as expert or non-expert; the domain head judges
//! `sigma_t` alone as expert-domain or novice-domain, behind a gradient
//! reversal so the extractor is pushed away from domain-revealing features.
//! The class head's expert probability is the imitation reward.

mod features;
mod loss;
mod reward;

pub use features::{FeatureExtractor, FEATURE_LEN};
pub use loss::{
    class_accuracy, discriminator_loss, domain_accuracy, evaluate_loss, train_discriminator, DiscriminatorOptim,
    LabeledSample, LossBreakdown, TrainStats,
};
pub use reward::{pair_reward, trajectory_rewards, RewardMode};

use rand::Rng;
use thiserror::Error;

use crate::numkit::{softmax, Activation, LayerParams, Mlp, NumError};
use crate::worlds::Observation;

/// Width of the hidden layers of both heads.
pub const HIDDEN: usize = 128;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JudgeError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid discriminator setting: {0}")]
    Invalid(String),
    #[error(transparent)]
    Num(#[from] NumError),
}

/// Expert (index 0) or non-expert (index 1) behavior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassLabel {
    Expert,
    NonExpert,
}

/// Which environment variant produced an observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DomainLabel {
    ExpertDomain,
    NoviceDomain,
}

impl ClassLabel {
    pub fn index(self) -> usize {
        match self {
            ClassLabel::Expert => 0,
            ClassLabel::NonExpert => 1,
        }
    }

    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            0 => Some(ClassLabel::Expert),
            1 => Some(ClassLabel::NonExpert),
            _ => None,
        }
    }
}

impl DomainLabel {
    pub fn index(self) -> usize {
        match self {
            DomainLabel::ExpertDomain => 0,
            DomainLabel::NoviceDomain => 1,
        }
    }

    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            0 => Some(DomainLabel::ExpertDomain),
            1 => Some(DomainLabel::NoviceDomain),
            _ => None,
        }
    }
}

/// Argmax over two logits with ties going to index 0.
pub fn argmax2(logits: &[f64]) -> usize {
    usize::from(logits[1] > logits[0])
}

/// Class-head output for one frame pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPrediction {
    pub logits: [f64; 2],
    pub p_expert: f64,
}

/// Feature extractor, class head, domain head, domain-loss weight and
/// look-ahead.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorParams {
    pub features: FeatureExtractor,
    /// `2 * FEATURE_LEN -> 128 -> 128 -> 2`, relu.
    pub class_head: Mlp,
    /// `FEATURE_LEN -> 128 -> 128 -> 2`, relu.
    pub domain_head: Mlp,
    pub lambda: f64,
    pub lookahead: usize,
}

impl DiscriminatorParams {
    pub fn new<R: Rng + ?Sized>(lambda: f64, lookahead: usize, rng: &mut R) -> Result<Self, JudgeError> {
        check_lambda(lambda)?;
        Ok(Self {
            features: FeatureExtractor::new(rng),
            class_head: Mlp::new(&[2 * FEATURE_LEN, HIDDEN, HIDDEN, 2], Activation::Relu, rng),
            domain_head: Mlp::new(&[FEATURE_LEN, HIDDEN, HIDDEN, 2], Activation::Relu, rng),
            lambda,
            lookahead,
        })
    }

    /// Same architecture with every weight and bias zero.
    pub fn zeroed(lambda: f64, lookahead: usize) -> Result<Self, JudgeError> {
        let mut p = Self::new(lambda, lookahead, &mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0))?;
        p.layers_mut().into_iter().for_each(|l| *l = l.zeroed_like());
        Ok(p)
    }

    pub fn set_lambda(&mut self, lambda: f64) -> Result<(), JudgeError> {
        check_lambda(lambda)?;
        self.lambda = lambda;
        Ok(())
    }

    /// Layers in canonical order: conv1, conv2, class head, domain head.
    pub fn layers(&self) -> Vec<&LayerParams> {
        let mut v = vec![&self.features.conv1, &self.features.conv2];
        v.extend(self.class_head.layers.iter());
        v.extend(self.domain_head.layers.iter());
        v
    }

    pub fn layers_mut(&mut self) -> Vec<&mut LayerParams> {
        let mut v = vec![&mut self.features.conv1, &mut self.features.conv2];
        v.extend(self.class_head.layers.iter_mut());
        v.extend(self.domain_head.layers.iter_mut());
        v
    }

    pub fn zero_grad(&mut self) {
        self.layers_mut().into_iter().for_each(LayerParams::zero_grad);
    }

    pub fn num_params(&self) -> usize {
        self.layers().iter().map(|l| l.num_params()).sum()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        self.layers().iter().for_each(|l| l.extend_params(&mut out));
        out
    }

    pub fn grads(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        self.layers().iter().for_each(|l| l.extend_grads(&mut out));
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<(), JudgeError> {
        if flat.len() != self.num_params() {
            return Err(NumError::shape("discriminator_set_params", self.num_params().to_string(), flat.len().to_string()).into());
        }
        let mut rest = flat;
        for l in self.layers_mut() {
            rest = l.load_params(rest);
        }
        Ok(())
    }

    /// Index range of the feature-extractor parameters in [`Self::params`].
    pub fn feature_param_range(&self) -> std::ops::Range<usize> {
        0..self.features.conv1.num_params() + self.features.conv2.num_params()
    }

    pub fn class_head_param_range(&self) -> std::ops::Range<usize> {
        let start = self.feature_param_range().end;
        start..start + self.class_head.num_params()
    }

    pub fn domain_head_param_range(&self) -> std::ops::Range<usize> {
        let start = self.class_head_param_range().end;
        start..start + self.domain_head.num_params()
    }

    pub fn extract_features(&self, obs: &Observation) -> Result<Vec<f64>, JudgeError> {
        Ok(self.features.forward(&obs.image)?)
    }

    pub fn classify_pair(&self, sigma_t: &[f64], sigma_tn: &[f64]) -> Result<PairPrediction, JudgeError> {
        check_feature_len(sigma_t)?;
        check_feature_len(sigma_tn)?;
        let mut joint = Vec::with_capacity(2 * FEATURE_LEN);
        joint.extend_from_slice(sigma_t);
        joint.extend_from_slice(sigma_tn);
        let out = self.class_head.forward(&joint)?;
        let logits = [out[0], out[1]];
        Ok(PairPrediction { logits, p_expert: softmax(&logits)[0] })
    }

    /// Domain logits for one feature vector. The forward pass goes through
    /// the gradient reversal, which is the identity here.
    pub fn classify_domain(&self, sigma: &[f64]) -> Result<[f64; 2], JudgeError> {
        check_feature_len(sigma)?;
        let reversed = crate::numkit::gradient_reversal(&crate::numkit::Tensor::vector(sigma.to_vec()));
        let out = self.domain_head.forward(reversed.data())?;
        Ok([out[0], out[1]])
    }
}

fn check_lambda(lambda: f64) -> Result<(), JudgeError> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(JudgeError::Invalid(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    Ok(())
}

fn check_feature_len(sigma: &[f64]) -> Result<(), JudgeError> {
    if sigma.len() != FEATURE_LEN {
        return Err(NumError::shape("discriminator", format!("{FEATURE_LEN} features"), sigma.len().to_string()).into());
    }
    Ok(())
}

/// Training pairs `(t, t + n)` of a trajectory of length `len`; pairs that
/// would run past the end are dropped.
pub fn training_pairs(len: usize, lookahead: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..len.saturating_sub(lookahead)).map(move |t| (t, t + lookahead))
}

/// Reward-time pair partner of `t`: `min(t + n, len - 1)`.
pub fn reward_partner(t: usize, lookahead: usize, len: usize) -> usize {
    (t + lookahead).min(len - 1)
}
