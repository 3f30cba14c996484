//! End-to-end experiments: expert training, memory-bank construction, the
//! alternating discriminator/policy loop, baselines and sweeps.

mod bank;
mod config;
mod imitation;
mod rollout;
mod sweep;
mod transfer;

pub use bank::{build_memory_bank, sample_bank_pairs, MemoryBank, Trajectory};
pub use config::{ExperimentConfig, PolicyInput};
pub use imitation::{
    train_expert, train_first_person, train_imitation, train_third_person, ExpertRun, ImitationRun, MetricsRow,
    COLLAPSE_PATIENCE,
};
pub use rollout::{collect_episodes, evaluate_policy, Behavior, Episode, EvalStats};
pub use sweep::{
    run_arms, run_sweep, sweep_arms, ArmKind, ArmResult, ExpertSummary, SweepArm, SweepKind, SweepOutput, CAMERA_GRID,
    CAMERA_ITERS, LAMBDA_GRID, LOOKAHEAD_GRID,
};
pub use transfer::{eval_transfer, train_pixel_policy, PixelPolicy, PIXEL_FILTERS};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::judge::JudgeError;
use crate::numkit::NumError;
use crate::trpo::TrpoError;
use crate::worlds::WorldError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrchestratorError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("training diverged at iteration {iteration}: {detail}")]
    Diverged { iteration: usize, detail: String },
    #[error("policy input mode mismatch: {0}")]
    InputMode(String),
    #[error("invalid memory bank: {0}")]
    Bank(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error(transparent)]
    Trpo(#[from] TrpoError),
    #[error(transparent)]
    Num(#[from] NumError),
}

/// What a random stream is used for. Every purpose gets its own key space,
/// so for example evaluation never perturbs training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    PolicyInit = 1,
    DiscInit = 2,
    TrainRollout = 3,
    RewardRollout = 4,
    Eval = 5,
    FinalEval = 6,
    BankExpert = 7,
    BankRandom = 8,
    BankSample = 9,
    DiscShuffle = 10,
    ValueFit = 11,
    PixelDemos = 12,
    PixelFit = 13,
}

/// Independent ChaCha stream keyed by `(seed, purpose, a, b)`; `a` and `b`
/// are typically the iteration and episode index.
pub fn stream(seed: u64, purpose: Purpose, a: u64, b: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (chunk, word) in key.chunks_exact_mut(8).zip([seed, purpose as u64, a, b]) {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
