use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use super::bank::{build_memory_bank, MemoryBank};
use super::config::{ExperimentConfig, PolicyInput};
use super::imitation::{train_expert, train_first_person, train_third_person, ExpertRun, MetricsRow};
use super::rollout::{evaluate_policy, Behavior, EvalStats};
use super::transfer::{eval_transfer, train_pixel_policy};
use super::{OrchestratorError, Purpose};
use crate::worlds::{DomainConfig, EnvKind, World};

/// Which grid to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Lambda,
    Lookahead,
    Camera,
    Ablation2x2,
    Baselines,
}

impl SweepKind {
    pub const ALL: [SweepKind; 5] =
        [SweepKind::Lambda, SweepKind::Lookahead, SweepKind::Camera, SweepKind::Ablation2x2, SweepKind::Baselines];

    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Lambda => "lambda",
            SweepKind::Lookahead => "lookahead",
            SweepKind::Camera => "camera",
            SweepKind::Ablation2x2 => "ablation2x2",
            SweepKind::Baselines => "baselines",
        }
    }
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepKind {
    type Err = OrchestratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SweepKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            OrchestratorError::Config(format!(
                "unknown sweep '{s}' (expected one of lambda, lookahead, camera, ablation2x2, baselines)"
            ))
        })
    }
}

/// How an arm is trained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArmKind {
    ThirdPerson,
    FirstPerson,
    /// TRPO on the true reward in the novice domain.
    TrueReward,
    /// Pixel policy fitted in the expert domain, evaluated in the novice one.
    Transfer,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepArm {
    pub label: String,
    pub kind: ArmKind,
    pub config: ExperimentConfig,
}

/// Outcome of one arm for one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmResult {
    pub label: String,
    pub kind: ArmKind,
    pub seed: u64,
    /// Final-policy evaluation in the novice domain; `None` if the arm failed.
    pub final_eval: Option<EvalStats>,
    pub curve: Vec<MetricsRow>,
    pub error: Option<String>,
}

impl ArmResult {
    pub fn final_return(&self) -> Option<f64> {
        self.final_eval.map(|e| e.mean_return)
    }
}

pub const LAMBDA_GRID: [f64; 5] = [0.0, 0.05, 0.2, 1.0, 10.0];
pub const LOOKAHEAD_GRID: [usize; 4] = [0, 1, 4, 12];
pub const CAMERA_GRID: [f64; 6] = [0.0, 10.0, 20.0, 30.0, 40.0, 60.0];
/// Imitation iterations behind each camera-sweep arm.
pub const CAMERA_ITERS: usize = 20;

fn arm(label: impl Into<String>, kind: ArmKind, config: ExperimentConfig) -> SweepArm {
    SweepArm { label: label.into(), kind, config }
}

/// The arms of a sweep, derived from `base`.
pub fn sweep_arms(kind: SweepKind, base: &ExperimentConfig) -> Result<Vec<SweepArm>, OrchestratorError> {
    let third = |f: &dyn Fn(&mut ExperimentConfig)| {
        let mut c = base.clone();
        f(&mut c);
        c
    };
    Ok(match kind {
        SweepKind::Lambda => LAMBDA_GRID
            .iter()
            .map(|&l| arm(format!("lambda={l}"), ArmKind::ThirdPerson, third(&|c| c.lambda = l)))
            .collect(),
        SweepKind::Lookahead => LOOKAHEAD_GRID
            .iter()
            .map(|&n| arm(format!("lookahead={n}"), ArmKind::ThirdPerson, third(&|c| c.lookahead = n)))
            .collect(),
        SweepKind::Camera => {
            if base.env == EnvKind::Pendulum {
                return Err(OrchestratorError::Config(
                    "the camera sweep covers point and reacher only; pendulum domains differ in color".into(),
                ));
            }
            CAMERA_GRID
                .iter()
                .map(|&g| {
                    let mut c = base.clone().with_camera_gap(g);
                    c.numiters = CAMERA_ITERS;
                    arm(format!("camera={g}"), ArmKind::ThirdPerson, c)
                })
                .collect()
        }
        SweepKind::Ablation2x2 => [(true, true, "full"), (false, true, "no-confusion"), (true, false, "no-multistep"), (false, false, "neither")]
            .into_iter()
            .map(|(dc, ms, label)| {
                arm(
                    label,
                    ArmKind::ThirdPerson,
                    third(&|c| {
                        c.domain_confusion = dc;
                        c.multistep = ms;
                    }),
                )
            })
            .collect(),
        SweepKind::Baselines => vec![
            arm("rl-true-reward", ArmKind::TrueReward, base.clone()),
            arm("first-person", ArmKind::FirstPerson, base.clone()),
            arm("third-person", ArmKind::ThirdPerson, base.clone()),
            arm("transfer", ArmKind::Transfer, third(&|c| c.policy_input = PolicyInput::Pixel)),
            arm("random", ArmKind::Random, base.clone()),
        ],
    })
}

/// Per-seed expert training outcome, kept alongside the arm results.
#[derive(Debug, Clone)]
pub struct ExpertSummary {
    pub seed: u64,
    pub run: Result<ExpertRun, String>,
    /// Wall-clock training time.
    pub seconds: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutput {
    pub experts: Vec<ExpertSummary>,
    pub arms: Vec<ArmResult>,
}

impl SweepOutput {
    pub fn for_label<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a ArmResult> + 'a {
        self.arms.iter().filter(move |a| a.label == label)
    }

    /// Mean final return of an arm over its successful seeds.
    pub fn mean_final_return(&self, label: &str) -> Option<f64> {
        let v: Vec<f64> = self.for_label(label).filter_map(ArmResult::final_return).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Per-seed resources shared by the arms: the expert and the banks.
struct SeedContext {
    expert: ExpertRun,
    third_bank: Option<MemoryBank>,
    first_banks: Vec<(DomainConfig, MemoryBank)>,
}

impl SeedContext {
    fn third_bank(&mut self, config: &ExperimentConfig) -> Result<&MemoryBank, OrchestratorError> {
        if self.third_bank.is_none() {
            let world = World::new(config.spec(), config.expert_domain.clone())?;
            self.third_bank = Some(build_memory_bank(
                &self.expert.policy,
                &world,
                config.bank_expert,
                config.bank_nonexpert,
                config.seed,
                config.workers,
            )?);
        }
        Ok(self.third_bank.as_ref().expect("just built"))
    }

    fn first_bank(&mut self, config: &ExperimentConfig) -> Result<&MemoryBank, OrchestratorError> {
        let pos = match self.first_banks.iter().position(|(d, _)| *d == config.novice_domain) {
            Some(p) => p,
            None => {
                let world = World::new(config.spec(), config.novice_domain.clone())?;
                let bank = build_memory_bank(
                    &self.expert.policy,
                    &world,
                    config.bank_expert,
                    config.bank_nonexpert,
                    config.seed,
                    config.workers,
                )?;
                self.first_banks.push((config.novice_domain.clone(), bank));
                self.first_banks.len() - 1
            }
        };
        Ok(&self.first_banks[pos].1)
    }
}

fn run_one(ctx: &mut SeedContext, arm: &SweepArm, config: &ExperimentConfig) -> Result<(EvalStats, Vec<MetricsRow>), OrchestratorError> {
    match arm.kind {
        ArmKind::ThirdPerson => {
            let run = train_third_person(config, ctx.third_bank(config)?)?;
            Ok((run.final_eval, run.curve))
        }
        ArmKind::FirstPerson => {
            let run = train_first_person(config, ctx.first_bank(config)?)?;
            Ok((run.final_eval, run.curve))
        }
        ArmKind::TrueReward => {
            let run = train_expert(config, &config.novice_domain)?;
            Ok((run.final_eval, run.curve))
        }
        ArmKind::Transfer => {
            let (pixel, _) = train_pixel_policy(config, &ctx.expert.policy)?;
            Ok((eval_transfer(config, &pixel)?, Vec::new()))
        }
        ArmKind::Random => {
            let world = World::new(config.spec(), config.novice_domain.clone())?;
            let eval = evaluate_policy(
                &world,
                Behavior::Random,
                config.final_eval_episodes,
                config.seed,
                Purpose::FinalEval,
                0,
                config.workers,
            )?;
            Ok((eval, Vec::new()))
        }
    }
}

/// Runs every arm for every seed. Failures are recorded in the results
/// and the sweep moves on. `on_result` sees each result as it completes.
pub fn run_arms(
    arms: &[SweepArm],
    base: &ExperimentConfig,
    seeds: &[u64],
    mut on_result: impl FnMut(&ArmResult),
) -> SweepOutput {
    let mut out = SweepOutput::default();
    for &seed in seeds {
        let mut expert_cfg = base.clone();
        expert_cfg.seed = seed;
        expert_cfg.policy_input = PolicyInput::State;
        let started = Instant::now();
        let expert = train_expert(&expert_cfg, &expert_cfg.expert_domain.clone());
        let seconds = started.elapsed().as_secs_f64();
        out.experts.push(ExpertSummary { seed, run: expert.clone().map_err(|e| e.to_string()), seconds });
        let mut ctx = expert.map(|expert| SeedContext { expert, third_bank: None, first_banks: Vec::new() });
        for arm in arms {
            let mut config = arm.config.clone();
            config.seed = seed;
            let outcome = match &mut ctx {
                Ok(ctx) => run_one(ctx, arm, &config),
                Err(e) => Err(OrchestratorError::Config(format!("expert training failed: {e}"))),
            };
            let result = match outcome {
                Ok((eval, curve)) => ArmResult { label: arm.label.clone(), kind: arm.kind, seed, final_eval: Some(eval), curve, error: None },
                Err(e) => {
                    log::error!("arm {} seed {seed} failed: {e}", arm.label);
                    ArmResult { label: arm.label.clone(), kind: arm.kind, seed, final_eval: None, curve: Vec::new(), error: Some(e.to_string()) }
                }
            };
            on_result(&result);
            out.arms.push(result);
        }
    }
    out
}

/// Runs a named sweep.
pub fn run_sweep(
    kind: SweepKind,
    base: &ExperimentConfig,
    seeds: &[u64],
    on_result: impl FnMut(&ArmResult),
) -> Result<SweepOutput, OrchestratorError> {
    base.validate()?;
    let arms = sweep_arms(kind, base)?;
    Ok(run_arms(&arms, base, seeds, on_result))
}
