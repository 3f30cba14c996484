use rand::Rng;

use super::transfer::PixelPolicy;
use super::{stream, OrchestratorError, Purpose};
use crate::trpo::{discounted_return, GaussianPolicy};
use crate::worlds::{Observation, World};

/// Who picks the actions.
#[derive(Debug, Clone, Copy)]
pub enum Behavior<'a> {
    Gaussian(&'a GaussianPolicy),
    /// Uniform over the action box.
    Random,
    Pixel(&'a PixelPolicy),
}

/// One finished episode. `frames[t]` renders the state the action
/// `actions[t]` was chosen in.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub log_probs: Vec<f64>,
    /// True environment rewards.
    pub rewards: Vec<f64>,
    /// Empty unless rendering was requested.
    pub frames: Vec<Observation>,
    pub final_goal_distance: f64,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

fn run_episode<R: Rng + ?Sized>(
    world: &World,
    behavior: Behavior,
    rng: &mut R,
    render: bool,
) -> Result<Episode, OrchestratorError> {
    let spec = &world.spec;
    let horizon = spec.horizon;
    let keep_frames = render || matches!(behavior, Behavior::Pixel(_));
    let mut ep = Episode {
        states: Vec::with_capacity(horizon),
        actions: Vec::with_capacity(horizon),
        log_probs: Vec::with_capacity(horizon),
        rewards: Vec::with_capacity(horizon),
        frames: Vec::with_capacity(if keep_frames { horizon } else { 0 }),
        final_goal_distance: 0.0,
    };
    let mut s = world.reset(rng);
    for t in 0..horizon {
        let proprio = world.proprio(&s);
        if keep_frames {
            ep.frames.push(world.render(&s));
        }
        let (action, logp) = match behavior {
            Behavior::Gaussian(p) => p.act(&proprio, rng)?,
            Behavior::Random => {
                let a: Vec<f64> = spec.action_low.iter().zip(&spec.action_high).map(|(lo, hi)| rng.gen_range(*lo..*hi)).collect();
                let logp = -spec.action_low.iter().zip(&spec.action_high).map(|(lo, hi)| (hi - lo).ln()).sum::<f64>();
                (a, logp)
            }
            Behavior::Pixel(p) => {
                let prev = &ep.frames[t.saturating_sub(1)];
                p.act(&ep.frames[t], prev, rng)?
            }
        };
        let out = world.step(&s, &action)?;
        ep.states.push(proprio);
        ep.actions.push(action);
        ep.log_probs.push(logp);
        ep.rewards.push(out.reward);
        s = out.state;
    }
    if !render {
        ep.frames.clear();
    }
    ep.final_goal_distance = world.goal_distance(&s);
    Ok(ep)
}

/// Collects `count` episodes. Episode `e` draws everything from the stream
/// `(seed, purpose, iteration, e)`, so the result does not depend on
/// `workers`; episodes are returned in index order.
#[allow(clippy::too_many_arguments)]
pub fn collect_episodes(
    world: &World,
    behavior: Behavior,
    count: usize,
    seed: u64,
    purpose: Purpose,
    iteration: u64,
    render: bool,
    workers: usize,
) -> Result<Vec<Episode>, OrchestratorError> {
    let one = |e: usize| run_episode(world, behavior, &mut stream(seed, purpose, iteration, e as u64), render);
    let workers = workers.clamp(1, count.max(1));
    if workers == 1 {
        return (0..count).map(one).collect();
    }
    let chunk = count.div_ceil(workers);
    let results: Vec<Result<Vec<Episode>, OrchestratorError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let one = &one;
                scope.spawn(move || (w * chunk..((w + 1) * chunk).min(count)).map(one).collect())
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("rollout worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(count);
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// Monte-Carlo estimate of the discounted true return.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalStats {
    pub mean_return: f64,
    pub std_return: f64,
    pub mean_final_distance: f64,
    /// Mean undiscounted per-step reward.
    pub mean_step_reward: f64,
    pub episodes: usize,
}

impl EvalStats {
    pub fn from_episodes(episodes: &[Episode], gamma: f64) -> Self {
        let n = episodes.len().max(1) as f64;
        let returns: Vec<f64> = episodes.iter().map(|e| discounted_return(&e.rewards, gamma)).collect();
        let mean = returns.iter().sum::<f64>() / n;
        let std = (returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
        let steps: usize = episodes.iter().map(Episode::len).sum();
        Self {
            mean_return: mean,
            std_return: std,
            mean_final_distance: episodes.iter().map(|e| e.final_goal_distance).sum::<f64>() / n,
            mean_step_reward: episodes.iter().flat_map(|e| &e.rewards).sum::<f64>() / steps.max(1) as f64,
            episodes: episodes.len(),
        }
    }
}

/// Evaluates with policy noise active on fresh episodes from the `purpose`
/// stream (one of the evaluation purposes).
pub fn evaluate_policy(
    world: &World,
    behavior: Behavior,
    episodes: usize,
    seed: u64,
    purpose: Purpose,
    iteration: u64,
    workers: usize,
) -> Result<EvalStats, OrchestratorError> {
    let eps = collect_episodes(world, behavior, episodes, seed, purpose, iteration, false, workers)?;
    let stats = EvalStats::from_episodes(&eps, world.spec.discount);
    if !stats.mean_return.is_finite() {
        return Err(OrchestratorError::Diverged { iteration: iteration as usize, detail: "non-finite return".into() });
    }
    Ok(stats)
}
