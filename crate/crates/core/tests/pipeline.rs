use tpil_core::judge::{trajectory_rewards, RewardMode};
use tpil_core::orchestrator::{
    build_memory_bank, collect_episodes, train_expert, train_third_person, Behavior, ExperimentConfig, Purpose,
};
use tpil_core::worlds::{EnvKind, World};

fn tiny(kind: EnvKind, workers: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(kind);
    c.numiters = 2;
    c.expert_iters = 2;
    c.episodes_per_iter = 2;
    c.expert_episodes_per_iter = 2;
    c.eval_episodes = 2;
    c.final_eval_episodes = 2;
    c.bank_expert = 1;
    c.bank_nonexpert = 1;
    c.disc_pairs_per_iter = 16;
    c.value_epochs = 1;
    c.workers = workers;
    c
}

#[test]
fn every_world_runs_end_to_end_and_workers_do_not_change_results() {
    for kind in [EnvKind::Point, EnvKind::Reacher, EnvKind::Pendulum] {
        let mut curves = Vec::new();
        for workers in [1, 2] {
            let c = tiny(kind, workers);
            let expert = train_expert(&c, &c.expert_domain).unwrap();
            let world = World::new(c.spec(), c.expert_domain.clone()).unwrap();
            let bank = build_memory_bank(&expert.policy, &world, c.bank_expert, c.bank_nonexpert, c.seed, workers).unwrap();
            let run = train_third_person(&c, &bank).unwrap();
            assert_eq!(run.curve.len(), c.numiters, "{kind:?}");
            assert_eq!(run.steps.len(), c.numiters, "{kind:?}");
            assert!(run.final_eval.mean_return.is_finite(), "{kind:?}");
            curves.push(format!("{:?}", run.curve));
        }
        assert_eq!(curves[0], curves[1], "{kind:?}");
    }
}

#[test]
fn discriminator_rewards_cover_each_step_and_respect_the_mode_range() {
    let c = tiny(EnvKind::Point, 1);
    let expert = train_expert(&c, &c.expert_domain).unwrap();
    let world = World::new(c.spec(), c.expert_domain.clone()).unwrap();
    let bank = build_memory_bank(&expert.policy, &world, 1, 1, c.seed, 1).unwrap();
    let run = train_third_person(&c, &bank).unwrap();
    let novice = World::new(c.spec(), c.novice_domain.clone()).unwrap();
    let eps = collect_episodes(&novice, Behavior::Random, 2, 3, Purpose::Eval, 0, true, 1).unwrap();
    for ep in &eps {
        let p = trajectory_rewards(&run.discriminator, &ep.frames, RewardMode::Probability).unwrap();
        let nl = trajectory_rewards(&run.discriminator, &ep.frames, RewardMode::NegLog).unwrap();
        assert_eq!(p.len(), ep.len());
        assert_eq!(nl.len(), ep.len());
        for (a, b) in p.iter().zip(&nl) {
            assert!((0.0..=1.0).contains(a));
            // -log(1 - p) >= p on [0, 1)
            assert!(*b >= *a - 1e-12);
        }
    }
}
