//! Subcommand parsing and dispatch.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tpil_core::orchestrator::{
    build_memory_bank, eval_transfer, run_sweep, train_expert, train_first_person, train_pixel_policy,
    train_third_person, ArmKind, ArmResult, ExperimentConfig, MemoryBank, MetricsRow, PolicyInput, SweepKind,
    SweepOutput,
};
use tpil_core::trpo::GaussianPolicy;
use tpil_core::worlds::{DomainConfig, World};

use crate::bank_io::{load_bank, save_bank};
use crate::checkpoint::Checkpoint;
use crate::config_file::{parse_config, serialize_config};
use crate::metrics::{metrics_csv, parse_metrics_csv, sig9};
use crate::plot::{render_svg, Series};
use crate::selftest::{gradient_checks, solver_checks};

const EXPERIMENTS: &str = "\
Experiments:
  learning curve, one arm         tpil train-third-person --config c.cfg --out runs/third
  domain accuracy over training   same run; column disc_domain_acc of metrics.csv
  ablations (confusion, look-ahead) tpil sweep ablation2x2 --config c.cfg --out runs/ablation
  domain-weight sweep             tpil sweep lambda --config c.cfg --out runs/lambda
  look-ahead sweep                tpil sweep lookahead --config c.cfg --out runs/lookahead
  camera-angle sweep              tpil sweep camera --config c.cfg --out runs/camera
  baselines                       tpil sweep baselines --config c.cfg --out runs/baselines
  per-baseline learning curves    tpil plot --out b.svg rl=runs/baselines/rl-true-reward/*/metrics.csv ...

Every sweep writes summary.csv, sweep.svg and one metrics.csv per arm and seed.
Exit status: 0 success, 1 runtime failure, 2 usage or configuration error.";

#[derive(Debug, Parser)]
#[command(name = "tpil", version, about = "Third-person adversarial imitation experiments", after_help = EXPERIMENTS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Configuration file (`key = value` lines); defaults apply without one.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Rollout worker threads.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DomainChoice {
    Expert,
    Novice,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// TRPO on the true reward in the expert domain.
    TrainExpert {
        #[command(flatten)]
        common: Common,
    },
    /// Render expert and random rollouts into a memory-bank file.
    CollectDemos {
        #[command(flatten)]
        common: Common,
        /// Expert checkpoint; trained first when absent.
        #[arg(long)]
        expert: Option<PathBuf>,
        /// Domain the bank is rendered in.
        #[arg(long, value_enum, default_value_t = DomainChoice::Expert)]
        domain: DomainChoice,
    },
    /// Imitation from expert-domain demonstrations.
    TrainThirdPerson {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        expert: Option<PathBuf>,
        /// Memory-bank file; built from the expert when absent.
        #[arg(long)]
        bank: Option<PathBuf>,
    },
    /// Imitation from novice-domain demonstrations, without domain confusion.
    TrainFirstPerson {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        expert: Option<PathBuf>,
        #[arg(long)]
        bank: Option<PathBuf>,
    },
    /// Fit a pixel policy in the expert domain, evaluate it in the novice one.
    EvalTransfer {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        expert: Option<PathBuf>,
    },
    /// Run every arm of a sweep over several seeds.
    Sweep {
        #[arg(value_parser = parse_sweep_kind)]
        kind: SweepKind,
        #[command(flatten)]
        common: Common,
        /// Number of seeds, counted up from the configured seed.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
    },
    /// SVG line chart of metrics files; `LABEL=PATH` groups seeds under one label.
    Plot {
        /// Output SVG file.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "mean_true_return")]
        metric: String,
        #[arg(long, default_value = "")]
        title: String,
        #[arg(required = true)]
        inputs: Vec<String>,
    },
    /// Finite-difference, conjugate-gradient and Fisher-product checks.
    Selftest,
}

fn parse_sweep_kind(s: &str) -> Result<SweepKind, String> {
    s.parse().map_err(|e: tpil_core::orchestrator::OrchestratorError| e.to_string())
}

/// Failures that map to exit status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

/// Parses `argv` (program name first), runs the command and returns the
/// process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                2
            } else {
                1
            }
        }
    }
}

fn load_config(common: &Common) -> anyhow::Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| UsageError(format!("cannot read config '{}': {e}", path.display())))?;
            parse_config(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    config.workers = common.workers;
    config.validate().map_err(|e| UsageError(e.to_string()))?;
    Ok(config)
}

fn prepare_out(dir: &Path, config: &ExperimentConfig) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create '{}'", dir.display()))?;
    write(&dir.join("config.cfg"), serialize_config(config))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write '{}'", path.display()))
}

fn write_curve(dir: &Path, label: &str, curve: &[MetricsRow]) -> anyhow::Result<()> {
    write(&dir.join("metrics.csv"), metrics_csv(curve))?;
    let series = [Series { label: label.into(), runs: vec![curve.to_vec()] }];
    write(&dir.join("curve.svg"), render_svg(&series, "mean_true_return", label)?)
}

fn expert_policy(config: &ExperimentConfig, path: Option<&Path>, out: &Path) -> anyhow::Result<GaussianPolicy> {
    if let Some(p) = path {
        let ckpt = Checkpoint::load(p).with_context(|| format!("cannot load expert '{}'", p.display()))?;
        return ckpt.policy("expert").with_context(|| format!("'{}' holds no expert policy", p.display()));
    }
    log::info!("training the expert ({} iterations)", config.expert_iters);
    let mut c = config.clone();
    c.policy_input = PolicyInput::State;
    let run = train_expert(&c, &c.expert_domain)?;
    let mut ckpt = Checkpoint::default();
    ckpt.add_policy("expert", &run.policy);
    ckpt.save(&out.join("expert.ckpt"))?;
    println!("expert final return {} distance {}", sig9(run.final_eval.mean_return), sig9(run.final_eval.mean_final_distance));
    Ok(run.policy)
}

fn bank_for(
    config: &ExperimentConfig,
    domain: &DomainConfig,
    bank: Option<&Path>,
    expert: Option<&Path>,
    out: &Path,
) -> anyhow::Result<MemoryBank> {
    if let Some(p) = bank {
        return load_bank(p).with_context(|| format!("cannot load bank '{}'", p.display()));
    }
    let policy = expert_policy(config, expert, out)?;
    let world = World::new(config.spec(), domain.clone())?;
    Ok(build_memory_bank(&policy, &world, config.bank_expert, config.bank_nonexpert, config.seed, config.workers)?)
}

fn dispatch(command: Command) -> anyhow::Result<()> {
    match command {
        Command::TrainExpert { common } => {
            let mut config = load_config(&common)?;
            config.policy_input = PolicyInput::State;
            prepare_out(&common.out, &config)?;
            let run = train_expert(&config, &config.expert_domain)?;
            write_curve(&common.out, "expert", &run.curve)?;
            let mut ckpt = Checkpoint::default();
            ckpt.add_policy("expert", &run.policy);
            ckpt.save(&common.out.join("expert.ckpt"))?;
            println!(
                "final return {} distance {}",
                sig9(run.final_eval.mean_return),
                sig9(run.final_eval.mean_final_distance)
            );
        }
        Command::CollectDemos { common, expert, domain } => {
            let config = load_config(&common)?;
            prepare_out(&common.out, &config)?;
            let d = match domain {
                DomainChoice::Expert => &config.expert_domain,
                DomainChoice::Novice => &config.novice_domain,
            };
            let bank = bank_for(&config, d, None, expert.as_deref(), &common.out)?;
            save_bank(&common.out.join("bank.tpil"), &bank)?;
            println!("{} trajectories written", bank.trajectories.len());
        }
        Command::TrainThirdPerson { common, expert, bank } => {
            let config = load_config(&common)?;
            prepare_out(&common.out, &config)?;
            let bank = bank_for(&config, &config.expert_domain, bank.as_deref(), expert.as_deref(), &common.out)?;
            let run = train_third_person(&config, &bank)?;
            finish_imitation(&common.out, "third-person", &run)?;
        }
        Command::TrainFirstPerson { common, expert, bank } => {
            let config = load_config(&common)?;
            prepare_out(&common.out, &config)?;
            let bank = bank_for(&config, &config.novice_domain, bank.as_deref(), expert.as_deref(), &common.out)?;
            let run = train_first_person(&config, &bank)?;
            finish_imitation(&common.out, "first-person", &run)?;
        }
        Command::EvalTransfer { common, expert } => {
            let mut config = load_config(&common)?;
            prepare_out(&common.out, &config)?;
            let policy = expert_policy(&config, expert.as_deref(), &common.out)?;
            config.policy_input = PolicyInput::Pixel;
            let (pixel, history) = train_pixel_policy(&config, &policy)?;
            let stats = eval_transfer(&config, &pixel)?;
            let mut ckpt = Checkpoint::default();
            ckpt.add_pixel_policy("pixel", &pixel);
            ckpt.save(&common.out.join("pixel.ckpt"))?;
            let mut report = String::from("epoch,regression_loss\n");
            for (e, l) in history.iter().enumerate() {
                let _ = writeln!(report, "{e},{}", sig9(*l));
            }
            write(&common.out.join("fit.csv"), report)?;
            println!("transfer return {} distance {}", sig9(stats.mean_return), sig9(stats.mean_final_distance));
        }
        Command::Sweep { kind, common, seeds } => {
            let config = load_config(&common)?;
            if seeds == 0 {
                bail!(UsageError("--seeds must be at least 1".into()));
            }
            prepare_out(&common.out, &config)?;
            let seed_list: Vec<u64> = (0..seeds).map(|k| config.seed + k).collect();
            let out = common.out.clone();
            let mut write_err: Option<anyhow::Error> = None;
            let result = run_sweep(kind, &config, &seed_list, |r| {
                report_arm(r);
                if let Err(e) = write_arm(&out, r) {
                    write_err.get_or_insert(e);
                }
            })
            .map_err(|e| UsageError(e.to_string()))?;
            if let Some(e) = write_err {
                return Err(e);
            }
            write(&common.out.join("summary.csv"), summary_csv(&result))?;
            let series = sweep_series(&result);
            if !series.is_empty() {
                write(&common.out.join("sweep.svg"), render_svg(&series, "mean_true_return", kind.name())?)?;
            }
            let failed = result.arms.iter().filter(|a| a.error.is_some()).count();
            if failed > 0 {
                bail!("{failed} of {} arm runs failed; see summary.csv", result.arms.len());
            }
        }
        Command::Plot { out, metric, title, inputs } => {
            let series = read_series(&inputs)?;
            let svg = render_svg(&series, &metric, &title).map_err(|e| UsageError(e.to_string()))?;
            write(&out, svg)?;
        }
        Command::Selftest => {
            let checks: Vec<_> = gradient_checks(1).into_iter().chain(solver_checks(2)).collect();
            for c in &checks {
                println!("{c}");
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                bail!("{failed} of {} checks failed", checks.len());
            }
        }
    }
    Ok(())
}

fn finish_imitation(out: &Path, label: &str, run: &tpil_core::orchestrator::ImitationRun) -> anyhow::Result<()> {
    write_curve(out, label, &run.curve)?;
    let mut ckpt = Checkpoint::default();
    ckpt.add_policy("policy", &run.policy);
    ckpt.add_discriminator("disc", &run.discriminator);
    ckpt.save(&out.join("imitator.ckpt"))?;
    if run.collapsed {
        eprintln!("warning: the discriminator collapsed during training");
    }
    println!("final return {} distance {}", sig9(run.final_eval.mean_return), sig9(run.final_eval.mean_final_distance));
    Ok(())
}

fn report_arm(r: &ArmResult) {
    match (&r.error, r.final_return()) {
        (Some(e), _) => eprintln!("{} seed {}: failed: {e}", r.label, r.seed),
        (None, Some(v)) => println!("{} seed {}: final return {}", r.label, r.seed, sig9(v)),
        (None, None) => {}
    }
}

/// Directory name for a label: anything outside `[A-Za-z0-9._=-]` becomes `_`.
pub fn safe_name(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || "._=-".contains(c) { c } else { '_' }).collect()
}

fn write_arm(out: &Path, r: &ArmResult) -> anyhow::Result<()> {
    if r.curve.is_empty() {
        return Ok(());
    }
    let dir = out.join(safe_name(&r.label)).join(format!("seed-{}", r.seed));
    fs::create_dir_all(&dir).with_context(|| format!("cannot create '{}'", dir.display()))?;
    write(&dir.join("metrics.csv"), metrics_csv(&r.curve))
}

fn kind_name(k: ArmKind) -> &'static str {
    match k {
        ArmKind::ThirdPerson => "third-person",
        ArmKind::FirstPerson => "first-person",
        ArmKind::TrueReward => "true-reward",
        ArmKind::Transfer => "transfer",
        ArmKind::Random => "random",
    }
}

/// One row per arm and seed, then the expert of each seed.
pub fn summary_csv(out: &SweepOutput) -> String {
    let mut s = String::from("label,kind,seed,final_return,final_distance,iterations,error\n");
    for e in &out.experts {
        let (ret, dist, err) = match &e.run {
            Ok(run) => (sig9(run.final_eval.mean_return), sig9(run.final_eval.mean_final_distance), String::new()),
            Err(err) => (String::new(), String::new(), err.replace([',', '\n'], ";")),
        };
        let iters = e.run.as_ref().map_or(0, |r| r.curve.len());
        let _ = writeln!(s, "expert,expert,{},{ret},{dist},{iters},{err}", e.seed);
    }
    for a in &out.arms {
        let (ret, dist) = a
            .final_eval
            .map_or((String::new(), String::new()), |f| (sig9(f.mean_return), sig9(f.mean_final_distance)));
        let err = a.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        let _ = writeln!(s, "{},{},{},{ret},{dist},{},{err}", a.label, kind_name(a.kind), a.seed, a.curve.len());
    }
    s
}

fn sweep_series(out: &SweepOutput) -> Vec<Series> {
    let mut series: Vec<Series> = Vec::new();
    for a in out.arms.iter().filter(|a| !a.curve.is_empty()) {
        match series.iter_mut().find(|s| s.label == a.label) {
            Some(s) => s.runs.push(a.curve.clone()),
            None => series.push(Series { label: a.label.clone(), runs: vec![a.curve.clone()] }),
        }
    }
    series
}

/// `LABEL=PATH` or bare `PATH` (labelled by its parent directory).
fn read_series(inputs: &[String]) -> anyhow::Result<Vec<Series>> {
    let mut series: Vec<Series> = Vec::new();
    for input in inputs {
        let (label, path) = match input.split_once('=') {
            Some((l, p)) if !l.is_empty() && !Path::new(input).exists() => (l.to_string(), PathBuf::from(p)),
            _ => {
                let p = PathBuf::from(input);
                let label = p
                    .parent()
                    .and_then(Path::file_name)
                    .or_else(|| p.file_stem())
                    .map(|s| s.to_string_lossy().into_owned())
                    .ok_or_else(|| anyhow!("cannot derive a label from '{input}'"))?;
                (label, p)
            }
        };
        let text = fs::read_to_string(&path).map_err(|e| UsageError(format!("cannot read '{}': {e}", path.display())))?;
        let rows = parse_metrics_csv(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
        match series.iter_mut().find(|s| s.label == label) {
            Some(s) => s.runs.push(rows),
            None => series.push(Series { label, runs: vec![rows] }),
        }
    }
    Ok(series)
}
