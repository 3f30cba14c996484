//! Line-oriented `key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored. The `env` key picks
//! the per-environment defaults that every other key overrides, so it may
//! appear anywhere in the file. Unknown or repeated keys are errors.

use std::fmt;
use std::fmt::Write as _;

use tpil_core::judge::RewardMode;
use tpil_core::orchestrator::{ExperimentConfig, PolicyInput};
use tpil_core::worlds::EnvKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based; 0 when the problem is not tied to a line.
    pub line: usize,
    /// 1-based.
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            f.write_str(&self.message)
        } else {
            write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

type Getter = fn(&ExperimentConfig) -> String;
type Setter = fn(&mut ExperimentConfig, &str) -> Result<(), String>;

struct Key {
    name: &'static str,
    doc: &'static str,
    get: Getter,
    set: Setter,
}

fn num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse '{v}' as a number"))
}

fn boolean(v: &str) -> Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got '{v}'")),
    }
}

fn reals<const N: usize>(v: &str) -> Result<[f64; N], String> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(format!("expected {N} comma-separated numbers, got '{v}'"));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = num(p)?;
    }
    Ok(out)
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(", ")
}

macro_rules! scalar {
    ($name:expr, $doc:literal, $($field:ident).+) => {
        Key {
            name: $name,
            doc: $doc,
            get: |c| c.$($field).+.to_string(),
            set: |c, v| {
                c.$($field).+ = num(v)?;
                Ok(())
            },
        }
    };
}

macro_rules! flag {
    ($name:literal, $doc:literal, $field:ident) => {
        Key {
            name: $name,
            doc: $doc,
            get: |c| c.$field.to_string(),
            set: |c, v| {
                c.$field = boolean(v)?;
                Ok(())
            },
        }
    };
}

macro_rules! domain_keys {
    ($prefix:literal, $d:ident) => {
        [
            scalar!(concat!($prefix, ".camera_yaw_deg"), "camera yaw in degrees, within [-80, 80]", $d.camera_yaw_deg),
            Key {
                name: concat!($prefix, ".background"),
                doc: "background RGB in [0, 1]",
                get: |c| join(&c.$d.background),
                set: |c, v| {
                    c.$d.background = reals(v)?;
                    Ok(())
                },
            },
            Key {
                name: concat!($prefix, ".agent_color"),
                doc: "agent RGB in [0, 1] (point, arm, or pole)",
                get: |c| join(&c.$d.agent_color),
                set: |c, v| {
                    c.$d.agent_color = reals(v)?;
                    Ok(())
                },
            },
            Key {
                name: concat!($prefix, ".target_color"),
                doc: "target RGB in [0, 1]",
                get: |c| join(&c.$d.target_color),
                set: |c, v| {
                    c.$d.target_color = reals(v)?;
                    Ok(())
                },
            },
            Key {
                name: concat!($prefix, ".link_lengths"),
                doc: "reacher link lengths",
                get: |c| join(&c.$d.link_lengths),
                set: |c, v| {
                    c.$d.link_lengths = reals(v)?;
                    Ok(())
                },
            },
        ]
    };
}

fn keys() -> Vec<Key> {
    let mut k = vec![
        Key {
            name: "env",
            doc: "point, reacher or pendulum; selects the defaults of every other key",
            get: |c| c.env.to_string(),
            set: |c, v| {
                c.env = v.parse()?;
                Ok(())
            },
        },
        Key {
            name: "point_goal",
            doc: "point only: `random` samples a goal per episode, `x, y` fixes it",
            get: |c| c.point_goal.map_or_else(|| "random".to_string(), |g| join(&g)),
            set: |c, v| {
                c.point_goal = if v == "random" { None } else { Some(reals(v)?) };
                Ok(())
            },
        },
        scalar!("seed", "master seed", seed),
        scalar!("workers", "rollout worker threads", workers),
        scalar!("lambda", "domain-confusion weight", lambda),
        scalar!("lookahead", "frame offset n of the judged pair", lookahead),
        Key {
            name: "reward_mode",
            doc: "probability (expert probability) or neglog (-ln(1 - p))",
            get: |c| c.reward_mode.to_string(),
            set: |c, v| {
                c.reward_mode = v.parse::<RewardMode>().map_err(|e| e.to_string())?;
                Ok(())
            },
        },
        scalar!("numiters", "imitation iterations", numiters),
        scalar!("expert_iters", "TRPO iterations on the true reward", expert_iters),
        scalar!("episodes_per_iter", "episodes per imitation iteration (each of the two batches)", episodes_per_iter),
        scalar!("expert_episodes_per_iter", "episodes per true-reward TRPO iteration", expert_episodes_per_iter),
        scalar!("disc_minibatch", "discriminator minibatch size", disc_minibatch),
        scalar!("disc_lr", "discriminator ADAM learning rate", disc_lr),
        scalar!("disc_pairs_per_iter", "cap on on-policy pairs per discriminator pass, 0 keeps all", disc_pairs_per_iter),
        scalar!("trpo.max_kl", "trust-region size", trpo.max_kl),
        scalar!("trpo.cg_iters", "conjugate-gradient iterations", trpo.cg_iters),
        scalar!("trpo.damping", "Fisher damping", trpo.damping),
        scalar!("trpo.backtrack_ratio", "line-search shrink factor", trpo.backtrack_ratio),
        scalar!("trpo.max_backtracks", "line-search tries", trpo.max_backtracks),
        scalar!("gamma", "discount", gamma),
        scalar!("gae_lambda", "GAE lambda", gae_lambda),
        scalar!("init_log_std", "initial policy log standard deviation", init_log_std),
        scalar!("value_lr", "value-function ADAM learning rate", value_lr),
        scalar!("value_epochs", "value-function epochs per iteration", value_epochs),
        scalar!("value_minibatch", "value-function minibatch size", value_minibatch),
        scalar!("bank_expert", "expert trajectories in the memory bank", bank_expert),
        scalar!("bank_nonexpert", "random-policy trajectories in the memory bank", bank_nonexpert),
        scalar!("eval_episodes", "episodes behind each metrics row", eval_episodes),
        scalar!("final_eval_episodes", "episodes behind the final-policy evaluation", final_eval_episodes),
        scalar!("transfer_episodes", "expert episodes used to fit the pixel policy", transfer_episodes),
        scalar!("transfer_epochs", "pixel-policy regression epochs", transfer_epochs),
        flag!("domain_confusion", "false forces lambda to 0", domain_confusion),
        flag!("multistep", "false forces the look-ahead to 0", multistep),
        Key {
            name: "policy_input",
            doc: "state or pixel (pixel only for the transfer baseline)",
            get: |c| c.policy_input.to_string(),
            set: |c, v| {
                c.policy_input = v.parse::<PolicyInput>().map_err(|e| e.to_string())?;
                Ok(())
            },
        },
    ];
    k.extend(domain_keys!("expert", expert_domain));
    k.extend(domain_keys!("novice", novice_domain));
    k
}

struct Line<'a> {
    number: usize,
    key: &'a str,
    key_col: usize,
    value: &'a str,
    value_col: usize,
}

fn split_line(number: usize, raw: &str) -> Result<Option<Line<'_>>, ConfigError> {
    let trimmed = raw.trim_start();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(None);
    }
    let indent = raw.len() - trimmed.len();
    let Some(eq) = raw.find('=') else {
        return Err(ConfigError { line: number, column: indent + 1, message: "expected 'key = value'".into() });
    };
    let key = raw[..eq].trim();
    let after = &raw[eq + 1..];
    let value = after.trim();
    let value_col = eq + 2 + (after.len() - after.trim_start().len());
    if key.is_empty() {
        return Err(ConfigError { line: number, column: indent + 1, message: "missing key before '='".into() });
    }
    Ok(Some(Line { number, key, key_col: indent + 1, value, value_col }))
}

/// Parses a configuration file and validates the result.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let lines: Vec<Line> = text
        .lines()
        .enumerate()
        .filter_map(|(i, raw)| split_line(i + 1, raw).transpose())
        .collect::<Result<_, _>>()?;
    let table = keys();
    let mut config = ExperimentConfig::default();
    if let Some(l) = lines.iter().find(|l| l.key == "env") {
        let env: EnvKind =
            l.value.parse().map_err(|e| ConfigError { line: l.number, column: l.value_col, message: e })?;
        config = ExperimentConfig::new(env);
    }
    let mut seen: Vec<(&str, usize)> = Vec::new();
    for l in &lines {
        let Some(key) = table.iter().find(|k| k.name == l.key) else {
            return Err(ConfigError { line: l.number, column: l.key_col, message: format!("unknown key '{}'", l.key) });
        };
        if let Some((_, first)) = seen.iter().find(|(k, _)| *k == l.key) {
            return Err(ConfigError {
                line: l.number,
                column: l.key_col,
                message: format!("'{}' already set on line {first}", l.key),
            });
        }
        seen.push((l.key, l.number));
        if l.value.is_empty() {
            return Err(ConfigError { line: l.number, column: l.value_col, message: format!("'{}' has no value", l.key) });
        }
        (key.set)(&mut config, l.value)
            .map_err(|e| ConfigError { line: l.number, column: l.value_col, message: format!("{}: {e}", l.key) })?;
    }
    config.validate().map_err(|e| ConfigError { line: 0, column: 0, message: e.to_string() })?;
    Ok(config)
}

/// Writes every key, `env` first. Reals use the shortest representation
/// that parses back to the same value, so a parse of the output is exact.
pub fn serialize_config(config: &ExperimentConfig) -> String {
    let mut out = String::new();
    for k in keys() {
        let _ = writeln!(out, "{} = {}", k.name, (k.get)(config));
    }
    out
}

/// Markdown reference of every key with its default for each environment.
pub fn config_reference() -> String {
    let defaults: Vec<ExperimentConfig> = EnvKind::ALL.iter().map(|&e| ExperimentConfig::new(e)).collect();
    let mut out = String::from("# Configuration reference\n\n");
    out.push_str(
        "Files are UTF-8, one `key = value` per line; `#` starts a comment line. \
         `env` selects the defaults below, and every other key overrides them. \
         Unknown or repeated keys are rejected with the line and column.\n\n",
    );
    out.push_str("Fixed architecture: 50x50x3 observations, two 3x3 conv layers with 5 filters each plus 2x2 max pooling, ");
    out.push_str("discriminator heads with two hidden layers of 128 units, policy with two tanh layers of 64 units.\n\n");
    let _ = write!(out, "| key |");
    for d in &defaults {
        let _ = write!(out, " {} |", d.env);
    }
    out.push_str(" meaning |\n|---|");
    for _ in &defaults {
        out.push_str("---|");
    }
    out.push_str("---|\n");
    for k in keys() {
        let _ = write!(out, "| `{}` |", k.name);
        for d in &defaults {
            let _ = write!(out, " {} |", (k.get)(d));
        }
        let _ = writeln!(out, " {} |", k.doc);
    }
    out
}

/// Number of keys a config file can set.
pub fn key_count() -> usize {
    keys().len()
}

