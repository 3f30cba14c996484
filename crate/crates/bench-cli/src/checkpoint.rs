//! Parameter checkpoints.
//!
//! Same conventions as the bank file: magic `TPCK`, version `u32 = 1`,
//! entry count `u32`, then per entry a name (`u32` length + UTF-8 bytes),
//! rank `u32`, dims `u32 * rank` and the values. Values are `f64` so a
//! reload restores the exact parameters.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tpil_core::judge::DiscriminatorParams;
use tpil_core::numkit::{LayerParams, Tensor};
use tpil_core::orchestrator::PixelPolicy;
use tpil_core::trpo::GaussianPolicy;

use crate::bank_io::{Cursor, FormatError};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"TPCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// Named parameter arrays in a fixed order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub entries: Vec<Entry>,
}

fn invalid(what: &str, detail: impl Into<String>) -> FormatError {
    FormatError::Invalid { what: what.into(), offset: 0, detail: detail.into() }
}

impl Checkpoint {
    pub fn push(&mut self, name: impl Into<String>, shape: &[usize], data: &[f64]) {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        self.entries.push(Entry { name: name.into(), shape: shape.to_vec(), data: data.to_vec() });
    }

    pub fn get(&self, name: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.name == name)
    }

    fn require(&self, name: &str) -> Result<&Entry, FormatError> {
        self.get(name).ok_or_else(|| invalid("checkpoint", format!("missing entry '{name}'")))
    }

    fn push_layer(&mut self, prefix: &str, layer: &LayerParams) {
        self.push(format!("{prefix}.weights"), layer.weights.shape(), layer.weights.data());
        self.push(format!("{prefix}.biases"), layer.biases.shape(), layer.biases.data());
    }

    /// Loads a layer whose shapes are already known (from a freshly built
    /// network); a shape mismatch is an error.
    fn load_layer(&self, prefix: &str, layer: &mut LayerParams) -> Result<(), FormatError> {
        for (suffix, target) in [("weights", &mut layer.weights), ("biases", &mut layer.biases)] {
            let name = format!("{prefix}.{suffix}");
            let e = self.require(&name)?;
            if e.shape != target.shape() {
                return Err(invalid(&name, format!("shape {:?}, expected {:?}", e.shape, target.shape())));
            }
            *target = Tensor::new(e.shape.clone(), e.data.clone()).map_err(|err| invalid(&name, err.to_string()))?;
        }
        Ok(())
    }

    pub fn encode(&self) -> Result<Vec<u8>, FormatError> {
        let mut out = Vec::new();
        out.extend_from_slice(&CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        let u32_of = |v: usize, what: &str| u32::try_from(v).map_err(|_| invalid(what, format!("{v} exceeds u32")));
        out.extend_from_slice(&u32_of(self.entries.len(), "entry count")?.to_le_bytes());
        for e in &self.entries {
            if e.shape.iter().product::<usize>() != e.data.len() {
                return Err(invalid(&e.name, "shape does not match data length"));
            }
            out.extend_from_slice(&u32_of(e.name.len(), "name length")?.to_le_bytes());
            out.extend_from_slice(e.name.as_bytes());
            out.extend_from_slice(&u32_of(e.shape.len(), "rank")?.to_le_bytes());
            for &d in &e.shape {
                out.extend_from_slice(&u32_of(d, "dimension")?.to_le_bytes());
            }
            for v in &e.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, FormatError> {
        let mut cur = Cursor::new(bytes);
        cur.header(CHECKPOINT_MAGIC, CHECKPOINT_VERSION)?;
        let count = cur.u32("entry count")? as usize;
        let mut entries = Vec::with_capacity(count.min(1 << 12));
        for _ in 0..count {
            let len = cur.u32("name length")? as usize;
            let at = cur.pos;
            let name = std::str::from_utf8(cur.take(len, "name")?)
                .map_err(|_| FormatError::Invalid { what: "name".into(), offset: at, detail: "not UTF-8".into() })?
                .to_string();
            let rank = cur.u32("rank")? as usize;
            let shape = (0..rank).map(|_| cur.u32("dimension").map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
            let at = cur.pos;
            let n = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).and_then(|n| n.checked_mul(8)).ok_or_else(
                || FormatError::Invalid { what: "shape".into(), offset: at, detail: format!("{shape:?} overflows") },
            )?;
            let raw = cur.take(n, "values")?;
            let data = raw
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes([b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7]]))
                .collect();
            entries.push(Entry { name, shape, data });
        }
        cur.finish()?;
        Ok(Self { entries })
    }

    pub fn save(&self, path: &Path) -> Result<(), FormatError> {
        fs::write(path, self.encode()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, FormatError> {
        Self::decode(&fs::read(path)?)
    }

    /// Every layer of the policy plus `log_std`, under `prefix`.
    pub fn add_policy(&mut self, prefix: &str, policy: &GaussianPolicy) {
        for (i, layer) in policy.mean.layers.iter().enumerate() {
            self.push_layer(&format!("{prefix}.mean.{i}"), layer);
        }
        self.push(format!("{prefix}.log_std"), &[policy.log_std.len()], &policy.log_std);
    }

    pub fn policy(&self, prefix: &str) -> Result<GaussianPolicy, FormatError> {
        let first = self.require(&format!("{prefix}.mean.0.weights"))?;
        let log_std = self.require(&format!("{prefix}.log_std"))?;
        let (state_dim, action_dim) = match (first.shape.as_slice(), log_std.shape.as_slice()) {
            ([_, s], [a]) => (*s, *a),
            _ => return Err(invalid(prefix, "unexpected policy shapes")),
        };
        let mut policy = GaussianPolicy::new(state_dim, action_dim, 0.0, &mut ChaCha8Rng::seed_from_u64(0));
        for (i, layer) in policy.mean.layers.iter_mut().enumerate() {
            self.load_layer(&format!("{prefix}.mean.{i}"), layer)?;
        }
        policy.log_std.clone_from(&log_std.data);
        Ok(policy)
    }

    pub fn add_discriminator(&mut self, prefix: &str, disc: &DiscriminatorParams) {
        self.push_layer(&format!("{prefix}.features.conv1"), &disc.features.conv1);
        self.push_layer(&format!("{prefix}.features.conv2"), &disc.features.conv2);
        for (i, l) in disc.class_head.layers.iter().enumerate() {
            self.push_layer(&format!("{prefix}.class_head.{i}"), l);
        }
        for (i, l) in disc.domain_head.layers.iter().enumerate() {
            self.push_layer(&format!("{prefix}.domain_head.{i}"), l);
        }
        self.push(format!("{prefix}.lambda"), &[1], &[disc.lambda]);
        self.push(format!("{prefix}.lookahead"), &[1], &[disc.lookahead as f64]);
    }

    pub fn discriminator(&self, prefix: &str) -> Result<DiscriminatorParams, FormatError> {
        let scalar = |name: &str| -> Result<f64, FormatError> {
            let e = self.require(&format!("{prefix}.{name}"))?;
            e.data.first().copied().ok_or_else(|| invalid(name, "empty"))
        };
        let lambda = scalar("lambda")?;
        let lookahead = scalar("lookahead")?;
        if lookahead < 0.0 || lookahead.fract() != 0.0 {
            return Err(invalid("lookahead", format!("{lookahead} is not a count")));
        }
        let mut d = DiscriminatorParams::zeroed(lambda, lookahead as usize).map_err(|e| invalid(prefix, e.to_string()))?;
        self.load_layer(&format!("{prefix}.features.conv1"), &mut d.features.conv1)?;
        self.load_layer(&format!("{prefix}.features.conv2"), &mut d.features.conv2)?;
        for (i, l) in d.class_head.layers.iter_mut().enumerate() {
            self.load_layer(&format!("{prefix}.class_head.{i}"), l)?;
        }
        for (i, l) in d.domain_head.layers.iter_mut().enumerate() {
            self.load_layer(&format!("{prefix}.domain_head.{i}"), l)?;
        }
        Ok(d)
    }

    pub fn add_pixel_policy(&mut self, prefix: &str, policy: &PixelPolicy) {
        self.push_layer(&format!("{prefix}.features.conv1"), &policy.features.conv1);
        self.push_layer(&format!("{prefix}.features.conv2"), &policy.features.conv2);
        for (i, l) in policy.head.layers.iter().enumerate() {
            self.push_layer(&format!("{prefix}.head.{i}"), l);
        }
        self.push(format!("{prefix}.log_std"), &[policy.log_std.len()], &policy.log_std);
    }

    pub fn pixel_policy(&self, prefix: &str) -> Result<PixelPolicy, FormatError> {
        let log_std = self.require(&format!("{prefix}.log_std"))?;
        let mut p = PixelPolicy::new(log_std.data.len(), log_std.data.clone(), &mut ChaCha8Rng::seed_from_u64(0));
        self.load_layer(&format!("{prefix}.features.conv1"), &mut p.features.conv1)?;
        self.load_layer(&format!("{prefix}.features.conv2"), &mut p.features.conv2)?;
        for (i, l) in p.head.layers.iter_mut().enumerate() {
            self.load_layer(&format!("{prefix}.head.{i}"), l)?;
        }
        Ok(p)
    }
}
