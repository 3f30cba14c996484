//! Binary memory-bank files.
//!
//! Layout (little-endian): magic `TPIL`, version `u32 = 1`, trajectory
//! count `u32`, then per trajectory `T, height, width, channels, state_dim,
//! action_dim` as `u32`, class and domain labels as `u8`, and `f32` arrays
//! of observations (`T*h*w*c`), states (`T*state_dim`) and actions
//! (`T*action_dim`).

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use thiserror::Error;
use tpil_core::judge::{ClassLabel, DomainLabel};
use tpil_core::numkit::Tensor;
use tpil_core::orchestrator::{MemoryBank, Trajectory};
use tpil_core::worlds::Observation;

pub const BANK_MAGIC: [u8; 4] = *b"TPIL";
pub const BANK_VERSION: u32 = 1;
/// Magic + version + count.
pub const BANK_HEADER_LEN: usize = 12;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic {found:?} at byte 0 (expected {expected:?})")]
    BadMagic { found: String, expected: String },
    #[error("unsupported version {found} at byte 4 (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("truncated file: {what} needs {needed} bytes at byte {offset}, {available} available")]
    Truncated { what: String, offset: usize, needed: usize, available: usize },
    #[error("invalid {what} at byte {offset}: {detail}")]
    Invalid { what: String, offset: usize, detail: String },
    #[error("{0} trailing bytes after the last record")]
    Trailing(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Bounds-checked little-endian reader that knows its byte offset.
pub(crate) struct Cursor<'a> {
    buf: &'a [u8],
    pub(crate) pos: usize,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], FormatError> {
        let available = self.buf.len() - self.pos;
        if n > available {
            return Err(FormatError::Truncated { what: what.to_string(), offset: self.pos, needed: n, available });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u8(&mut self, what: &str) -> Result<u8, FormatError> {
        Ok(self.take(1, what)?[0])
    }

    pub(crate) fn u32(&mut self, what: &str) -> Result<u32, FormatError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub(crate) fn header(&mut self, magic: [u8; 4], version: u32) -> Result<(), FormatError> {
        let found = self.take(4, "magic")?;
        if found != magic {
            return Err(FormatError::BadMagic {
                found: String::from_utf8_lossy(found).into_owned(),
                expected: String::from_utf8_lossy(&magic).into_owned(),
            });
        }
        let v = self.u32("version")?;
        if v != version {
            return Err(FormatError::Version { found: v, expected: version });
        }
        Ok(())
    }

    fn f32s(&mut self, count: usize, what: &str) -> Result<Vec<f64>, FormatError> {
        let bytes = count.checked_mul(4).ok_or_else(|| FormatError::Invalid {
            what: what.to_string(),
            offset: self.pos,
            detail: "size overflows".into(),
        })?;
        let raw = self.take(bytes, what)?;
        Ok(raw.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64).collect())
    }

    pub(crate) fn finish(&self) -> Result<(), FormatError> {
        match self.buf.len() - self.pos {
            0 => Ok(()),
            n => Err(FormatError::Trailing(n)),
        }
    }
}

fn put_u32(out: &mut Vec<u8>, v: usize, what: &str) -> Result<(), FormatError> {
    let v = u32::try_from(v)
        .map_err(|_| FormatError::Invalid { what: what.into(), offset: out.len(), detail: format!("{v} exceeds u32") })?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn put_f32s<'a>(out: &mut Vec<u8>, values: impl IntoIterator<Item = &'a f64>) {
    for &v in values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

fn check_rows(rows: &[Vec<f64>], t: usize, what: &str) -> Result<usize, FormatError> {
    let dim = rows.first().map_or(0, Vec::len);
    if rows.len() != t || rows.iter().any(|r| r.len() != dim) {
        return Err(FormatError::Invalid {
            what: what.into(),
            offset: 0,
            detail: format!("expected {t} rows of equal length"),
        });
    }
    Ok(dim)
}

/// Serializes one trajectory record.
fn encode_trajectory(out: &mut Vec<u8>, traj: &Trajectory) -> Result<(), FormatError> {
    let t = traj.len();
    let shape = match traj.observations.first().map(|o| o.image.shape()) {
        Some(&[h, w, c]) => [h, w, c],
        Some(s) => {
            return Err(FormatError::Invalid { what: "observation".into(), offset: out.len(), detail: format!("shape {s:?}") })
        }
        None => [0, 0, 0],
    };
    if traj.observations.iter().any(|o| o.image.shape() != shape) {
        return Err(FormatError::Invalid {
            what: "observation".into(),
            offset: out.len(),
            detail: "frames of different shapes".into(),
        });
    }
    let sd = check_rows(&traj.states, t, "states")?;
    let ad = check_rows(&traj.actions, t, "actions")?;
    for (v, what) in [(t, "T"), (shape[0], "height"), (shape[1], "width"), (shape[2], "channels"), (sd, "state_dim"), (ad, "action_dim")]
    {
        put_u32(out, v, what)?;
    }
    out.push(traj.class.index() as u8);
    out.push(traj.domain.index() as u8);
    for o in &traj.observations {
        put_f32s(out, o.image.data());
    }
    for s in &traj.states {
        put_f32s(out, s);
    }
    for a in &traj.actions {
        put_f32s(out, a);
    }
    Ok(())
}

/// Encodes a bank into its file bytes.
pub fn encode_bank(bank: &MemoryBank) -> Result<Vec<u8>, FormatError> {
    let mut out = Vec::new();
    out.extend_from_slice(&BANK_MAGIC);
    out.extend_from_slice(&BANK_VERSION.to_le_bytes());
    put_u32(&mut out, bank.trajectories.len(), "trajectory count")?;
    for traj in &bank.trajectories {
        encode_trajectory(&mut out, traj)?;
    }
    Ok(out)
}

fn decode_trajectory(cur: &mut Cursor) -> Result<Trajectory, FormatError> {
    let mut dims = [0usize; 6];
    for (d, what) in dims.iter_mut().zip(["T", "height", "width", "channels", "state_dim", "action_dim"]) {
        *d = cur.u32(what)? as usize;
    }
    let [t, h, w, c, sd, ad] = dims;
    let at = cur.pos;
    let class = ClassLabel::from_index(cur.u8("class label")?)
        .ok_or_else(|| FormatError::Invalid { what: "class label".into(), offset: at, detail: "not 0 or 1".into() })?;
    let at = cur.pos;
    let domain = DomainLabel::from_index(cur.u8("domain label")?)
        .ok_or_else(|| FormatError::Invalid { what: "domain label".into(), offset: at, detail: "not 0 or 1".into() })?;
    let frame = h * w * c;
    let mut observations = Vec::with_capacity(t);
    for _ in 0..t {
        let at = cur.pos;
        let data = cur.f32s(frame, "observation")?;
        let image = Tensor::new(vec![h, w, c], data)
            .map_err(|e| FormatError::Invalid { what: "observation".into(), offset: at, detail: e.to_string() })?;
        observations.push(Observation { image });
    }
    let states = (0..t).map(|_| cur.f32s(sd, "state")).collect::<Result<Vec<_>, _>>()?;
    let actions = (0..t).map(|_| cur.f32s(ad, "action")).collect::<Result<Vec<_>, _>>()?;
    Ok(Trajectory { observations, states, actions, class, domain })
}

/// Decodes file bytes into a bank.
pub fn decode_bank(bytes: &[u8]) -> Result<MemoryBank, FormatError> {
    let mut cur = Cursor::new(bytes);
    cur.header(BANK_MAGIC, BANK_VERSION)?;
    let count = cur.u32("trajectory count")? as usize;
    let mut trajectories = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        trajectories.push(decode_trajectory(&mut cur)?);
    }
    cur.finish()?;
    Ok(MemoryBank { trajectories })
}

pub fn save_bank(path: &Path, bank: &MemoryBank) -> Result<(), FormatError> {
    let bytes = encode_bank(bank)?;
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

pub fn load_bank(path: &Path) -> Result<MemoryBank, FormatError> {
    decode_bank(&fs::read(path)?)
}

/// The bank as it reads back from disk: every real rounded to `f32`.
pub fn quantized(bank: &MemoryBank) -> MemoryBank {
    let q = |v: &[f64]| v.iter().map(|&x| x as f32 as f64).collect::<Vec<_>>();
    MemoryBank {
        trajectories: bank
            .trajectories
            .iter()
            .map(|t| Trajectory {
                observations: t
                    .observations
                    .iter()
                    .map(|o| Observation {
                        image: Tensor::new(o.image.shape().to_vec(), q(o.image.data())).expect("same shape"),
                    })
                    .collect(),
                states: t.states.iter().map(|s| q(s)).collect(),
                actions: t.actions.iter().map(|a| q(a)).collect(),
                class: t.class,
                domain: t.domain,
            })
            .collect(),
    }
}
