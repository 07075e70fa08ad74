//! Binary snapshot of an [`MpsState`].
//!
//! Layout (little endian): magic `WGFBMPS\0`, `u32` version, header scalars,
//! site labels, discarded-weight log, optional bond charges, then every
//! tensor as `(dl, d, dr)` followed by `re, im` pairs. Decoding checks every
//! length against the remaining input before allocating and re-validates
//! the chain structure.

use std::path::Path;

use thiserror::Error;

use crate::linalg::{Tensor, C};
use crate::state::{MpsState, Site};

const MAGIC: &[u8; 8] = b"WGFBMPS\0";
pub const VERSION: u32 = 1;
const EMITTER_LABEL: u64 = u64::MAX;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("checkpoint truncated at byte {at}: {needed} more bytes needed")]
    Truncated { at: usize, needed: usize },
    #[error("{0} trailing bytes after checkpoint")]
    TrailingBytes(usize),
    #[error("inconsistent checkpoint: {0}")]
    Invalid(String),
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, x: u8) {
        self.0.push(x);
    }
    fn u32(&mut self, x: u32) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn u64(&mut self, x: u64) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn i32(&mut self, x: i32) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn f64(&mut self, x: f64) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn usize(&mut self, x: usize) {
        self.u64(x as u64);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let rest = self.buf.len() - self.pos;
        if n > rest {
            return Err(CheckpointError::Truncated { at: self.pos, needed: n - rest });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn array<const N: usize>(&mut self) -> Result<[u8; N], CheckpointError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    fn i32(&mut self) -> Result<i32, CheckpointError> {
        Ok(i32::from_le_bytes(self.array()?))
    }
    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.array()?))
    }
    fn usize(&mut self) -> Result<usize, CheckpointError> {
        usize::try_from(self.u64()?).map_err(|_| CheckpointError::Invalid("length does not fit in memory".into()))
    }
    /// A count of items of `item` bytes each, checked against the input left.
    fn count(&mut self, item: usize) -> Result<usize, CheckpointError> {
        let n = self.usize()?;
        let rest = self.buf.len() - self.pos;
        match n.checked_mul(item) {
            Some(b) if b <= rest => Ok(n),
            Some(b) => Err(CheckpointError::Truncated { at: self.pos, needed: b - rest }),
            None => Err(CheckpointError::Invalid(format!("count {n} overflows"))),
        }
    }
}

pub fn encode(state: &MpsState) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u32(VERSION);
    w.usize(state.emitter_dim);
    w.usize(state.bin_dim);
    w.usize(state.delay_bins);
    w.usize(state.packet_bins);
    w.f64(state.dt);
    w.usize(state.steps_done);
    w.usize(state.center);
    w.usize(state.tensors.len());
    for l in &state.labels {
        w.u64(match l {
            Site::Emitter => EMITTER_LABEL,
            Site::Bin(j) => *j as u64,
        });
    }
    w.usize(state.discarded.len());
    for &x in &state.discarded {
        w.f64(x);
    }
    match &state.charges {
        None => w.u8(0),
        Some(ch) => {
            w.u8(1);
            for bond in ch {
                w.usize(bond.len());
                for &q in bond {
                    w.i32(q);
                }
            }
        }
    }
    for t in &state.tensors {
        w.usize(t.dl);
        w.usize(t.d);
        w.usize(t.dr);
        for x in &t.data {
            w.f64(x.re);
            w.f64(x.im);
        }
    }
    w.0
}

pub fn decode(bytes: &[u8]) -> Result<MpsState, CheckpointError> {
    let bad = |m: String| Err(CheckpointError::Invalid(m));
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(MAGIC.len()).map_err(|_| CheckpointError::BadMagic)? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }
    let emitter_dim = r.usize()?;
    let bin_dim = r.usize()?;
    let delay_bins = r.usize()?;
    let packet_bins = r.usize()?;
    let dt = r.f64()?;
    let steps_done = r.usize()?;
    let center = r.usize()?;
    if !(2..=3).contains(&emitter_dim) || !(2..=64).contains(&bin_dim) {
        return bad(format!("local dimensions {emitter_dim}, {bin_dim}"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return bad(format!("dt = {dt}"));
    }

    let n = r.count(8)?;
    if n < 2 {
        return bad("chain needs the emitter and at least one bin".into());
    }
    let n_bins = n - 1;
    let mut labels = Vec::with_capacity(n);
    let mut bin_pos = vec![usize::MAX; n_bins];
    let mut emitter_pos = None;
    for p in 0..n {
        match r.u64()? {
            EMITTER_LABEL if emitter_pos.is_none() => {
                emitter_pos = Some(p);
                labels.push(Site::Emitter);
            }
            EMITTER_LABEL => return bad("two emitter sites".into()),
            j => {
                let j = j as usize;
                if j >= n_bins || bin_pos[j] != usize::MAX {
                    return bad(format!("bin label {j} repeated or out of range"));
                }
                bin_pos[j] = p;
                labels.push(Site::Bin(j));
            }
        }
    }
    let emitter_pos = emitter_pos.ok_or_else(|| CheckpointError::Invalid("no emitter site".into()))?;
    if center >= n || delay_bins == 0 || delay_bins + packet_bins > n_bins || steps_done + delay_bins > n_bins {
        return bad("header counters do not fit the chain".into());
    }

    let nd = r.count(8)?;
    let mut discarded = Vec::with_capacity(nd);
    for _ in 0..nd {
        let x = r.f64()?;
        if !(x >= 0.0 && x.is_finite()) {
            return bad(format!("discarded weight {x}"));
        }
        discarded.push(x);
    }
    if nd != steps_done {
        return bad(format!("{nd} discarded entries for {steps_done} steps"));
    }

    let charges = match r.u8()? {
        0 => None,
        1 => {
            let mut ch = Vec::with_capacity(n + 1);
            for _ in 0..=n {
                let k = r.count(4)?;
                let mut bond = Vec::with_capacity(k);
                for _ in 0..k {
                    bond.push(r.i32()?);
                }
                ch.push(bond);
            }
            Some(ch)
        }
        f => return bad(format!("charge flag {f}")),
    };

    let mut tensors: Vec<Tensor> = Vec::with_capacity(n);
    for (p, label) in labels.iter().enumerate() {
        let (dl, d, dr) = (r.usize()?, r.usize()?, r.usize()?);
        let want_d = if *label == Site::Emitter { emitter_dim } else { bin_dim };
        if d != want_d {
            return bad(format!("site {p} has physical dimension {d}, expected {want_d}"));
        }
        let prev = tensors.last().map_or(1, |t| t.dr);
        if dl != prev || dl == 0 || dr == 0 || (p + 1 == n && dr != 1) {
            return bad(format!("bond dimensions at site {p} do not chain"));
        }
        let len = dl
            .checked_mul(d)
            .and_then(|x| x.checked_mul(dr))
            .ok_or_else(|| CheckpointError::Invalid(format!("site {p} too large")))?;
        let rest = bytes.len() - r.pos;
        if len.checked_mul(16).is_none_or(|b| b > rest) {
            return Err(CheckpointError::Truncated { at: r.pos, needed: len.saturating_mul(16).saturating_sub(rest) });
        }
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            let z = C::new(r.f64()?, r.f64()?);
            if !(z.re.is_finite() && z.im.is_finite()) {
                return bad(format!("non-finite entry at site {p}"));
            }
            data.push(z);
        }
        tensors.push(Tensor { dl, d, dr, data });
    }
    if r.pos != bytes.len() {
        return Err(CheckpointError::TrailingBytes(bytes.len() - r.pos));
    }
    if let Some(ch) = &charges {
        let mut dims: Vec<usize> = vec![1];
        dims.extend(tensors.iter().map(|t| t.dr));
        if ch.iter().zip(&dims).any(|(q, &d)| q.len() != d) {
            return bad("bond charges do not match bond dimensions".into());
        }
    }

    Ok(MpsState {
        tensors,
        labels,
        bin_pos,
        emitter_pos,
        charges,
        center,
        emitter_dim,
        bin_dim,
        delay_bins,
        packet_bins,
        dt,
        steps_done,
        discarded,
    })
}

pub fn save(state: &MpsState, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
    std::fs::write(path, encode(state))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<MpsState, CheckpointError> {
    decode(&std::fs::read(path)?)
}
