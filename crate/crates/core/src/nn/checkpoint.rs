//! Binary parameter and optimizer files.
//!
//! Parameter file: magic `LPMLP`, layout version (u32), `n_in`, `n_hidden`,
//! `n_out` (u64 each), followed by the flat parameter vector as
//! little-endian f64. Optimizer file: magic `LPADAM`, layout version, state
//! count, then per state `lr beta1 beta2 eps` (f64), `t` (u64), length (u64)
//! and the `m` and `v` vectors.

use std::fs;
use std::path::Path;

use super::{AdamState, MlpDims, MlpParams};
use crate::error::{Error, Result};

pub const LAYOUT_VERSION: u32 = 1;
const PARAM_MAGIC: &[u8; 5] = b"LPMLP";
const ADAM_MAGIC: &[u8; 6] = b"LPADAM";

struct Reader<'a> {
    buf: &'a [u8],
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::format(self.path, "truncated file"));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }

    fn header(&mut self, magic: &[u8]) -> Result<()> {
        if self.take(magic.len())? != magic {
            return Err(Error::format(self.path, "bad magic"));
        }
        let version = self.u32()?;
        if version != LAYOUT_VERSION {
            return Err(Error::format(
                self.path,
                format!("layout version {version}, expected {LAYOUT_VERSION}"),
            ));
        }
        Ok(())
    }

    fn finish(&self) -> Result<()> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(Error::format(self.path, "trailing bytes"))
        }
    }
}

pub fn encode_params(p: &MlpParams) -> Vec<u8> {
    let d = p.dims();
    let mut out = Vec::with_capacity(9 + 24 + 8 * d.len());
    out.extend_from_slice(PARAM_MAGIC);
    out.extend_from_slice(&LAYOUT_VERSION.to_le_bytes());
    for n in [d.n_in, d.n_hidden, d.n_out] {
        out.extend_from_slice(&(n as u64).to_le_bytes());
    }
    for x in p.flat() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn save_params(p: &MlpParams, path: &Path) -> Result<()> {
    fs::write(path, encode_params(p)).map_err(|e| Error::io(path, e))
}

pub fn load_params(path: &Path) -> Result<MlpParams> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader { buf: &bytes, path };
    r.header(PARAM_MAGIC)?;
    let dims = MlpDims::new(r.u64()? as usize, r.u64()? as usize, r.u64()? as usize);
    let flat = r.f64s(dims.len())?;
    r.finish()?;
    MlpParams::from_flat(dims, flat).map_err(|e| Error::format(path, e.to_string()))
}

pub fn save_adam(states: &[&AdamState], path: &Path) -> Result<()> {
    let mut out = Vec::new();
    out.extend_from_slice(ADAM_MAGIC);
    out.extend_from_slice(&LAYOUT_VERSION.to_le_bytes());
    out.extend_from_slice(&(states.len() as u64).to_le_bytes());
    for s in states {
        for x in [s.lr, s.beta1, s.beta2, s.eps] {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out.extend_from_slice(&s.t.to_le_bytes());
        out.extend_from_slice(&(s.m.len() as u64).to_le_bytes());
        for x in s.m.iter().chain(&s.v) {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_adam(path: &Path) -> Result<Vec<AdamState>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader { buf: &bytes, path };
    r.header(ADAM_MAGIC)?;
    let count = r.u64()? as usize;
    let mut states = Vec::with_capacity(count);
    for _ in 0..count {
        let (lr, beta1, beta2, eps) = (r.f64()?, r.f64()?, r.f64()?, r.f64()?);
        let t = r.u64()?;
        let n = r.u64()? as usize;
        let m = r.f64s(n)?;
        let v = r.f64s(n)?;
        states.push(AdamState { lr, beta1, beta2, eps, m, v, t });
    }
    r.finish()?;
    Ok(states)
}
