//! Versioned binary checkpoints.
//!
//! Layout (all little-endian):
//! magic `CNSCHK01`, version u32, grid (length f64, points u32, cutoff u32,
//! dealias rule f64), t f64, stopped flag u8 (+ stopped_at f64 when set),
//! then the raw complex coefficient arrays of `n`, `c`, `u_x`, `u_y` in
//! row-major mode order (re, im f64 pairs), then the RNG state blob
//! (seed 32 bytes, word position u128, stream u64).
//!
//! `restore(checkpoint(s))` is bit-identical to `s`, including the RNG.

use super::SimulationState;
use crate::noise::TrajectoryRng;
use crate::spectral::{SolenoidalVelocityField, SpectralScalarField, TorusGrid};
use crate::{CnsError, Result};
use ndarray::Array2;
use num_complex::Complex64;
use rand::SeedableRng;

const MAGIC: &[u8; 8] = b"CNSCHK01";
const VERSION: u32 = 1;

fn push_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_array(buf: &mut Vec<u8>, arr: &Array2<Complex64>) {
    for v in arr.iter() {
        push_f64(buf, v.re);
        push_f64(buf, v.im);
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        if self.pos + len > self.data.len() {
            return Err(CnsError::CorruptCheckpoint(format!(
                "truncated payload: need {} bytes at offset {}, have {}",
                len,
                self.pos,
                self.data.len()
            )));
        }
        let slice = &self.data[self.pos..self.pos + len];
        self.pos += len;
        Ok(slice)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u128(&mut self) -> Result<u128> {
        Ok(u128::from_le_bytes(self.take(16)?.try_into().unwrap()))
    }

    fn array(&mut self, n: usize) -> Result<Array2<Complex64>> {
        let mut arr = Array2::zeros((n, n));
        for v in arr.iter_mut() {
            let re = self.f64()?;
            let im = self.f64()?;
            *v = Complex64::new(re, im);
        }
        Ok(arr)
    }
}

/// Serialize a state to the versioned binary format.
pub fn checkpoint(state: &SimulationState) -> Vec<u8> {
    let grid = state.grid();
    let n = grid.points();
    let mut buf = Vec::with_capacity(8 + 4 + 24 + 17 + 4 * n * n * 16 + 56);
    buf.extend_from_slice(MAGIC);
    push_u32(&mut buf, VERSION);
    push_f64(&mut buf, grid.length());
    push_u32(&mut buf, grid.points() as u32);
    push_u32(&mut buf, grid.cutoff() as u32);
    push_f64(&mut buf, grid.dealias_rule());
    push_f64(&mut buf, state.t);
    match state.stopped_at {
        Some(ts) => {
            buf.push(1);
            push_f64(&mut buf, ts);
        }
        None => buf.push(0),
    }
    push_array(&mut buf, state.n.coeffs());
    push_array(&mut buf, state.c.coeffs());
    push_array(&mut buf, state.u.coeffs_x());
    push_array(&mut buf, state.u.coeffs_y());
    buf.extend_from_slice(&state.rng.get_seed());
    buf.extend_from_slice(&state.rng.get_word_pos().to_le_bytes());
    buf.extend_from_slice(&state.rng.get_stream().to_le_bytes());
    buf
}

/// Decode a checkpoint back into a state (grid included).
pub fn restore(bytes: &[u8]) -> Result<SimulationState> {
    let mut r = Reader {
        data: bytes,
        pos: 0,
    };
    let magic = r.take(8)?;
    if magic != MAGIC {
        return Err(CnsError::CorruptCheckpoint(
            "bad magic; not a checkpoint".into(),
        ));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(CnsError::CheckpointVersion {
            found: version,
            expected: VERSION,
        });
    }
    let length = r.f64()?;
    let points = r.u32()? as usize;
    let cutoff = r.u32()? as usize;
    let dealias = r.f64()?;
    let grid = TorusGrid::with_dealias_rule(length, points, cutoff, dealias)?;
    let t = r.f64()?;
    let stopped_at = match r.take(1)?[0] {
        0 => None,
        1 => Some(r.f64()?),
        other => {
            return Err(CnsError::CorruptCheckpoint(format!(
                "bad stopped flag {other}"
            )))
        }
    };
    let n_arr = r.array(points)?;
    let c_arr = r.array(points)?;
    let ux = r.array(points)?;
    let uy = r.array(points)?;
    let seed: [u8; 32] = r.take(32)?.try_into().unwrap();
    let word_pos = r.u128()?;
    let stream = r.u64()?;
    if r.pos != bytes.len() {
        return Err(CnsError::CorruptCheckpoint(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }

    let mut rng = TrajectoryRng::from_seed(seed);
    rng.set_stream(stream);
    rng.set_word_pos(word_pos);

    // Coefficients were stored from a valid state; wrap verbatim so the
    // restore is bitwise exact.
    let n_field = SpectralScalarField::from_raw_verbatim(grid.clone(), n_arr);
    let c_field = SpectralScalarField::from_raw_verbatim(grid.clone(), c_arr);
    let u = SolenoidalVelocityField::from_components_raw(grid, ux, uy);
    Ok(SimulationState::from_parts(
        n_field, c_field, u, t, rng, stopped_at,
    ))
}
