//! Binary state checkpoints.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic    5 bytes  "PLAB1"
//! N        u32
//! step     u64
//! params   8 × f64  ω_x, ω_z, ω_A, ε, λ, v, N, T
//! state    4N × (f64 re, f64 im)
//! ```

use std::io::{Read, Write};

use num_complex::Complex64 as C64;

use super::ModelParams;
use crate::error::{Error, Result};
use crate::qstate::TotalState;

pub const MAGIC: &[u8; 5] = b"PLAB1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub step: u64,
    pub state: TotalState,
}

fn io_err(e: std::io::Error) -> Error {
    Error::Checkpoint(e.to_string())
}

pub fn write_checkpoint<W: Write>(
    mut w: W,
    params: &ModelParams,
    step: u64,
    state: &TotalState,
) -> Result<()> {
    if state.n_rotor() != params.n_rotor() {
        return Err(Error::DimensionMismatch {
            expected: 4 * params.n_rotor(),
            got: state.dim(),
        });
    }
    let n = u32::try_from(params.n_rotor())
        .map_err(|_| Error::Checkpoint("N does not fit in u32".into()))?;
    let mut buf = Vec::with_capacity(5 + 4 + 8 + 64 + 16 * state.dim());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&n.to_le_bytes());
    buf.extend_from_slice(&step.to_le_bytes());
    for x in [
        params.omega_x(),
        params.omega_z(),
        params.omega_a(),
        params.epsilon(),
        params.lambda(),
        params.v(),
        params.n_rotor() as f64,
        params.period(),
    ] {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    for c in state.amplitudes() {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    w.write_all(&buf).map_err(io_err)
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Checkpoint> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint(format!("bad magic {magic:?}")));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4).map_err(io_err)?;
    let n = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8).map_err(io_err)?;
    let step = u64::from_le_bytes(b8);
    let mut f = [0.0f64; 8];
    for x in f.iter_mut() {
        r.read_exact(&mut b8).map_err(io_err)?;
        *x = f64::from_le_bytes(b8);
    }
    if f[6] != n as f64 {
        return Err(Error::Checkpoint(format!(
            "header N = {n} disagrees with params N = {}",
            f[6]
        )));
    }
    let params = ModelParams::new(f[0], f[1], f[2], f[3], f[4], f[5], n)?;
    let mut body = vec![0u8; 16 * 4 * n];
    r.read_exact(&mut body).map_err(io_err)?;
    let amps = body
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            C64::new(re, im)
        })
        .collect();
    let state = TotalState::from_amplitudes(amps)?;
    Ok(Checkpoint { params, step, state })
}
