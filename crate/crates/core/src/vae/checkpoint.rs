//! QVAE checkpoint: `b"QVAE"`, `u8` version, `u32` width count followed by
//! the widths `n, h_1, …, h_d, latent` (decoder hidden widths, latent side
//! last), then every layer's little-endian `f64` weights and biases in
//! declaration order.

use std::io::{Read, Write};

use super::arch::NetworkArchitecture;
use super::network::Parameters;
use crate::{Error, Result};

pub const QVAE_MAGIC: &[u8; 4] = b"QVAE";
pub const QVAE_VERSION: u8 = 1;

pub fn write_checkpoint<W: Write>(params: &Parameters, mut w: W) -> Result<()> {
    let arch = params.architecture();
    let mut widths = vec![arch.n() as u32];
    widths.extend(arch.encoder_hidden().iter().map(|&h| h as u32));
    widths.push(arch.latent_dim() as u32);
    w.write_all(QVAE_MAGIC)?;
    w.write_all(&[QVAE_VERSION])?;
    w.write_all(&(widths.len() as u32).to_le_bytes())?;
    for width in widths {
        w.write_all(&width.to_le_bytes())?;
    }
    for v in params.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Parameters> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let bad = |msg: &str| Error::Format(format!("QVAE checkpoint: {msg}"));
    if bytes.len() < 9 || &bytes[..4] != QVAE_MAGIC {
        return Err(bad("missing magic"));
    }
    if bytes[4] != QVAE_VERSION {
        return Err(bad("unsupported version"));
    }
    let u32_at = |off: usize| -> Result<u32> {
        bytes
            .get(off..off + 4)
            .map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")))
            .ok_or_else(|| bad("truncated architecture block"))
    };
    let count = u32_at(5)? as usize;
    if !(3..=1024).contains(&count) {
        return Err(bad("implausible width count"));
    }
    let widths = (0..count)
        .map(|i| u32_at(9 + 4 * i).map(|w| w as usize))
        .collect::<Result<Vec<_>>>()?;
    let n = widths[0];
    if widths[count - 1] != n {
        return Err(bad("latent width differs from n"));
    }
    // stored encoder-side first; the decoder stack is its mirror
    let decoder_hidden: Vec<usize> = widths[1..count - 1].iter().rev().copied().collect();
    let arch = NetworkArchitecture::new(n, decoder_hidden).map_err(|e| bad(&e.to_string()))?;
    let body = &bytes[9 + 4 * count..];
    let expected = Parameters::zeros(&arch).len();
    if body.len() != 8 * expected {
        return Err(bad("parameter block has the wrong length"));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Parameters::from_flat(&arch, data)
}
