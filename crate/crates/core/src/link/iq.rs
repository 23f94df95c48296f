//! Binary sample file: `"ATMA"`, `u32` version, `f64` sample rate, `u64`
//! sample count, then interleaved `f64` I/Q. All little-endian.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"ATMA";
pub const VERSION: u32 = 1;

pub fn write_waveform<W: Write>(mut w: W, sample_rate: f64, samples: &[Complex64]) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&sample_rate.to_le_bytes())?;
    w.write_all(&(samples.len() as u64).to_le_bytes())?;
    for s in samples {
        w.write_all(&s.re.to_le_bytes())?;
        w.write_all(&s.im.to_le_bytes())?;
    }
    w.flush()
}

fn read_exact<R: Read, const L: usize>(r: &mut R, what: &str) -> Result<[u8; L]> {
    let mut buf = [0u8; L];
    r.read_exact(&mut buf).map_err(|e| Error::Format(format!("reading {what}: {e}")))?;
    Ok(buf)
}

/// Returns `(sample_rate, samples)`.
pub fn read_waveform<R: Read>(mut r: R) -> Result<(f64, Vec<Complex64>)> {
    let magic: [u8; 4] = read_exact(&mut r, "magic")?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let version = u32::from_le_bytes(read_exact(&mut r, "version")?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let rate = f64::from_le_bytes(read_exact(&mut r, "sample rate")?);
    let len = u64::from_le_bytes(read_exact(&mut r, "length")?);
    let mut samples = Vec::new();
    for k in 0..len {
        let re = f64::from_le_bytes(read_exact(&mut r, "sample")?);
        let im = f64::from_le_bytes(read_exact(&mut r, "sample")?);
        if k == 0 {
            samples.reserve(len.min(1 << 24) as usize);
        }
        samples.push(Complex64::new(re, im));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(|e| Error::Format(e.to_string()))? != 0 {
        return Err(Error::Format("trailing bytes after samples".into()));
    }
    Ok((rate, samples))
}
