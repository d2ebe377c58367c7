//! Minimal RIFF/WAVE reader and writer for 16-bit PCM mono files.

use super::{write_atomic, ByteReader};
use crate::error::{Error, Result};
use crate::signal::Signal;
use std::path::Path;

fn file_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::File {
        path: path.display().to_string(),
        msg: msg.into(),
    }
}

/// Reads a 16-bit PCM mono WAV file.
pub fn read_wav(path: &Path) -> Result<Signal> {
    let bytes = std::fs::read(path).map_err(|e| file_err(path, e.to_string()))?;
    parse_wav(&bytes).map_err(|e| file_err(path, e.to_string()))
}

fn parse_wav(bytes: &[u8]) -> Result<Signal> {
    let mut r = ByteReader::new(bytes);
    r.magic(b"RIFF")?;
    r.u32()?; // riff size
    r.magic(b"WAVE")?;
    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    loop {
        let id = match r.bytes(4) {
            Ok(id) => id,
            Err(_) => return Err(Error::Format("missing data chunk".into())),
        };
        let size = r.u32()? as usize;
        match &id[..] {
            b"fmt " => {
                let body = r.bytes(size)?;
                if size < 16 {
                    return Err(Error::Format("short fmt chunk".into()));
                }
                let tag = u16::from_le_bytes([body[0], body[1]]);
                let channels = u16::from_le_bytes([body[2], body[3]]);
                let rate = u32::from_le_bytes([body[4], body[5], body[6], body[7]]);
                let bits = u16::from_le_bytes([body[14], body[15]]);
                fmt = Some((tag, channels, rate, bits));
            }
            b"data" => {
                let (tag, channels, rate, bits) =
                    fmt.ok_or_else(|| Error::Format("data chunk before fmt".into()))?;
                if tag != 1 {
                    return Err(Error::Format(format!("unsupported format tag {tag} (PCM only)")));
                }
                if channels != 1 {
                    return Err(Error::Format(format!("{channels} channels (mono only)")));
                }
                if bits != 16 {
                    return Err(Error::Format(format!("{bits}-bit samples (16-bit only)")));
                }
                let body = r.bytes(size)?;
                let samples: Vec<f64> = body
                    .chunks_exact(2)
                    .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / 32768.0)
                    .collect();
                if samples.is_empty() {
                    return Err(Error::EmptyInput);
                }
                return Signal::new(samples, rate);
            }
            _ => {
                // skip unknown chunk (word-aligned)
                r.bytes(size + size % 2)?;
            }
        }
    }
}

/// Writes a signal as 16-bit PCM mono, clipping to [-1, 1]. Atomic.
pub fn write_wav(path: &Path, signal: &Signal) -> Result<()> {
    let n = signal.len();
    let data_size = (n * 2) as u32;
    let mut out = Vec::with_capacity(44 + n * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_size).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&signal.sample_rate.to_le_bytes());
    out.extend_from_slice(&(signal.sample_rate * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_size.to_le_bytes());
    for &s in &signal.samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    write_atomic(path, &out)
}

/// Linear-interpolation resampler.
pub fn resample_linear(signal: &Signal, target_rate: u32) -> Signal {
    if signal.sample_rate == target_rate || signal.is_empty() {
        return Signal {
            samples: signal.samples.clone(),
            sample_rate: target_rate,
        };
    }
    let ratio = signal.sample_rate as f64 / target_rate as f64;
    let n_out = (signal.len() as f64 / ratio).floor() as usize;
    let samples = (0..n_out)
        .map(|i| {
            let pos = i as f64 * ratio;
            let i0 = pos.floor() as usize;
            let frac = pos - i0 as f64;
            let a = signal.samples[i0.min(signal.len() - 1)];
            let b = signal.samples[(i0 + 1).min(signal.len() - 1)];
            a * (1.0 - frac) + b * frac
        })
        .collect();
    Signal {
        samples,
        sample_rate: target_rate,
    }
}
