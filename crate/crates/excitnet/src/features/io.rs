//! Feature (EXNF) and stats (EXNS) file formats.
//!
//! EXNF: magic "EXNF", u32 version=1, u32 n_frames, u32 dim, u32
//! sample_rate, u32 frame_len, u32 shift, then n_frames*dim little-endian
//! f32 values, frame-major.
//!
//! EXNS: magic "EXNS", u32 dim, mean then std as little-endian f32.

use super::{AcousticFeatureSequence, AcousticFrame, FeatureStats, REW_DIM, SEW_DIM};
use crate::error::{Error, Result};
use crate::io::{write_atomic, ByteReader};
use std::path::Path;

pub const EXNF_VERSION: u32 = 1;

pub fn encode_features(seq: &AcousticFeatureSequence) -> Vec<u8> {
    let dim = seq.dim();
    let mut out = Vec::new();
    out.extend_from_slice(b"EXNF");
    out.extend_from_slice(&EXNF_VERSION.to_le_bytes());
    out.extend_from_slice(&(seq.n_frames() as u32).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&seq.sample_rate.to_le_bytes());
    out.extend_from_slice(&(seq.frame_len as u32).to_le_bytes());
    out.extend_from_slice(&(seq.shift as u32).to_le_bytes());
    for frame in &seq.frames {
        for v in frame.to_vec() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_features(bytes: &[u8]) -> Result<AcousticFeatureSequence> {
    let mut r = ByteReader::new(bytes);
    r.magic(b"EXNF")?;
    let version = r.u32()?;
    if version != EXNF_VERSION {
        return Err(Error::Format(format!("unsupported EXNF version {version}")));
    }
    let n_frames = r.u32()? as usize;
    let dim = r.u32()? as usize;
    let sample_rate = r.u32()?;
    let frame_len = r.u32()? as usize;
    let shift = r.u32()? as usize;
    if dim < SEW_DIM + REW_DIM + 3 {
        return Err(Error::Format(format!("EXNF dim {dim} too small")));
    }
    let lpc_order = dim - SEW_DIM - REW_DIM - 3;
    let mut frames = Vec::with_capacity(n_frames);
    for _ in 0..n_frames {
        let mut v = Vec::with_capacity(dim);
        for _ in 0..dim {
            v.push(r.f32()? as f64);
        }
        frames.push(AcousticFrame::from_vec(&v, lpc_order)?);
    }
    Ok(AcousticFeatureSequence {
        frames,
        sample_rate,
        frame_len,
        shift,
    })
}

pub fn save_features(path: &Path, seq: &AcousticFeatureSequence) -> Result<()> {
    write_atomic(path, &encode_features(seq))
}

pub fn load_features(path: &Path) -> Result<AcousticFeatureSequence> {
    decode_features(&std::fs::read(path)?)
}

pub fn encode_stats(stats: &FeatureStats) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(b"EXNS");
    out.extend_from_slice(&(stats.mean.len() as u32).to_le_bytes());
    for v in stats.mean.iter().chain(&stats.std) {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

pub fn decode_stats(bytes: &[u8]) -> Result<FeatureStats> {
    let mut r = ByteReader::new(bytes);
    r.magic(b"EXNS")?;
    let dim = r.u32()? as usize;
    let mut mean = Vec::with_capacity(dim);
    for _ in 0..dim {
        mean.push(r.f32()? as f64);
    }
    let mut std = Vec::with_capacity(dim);
    for _ in 0..dim {
        std.push(r.f32()? as f64);
    }
    Ok(FeatureStats { mean, std })
}

pub fn save_stats(path: &Path, stats: &FeatureStats) -> Result<()> {
    write_atomic(path, &encode_stats(stats))
}

pub fn load_stats(path: &Path) -> Result<FeatureStats> {
    decode_stats(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{analyze, AnalysisConfig};
    use crate::signal::Signal;

    fn demo_seq() -> AcousticFeatureSequence {
        let s = Signal::new(
            (0..12000)
                .map(|i| 0.4 * (2.0 * std::f64::consts::PI * 140.0 * i as f64 / 24000.0).sin())
                .collect(),
            24000,
        )
        .unwrap();
        analyze(&s, &AnalysisConfig::default()).unwrap()
    }

    #[test]
    fn feature_file_round_trip_is_byte_stable() {
        let seq = demo_seq();
        let bytes = encode_features(&seq);
        let loaded = decode_features(&bytes).unwrap();
        // second serialization reproduces the file bit-exactly
        assert_eq!(encode_features(&loaded), bytes);
        assert_eq!(loaded.n_frames(), seq.n_frames());
        assert_eq!(loaded.sample_rate, 24000);
        assert_eq!(loaded.frame_len, 480);
        assert_eq!(loaded.shift, 120);
    }

    #[test]
    fn truncated_feature_file_errors() {
        let bytes = encode_features(&demo_seq());
        assert!(decode_features(&bytes[..bytes.len() - 3]).is_err());
        assert!(decode_features(&bytes[..10]).is_err());
    }

    #[test]
    fn bad_magic_errors() {
        let mut bytes = encode_features(&demo_seq());
        bytes[0] = b'X';
        assert!(decode_features(&bytes).is_err());
    }

    #[test]
    fn stats_round_trip() {
        let stats = FeatureStats {
            mean: (0..79).map(|i| i as f64 * 0.25).collect(),
            std: (0..79).map(|i| 1.0 + i as f64 * 0.125).collect(),
        };
        let loaded = decode_stats(&encode_stats(&stats)).unwrap();
        assert_eq!(encode_stats(&loaded), encode_stats(&stats));
    }
}
