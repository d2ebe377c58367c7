//! Checkpoint (EXNM) serialization: config, vocoder kind, named f32
//! tensors, feature stats, excitation scale, optional noise-shaping filter
//! and Adam state, all little-endian with a trailing CRC32.

use super::adam::AdamState;
use super::{NetConfig, NetParams, Tensor};
use crate::error::{Error, Result};
use crate::features::FeatureStats;
use crate::io::{write_atomic, ByteReader};
use crate::vocoder::VocoderKind;
use std::path::Path;

pub const EXNM_VERSION: u32 = 1;

/// Serialized model state plus everything synthesis needs to invert the
/// data preparation: normalization stats, the corpus excitation scale, and
/// (for the noise-shaped baseline) the shaping filter.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: NetConfig,
    pub kind: VocoderKind,
    pub params: NetParams<f32>,
    pub stats: FeatureStats,
    pub scale: f64,
    pub noise_filter: Option<Vec<f64>>,
    pub step: u64,
    pub adam: Option<AdamState<f32>>,
}

fn crc32(bytes: &[u8]) -> u32 {
    // IEEE reflected CRC-32
    let mut crc: u32 = 0xFFFF_FFFF;
    for &b in bytes {
        crc ^= b as u32;
        for _ in 0..8 {
            let mask = (crc & 1).wrapping_neg();
            crc = (crc >> 1) ^ (0xEDB8_8320 & mask);
        }
    }
    !crc
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_tensor_table(out: &mut Vec<u8>, tensors: &[(String, &Tensor<f32>)]) {
    put_u32(out, tensors.len() as u32);
    for (name, t) in tensors {
        put_u32(out, name.len() as u32);
        out.extend_from_slice(name.as_bytes());
        out.push(1); // dtype: f32
        put_u32(out, t.shape.len() as u32);
        for &d in &t.shape {
            put_u32(out, d as u32);
        }
        for v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

fn read_tensor_table<R: std::io::Read>(
    r: &mut ByteReader<R>,
    params: &mut NetParams<f32>,
) -> Result<()> {
    let count = r.u32()? as usize;
    let mut filled = 0usize;
    for _ in 0..count {
        let name_len = r.u32()? as usize;
        if name_len > 1024 {
            return Err(Error::Format("tensor name too long".into()));
        }
        let name = String::from_utf8(r.bytes(name_len)?)
            .map_err(|_| Error::Format("non-UTF-8 tensor name".into()))?;
        let dtype = r.bytes(1)?[0];
        if dtype != 1 {
            return Err(Error::Format(format!("unsupported tensor dtype {dtype}")));
        }
        let rank = r.u32()? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u32()? as usize);
        }
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(r.f32()?);
        }
        let mut found = false;
        for (pname, t) in params.tensors_mut() {
            if pname == name {
                if t.shape != shape {
                    return Err(Error::Format(format!("tensor {name}: shape mismatch")));
                }
                t.data = data;
                found = true;
                filled += 1;
                break;
            }
        }
        if !found {
            return Err(Error::Format(format!("unknown tensor {name}")));
        }
    }
    let expected = params.tensors().len();
    if filled != expected {
        return Err(Error::Format(format!(
            "checkpoint holds {filled} of {expected} tensors"
        )));
    }
    Ok(())
}

pub fn encode_checkpoint(ckpt: &Checkpoint) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(b"EXNM");
    put_u32(&mut out, EXNM_VERSION);
    let c = &ckpt.config;
    for v in [
        c.n_blocks,
        c.layers_per_block,
        super::KERNEL,
        c.residual_channels,
        c.gate_channels,
        c.skip_channels,
        c.n_classes,
        c.cond_dim,
    ] {
        put_u32(&mut out, v as u32);
    }
    put_u64(&mut out, c.seed);
    put_u32(&mut out, ckpt.kind.as_u32());
    put_f64(&mut out, ckpt.scale);
    put_u64(&mut out, ckpt.step);
    match &ckpt.noise_filter {
        Some(a) => {
            out.push(1);
            put_u32(&mut out, a.len() as u32);
            for v in a {
                put_f64(&mut out, *v);
            }
        }
        None => out.push(0),
    }
    put_u32(&mut out, ckpt.stats.mean.len() as u32);
    for v in ckpt.stats.mean.iter().chain(&ckpt.stats.std) {
        put_f64(&mut out, *v);
    }
    put_tensor_table(&mut out, &ckpt.params.tensors());
    match &ckpt.adam {
        Some(adam) => {
            out.push(1);
            put_u64(&mut out, adam.t);
            put_tensor_table(&mut out, &adam.m.tensors());
            put_tensor_table(&mut out, &adam.v.tensors());
        }
        None => out.push(0),
    }
    let crc = crc32(&out);
    put_u32(&mut out, crc);
    out
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    if bytes.len() < 4 {
        return Err(Error::Format("truncated checkpoint".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    if crc32(body) != stored {
        return Err(Error::Format("checkpoint CRC mismatch".into()));
    }
    let mut r = ByteReader::new(body);
    r.magic(b"EXNM")?;
    let version = r.u32()?;
    if version != EXNM_VERSION {
        return Err(Error::Format(format!("unsupported EXNM version {version}")));
    }
    let n_blocks = r.u32()? as usize;
    let layers_per_block = r.u32()? as usize;
    let kernel = r.u32()? as usize;
    if kernel != super::KERNEL {
        return Err(Error::Format(format!("unsupported kernel {kernel}")));
    }
    let residual_channels = r.u32()? as usize;
    let gate_channels = r.u32()? as usize;
    let skip_channels = r.u32()? as usize;
    let n_classes = r.u32()? as usize;
    let cond_dim = r.u32()? as usize;
    let seed = r.u64()?;
    let config = NetConfig {
        n_blocks,
        layers_per_block,
        residual_channels,
        gate_channels,
        skip_channels,
        n_classes,
        cond_dim,
        seed,
    };
    config.validate()?;
    let kind = VocoderKind::from_u32(r.u32()?)?;
    let scale = r.f64()?;
    let step = r.u64()?;
    let noise_filter = if r.bytes(1)?[0] == 1 {
        let n = r.u32()? as usize;
        let mut a = Vec::with_capacity(n);
        for _ in 0..n {
            a.push(r.f64()?);
        }
        Some(a)
    } else {
        None
    };
    let dim = r.u32()? as usize;
    let mut mean = Vec::with_capacity(dim);
    for _ in 0..dim {
        mean.push(r.f64()?);
    }
    let mut std = Vec::with_capacity(dim);
    for _ in 0..dim {
        std.push(r.f64()?);
    }
    let mut params = NetParams::<f32>::zeros(&config);
    read_tensor_table(&mut r, &mut params)?;
    let adam = if r.bytes(1)?[0] == 1 {
        let t = r.u64()?;
        let mut m = NetParams::<f32>::zeros(&config);
        read_tensor_table(&mut r, &mut m)?;
        let mut v = NetParams::<f32>::zeros(&config);
        read_tensor_table(&mut r, &mut v)?;
        Some(AdamState { m, v, t })
    } else {
        None
    };
    Ok(Checkpoint {
        config,
        kind,
        params,
        stats: FeatureStats { mean, std },
        scale,
        noise_filter,
        step,
        adam,
    })
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    write_atomic(path, &encode_checkpoint(ckpt))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    decode_checkpoint(&std::fs::read(path)?)
}
