//! Acoustic conditioning features: per-frame LSF, SEW/REW, log-F0, gain,
//! and voicing, with normalization statistics and sample-rate upsampling.

pub mod io;
pub mod pitch;
pub mod sew_rew;

use crate::dsp::{self, LpcFrame, LsfFrame};
use crate::error::{Error, Result};
use crate::signal::Signal;
pub use pitch::{estimate_f0, PitchConfig, PitchFrame};
pub use sew_rew::{extract_sew_rew, REW_DIM, SEW_DIM};

/// Gain floor: 0.5 ln(1e-10) for an all-zero frame.
pub const GAIN_FLOOR_EPS: f64 = 1e-10;

/// log-F0 carried by unvoiced frames: ln of the search floor.
pub const LOG_F0_FLOOR: f64 = 4.0943445622221; // ln(60)

/// Analysis configuration tied to a sample rate.
#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub sample_rate: u32,
    pub frame_len: usize,
    pub shift: usize,
    pub lpc_order: usize,
    pub pitch: PitchConfig,
}

impl AnalysisConfig {
    /// 20 ms frames, 5 ms shift, order-40 LP at the given rate.
    pub fn for_sample_rate(sample_rate: u32) -> Self {
        Self {
            sample_rate,
            frame_len: (sample_rate as usize * 20) / 1000,
            shift: (sample_rate as usize * 5) / 1000,
            lpc_order: 40,
            pitch: PitchConfig::default(),
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.lpc_order + SEW_DIM + REW_DIM + 3
    }
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self::for_sample_rate(crate::signal::DEFAULT_SAMPLE_RATE)
    }
}

/// One conditioning vector: [lsf | sew | rew | log_f0 | gain | vuv].
#[derive(Debug, Clone, PartialEq)]
pub struct AcousticFrame {
    pub lsf: Vec<f64>,
    pub sew: Vec<f64>,
    pub rew: Vec<f64>,
    pub log_f0: f64,
    pub gain: f64,
    pub vuv: f64,
}

impl AcousticFrame {
    pub fn dim(&self) -> usize {
        self.lsf.len() + self.sew.len() + self.rew.len() + 3
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.extend_from_slice(&self.lsf);
        v.extend_from_slice(&self.sew);
        v.extend_from_slice(&self.rew);
        v.push(self.log_f0);
        v.push(self.gain);
        v.push(self.vuv);
        v
    }

    pub fn from_vec(v: &[f64], lpc_order: usize) -> Result<Self> {
        let expected = lpc_order + SEW_DIM + REW_DIM + 3;
        if v.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "feature vector length {} != {}",
                v.len(),
                expected
            )));
        }
        let mut it = v.iter().copied();
        let lsf: Vec<f64> = it.by_ref().take(lpc_order).collect();
        let sew: Vec<f64> = it.by_ref().take(SEW_DIM).collect();
        let rew: Vec<f64> = it.by_ref().take(REW_DIM).collect();
        let log_f0 = it.next().unwrap();
        let gain = it.next().unwrap();
        let vuv = it.next().unwrap();
        Ok(Self {
            lsf,
            sew,
            rew,
            log_f0,
            gain,
            vuv,
        })
    }
}

/// A whole utterance's worth of frames plus provenance metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct AcousticFeatureSequence {
    pub frames: Vec<AcousticFrame>,
    pub sample_rate: u32,
    pub frame_len: usize,
    pub shift: usize,
}

impl AcousticFeatureSequence {
    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn dim(&self) -> usize {
        self.frames.first().map(|f| f.dim()).unwrap_or(0)
    }
}

/// Per-dimension mean and standard deviation over a training split.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub const STD_FLOOR: f64 = 1e-8;

/// Log frame energy: 0.5 ln(max(mean(x^2), 1e-10)).
pub fn compute_gain(frame: &[f64]) -> f64 {
    let ms = if frame.is_empty() {
        0.0
    } else {
        frame.iter().map(|x| x * x).sum::<f64>() / frame.len() as f64
    };
    0.5 * ms.max(GAIN_FLOOR_EPS).ln()
}

/// Full per-utterance feature extraction on the 20 ms / 5 ms grid.
pub fn analyze(signal: &Signal, cfg: &AnalysisConfig) -> Result<AcousticFeatureSequence> {
    let frames = dsp::frame_signal(signal, cfg.frame_len, cfg.shift)?;
    let n_frames = frames.len();

    // spectral envelope per frame, stored as LSF
    let lsf_frames: Vec<Result<LsfFrame>> = crate::par::map_slice(&frames, |frame| {
        let r = dsp::analysis_autocorrelation(frame, cfg.lpc_order)?;
        let lpc = dsp::levinson_durbin(&r, cfg.lpc_order)?;
        if lpc.a.iter().all(|&v| v == 0.0) {
            // silent frame: flat predictor
            return dsp::lpc_to_lsf(&LpcFrame::zero(cfg.lpc_order));
        }
        dsp::lpc_to_lsf(&lpc)
    });
    let lsf_frames: Vec<LsfFrame> = lsf_frames.into_iter().collect::<Result<_>>()?;

    // excitation via the quantization-consistent LSF->LPC track
    let lpc_track: Vec<LpcFrame> = lsf_frames
        .iter()
        .map(dsp::lsf_to_lpc)
        .collect::<Result<_>>()?;
    let truncated = Signal {
        samples: signal.samples[..(n_frames * cfg.shift).min(signal.len())].to_vec(),
        sample_rate: signal.sample_rate,
    };
    let mut trunc = truncated;
    trunc.samples.resize(n_frames * cfg.shift, 0.0);
    let excitation = dsp::lp_analysis(&trunc, &lpc_track, cfg.shift)?;

    let pitch = estimate_f0(signal, cfg.frame_len, cfg.shift, &cfg.pitch);
    let sewrew = extract_sew_rew(
        &excitation.samples,
        &pitch,
        n_frames,
        cfg.frame_len,
        cfg.shift,
        signal.sample_rate,
    );

    let out: Vec<AcousticFrame> = (0..n_frames)
        .map(|i| {
            let p = pitch[i];
            let (sew, rew) = sewrew[i].clone();
            AcousticFrame {
                lsf: lsf_frames[i].w.clone(),
                sew,
                rew,
                log_f0: if p.voiced { p.f0.ln() } else { LOG_F0_FLOOR },
                gain: compute_gain(&frames[i]),
                vuv: if p.voiced { 1.0 } else { 0.0 },
            }
        })
        .collect();

    Ok(AcousticFeatureSequence {
        frames: out,
        sample_rate: signal.sample_rate,
        frame_len: cfg.frame_len,
        shift: cfg.shift,
    })
}

/// Mean/std over every frame of every sequence, in the given order.
/// The trailing v/uv dimension gets identity stats (mean 0, std 1).
pub fn compute_stats(sequences: &[AcousticFeatureSequence]) -> Result<FeatureStats> {
    let dim = sequences
        .first()
        .map(|s| s.dim())
        .ok_or(Error::EmptyInput)?;
    let mut count = 0usize;
    let mut sum = vec![0.0; dim];
    for seq in sequences {
        for frame in &seq.frames {
            let v = frame.to_vec();
            if v.len() != dim {
                return Err(Error::ShapeMismatch("feature dim".into()));
            }
            for (s, x) in sum.iter_mut().zip(&v) {
                *s += x;
            }
            count += 1;
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
    let mut sq = vec![0.0; dim];
    for seq in sequences {
        for frame in &seq.frames {
            let v = frame.to_vec();
            for ((s, x), m) in sq.iter_mut().zip(&v).zip(&mean) {
                *s += (x - m) * (x - m);
            }
        }
    }
    let mut std: Vec<f64> = sq
        .iter()
        .map(|s| (s / count as f64).sqrt().max(STD_FLOOR))
        .collect();
    let mut mean = mean;
    // vuv bypasses normalization
    mean[dim - 1] = 0.0;
    std[dim - 1] = 1.0;
    Ok(FeatureStats { mean, std })
}

fn map_sequence(
    seq: &AcousticFeatureSequence,
    stats: &FeatureStats,
    forward: bool,
) -> Result<AcousticFeatureSequence> {
    let dim = seq.dim();
    if dim != stats.mean.len() || dim != stats.std.len() {
        return Err(Error::ShapeMismatch(format!(
            "feature dim {} vs stats dim {}",
            dim,
            stats.mean.len()
        )));
    }
    let lpc_order = seq.frames[0].lsf.len();
    let frames = seq
        .frames
        .iter()
        .map(|f| {
            let v = f.to_vec();
            let mapped: Vec<f64> = v
                .iter()
                .enumerate()
                .map(|(d, &x)| {
                    if d == dim - 1 {
                        x // vuv passes through
                    } else if forward {
                        (x - stats.mean[d]) / stats.std[d]
                    } else {
                        x * stats.std[d] + stats.mean[d]
                    }
                })
                .collect();
            AcousticFrame::from_vec(&mapped, lpc_order)
        })
        .collect::<Result<_>>()?;
    Ok(AcousticFeatureSequence {
        frames,
        ..seq.clone()
    })
}

pub fn normalize(
    seq: &AcousticFeatureSequence,
    stats: &FeatureStats,
) -> Result<AcousticFeatureSequence> {
    map_sequence(seq, stats, true)
}

pub fn denormalize(
    seq: &AcousticFeatureSequence,
    stats: &FeatureStats,
) -> Result<AcousticFeatureSequence> {
    map_sequence(seq, stats, false)
}

/// Row-major matrix of duplicated per-sample conditioning rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub data: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

impl FeatureMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Duplicates each frame's vector across its `shift` samples.
pub fn upsample_features(seq: &AcousticFeatureSequence, shift: usize) -> FeatureMatrix {
    let dim = seq.dim();
    let rows = seq.n_frames() * shift;
    let mut data = Vec::with_capacity(rows * dim);
    for frame in &seq.frames {
        let v = frame.to_vec();
        for _ in 0..shift {
            data.extend_from_slice(&v);
        }
    }
    FeatureMatrix {
        data,
        rows,
        cols: dim,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tone(freq: f64, secs: f64, sr: u32) -> Signal {
        let n = (secs * sr as f64) as usize;
        Signal::new(
            (0..n)
                .map(|i| 0.4 * (2.0 * PI * freq * i as f64 / sr as f64).sin())
                .collect(),
            sr,
        )
        .unwrap()
    }

    #[test]
    fn gain_floor() {
        let g = compute_gain(&[0.0; 480]);
        assert!((g - 0.5 * (1e-10f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn gain_of_unit_constant_is_zero() {
        assert!(compute_gain(&[1.0; 480]).abs() < 1e-12);
    }

    #[test]
    fn gain_homogeneity() {
        let x: Vec<f64> = (0..480).map(|i| 0.1 * (i as f64 * 0.05).sin()).collect();
        let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        assert!((compute_gain(&x2) - compute_gain(&x) - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn analyze_one_second_shape() {
        let s = tone(150.0, 1.0, 24000);
        let seq = analyze(&s, &AnalysisConfig::default()).unwrap();
        assert_eq!(seq.n_frames(), 197);
        assert_eq!(seq.dim(), 79);
    }

    #[test]
    fn analyze_frame_count_matches_frame_signal() {
        let s = tone(150.0, 0.73, 24000);
        let cfg = AnalysisConfig::default();
        let seq = analyze(&s, &cfg).unwrap();
        let frames = dsp::frame_signal(&s, cfg.frame_len, cfg.shift).unwrap();
        assert_eq!(seq.n_frames(), frames.len());
    }

    #[test]
    fn synthetic_vowel_recovers_generator_lsf() {
        // pulse train through a fixed order-4 formant filter
        let sr = 24000;
        let n = 24000;
        let gen = LpcFrame {
            order: 4,
            a: vec![1.8, -1.62, 0.77, -0.21],
            residual_energy: 0.0,
        };
        let e: Vec<f64> = (0..n).map(|i| if i % 120 == 0 { 0.8 } else { 0.0 }).collect();
        let track = vec![gen.clone(); n / 120];
        let x = dsp::lp_synthesis(&Signal::new(e, sr).unwrap(), &track, 120).unwrap();
        let mut cfg = AnalysisConfig::default();
        cfg.lpc_order = 4;
        let seq = analyze(&x, &cfg).unwrap();
        let target = dsp::lpc_to_lsf(&gen).unwrap();
        let inner = &seq.frames[20..seq.frames.len() - 20];
        for f in inner {
            assert_eq!(f.vuv, 1.0);
            for (got, want) in f.lsf.iter().zip(&target.w) {
                assert!((got - want).abs() < 0.02, "{got} vs {want}");
            }
        }
    }

    #[test]
    fn silence_features() {
        let s = Signal::new(vec![0.0; 24000], 24000).unwrap();
        let seq = analyze(&s, &AnalysisConfig::default()).unwrap();
        for f in &seq.frames {
            assert_eq!(f.vuv, 0.0);
            assert_eq!(f.log_f0, LOG_F0_FLOOR);
            assert!((f.gain - 0.5 * (1e-10f64).ln()).abs() < 1e-9);
            for (k, &w) in f.lsf.iter().enumerate() {
                let flat = (k + 1) as f64 * PI / 41.0;
                assert!((w - flat).abs() < 0.05);
            }
        }
    }

    #[test]
    fn stats_normalize_denormalize_identity() {
        let a = analyze(&tone(120.0, 0.5, 24000), &AnalysisConfig::default()).unwrap();
        let b = analyze(&tone(250.0, 0.5, 24000), &AnalysisConfig::default()).unwrap();
        let stats = compute_stats(&[a.clone(), b.clone()]).unwrap();
        let na = normalize(&a, &stats).unwrap();
        let back = denormalize(&na, &stats).unwrap();
        for (f, g) in a.frames.iter().zip(&back.frames) {
            for (x, y) in f.to_vec().iter().zip(&g.to_vec()) {
                assert!((x - y).abs() <= 1e-10);
            }
        }
        // vuv stays binary
        for f in &na.frames {
            assert!(f.vuv == 0.0 || f.vuv == 1.0);
        }
    }

    #[test]
    fn normalized_corpus_is_zero_mean_unit_variance() {
        let a = analyze(&tone(120.0, 0.5, 24000), &AnalysisConfig::default()).unwrap();
        let b = analyze(&tone(250.0, 0.5, 24000), &AnalysisConfig::default()).unwrap();
        let stats = compute_stats(&[a.clone(), b.clone()]).unwrap();
        let normed = [normalize(&a, &stats).unwrap(), normalize(&b, &stats).unwrap()];
        let dim = normed[0].dim();
        let count: usize = normed.iter().map(|s| s.n_frames()).sum();
        for d in 0..dim - 1 {
            let mean: f64 = normed
                .iter()
                .flat_map(|s| s.frames.iter())
                .map(|f| f.to_vec()[d])
                .sum::<f64>()
                / count as f64;
            assert!(mean.abs() <= 1e-8, "dim {d}: mean {mean}");
            let var: f64 = normed
                .iter()
                .flat_map(|s| s.frames.iter())
                .map(|f| (f.to_vec()[d] - mean) * (f.to_vec()[d] - mean))
                .sum::<f64>()
                / count as f64;
            // constant dims stay at zero, others at unit variance
            assert!(var < 1e-6 || (var.sqrt() - 1.0).abs() <= 1e-6, "dim {d}: var {var}");
        }
    }

    #[test]
    fn constant_dim_hits_std_floor() {
        let a = analyze(&tone(120.0, 0.3, 24000), &AnalysisConfig::default()).unwrap();
        let stats = compute_stats(&[a.clone()]).unwrap();
        // fabricate a constant dim by reusing the same sequence: vuv is
        // constant-voiced here, but vuv is exempt; check a hand-built case
        let mut seq = a.clone();
        for f in seq.frames.iter_mut() {
            f.gain = 1.25;
        }
        let stats2 = compute_stats(&[seq.clone()]).unwrap();
        let dim = seq.dim();
        assert_eq!(stats2.std[dim - 2], STD_FLOOR);
        let normed = normalize(&seq, &stats2).unwrap();
        for f in &normed.frames {
            assert!(f.gain.abs() < 1e-3);
        }
        drop(stats);
    }

    #[test]
    fn stats_match_hand_computation() {
        // two tiny fabricated sequences with spreadsheet-checkable stats
        let mk = |gain: f64| AcousticFeatureSequence {
            frames: vec![AcousticFrame {
                lsf: (1..=40).map(|k| k as f64 * PI / 41.0).collect(),
                sew: vec![0.0; 32],
                rew: vec![0.0; 4],
                log_f0: 5.0,
                gain,
                vuv: 1.0,
            }],
            sample_rate: 24000,
            frame_len: 480,
            shift: 120,
        };
        let stats = compute_stats(&[mk(1.0), mk(3.0)]).unwrap();
        let dim = 79;
        assert!((stats.mean[dim - 2] - 2.0).abs() < 1e-12);
        assert!((stats.std[dim - 2] - 1.0).abs() < 1e-12); // population std of {1,3}
    }

    #[test]
    fn upsample_shape_and_duplication() {
        let a = analyze(&tone(130.0, 1.0, 24000), &AnalysisConfig::default()).unwrap();
        let m = upsample_features(&a, 120);
        assert_eq!(m.rows, 197 * 120);
        assert_eq!(m.rows, 23640);
        assert_eq!(m.cols, 79);
        // every block of 120 rows constant
        for f in 0..5 {
            let base = m.row(f * 120).to_vec();
            for r in 1..120 {
                assert_eq!(m.row(f * 120 + r), &base[..]);
            }
        }
        // row 120 equals frame 1, not frame 0
        assert_eq!(m.row(120), &a.frames[1].to_vec()[..]);
        assert_ne!(m.row(120), &a.frames[0].to_vec()[..]);
    }
}
