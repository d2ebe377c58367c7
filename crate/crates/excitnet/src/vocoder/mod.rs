//! End-to-end pipelines: dataset preparation, vocoder training, neural
//! synthesis, copy-synthesis, and objective evaluation metrics.

pub mod metrics;

use crate::dsp::{self, LpcFrame, LsfFrame, NoiseShapingFilter};
use crate::error::{Error, Result};
use crate::features::{
    self, analyze, AcousticFeatureSequence, AnalysisConfig, FeatureStats,
};
use crate::net::{
    generate_fast, init_network, load_checkpoint, save_checkpoint, train_step, AdamState,
    Checkpoint, GenMode, NetConfig, NetParams,
};
use crate::signal::Signal;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;
use std::str::FromStr;

pub use metrics::{
    f0_metrics, log_spectral_distortion, segmental_snr, MetricsReport, UtteranceMetrics,
};

/// Which signal the network models: the LP residual, or speech passed
/// through the corpus noise-shaping filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VocoderKind {
    Excitnet,
    WavenetNs,
}

impl VocoderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VocoderKind::Excitnet => "excitnet",
            VocoderKind::WavenetNs => "wavenet_ns",
        }
    }

    pub fn as_u32(self) -> u32 {
        match self {
            VocoderKind::Excitnet => 0,
            VocoderKind::WavenetNs => 1,
        }
    }

    pub fn from_u32(v: u32) -> Result<Self> {
        match v {
            0 => Ok(VocoderKind::Excitnet),
            1 => Ok(VocoderKind::WavenetNs),
            _ => Err(Error::Format(format!("unknown vocoder kind {v}"))),
        }
    }
}

impl std::fmt::Display for VocoderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VocoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "excitnet" => Ok(VocoderKind::Excitnet),
            "wavenet_ns" => Ok(VocoderKind::WavenetNs),
            other => Err(Error::InvalidArg(format!(
                "unknown vocoder kind '{other}' (expected excitnet or wavenet_ns)"
            ))),
        }
    }
}

/// One utterance ready for teacher forcing: mu-law codes plus per-sample
/// conditioning rows already normalized. codes.len() == conditions.rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub id: String,
    pub codes: Vec<u8>,
    pub conditions: features::FeatureMatrix,
}

/// Corpus-level preparation output: examples plus everything synthesis
/// needs to invert the target mapping.
#[derive(Debug, Clone)]
pub struct PreparedDataset {
    pub kind: VocoderKind,
    pub examples: Vec<TrainingExample>,
    pub stats: FeatureStats,
    /// single corpus-level scale: target * scale lands in [-0.99, 0.99]
    pub scale: f64,
    pub noise_filter: Option<NoiseShapingFilter>,
    pub sample_rate: u32,
    pub shift: usize,
}

/// LPC track rebuilt from a feature stream's LSFs; the same quantized
/// envelope drives analysis and synthesis.
fn lpc_track(seq: &AcousticFeatureSequence) -> Result<Vec<LpcFrame>> {
    seq.frames
        .iter()
        .map(|f| {
            dsp::lsf_to_lpc(&LsfFrame {
                order: f.lsf.len(),
                w: f.lsf.clone(),
            })
        })
        .collect()
}

/// Pads or truncates to exactly n_frames * shift samples.
fn grid_aligned(signal: &Signal, n_frames: usize, shift: usize) -> Signal {
    let want = n_frames * shift;
    let mut samples = signal.samples[..want.min(signal.len())].to_vec();
    samples.resize(want, 0.0);
    Signal {
        samples,
        sample_rate: signal.sample_rate,
    }
}

/// The signal the network is trained to predict for this utterance:
/// LP residual (excitnet) or noise-shaped speech (wavenet_ns).
fn target_signal(
    signal: &Signal,
    seq: &AcousticFeatureSequence,
    kind: VocoderKind,
    filter: Option<&NoiseShapingFilter>,
) -> Result<Signal> {
    let aligned = grid_aligned(signal, seq.n_frames(), seq.shift);
    match kind {
        VocoderKind::Excitnet => dsp::lp_analysis(&aligned, &lpc_track(seq)?, seq.shift),
        VocoderKind::WavenetNs => {
            let f = filter.expect("wavenet_ns requires a noise filter");
            dsp::apply_noise_shaping(&aligned, f)
        }
    }
}

/// Analyzes a corpus and builds mu-law training targets with normalized,
/// sample-rate conditioning. Analysis parallelizes per utterance; the
/// corpus reductions (stats, scale) run in input order.
pub fn prepare_dataset(
    utterances: &[(String, Signal)],
    kind: VocoderKind,
    cfg: &AnalysisConfig,
) -> Result<PreparedDataset> {
    if utterances.is_empty() {
        return Err(Error::EmptyInput);
    }
    let analyzed: Vec<Result<AcousticFeatureSequence>> =
        crate::par::map_slice(utterances, |(_, s)| analyze(s, cfg));
    let analyzed: Vec<AcousticFeatureSequence> = analyzed.into_iter().collect::<Result<_>>()?;
    let stats = features::compute_stats(&analyzed)?;

    let noise_filter = match kind {
        VocoderKind::Excitnet => None,
        VocoderKind::WavenetNs => {
            let corpus: Vec<Signal> = utterances.iter().map(|(_, s)| s.clone()).collect();
            Some(dsp::derive_noise_shaping_filter(
                &corpus,
                cfg.lpc_order,
                cfg.frame_len,
                cfg.shift,
            )?)
        }
    };

    let targets: Vec<Signal> = utterances
        .iter()
        .zip(&analyzed)
        .map(|((_, s), seq)| target_signal(s, seq, kind, noise_filter.as_ref()))
        .collect::<Result<_>>()?;

    let peak = targets
        .iter()
        .flat_map(|t| t.samples.iter())
        .fold(0.0f64, |m, &v| m.max(v.abs()));
    let scale = if peak > 0.0 { 0.99 / peak } else { 1.0 };

    let mut examples = Vec::with_capacity(utterances.len());
    for (((id, _), seq), target) in utterances.iter().zip(&analyzed).zip(&targets) {
        let codes: Vec<u8> = target
            .samples
            .iter()
            .map(|&v| {
                let scaled = v * scale;
                debug_assert!(scaled.abs() <= 0.99 + 1e-12);
                dsp::mu_law_encode(scaled)
            })
            .collect();
        let normed = features::normalize(seq, &stats)?;
        let conditions = features::upsample_features(&normed, seq.shift);
        if codes.len() != conditions.rows {
            return Err(Error::ShapeMismatch(format!(
                "{id}: {} codes vs {} condition rows",
                codes.len(),
                conditions.rows
            )));
        }
        examples.push(TrainingExample {
            id: id.clone(),
            codes,
            conditions,
        });
    }

    Ok(PreparedDataset {
        kind,
        examples,
        stats,
        scale,
        noise_filter,
        sample_rate: cfg.sample_rate,
        shift: cfg.shift,
    })
}

/// Training schedule. `batch` is the teacher-forced window length in
/// samples; windows are drawn uniformly with a seeded generator.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub steps: u64,
    pub lr: f64,
    pub batch: usize,
    pub seed: u64,
    /// stop early once the step loss reaches this many nats/sample
    pub target_nll: Option<f64>,
    /// save the checkpoint every this many steps (and at the end)
    pub checkpoint_every: Option<u64>,
    pub out: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 2000,
            lr: 1e-4,
            batch: 4800,
            seed: 0,
            target_nll: None,
            checkpoint_every: None,
            out: None,
        }
    }
}

fn conds_f32(m: &features::FeatureMatrix, start: usize, len: usize) -> Vec<f32> {
    m.data[start * m.cols..(start + len) * m.cols]
        .iter()
        .map(|&v| v as f32)
        .collect()
}

/// Trains a vocoder from scratch over the prepared dataset. Single
/// threaded and deterministic: the same seeds and data order give a
/// bit-identical checkpoint. Reports (step, loss) after every step.
pub fn train_vocoder(
    dataset: &PreparedDataset,
    net: &NetConfig,
    train: &TrainConfig,
    mut on_step: impl FnMut(u64, f64),
) -> Result<Checkpoint> {
    if dataset.examples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let dim = dataset.examples[0].conditions.cols;
    if net.cond_dim != dim {
        return Err(Error::ShapeMismatch(format!(
            "net cond_dim {} vs feature dim {}",
            net.cond_dim, dim
        )));
    }
    let mut params: NetParams<f32> = init_network(net);
    let mut adam = AdamState::new(net);
    let mut rng = ChaCha8Rng::seed_from_u64(train.seed);
    let mut ckpt = Checkpoint {
        config: net.clone(),
        kind: dataset.kind,
        params: params.clone(),
        stats: dataset.stats.clone(),
        scale: dataset.scale,
        noise_filter: dataset.noise_filter.as_ref().map(|f| f.lpc.a.clone()),
        step: 0,
        adam: None,
    };
    for step in 0..train.steps {
        let ex = &dataset.examples[rng.gen_range(0..dataset.examples.len())];
        let len = train.batch.min(ex.codes.len());
        // windows start on frame boundaries so conditioning frames are
        // never split and window phase matches generation from t = 0
        let max_start_frames = (ex.codes.len() - len) / dataset.shift;
        let start = if max_start_frames > 0 {
            rng.gen_range(0..=max_start_frames) * dataset.shift
        } else {
            0
        };
        let codes = &ex.codes[start..start + len];
        let conds = conds_f32(&ex.conditions, start, len);
        let loss = train_step(&mut params, &mut adam, codes, &conds, train.lr)?;
        on_step(step, loss);
        let done = step + 1 == train.steps
            || train.target_nll.map(|t| loss <= t).unwrap_or(false);
        ckpt.params = params.clone();
        ckpt.step = step + 1;
        if let Some(out) = &train.out {
            let cadence_hit = train
                .checkpoint_every
                .map(|c| (step + 1) % c == 0)
                .unwrap_or(false);
            if cadence_hit || done {
                ckpt.adam = Some(adam.clone());
                save_checkpoint(out, &ckpt)?;
                ckpt.adam = None;
            }
        }
        if done {
            break;
        }
    }
    Ok(ckpt)
}

/// Generates a waveform from acoustic features with a trained checkpoint.
/// The provided features are raw (unnormalized); normalization uses the
/// stats stored in the checkpoint, and the LP envelope for excitnet
/// reconstruction comes from the same feature stream.
pub fn synthesize(
    ckpt: &Checkpoint,
    seq: &AcousticFeatureSequence,
    kind: VocoderKind,
    mode: GenMode,
) -> Result<Signal> {
    if ckpt.kind != kind {
        return Err(Error::KindMismatch {
            checkpoint: ckpt.kind.as_str().into(),
            requested: kind.as_str().into(),
        });
    }
    if seq.dim() != ckpt.config.cond_dim {
        return Err(Error::ShapeMismatch(format!(
            "feature dim {} vs net cond_dim {}",
            seq.dim(),
            ckpt.config.cond_dim
        )));
    }
    let normed = features::normalize(seq, &ckpt.stats)?;
    let m = features::upsample_features(&normed, seq.shift);
    let conds = conds_f32(&m, 0, m.rows);
    let codes = generate_fast(&ckpt.params, &conds, m.rows, mode)?;
    let target: Vec<f64> = codes
        .iter()
        .map(|&c| dsp::mu_law_decode(c) / ckpt.scale)
        .collect();
    let target = Signal::new(target, seq.sample_rate)?;
    let out = match kind {
        VocoderKind::Excitnet => dsp::lp_synthesis(&target, &lpc_track(seq)?, seq.shift)?,
        VocoderKind::WavenetNs => {
            let a = ckpt
                .noise_filter
                .as_ref()
                .ok_or_else(|| Error::Format("checkpoint lacks noise filter".into()))?;
            let filter = NoiseShapingFilter {
                lpc: LpcFrame {
                    order: a.len(),
                    a: a.clone(),
                    residual_energy: 0.0,
                },
            };
            dsp::invert_noise_shaping(&target, &filter)?
        }
    };
    if !out.samples.iter().all(|v| v.is_finite()) {
        return Err(Error::SynthesisDiverged);
    }
    Ok(out)
}

/// Convenience wrapper loading the checkpoint from disk.
pub fn synthesize_from_file(
    path: &std::path::Path,
    seq: &AcousticFeatureSequence,
    kind: VocoderKind,
    mode: GenMode,
) -> Result<Signal> {
    synthesize(&load_checkpoint(path)?, seq, kind, mode)
}

/// Analysis immediately followed by synthesis from the extracted envelope:
/// isolates the LP + mu-law chain from the neural model. With
/// quantize=false this is the perfect-reconstruction identity.
pub fn copy_synthesis(signal: &Signal, cfg: &AnalysisConfig, quantize: bool) -> Result<Signal> {
    copy_synthesis_with_classes(signal, cfg, quantize, 8)
}

/// Copy-synthesis with a configurable mu-law width (bits in [2, 16]);
/// exists so tests can check that more classes mean higher fidelity.
pub fn copy_synthesis_with_classes(
    signal: &Signal,
    cfg: &AnalysisConfig,
    quantize: bool,
    bits: u32,
) -> Result<Signal> {
    let seq = analyze(signal, cfg)?;
    let track = lpc_track(&seq)?;
    let aligned = grid_aligned(signal, seq.n_frames(), seq.shift);
    let mut excitation = dsp::lp_analysis(&aligned, &track, seq.shift)?;
    if quantize {
        let peak = excitation
            .samples
            .iter()
            .fold(0.0f64, |m, &v| m.max(v.abs()));
        let scale = if peak > 0.0 { 0.99 / peak } else { 1.0 };
        let classes = 1u32 << bits;
        for v in excitation.samples.iter_mut() {
            *v = quantize_round_trip(*v * scale, classes) / scale;
        }
    }
    dsp::lp_synthesis(&excitation, &track, seq.shift)
}

/// mu-law encode/decode at an arbitrary even class count.
fn quantize_round_trip(x: f64, classes: u32) -> f64 {
    let mu = 255.0;
    let x = x.clamp(-1.0, 1.0);
    let f = x.signum() * (1.0 + mu * x.abs()).ln() / (1.0 + mu).ln();
    let bin = (((f + 1.0) / 2.0) * classes as f64)
        .floor()
        .clamp(0.0, (classes - 1) as f64);
    let y = (bin + 0.5) / (classes as f64 / 2.0) - 1.0;
    y.signum() * ((1.0 + mu).powf(y.abs()) - 1.0) / mu
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::lp_synthesis;

    fn vowel(secs: f64, f0_period: usize) -> Signal {
        // pulse train through a fixed 4-pole formant filter
        let sr = 24000;
        let n = (secs * sr as f64) as usize;
        let n = (n / 120) * 120;
        let gen = LpcFrame {
            order: 4,
            a: vec![1.8, -1.62, 0.77, -0.21],
            residual_energy: 0.0,
        };
        let e: Vec<f64> = (0..n)
            .map(|i| if i % f0_period == 0 { 0.6 } else { 0.0 })
            .collect();
        let track = vec![gen; n / 120];
        lp_synthesis(&Signal::new(e, sr).unwrap(), &track, 120).unwrap()
    }

    fn toy_cfg() -> AnalysisConfig {
        let mut cfg = AnalysisConfig::default();
        cfg.lpc_order = 8;
        cfg
    }

    #[test]
    fn kind_round_trips_through_u32_and_str() {
        for kind in [VocoderKind::Excitnet, VocoderKind::WavenetNs] {
            assert_eq!(VocoderKind::from_u32(kind.as_u32()).unwrap(), kind);
            assert_eq!(kind.as_str().parse::<VocoderKind>().unwrap(), kind);
        }
        assert!(VocoderKind::from_u32(7).is_err());
        assert!("melgan".parse::<VocoderKind>().is_err());
    }

    #[test]
    fn prepared_examples_are_aligned_and_bounded() {
        let utts = vec![
            ("a".to_string(), vowel(0.3, 120)),
            ("b".to_string(), vowel(0.25, 96)),
        ];
        let cfg = toy_cfg();
        let ds = prepare_dataset(&utts, VocoderKind::Excitnet, &cfg).unwrap();
        assert_eq!(ds.examples.len(), 2);
        for (ex, (_, sig)) in ds.examples.iter().zip(&utts) {
            assert_eq!(ex.codes.len(), ex.conditions.rows);
            let n_frames = crate::dsp::frame_count(sig.len(), cfg.frame_len, cfg.shift);
            assert_eq!(ex.codes.len(), n_frames * cfg.shift);
        }
        // scale maps the corpus residual peak to 0.99
        assert!(ds.scale.is_finite() && ds.scale > 0.0);
        assert!(ds.noise_filter.is_none());
    }

    #[test]
    fn prepared_codes_invert_to_the_signal() {
        // decode + unscale + LP synthesis stays within quantization noise
        let utts = vec![("v".to_string(), vowel(0.4, 120))];
        let cfg = toy_cfg();
        let ds = prepare_dataset(&utts, VocoderKind::Excitnet, &cfg).unwrap();
        let ex = &ds.examples[0];
        let decoded: Vec<f64> = ex
            .codes
            .iter()
            .map(|&c| dsp::mu_law_decode(c) / ds.scale)
            .collect();
        let seq = analyze(&utts[0].1, &cfg).unwrap();
        let track = lpc_track(&seq).unwrap();
        let rec = lp_synthesis(&Signal::new(decoded, 24000).unwrap(), &track, cfg.shift).unwrap();
        let reference = grid_aligned(&utts[0].1, seq.n_frames(), cfg.shift);
        let snr = segmental_snr(&reference, &rec).unwrap();
        assert!(snr >= 20.0, "segmental SNR {snr}");
    }

    #[test]
    fn wavenet_ns_preparation_carries_filter() {
        let utts = vec![("v".to_string(), vowel(0.3, 120))];
        let ds = prepare_dataset(&utts, VocoderKind::WavenetNs, &toy_cfg()).unwrap();
        let filter = ds.noise_filter.as_ref().unwrap();
        assert_eq!(filter.lpc.a.len(), 8);
        assert_eq!(ds.examples[0].codes.len(), ds.examples[0].conditions.rows);
    }

    #[test]
    fn copy_synthesis_unquantized_is_identity() {
        let x = vowel(0.3, 120);
        let cfg = toy_cfg();
        let y = copy_synthesis(&x, &cfg, false).unwrap();
        let aligned = grid_aligned(&x, y.len() / cfg.shift, cfg.shift);
        let num: f64 = aligned
            .samples
            .iter()
            .zip(&y.samples)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let den: f64 = aligned.samples.iter().map(|a| a * a).sum();
        assert!((num / den).sqrt() <= 1e-9, "relative RMS {}", (num / den).sqrt());
    }

    #[test]
    fn copy_synthesis_quantized_snr_improves_with_classes() {
        let x = vowel(0.4, 120);
        let cfg = toy_cfg();
        let y8 = copy_synthesis_with_classes(&x, &cfg, true, 8).unwrap();
        let y9 = copy_synthesis_with_classes(&x, &cfg, true, 9).unwrap();
        let aligned = grid_aligned(&x, y8.len() / cfg.shift, cfg.shift);
        // unclamped global SNR: the per-frame clamp saturates at 35 dB here
        let global_snr = |deg: &Signal| {
            let sig: f64 = aligned.samples.iter().map(|v| v * v).sum();
            let err: f64 = aligned
                .samples
                .iter()
                .zip(&deg.samples)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            10.0 * (sig / err).log10()
        };
        let snr8 = global_snr(&y8);
        let snr9 = global_snr(&y9);
        assert!(snr8 >= 20.0, "8-bit SNR {snr8}");
        assert!(snr9 > snr8, "9-bit {snr9} vs 8-bit {snr8}");
    }

    #[test]
    fn training_is_deterministic_and_starts_uniform() {
        let utts = vec![("v".to_string(), vowel(0.25, 120))];
        let ds = prepare_dataset(&utts, VocoderKind::Excitnet, &toy_cfg()).unwrap();
        let net = NetConfig {
            n_blocks: 1,
            layers_per_block: 3,
            residual_channels: 8,
            gate_channels: 8,
            skip_channels: 8,
            n_classes: 256,
            cond_dim: 47, // order 8: 8 + 32 + 4 + 3
            seed: 7,
        };
        let train = TrainConfig {
            steps: 3,
            batch: 600,
            ..TrainConfig::default()
        };
        let mut first_loss = None;
        let a = train_vocoder(&ds, &net, &train, |step, loss| {
            if step == 0 {
                first_loss = Some(loss);
            }
        })
        .unwrap();
        let b = train_vocoder(&ds, &net, &train, |_, _| {}).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.step, 3);
        let ln256 = 256f64.ln();
        let loss0 = first_loss.unwrap();
        assert!(
            (loss0 - ln256).abs() <= 0.02 * ln256,
            "initial NLL {loss0} vs ln256 {ln256}"
        );
    }

    #[test]
    fn synthesize_rejects_wrong_kind() {
        let utts = vec![("v".to_string(), vowel(0.25, 120))];
        let cfg = toy_cfg();
        let ds = prepare_dataset(&utts, VocoderKind::Excitnet, &cfg).unwrap();
        let net = NetConfig {
            n_blocks: 1,
            layers_per_block: 2,
            residual_channels: 4,
            gate_channels: 4,
            skip_channels: 4,
            n_classes: 256,
            cond_dim: 47,
            seed: 1,
        };
        let train = TrainConfig {
            steps: 1,
            batch: 240,
            ..TrainConfig::default()
        };
        let ckpt = train_vocoder(&ds, &net, &train, |_, _| {}).unwrap();
        let seq = analyze(&utts[0].1, &cfg).unwrap();
        let err = synthesize(&ckpt, &seq, VocoderKind::WavenetNs, GenMode::Argmax);
        assert!(matches!(err, Err(Error::KindMismatch { .. })));
        // matching kind produces a grid-aligned signal
        let out = synthesize(&ckpt, &seq, VocoderKind::Excitnet, GenMode::Argmax).unwrap();
        assert_eq!(out.len(), seq.n_frames() * cfg.shift);
    }
}
