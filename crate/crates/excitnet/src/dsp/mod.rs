//! Deterministic signal-processing kernels: framing, LP analysis/synthesis
//! filtering with per-frame coefficient tracks, and the time-invariant
//! noise-shaping filter derived from a corpus-average spectral envelope.

pub mod lpc;
pub mod lsf;
pub mod mulaw;

use crate::error::{Error, Result};
use crate::signal::Signal;
pub use lpc::{levinson_durbin, LpcFrame};
pub use lsf::{lpc_to_lsf, lsf_to_lpc, LsfFrame};
pub use mulaw::{mu_law_decode, mu_law_encode};

/// Multiplicative floor applied to `r[0]` before Levinson-Durbin so that
/// reflection coefficients stay in (-1, 1) on degenerate frames.
pub const AUTOCORR_REGULARIZATION: f64 = 1e-6;

/// Symmetric Hann window of length `n`.
pub fn hann_window(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| {
            let x = std::f64::consts::PI * i as f64 / (n - 1) as f64;
            x.sin() * x.sin()
        })
        .collect()
}

/// Number of frames covering `len` samples, matching [`frame_signal`].
pub fn frame_count(len: usize, frame_len: usize, shift: usize) -> usize {
    if len >= frame_len {
        (len - frame_len) / shift + 1
    } else {
        1
    }
}

/// Slices a signal into overlapping frames of `frame_len` samples every
/// `shift` samples. A signal shorter than one frame yields a single
/// zero-padded frame.
pub fn frame_signal(signal: &Signal, frame_len: usize, shift: usize) -> Result<Vec<Vec<f64>>> {
    if signal.is_empty() {
        return Err(Error::EmptyInput);
    }
    if shift == 0 || frame_len < shift {
        return Err(Error::InvalidArg(
            "require frame_len >= shift >= 1".into(),
        ));
    }
    let x = &signal.samples;
    if x.len() < frame_len {
        let mut frame = x.clone();
        frame.resize(frame_len, 0.0);
        return Ok(vec![frame]);
    }
    let n = frame_count(x.len(), frame_len, shift);
    Ok((0..n)
        .map(|i| x[i * shift..i * shift + frame_len].to_vec())
        .collect())
}

/// Biased autocorrelation r[k] = sum_n x[n] x[n+k], k = 0..=max_lag.
/// Windowing is the caller's business; analysis paths apply Hann first.
pub fn autocorrelation(frame: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if max_lag >= frame.len() {
        return Err(Error::InvalidArg(format!(
            "max_lag {} >= frame length {}",
            max_lag,
            frame.len()
        )));
    }
    let mut r = vec![0.0; max_lag + 1];
    for (k, rk) in r.iter_mut().enumerate() {
        let mut acc = 0.0;
        for n in 0..frame.len() - k {
            acc += frame[n] * frame[n + k];
        }
        *rk = acc;
    }
    Ok(r)
}

/// Hann-windowed autocorrelation with the r[0] regularization applied;
/// the standard front half of per-frame LP analysis.
pub fn analysis_autocorrelation(frame: &[f64], order: usize) -> Result<Vec<f64>> {
    let w = hann_window(frame.len());
    let windowed: Vec<f64> = frame.iter().zip(&w).map(|(x, w)| x * w).collect();
    let mut r = autocorrelation(&windowed, order)?;
    r[0] *= 1.0 + AUTOCORR_REGULARIZATION;
    Ok(r)
}

fn check_track(signal_len: usize, n_frames: usize, shift: usize) -> Result<()> {
    if signal_len != n_frames * shift {
        return Err(Error::ShapeMismatch(format!(
            "signal length {} != n_frames {} * shift {}",
            signal_len, n_frames, shift
        )));
    }
    Ok(())
}

/// Inverse (analysis) filtering with a per-frame coefficient track:
/// e[n] = x[n] - sum_k a_k[frame(n)] x[n-k], with x[n<0] = 0 and hard
/// frame duplication (sample n uses frame n/shift).
pub fn lp_analysis(signal: &Signal, lpc_per_frame: &[LpcFrame], shift: usize) -> Result<Signal> {
    check_track(signal.len(), lpc_per_frame.len(), shift)?;
    let x = &signal.samples;
    let mut e = vec![0.0; x.len()];
    for (n, en) in e.iter_mut().enumerate() {
        let a = &lpc_per_frame[n / shift].a;
        let mut pred = 0.0;
        for (k, ak) in a.iter().enumerate() {
            if n > k {
                pred += ak * x[n - k - 1];
            }
        }
        *en = x[n] - pred;
    }
    Signal::new(e, signal.sample_rate)
}

/// Synthesis filtering, the exact algebraic inverse of [`lp_analysis`] for
/// the same coefficient track: x[n] = e[n] + sum_k a_k[frame(n)] x[n-k].
pub fn lp_synthesis(
    excitation: &Signal,
    lpc_per_frame: &[LpcFrame],
    shift: usize,
) -> Result<Signal> {
    check_track(excitation.len(), lpc_per_frame.len(), shift)?;
    let e = &excitation.samples;
    let mut x = vec![0.0; e.len()];
    for n in 0..x.len() {
        let a = &lpc_per_frame[n / shift].a;
        let mut acc = e[n];
        for (k, ak) in a.iter().enumerate() {
            if n > k {
                acc += ak * x[n - k - 1];
            }
        }
        if !acc.is_finite() {
            return Err(Error::SynthesisDiverged);
        }
        x[n] = acc;
    }
    Ok(Signal {
        samples: x,
        sample_rate: excitation.sample_rate,
    })
}

/// Time-invariant spectral filter obtained from corpus-average
/// autocorrelation; used to noise-shape the baseline vocoder's target.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseShapingFilter {
    pub lpc: LpcFrame,
}

/// Averages per-frame analysis autocorrelations over all frames of all
/// utterances and fits a single order-`order` envelope to the average.
pub fn derive_noise_shaping_filter(
    corpus: &[Signal],
    order: usize,
    frame_len: usize,
    shift: usize,
) -> Result<NoiseShapingFilter> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput);
    }
    let per_utt: Vec<Result<(Vec<f64>, usize)>> = crate::par::map_slice(corpus, |utt| {
        let frames = frame_signal(utt, frame_len, shift)?;
        let mut acc = vec![0.0; order + 1];
        for frame in &frames {
            let w = hann_window(frame.len());
            let windowed: Vec<f64> = frame.iter().zip(&w).map(|(x, w)| x * w).collect();
            let r = autocorrelation(&windowed, order)?;
            for (a, b) in acc.iter_mut().zip(&r) {
                *a += b;
            }
        }
        Ok((acc, frames.len()))
    });
    let mut mean_r = vec![0.0; order + 1];
    let mut total_frames = 0usize;
    for res in per_utt {
        let (acc, n) = res?;
        for (a, b) in mean_r.iter_mut().zip(&acc) {
            *a += b;
        }
        total_frames += n;
    }
    for v in mean_r.iter_mut() {
        *v /= total_frames as f64;
    }
    if mean_r[0] <= 0.0 {
        return Err(Error::InvalidArg("all-silent corpus".into()));
    }
    mean_r[0] *= 1.0 + AUTOCORR_REGULARIZATION;
    let lpc = levinson_durbin(&mean_r, order)?;
    Ok(NoiseShapingFilter { lpc })
}

/// Time-invariant analysis filtering by the noise-shaping envelope.
pub fn apply_noise_shaping(signal: &Signal, filter: &NoiseShapingFilter) -> Result<Signal> {
    let a = &filter.lpc.a;
    let x = &signal.samples;
    let mut e = vec![0.0; x.len()];
    for (n, en) in e.iter_mut().enumerate() {
        let mut pred = 0.0;
        for (k, ak) in a.iter().enumerate() {
            if n > k {
                pred += ak * x[n - k - 1];
            }
        }
        *en = x[n] - pred;
    }
    Signal::new(e, signal.sample_rate)
}

/// Exact inverse of [`apply_noise_shaping`].
pub fn invert_noise_shaping(signal: &Signal, filter: &NoiseShapingFilter) -> Result<Signal> {
    let a = &filter.lpc.a;
    let e = &signal.samples;
    let mut x = vec![0.0; e.len()];
    for n in 0..x.len() {
        let mut acc = e[n];
        for (k, ak) in a.iter().enumerate() {
            if n > k {
                acc += ak * x[n - k - 1];
            }
        }
        if !acc.is_finite() {
            return Err(Error::SynthesisDiverged);
        }
        x[n] = acc;
    }
    Ok(Signal {
        samples: x,
        sample_rate: signal.sample_rate,
    })
}
