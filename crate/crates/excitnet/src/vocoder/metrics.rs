//! Objective quality metrics on time-aligned signal pairs: segmental SNR,
//! log-spectral distortion, and F0/voicing agreement.

use crate::dsp::{frame_count, hann_window};
use crate::error::{Error, Result};
use crate::features::pitch::{estimate_f0, PitchConfig};
use crate::features::AnalysisConfig;
use crate::signal::Signal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Per-frame SNR clamp: keeps silence frames from dominating the mean.
pub const SEGSNR_MIN_DB: f64 = -10.0;
pub const SEGSNR_MAX_DB: f64 = 35.0;

/// Transform length for spectral distortion.
pub const LSD_FFT_LEN: usize = 1024;

const EPS: f64 = 1e-12;

fn aligned_frames(reference: &Signal, degraded: &Signal) -> Result<(usize, usize, usize)> {
    let n = reference.len().min(degraded.len());
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let cfg = AnalysisConfig::for_sample_rate(reference.sample_rate);
    let frame_len = cfg.frame_len.min(n);
    let shift = cfg.shift.min(frame_len).max(1);
    Ok((n, frame_len, shift))
}

/// Mean over 20 ms frames of 10 log10(sum ref^2 / sum err^2), each frame
/// clamped to [-10, 35] dB. Inputs are truncated to the shorter length.
pub fn segmental_snr(reference: &Signal, degraded: &Signal) -> Result<f64> {
    let (n, frame_len, shift) = aligned_frames(reference, degraded)?;
    let n_frames = frame_count(n, frame_len, shift);
    let mut acc = 0.0;
    for f in 0..n_frames {
        let start = f * shift;
        let end = (start + frame_len).min(n);
        let mut sig = 0.0;
        let mut err = 0.0;
        for i in start..end {
            let r = reference.samples[i];
            let d = degraded.samples[i];
            sig += r * r;
            err += (r - d) * (r - d);
        }
        let snr = 10.0 * ((sig + EPS) / (err + EPS)).log10();
        acc += snr.clamp(SEGSNR_MIN_DB, SEGSNR_MAX_DB);
    }
    Ok(acc / n_frames as f64)
}

/// Mean over frames of the RMS difference of log-magnitude spectra (dB),
/// Hann-windowed 20 ms frames zero-padded to a 1024-point transform.
pub fn log_spectral_distortion(reference: &Signal, degraded: &Signal) -> Result<f64> {
    let (n, frame_len, shift) = aligned_frames(reference, degraded)?;
    let n_frames = frame_count(n, frame_len, shift);
    let window = hann_window(frame_len);
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(LSD_FFT_LEN);
    let spectrum = |samples: &[f64], start: usize, end: usize| -> Vec<f64> {
        let mut buf = vec![Complex::new(0.0, 0.0); LSD_FFT_LEN];
        for (j, i) in (start..end).enumerate() {
            buf[j] = Complex::new(samples[i] * window[j], 0.0);
        }
        fft.process(&mut buf);
        buf[..LSD_FFT_LEN / 2 + 1]
            .iter()
            .map(|c| 20.0 * (c.norm() + EPS).log10())
            .collect()
    };
    let mut acc = 0.0;
    for f in 0..n_frames {
        let start = f * shift;
        let end = (start + frame_len).min(n);
        let a = spectrum(&reference.samples, start, end);
        let b = spectrum(&degraded.samples, start, end);
        let ms: f64 = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            / a.len() as f64;
        acc += ms.sqrt();
    }
    Ok(acc / n_frames as f64)
}

/// F0 RMSE in Hz over frames voiced in both signals, plus the fraction of
/// frames whose voicing decisions disagree.
pub fn f0_metrics(reference: &Signal, degraded: &Signal) -> Result<(f64, f64)> {
    let (n, frame_len, shift) = aligned_frames(reference, degraded)?;
    let truncate = |s: &Signal| Signal {
        samples: s.samples[..n].to_vec(),
        sample_rate: s.sample_rate,
    };
    let pc = PitchConfig::default();
    let pr = estimate_f0(&truncate(reference), frame_len, shift, &pc);
    let pd = estimate_f0(&truncate(degraded), frame_len, shift, &pc);
    let n_frames = pr.len().min(pd.len());
    let mut sq = 0.0;
    let mut voiced_both = 0usize;
    let mut disagree = 0usize;
    for i in 0..n_frames {
        if pr[i].voiced != pd[i].voiced {
            disagree += 1;
        }
        if pr[i].voiced && pd[i].voiced {
            let d = pr[i].f0 - pd[i].f0;
            sq += d * d;
            voiced_both += 1;
        }
    }
    let rmse = if voiced_both > 0 {
        (sq / voiced_both as f64).sqrt()
    } else {
        0.0
    };
    Ok((rmse, disagree as f64 / n_frames as f64))
}

/// One utterance's metric row.
#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceMetrics {
    pub id: String,
    pub segmental_snr_db: f64,
    pub log_spectral_distortion_db: f64,
    pub f0_rmse_hz: f64,
    pub vuv_error: f64,
}

/// Per-utterance table plus corpus means, renderable as a TSV table and a
/// machine-readable key=value summary.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsReport {
    pub rows: Vec<UtteranceMetrics>,
}

impl MetricsReport {
    pub fn evaluate_pair(id: &str, reference: &Signal, degraded: &Signal) -> Result<UtteranceMetrics> {
        let (f0_rmse_hz, vuv_error) = f0_metrics(reference, degraded)?;
        Ok(UtteranceMetrics {
            id: id.to_string(),
            segmental_snr_db: segmental_snr(reference, degraded)?,
            log_spectral_distortion_db: log_spectral_distortion(reference, degraded)?,
            f0_rmse_hz,
            vuv_error,
        })
    }

    pub fn push_pair(&mut self, id: &str, reference: &Signal, degraded: &Signal) -> Result<()> {
        self.rows.push(Self::evaluate_pair(id, reference, degraded)?);
        Ok(())
    }

    /// Corpus means in row order: (segSNR, LSD, F0 RMSE, V/UV error).
    pub fn means(&self) -> (f64, f64, f64, f64) {
        let n = self.rows.len().max(1) as f64;
        let mut t = (0.0, 0.0, 0.0, 0.0);
        for r in &self.rows {
            t.0 += r.segmental_snr_db;
            t.1 += r.log_spectral_distortion_db;
            t.2 += r.f0_rmse_hz;
            t.3 += r.vuv_error;
        }
        (t.0 / n, t.1 / n, t.2 / n, t.3 / n)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("utterance\tseg_snr_db\tlsd_db\tf0_rmse_hz\tvuv_error\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\n",
                r.id, r.segmental_snr_db, r.log_spectral_distortion_db, r.f0_rmse_hz, r.vuv_error
            ));
        }
        let (snr, lsd, f0, vuv) = self.means();
        out.push_str(&format!(
            "mean\t{snr:.4}\t{lsd:.4}\t{f0:.4}\t{vuv:.4}\n"
        ));
        out
    }

    pub fn summary(&self) -> String {
        let (snr, lsd, f0, vuv) = self.means();
        format!(
            "seg_snr_db={snr:.6}\nlsd_db={lsd:.6}\nf0_rmse_hz={f0:.6}\nvuv_error={vuv:.6}\n"
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn tone(freq: f64, secs: f64) -> Signal {
        let sr = 24000;
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
    fn identical_signals_hit_the_clamp_and_zero() {
        let x = tone(150.0, 0.5);
        assert_eq!(segmental_snr(&x, &x).unwrap(), SEGSNR_MAX_DB);
        assert_eq!(log_spectral_distortion(&x, &x).unwrap(), 0.0);
        let (rmse, vuv) = f0_metrics(&x, &x).unwrap();
        assert_eq!(rmse, 0.0);
        assert_eq!(vuv, 0.0);
    }

    #[test]
    fn known_noise_level_gives_matching_snr() {
        // noise at -20 dB relative to the signal -> segSNR near 20 dB
        let x = tone(150.0, 0.5);
        let sig_rms = x.rms();
        let noise_rms = sig_rms * 10f64.powf(-20.0 / 20.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let deg = Signal::new(
            x.samples
                .iter()
                .map(|v| v + noise_rms * (rng.gen::<f64>() * 2.0 - 1.0) * 3f64.sqrt())
                .collect(),
            x.sample_rate,
        )
        .unwrap();
        let snr = segmental_snr(&x, &deg).unwrap();
        assert!((snr - 20.0).abs() <= 1.0, "segSNR {snr}");
    }

    #[test]
    fn silence_pair_is_finite_and_clamped() {
        let z = Signal::new(vec![0.0; 24000], 24000).unwrap();
        let snr = segmental_snr(&z, &z).unwrap();
        assert!(snr.is_finite());
        assert_eq!(snr, 0.0); // 0/0 guarded by epsilon -> ratio 1
        let lsd = log_spectral_distortion(&z, &z).unwrap();
        assert_eq!(lsd, 0.0);
    }

    #[test]
    fn lengths_truncate_to_the_shorter_signal() {
        let x = tone(200.0, 0.5);
        let mut y = x.clone();
        y.samples.truncate(9000);
        let snr = segmental_snr(&x, &y).unwrap();
        assert_eq!(snr, SEGSNR_MAX_DB);
    }

    #[test]
    fn empty_input_errors() {
        let z = Signal::new(vec![0.0; 100], 24000).unwrap();
        let mut e = z.clone();
        e.samples.clear();
        assert!(segmental_snr(&z, &e).is_err());
    }

    #[test]
    fn spectral_distortion_detects_filtering() {
        // a one-pole lowpass changes the spectrum but keeps energy similar
        let x = tone(150.0, 0.5);
        let mut y = vec![0.0; x.len()];
        for i in 0..x.len() {
            y[i] = 0.5 * x.samples[i] + if i > 0 { 0.5 * y[i - 1] } else { 0.0 };
        }
        let deg = Signal::new(y, x.sample_rate).unwrap();
        let lsd = log_spectral_distortion(&x, &deg).unwrap();
        assert!(lsd > 1.0, "LSD {lsd}");
    }

    #[test]
    fn f0_shift_is_measured() {
        let a = tone(150.0, 0.5);
        let b = tone(155.0, 0.5);
        let (rmse, vuv) = f0_metrics(&a, &b).unwrap();
        assert!((rmse - 5.0).abs() < 2.0, "rmse {rmse}");
        assert!(vuv < 0.2);
    }

    #[test]
    fn report_table_and_summary_round() {
        let x = tone(150.0, 0.3);
        let mut report = MetricsReport::default();
        report.push_pair("utt0", &x, &x).unwrap();
        let tsv = report.to_tsv();
        assert!(tsv.starts_with("utterance\t"));
        assert!(tsv.contains("utt0\t35.0000\t0.0000\t0.0000\t0.0000"));
        assert!(tsv.lines().last().unwrap().starts_with("mean\t"));
        let kv = report.summary();
        assert!(kv.contains("seg_snr_db=35.000000"));
        assert!(kv.contains("lsd_db=0.000000"));
    }
}
