//! Pitch-synchronous characteristic-waveform decomposition of the LP
//! excitation into slowly and rapidly evolving parts. This is a simplified
//! stand-in for a full waveform-interpolation extractor: one pitch cycle
//! per frame, peak-aligned and resampled to a fixed length, smoothed
//! across frames for the slow component.

use super::pitch::PitchFrame;

pub const SEW_DIM: usize = 32;
pub const REW_DIM: usize = 4;

/// Half-width of the cross-frame moving average that defines the slow track.
const SMOOTH_RADIUS: usize = 3;

fn sample_at(x: &[f64], idx: isize) -> f64 {
    if idx >= 0 && (idx as usize) < x.len() {
        x[idx as usize]
    } else {
        0.0
    }
}

/// Linear resampling of `cycle_len` samples starting at `start` to SEW_DIM points.
fn resample_cycle(x: &[f64], start: isize, cycle_len: usize) -> Vec<f64> {
    (0..SEW_DIM)
        .map(|j| {
            let pos = start as f64 + j as f64 * cycle_len as f64 / SEW_DIM as f64;
            let i0 = pos.floor() as isize;
            let frac = pos - i0 as f64;
            sample_at(x, i0) * (1.0 - frac) + sample_at(x, i0 + 1) * frac
        })
        .collect()
}

/// Per-frame (sew, rew) tracks over `n_frames` frames of the excitation.
/// Voiced frames use one peak-aligned pitch cycle; unvoiced frames use a
/// `shift`-sample slice starting at the frame.
pub fn extract_sew_rew(
    excitation: &[f64],
    pitch: &[PitchFrame],
    n_frames: usize,
    frame_len: usize,
    shift: usize,
    sample_rate: u32,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    assert_eq!(pitch.len(), n_frames);
    let sr = sample_rate as f64;
    // characteristic waveform per frame
    let cw: Vec<Vec<f64>> = (0..n_frames)
        .map(|i| {
            let center = (i * shift + frame_len / 2) as isize;
            let p = &pitch[i];
            if p.voiced {
                let t0 = (sr / p.f0).round().max(2.0) as usize;
                // align to the strongest excitation peak near the frame center
                let lo = center - t0 as isize;
                let hi = center + t0 as isize;
                let mut peak = lo;
                let mut best = f64::NEG_INFINITY;
                for idx in lo..hi {
                    let v = sample_at(excitation, idx).abs();
                    if v > best {
                        best = v;
                        peak = idx;
                    }
                }
                resample_cycle(excitation, peak, t0)
            } else {
                resample_cycle(excitation, (i * shift) as isize, shift)
            }
        })
        .collect();
    // slow track: moving average over +-SMOOTH_RADIUS frames
    (0..n_frames)
        .map(|i| {
            let lo = i.saturating_sub(SMOOTH_RADIUS);
            let hi = (i + SMOOTH_RADIUS).min(n_frames - 1);
            let count = (hi - lo + 1) as f64;
            let sew: Vec<f64> = (0..SEW_DIM)
                .map(|d| (lo..=hi).map(|j| cw[j][d]).sum::<f64>() / count)
                .collect();
            let rew: Vec<f64> = (0..REW_DIM).map(|d| cw[i][d] - sew[d]).collect();
            (sew, rew)
        })
        .collect()
}
