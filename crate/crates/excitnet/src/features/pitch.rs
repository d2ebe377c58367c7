//! Frame-level F0 and voicing by normalized autocorrelation peak picking.

use crate::signal::Signal;

#[derive(Debug, Clone, Copy)]
pub struct PitchConfig {
    pub f0_min: f64,
    pub f0_max: f64,
    pub voicing_threshold: f64,
    /// mean-square silence floor; quieter frames are always unvoiced
    pub energy_floor: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            f0_min: 60.0,
            f0_max: 400.0,
            voicing_threshold: 0.3,
            energy_floor: 1e-6,
        }
    }
}

/// Per-frame pitch estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchFrame {
    pub f0: f64,
    pub voiced: bool,
}

fn nac(seg: &[f64], window: usize, lag: usize) -> f64 {
    let mut cross = 0.0;
    let mut e0 = 0.0;
    let mut e1 = 0.0;
    for n in 0..window {
        let a = seg[n];
        let b = seg[n + lag];
        cross += a * b;
        e0 += a * a;
        e1 += b * b;
    }
    if e0 <= 0.0 || e1 <= 0.0 {
        return 0.0;
    }
    cross / (e0 * e1).sqrt()
}

/// Estimates (f0, v/uv) on the analysis frame grid. Degenerate frames come
/// back unvoiced with f0 at the search floor.
pub fn estimate_f0(
    signal: &Signal,
    frame_len: usize,
    shift: usize,
    cfg: &PitchConfig,
) -> Vec<PitchFrame> {
    let sr = signal.sample_rate as f64;
    let n_frames = crate::dsp::frame_count(signal.len(), frame_len, shift);
    let min_lag = ((sr / cfg.f0_max).floor() as usize).max(2);
    let max_lag = (sr / cfg.f0_min).ceil() as usize;
    let window = 2 * max_lag;
    crate::par::map_indexed(n_frames, |i| {
        let center = i * shift + frame_len / 2;
        // correlation segment centered on the frame, zero-padded at the edges
        let seg_len = window + max_lag;
        let start = center as isize - (seg_len / 2) as isize;
        let seg: Vec<f64> = (0..seg_len)
            .map(|j| {
                let idx = start + j as isize;
                if idx >= 0 && (idx as usize) < signal.len() {
                    signal.samples[idx as usize]
                } else {
                    0.0
                }
            })
            .collect();
        let energy: f64 = seg.iter().map(|v| v * v).sum::<f64>() / seg.len() as f64;
        let unvoiced = PitchFrame {
            f0: cfg.f0_min,
            voiced: false,
        };
        if energy < cfg.energy_floor {
            return unvoiced;
        }
        let scores: Vec<f64> = (min_lag..=max_lag).map(|lag| nac(&seg, window, lag)).collect();
        let best = scores
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        if best < cfg.voicing_threshold {
            return unvoiced;
        }
        // earliest local peak close to the global best avoids octave-down errors
        let mut pick = None;
        for j in 1..scores.len() - 1 {
            if scores[j] >= scores[j - 1]
                && scores[j] >= scores[j + 1]
                && scores[j] >= 0.85 * best
            {
                pick = Some(j);
                break;
            }
        }
        let j = match pick {
            Some(j) => j,
            None => scores
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0,
        };
        // parabolic refinement around the integer lag
        let lag = (min_lag + j) as f64;
        let refined = if j > 0 && j + 1 < scores.len() {
            let (ym, y0, yp) = (scores[j - 1], scores[j], scores[j + 1]);
            let denom = ym - 2.0 * y0 + yp;
            if denom.abs() > 1e-12 {
                lag + 0.5 * (ym - yp) / denom
            } else {
                lag
            }
        } else {
            lag
        };
        let f0 = (sr / refined).clamp(cfg.f0_min, cfg.f0_max);
        PitchFrame { f0, voiced: true }
    })
}
