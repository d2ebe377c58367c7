use crate::error::{Error, Result};

/// Default sample rate of the toolkit.
pub const DEFAULT_SAMPLE_RATE: u32 = 24_000;

/// A mono floating-point waveform with its sample rate.
///
/// Samples are nominally in `[-1.0, 1.0]`; clipping is applied only when
/// writing PCM files.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Signal {
    /// Builds a signal, rejecting non-finite samples and a zero sample rate.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidArg("sample_rate must be > 0".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidArg("non-finite sample".into()));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let e: f64 = self.samples.iter().map(|s| s * s).sum();
        (e / self.samples.len() as f64).sqrt()
    }
}
