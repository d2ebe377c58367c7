//! Plain-text run configuration: `key = value` lines, `#` comments,
//! unknown keys rejected.

use crate::error::{Error, Result};
use crate::features::AnalysisConfig;
use crate::net::NetConfig;
use crate::vocoder::{TrainConfig, VocoderKind};
use std::path::Path;

/// Everything a run needs, with desk-scale defaults. The network defaults
/// are deliberately small; the full-scale architecture is available through
/// the corresponding config keys.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sample_rate: u32,
    pub frame_len_ms: u32,
    pub shift_ms: u32,
    pub lpc_order: usize,
    pub n_blocks: usize,
    pub layers_per_block: usize,
    pub residual_channels: usize,
    pub gate_channels: usize,
    pub skip_channels: usize,
    pub lr: f64,
    pub batch: usize,
    pub steps: u64,
    pub checkpoint_every: u64,
    pub kind: VocoderKind,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sample_rate: 24000,
            frame_len_ms: 20,
            shift_ms: 5,
            lpc_order: 40,
            n_blocks: 2,
            layers_per_block: 6,
            residual_channels: 64,
            gate_channels: 64,
            skip_channels: 64,
            lr: 1e-4,
            batch: 4800,
            steps: 2000,
            checkpoint_every: 0,
            kind: VocoderKind::Excitnet,
            seed: 0,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidArg(format!("bad value '{value}' for key '{key}'")))
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidArg(format!("line {}: expected key = value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "sample_rate" => cfg.sample_rate = parse(key, value)?,
                "frame_len_ms" => cfg.frame_len_ms = parse(key, value)?,
                "shift_ms" => cfg.shift_ms = parse(key, value)?,
                "lpc_order" => cfg.lpc_order = parse(key, value)?,
                "n_blocks" => cfg.n_blocks = parse(key, value)?,
                "layers_per_block" => cfg.layers_per_block = parse(key, value)?,
                "residual_channels" => cfg.residual_channels = parse(key, value)?,
                "gate_channels" => cfg.gate_channels = parse(key, value)?,
                "skip_channels" => cfg.skip_channels = parse(key, value)?,
                "lr" => cfg.lr = parse(key, value)?,
                "batch" => cfg.batch = parse(key, value)?,
                "steps" => cfg.steps = parse(key, value)?,
                "checkpoint_every" => cfg.checkpoint_every = parse(key, value)?,
                "kind" => cfg.kind = value.parse()?,
                "seed" => cfg.seed = parse(key, value)?,
                other => {
                    return Err(Error::InvalidArg(format!(
                        "line {}: unknown key '{other}'",
                        lineno + 1
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::File {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        Self::from_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 || self.frame_len_ms == 0 || self.shift_ms == 0 {
            return Err(Error::InvalidArg("rates and frame times must be > 0".into()));
        }
        if self.frame_len_ms < self.shift_ms {
            return Err(Error::InvalidArg("frame_len_ms < shift_ms".into()));
        }
        if self.lpc_order == 0 || self.lpc_order % 2 != 0 {
            return Err(Error::InvalidArg("lpc_order must be even and > 0".into()));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::InvalidArg("lr must be finite and >= 0".into()));
        }
        if self.batch == 0 {
            return Err(Error::InvalidArg("batch must be > 0".into()));
        }
        self.net_config().validate()
    }

    pub fn analysis_config(&self) -> AnalysisConfig {
        let mut cfg = AnalysisConfig::for_sample_rate(self.sample_rate);
        cfg.frame_len = (self.sample_rate as usize * self.frame_len_ms as usize) / 1000;
        cfg.shift = (self.sample_rate as usize * self.shift_ms as usize) / 1000;
        cfg.lpc_order = self.lpc_order;
        cfg
    }

    pub fn feature_dim(&self) -> usize {
        self.analysis_config().feature_dim()
    }

    pub fn net_config(&self) -> NetConfig {
        NetConfig {
            n_blocks: self.n_blocks,
            layers_per_block: self.layers_per_block,
            residual_channels: self.residual_channels,
            gate_channels: self.gate_channels,
            skip_channels: self.skip_channels,
            n_classes: 256,
            cond_dim: self.feature_dim(),
            seed: self.seed,
        }
    }

    pub fn train_config(&self, out: Option<std::path::PathBuf>) -> TrainConfig {
        TrainConfig {
            steps: self.steps,
            lr: self.lr,
            batch: self.batch,
            seed: self.seed,
            target_nll: None,
            checkpoint_every: (self.checkpoint_every > 0).then_some(self.checkpoint_every),
            out,
        }
    }

    /// Round-trippable rendering; also the run header printed by the CLI.
    pub fn to_text(&self) -> String {
        format!(
            "sample_rate = {}\nframe_len_ms = {}\nshift_ms = {}\nlpc_order = {}\n\
             n_blocks = {}\nlayers_per_block = {}\nresidual_channels = {}\n\
             gate_channels = {}\nskip_channels = {}\nlr = {}\nbatch = {}\n\
             steps = {}\ncheckpoint_every = {}\nkind = {}\nseed = {}\n",
            self.sample_rate,
            self.frame_len_ms,
            self.shift_ms,
            self.lpc_order,
            self.n_blocks,
            self.layers_per_block,
            self.residual_channels,
            self.gate_channels,
            self.skip_channels,
            self.lr,
            self.batch,
            self.steps,
            self.checkpoint_every,
            self.kind,
            self.seed
        )
    }
}
