//! From-scratch autoregressive dilated-causal-convolution network over
//! 8-bit mu-law codes with per-sample conditioning: forward pass,
//! hand-written backpropagation, Adam training, and cache-based fast
//! generation equivalent to the naive reference.

pub mod adam;
pub mod checkpoint;
pub mod forward;
pub mod generate;
pub mod tensor;

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::ops::AddAssign;
pub use adam::{train_step, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use forward::{forward, forward_full, loss_nll, ForwardCache};
pub use generate::{generate_fast, generate_naive, GenMode, GenState};
pub use tensor::Tensor;

/// Scalar type of the network. Production code runs f32; the gradient
/// checker instantiates the whole stack at f64.
pub trait Scalar:
    num_traits::Float + AddAssign + Default + std::fmt::Debug + Send + Sync + 'static
{
}
impl Scalar for f32 {}
impl Scalar for f64 {}

pub(crate) fn sc<F: Scalar>(x: f64) -> F {
    F::from(x).unwrap()
}

/// Convolution kernel width; fixed at 2 (one past tap, one current).
pub const KERNEL: usize = 2;

/// Code fed as input at step 0 (zero amplitude under mu-law).
pub const START_CODE: u8 = 128;

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetConfig {
    pub n_blocks: usize,
    pub layers_per_block: usize,
    pub residual_channels: usize,
    pub gate_channels: usize,
    pub skip_channels: usize,
    pub n_classes: usize,
    pub cond_dim: usize,
    pub seed: u64,
}

impl NetConfig {
    /// Full-scale configuration: three blocks of ten layers with dilations
    /// doubling from 1 to 512, 512 residual/gate channels, 256 skip
    /// channels into the 256-class softmax.
    pub fn full_scale() -> Self {
        Self {
            n_blocks: 3,
            layers_per_block: 10,
            residual_channels: 512,
            gate_channels: 512,
            skip_channels: 256,
            n_classes: 256,
            cond_dim: 79,
            seed: 0,
        }
    }

    /// Desk-scale default: small enough that the whole test suite runs on a
    /// laptop CPU in minutes.
    pub fn toy() -> Self {
        Self {
            n_blocks: 2,
            layers_per_block: 6,
            residual_channels: 64,
            gate_channels: 64,
            skip_channels: 64,
            n_classes: 256,
            cond_dim: 79,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_blocks == 0
            || self.layers_per_block == 0
            || self.residual_channels == 0
            || self.gate_channels == 0
            || self.skip_channels == 0
            || self.n_classes == 0
            || self.cond_dim == 0
        {
            return Err(Error::InvalidArg("all network counts must be >= 1".into()));
        }
        Ok(())
    }

    pub fn n_layers(&self) -> usize {
        self.n_blocks * self.layers_per_block
    }

    /// Dilation of layer `l` (layers numbered across blocks); the schedule
    /// doubles within each block and restarts at 1.
    pub fn dilation(&self, l: usize) -> usize {
        1 << (l % self.layers_per_block)
    }

    /// Number of past samples that can influence the current prediction:
    /// 1 + n_blocks * sum of dilations for kernel 2.
    pub fn receptive_field(&self) -> usize {
        let per_block: usize = (0..self.layers_per_block).map(|i| 1usize << i).sum();
        1 + self.n_blocks * per_block
    }
}

/// One residual block layer's weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<F> {
    /// filter conv taps [KERNEL, gate, residual]
    pub wf: Tensor<F>,
    pub bf: Tensor<F>,
    /// gate conv taps [KERNEL, gate, residual]
    pub wg: Tensor<F>,
    pub bg: Tensor<F>,
    /// conditioning projections [gate, cond_dim]
    pub vf: Tensor<F>,
    pub vg: Tensor<F>,
    /// residual 1x1 [residual, gate]
    pub wres: Tensor<F>,
    pub bres: Tensor<F>,
    /// skip 1x1 [skip, gate]
    pub wskip: Tensor<F>,
    pub bskip: Tensor<F>,
}

/// All learnable weights; shapes are fully determined by [`NetConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct NetParams<F> {
    pub config: NetConfig,
    /// previous-code embedding [n_classes, residual]
    pub embed: Tensor<F>,
    pub layers: Vec<LayerParams<F>>,
    /// output head: relu -> head1 -> relu -> head2 -> logits
    pub head1_w: Tensor<F>,
    pub head1_b: Tensor<F>,
    pub head2_w: Tensor<F>,
    pub head2_b: Tensor<F>,
}

impl<F: Scalar> NetParams<F> {
    pub fn zeros(config: &NetConfig) -> Self {
        let (r, g, s, k, c) = (
            config.residual_channels,
            config.gate_channels,
            config.skip_channels,
            config.n_classes,
            config.cond_dim,
        );
        let layers = (0..config.n_layers())
            .map(|_| LayerParams {
                wf: Tensor::zeros(&[KERNEL, g, r]),
                bf: Tensor::zeros(&[g]),
                wg: Tensor::zeros(&[KERNEL, g, r]),
                bg: Tensor::zeros(&[g]),
                vf: Tensor::zeros(&[g, c]),
                vg: Tensor::zeros(&[g, c]),
                wres: Tensor::zeros(&[r, g]),
                bres: Tensor::zeros(&[r]),
                wskip: Tensor::zeros(&[s, g]),
                bskip: Tensor::zeros(&[s]),
            })
            .collect();
        Self {
            config: config.clone(),
            embed: Tensor::zeros(&[k, r]),
            layers,
            head1_w: Tensor::zeros(&[s, s]),
            head1_b: Tensor::zeros(&[s]),
            head2_w: Tensor::zeros(&[k, s]),
            head2_b: Tensor::zeros(&[k]),
        }
    }

    /// Named views of every tensor, in a fixed serialization order.
    pub fn tensors(&self) -> Vec<(String, &Tensor<F>)> {
        let mut out: Vec<(String, &Tensor<F>)> = vec![("embed".into(), &self.embed)];
        for (i, l) in self.layers.iter().enumerate() {
            out.push((format!("layer{i}.wf"), &l.wf));
            out.push((format!("layer{i}.bf"), &l.bf));
            out.push((format!("layer{i}.wg"), &l.wg));
            out.push((format!("layer{i}.bg"), &l.bg));
            out.push((format!("layer{i}.vf"), &l.vf));
            out.push((format!("layer{i}.vg"), &l.vg));
            out.push((format!("layer{i}.wres"), &l.wres));
            out.push((format!("layer{i}.bres"), &l.bres));
            out.push((format!("layer{i}.wskip"), &l.wskip));
            out.push((format!("layer{i}.bskip"), &l.bskip));
        }
        out.push(("head1.w".into(), &self.head1_w));
        out.push(("head1.b".into(), &self.head1_b));
        out.push(("head2.w".into(), &self.head2_w));
        out.push(("head2.b".into(), &self.head2_b));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Tensor<F>)> {
        let mut out: Vec<(String, &mut Tensor<F>)> =
            vec![("embed".into(), &mut self.embed)];
        for (i, l) in self.layers.iter_mut().enumerate() {
            out.push((format!("layer{i}.wf"), &mut l.wf));
            out.push((format!("layer{i}.bf"), &mut l.bf));
            out.push((format!("layer{i}.wg"), &mut l.wg));
            out.push((format!("layer{i}.bg"), &mut l.bg));
            out.push((format!("layer{i}.vf"), &mut l.vf));
            out.push((format!("layer{i}.vg"), &mut l.vg));
            out.push((format!("layer{i}.wres"), &mut l.wres));
            out.push((format!("layer{i}.bres"), &mut l.bres));
            out.push((format!("layer{i}.wskip"), &mut l.wskip));
            out.push((format!("layer{i}.bskip"), &mut l.bskip));
        }
        out.push(("head1.w".into(), &mut self.head1_w));
        out.push(("head1.b".into(), &mut self.head1_b));
        out.push(("head2.w".into(), &mut self.head2_w));
        out.push(("head2.b".into(), &mut self.head2_b));
        out
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, t)| t.data.iter().all(|v| v.is_finite()))
    }
}

/// (fan_in, fan_out) used for Xavier initialization of a named tensor.
pub fn xavier_fans(_name: &str, shape: &[usize]) -> Option<(usize, usize)> {
    match shape.len() {
        1 => None, // biases are zero
        2 => Some((shape[1], shape[0])),
        3 => Some((shape[0] * shape[2], shape[0] * shape[1])), // [kernel, out, in]
        _ => None,
    }
}

/// Xavier-uniform initialization: weights drawn from
/// +-sqrt(6 / (fan_in + fan_out)), biases zero. Deterministic in the seed.
pub fn init_network<F: Scalar>(config: &NetConfig) -> NetParams<F> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = NetParams::zeros(config);
    for (name, t) in params.tensors_mut() {
        if let Some((fan_in, fan_out)) = xavier_fans(&name, &t.shape) {
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in t.data.iter_mut() {
                *v = sc(rng.gen_range(-bound..bound));
            }
        }
    }
    params
}
