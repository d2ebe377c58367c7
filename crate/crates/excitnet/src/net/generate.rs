//! Autoregressive generation. `generate_naive` reruns a full forward over
//! the whole history at every step (the O(N^2) reference);
//! `generate_fast` keeps per-layer ring buffers of past activations so each
//! step costs O(layers) regardless of history length. Both produce
//! identical code sequences for the same parameters, conditions, and seed.

use super::forward::{forward, softmax_row};
use super::tensor::{matvec_acc, Tensor};
use super::{NetParams, Scalar, START_CODE};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenMode {
    /// deterministic mode of the softmax
    Argmax,
    /// sample from the softmax with a seeded generator
    Sample { seed: u64 },
}

fn pick(probs_or_logits: &[f64], rng: &mut Option<ChaCha8Rng>) -> u8 {
    match rng {
        None => {
            // argmax; first max wins on ties
            let mut best = 0usize;
            for (i, v) in probs_or_logits.iter().enumerate() {
                if *v > probs_or_logits[best] {
                    best = i;
                }
            }
            best as u8
        }
        Some(rng) => {
            let u: f64 = rng.gen::<f64>();
            let mut acc = 0.0;
            for (i, p) in probs_or_logits.iter().enumerate() {
                acc += p;
                if u < acc {
                    return i as u8;
                }
            }
            (probs_or_logits.len() - 1) as u8
        }
    }
}

fn mode_rng(mode: GenMode) -> Option<ChaCha8Rng> {
    match mode {
        GenMode::Argmax => None,
        GenMode::Sample { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
    }
}

/// Reference generation: full forward over the history at each step.
/// Returns the codes and the per-step logits (n x n_classes).
pub fn generate_naive_with_logits<F: Scalar>(
    params: &NetParams<F>,
    conds: &[F],
    n: usize,
) -> Result<(Vec<u8>, Vec<F>)> {
    generate_naive_with_logits_mode(params, conds, n, GenMode::Argmax)
}

pub fn generate_naive_with_logits_mode<F: Scalar>(
    params: &NetParams<F>,
    conds: &[F],
    n: usize,
    mode: GenMode,
) -> Result<(Vec<u8>, Vec<F>)> {
    let c = params.config.cond_dim;
    let k = params.config.n_classes;
    if conds.len() < n * c {
        return Err(Error::ShapeMismatch("conditions shorter than n".into()));
    }
    let mut rng = mode_rng(mode);
    let mut codes: Vec<u8> = Vec::with_capacity(n);
    let mut all_logits = Vec::with_capacity(n * k);
    for t in 0..n {
        let mut buf = codes.clone();
        buf.push(0); // unused as input at step t
        let logits = forward(params, &buf, &conds[..(t + 1) * c])?;
        let row = &logits.data[t * k..(t + 1) * k];
        all_logits.extend_from_slice(row);
        let code = match rng {
            None => pick(
                &row.iter().map(|v| v.to_f64().unwrap()).collect::<Vec<_>>(),
                &mut None,
            ),
            Some(_) => pick(&softmax_row(row), &mut rng),
        };
        codes.push(code);
    }
    Ok((codes, all_logits))
}

pub fn generate_naive<F: Scalar>(
    params: &NetParams<F>,
    conds: &[F],
    n: usize,
    mode: GenMode,
) -> Result<Vec<u8>> {
    Ok(generate_naive_with_logits_mode(params, conds, n, mode)?.0)
}

/// Per-layer ring buffers of the last `dilation` input activations plus the
/// current step index. Single-stream state; not shareable across streams.
pub struct GenState<F> {
    bufs: Vec<Tensor<F>>,
    step: usize,
}

impl<F: Scalar> GenState<F> {
    pub fn new(params: &NetParams<F>) -> Self {
        let cfg = &params.config;
        let r = cfg.residual_channels;
        let bufs = (0..cfg.n_layers())
            .map(|l| Tensor::zeros(&[cfg.dilation(l), r]))
            .collect();
        Self { bufs, step: 0 }
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    /// Runs one incremental step: consumes the previous code and this
    /// step's conditioning row, returns the logits row.
    pub fn step(&mut self, params: &NetParams<F>, prev_code: u8, cond: &[F]) -> Vec<F> {
        let cfg = &params.config;
        let (r, g, s, k) = (
            cfg.residual_channels,
            cfg.gate_channels,
            cfg.skip_channels,
            cfg.n_classes,
        );
        let t = self.step;
        let mut x = params.embed.row(prev_code as usize).to_vec();
        let mut skip = vec![F::zero(); s];
        for (l, layer) in params.layers.iter().enumerate() {
            let d = cfg.dilation(l);
            let slot = t % d;
            let buf = &mut self.bufs[l];
            let past: Vec<F> = if t >= d {
                buf.data[slot * r..(slot + 1) * r].to_vec()
            } else {
                vec![F::zero(); r]
            };
            buf.data[slot * r..(slot + 1) * r].copy_from_slice(&x);

            let (wf0, wf1) = layer.wf.data.split_at(g * r);
            let (wg0, wg1) = layer.wg.data.split_at(g * r);
            let mut pre_f = layer.bf.data.clone();
            matvec_acc(wf0, g, r, &past, &mut pre_f);
            matvec_acc(wf1, g, r, &x, &mut pre_f);
            matvec_acc(&layer.vf.data, g, cfg.cond_dim, cond, &mut pre_f);
            let mut pre_g = layer.bg.data.clone();
            matvec_acc(wg0, g, r, &past, &mut pre_g);
            matvec_acc(wg1, g, r, &x, &mut pre_g);
            matvec_acc(&layer.vg.data, g, cfg.cond_dim, cond, &mut pre_g);
            let mut z = vec![F::zero(); g];
            for j in 0..g {
                z[j] = pre_f[j].tanh() * (F::one() / (F::one() + (-pre_g[j]).exp()));
            }
            for (o, b) in skip.iter_mut().zip(&layer.bskip.data) {
                *o += *b;
            }
            matvec_acc(&layer.wskip.data, s, g, &z, &mut skip);
            let mut out = x.clone();
            for (o, b) in out.iter_mut().zip(&layer.bres.data) {
                *o += *b;
            }
            matvec_acc(&layer.wres.data, r, g, &z, &mut out);
            x = out;
        }
        let s1: Vec<F> = skip.iter().map(|v| v.max(F::zero())).collect();
        let mut u = params.head1_b.data.clone();
        matvec_acc(&params.head1_w.data, s, s, &s1, &mut u);
        let s2: Vec<F> = u.iter().map(|v| v.max(F::zero())).collect();
        let mut logits = params.head2_b.data.clone();
        matvec_acc(&params.head2_w.data, k, s, &s2, &mut logits);
        self.step += 1;
        logits
    }
}

/// Cache-based generation with per-step logits.
pub fn generate_fast_with_logits<F: Scalar>(
    params: &NetParams<F>,
    conds: &[F],
    n: usize,
    mode: GenMode,
) -> Result<(Vec<u8>, Vec<F>)> {
    let c = params.config.cond_dim;
    if conds.len() < n * c {
        return Err(Error::ShapeMismatch("conditions shorter than n".into()));
    }
    let mut rng = mode_rng(mode);
    let mut state = GenState::new(params);
    let mut codes: Vec<u8> = Vec::with_capacity(n);
    let mut all_logits = Vec::with_capacity(n * params.config.n_classes);
    for t in 0..n {
        let prev = if t == 0 { START_CODE } else { codes[t - 1] };
        let logits = state.step(params, prev, &conds[t * c..(t + 1) * c]);
        let code = match rng {
            None => pick(
                &logits.iter().map(|v| v.to_f64().unwrap()).collect::<Vec<_>>(),
                &mut None,
            ),
            Some(_) => pick(&softmax_row(&logits), &mut rng),
        };
        all_logits.extend_from_slice(&logits);
        codes.push(code);
    }
    Ok((codes, all_logits))
}

pub fn generate_fast<F: Scalar>(
    params: &NetParams<F>,
    conds: &[F],
    n: usize,
    mode: GenMode,
) -> Result<Vec<u8>> {
    Ok(generate_fast_with_logits(params, conds, n, mode)?.0)
}
