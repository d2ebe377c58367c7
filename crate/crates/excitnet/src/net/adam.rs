//! Adam optimizer over the network parameters.

use super::forward::{backward, forward_full, loss_nll};
use super::{sc, NetConfig, NetParams, Scalar};
use crate::error::{Error, Result};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// First/second moment estimates, stored in parameter layout.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<F> {
    pub m: NetParams<F>,
    pub v: NetParams<F>,
    pub t: u64,
}

impl<F: Scalar> AdamState<F> {
    pub fn new(config: &NetConfig) -> Self {
        Self {
            m: NetParams::zeros(config),
            v: NetParams::zeros(config),
            t: 0,
        }
    }
}

/// One teacher-forced training step on a contiguous window: forward, full
/// backpropagation, Adam update. Returns the pre-update loss.
pub fn train_step<F: Scalar>(
    params: &mut NetParams<F>,
    adam: &mut AdamState<F>,
    codes: &[u8],
    conds: &[F],
    lr: f64,
) -> Result<f64> {
    let cache = forward_full(params, codes, conds)?;
    let loss = loss_nll(&cache.logits, codes)?;
    if !loss.is_finite() {
        return Err(Error::TrainingDiverged { step: adam.t, loss });
    }
    let grads = backward(params, codes, conds, &cache, codes);
    adam.t += 1;
    let t = adam.t as f64;
    let bc1 = 1.0 - BETA1.powf(t);
    let bc2 = 1.0 - BETA2.powf(t);
    let (b1, b2) = (sc::<F>(BETA1), sc::<F>(BETA2));
    let one_m_b1 = sc::<F>(1.0 - BETA1);
    let one_m_b2 = sc::<F>(1.0 - BETA2);
    let eps = sc::<F>(EPSILON);
    let step_size = sc::<F>(lr / bc1);
    let inv_sqrt_bc2 = sc::<F>(1.0 / bc2.sqrt());

    let mut pt = params.tensors_mut();
    let mut mt = adam.m.tensors_mut();
    let mut vt = adam.v.tensors_mut();
    let gt = grads.tensors();
    for i in 0..pt.len() {
        let p = &mut pt[i].1.data;
        let m = &mut mt[i].1.data;
        let v = &mut vt[i].1.data;
        let g = &gt[i].1.data;
        for j in 0..p.len() {
            m[j] = b1 * m[j] + one_m_b1 * g[j];
            v[j] = b2 * v[j] + one_m_b2 * g[j] * g[j];
            // bias-corrected update: lr * (m/bc1) / (sqrt(v/bc2) + eps)
            let update = step_size * m[j] / (v[j].sqrt() * inv_sqrt_bc2 + eps);
            p[j] = p[j] - update;
        }
    }
    Ok(loss)
}
