//! Teacher-forced forward pass and the cross-entropy loss.
//!
//! The input at step t is the embedding of the true code at t-1 (step 0
//! uses the zero-amplitude code). Each layer computes a gated unit
//! tanh(Wf*x + Vf*c) (*) sigmoid(Wg*x + Vg*c) over the dilated pair
//! (x[t-d], x[t]), feeding a residual connection and a skip accumulator;
//! the head is relu -> 1x1 -> relu -> 1x1 -> logits.

use super::tensor::{matvec_acc, Tensor};
use super::{sc, NetParams, Scalar, KERNEL, START_CODE};
use crate::error::{Error, Result};

/// Backward-pass working set captured during the forward pass.
pub struct ForwardCache<F> {
    /// per-layer input activations, h[0] is the embedding output; T x R each
    pub h: Vec<Tensor<F>>,
    /// per-layer tanh(pre_f), sigmoid(pre_g), and gated output z; T x G each
    pub tanh_f: Vec<Tensor<F>>,
    pub sig_g: Vec<Tensor<F>>,
    pub z: Vec<Tensor<F>>,
    /// pre-relu skip accumulation, T x S
    pub skip_sum: Tensor<F>,
    /// head activations
    pub s1: Tensor<F>,
    pub u: Tensor<F>,
    pub s2: Tensor<F>,
    pub logits: Tensor<F>,
}

pub(crate) fn input_code(codes: &[u8], t: usize) -> usize {
    if t == 0 {
        START_CODE as usize
    } else {
        codes[t - 1] as usize
    }
}

/// Teacher-forced forward pass over `T = codes.len()` steps.
/// `conds` is row-major T x cond_dim.
pub fn forward_full<F: Scalar>(
    params: &NetParams<F>,
    codes: &[u8],
    conds: &[F],
) -> Result<ForwardCache<F>> {
    let cfg = &params.config;
    let t_len = codes.len();
    let (r, g, s, k, c) = (
        cfg.residual_channels,
        cfg.gate_channels,
        cfg.skip_channels,
        cfg.n_classes,
        cfg.cond_dim,
    );
    if conds.len() != t_len * c {
        return Err(Error::ShapeMismatch(format!(
            "conditions {} != {} steps x {} dims",
            conds.len(),
            t_len,
            c
        )));
    }
    let n_layers = cfg.n_layers();
    let mut h = Vec::with_capacity(n_layers + 1);
    let mut h0 = Tensor::zeros(&[t_len, r]);
    for t in 0..t_len {
        let row = params.embed.row(input_code(codes, t));
        h0.data[t * r..(t + 1) * r].copy_from_slice(row);
    }
    h.push(h0);

    let mut tanh_f = Vec::with_capacity(n_layers);
    let mut sig_g = Vec::with_capacity(n_layers);
    let mut z_all = Vec::with_capacity(n_layers);
    let mut skip_sum = Tensor::<F>::zeros(&[t_len, s]);
    let zero_in = vec![F::zero(); r];

    for l in 0..n_layers {
        let layer = &params.layers[l];
        let d = cfg.dilation(l);
        let h_in = h[l].data.clone();
        let mut h_out = Tensor::zeros(&[t_len, r]);
        let mut tf = Tensor::zeros(&[t_len, g]);
        let mut sg = Tensor::zeros(&[t_len, g]);
        let mut zz = Tensor::zeros(&[t_len, g]);
        debug_assert_eq!(layer.wf.shape[0], KERNEL);
        let (wf0, wf1) = layer.wf.data.split_at(g * r);
        let (wg0, wg1) = layer.wg.data.split_at(g * r);
        for t in 0..t_len {
            let x = &h_in[t * r..(t + 1) * r];
            let x_past = if t >= d {
                &h_in[(t - d) * r..(t - d + 1) * r]
            } else {
                &zero_in[..]
            };
            let cond = &conds[t * c..(t + 1) * c];
            let mut pre_f = layer.bf.data.clone();
            matvec_acc(wf0, g, r, x_past, &mut pre_f);
            matvec_acc(wf1, g, r, x, &mut pre_f);
            matvec_acc(&layer.vf.data, g, c, cond, &mut pre_f);
            let mut pre_g = layer.bg.data.clone();
            matvec_acc(wg0, g, r, x_past, &mut pre_g);
            matvec_acc(wg1, g, r, x, &mut pre_g);
            matvec_acc(&layer.vg.data, g, c, cond, &mut pre_g);
            let tf_t = &mut tf.data[t * g..(t + 1) * g];
            let sg_t = &mut sg.data[t * g..(t + 1) * g];
            let z_t = &mut zz.data[t * g..(t + 1) * g];
            for j in 0..g {
                let th = pre_f[j].tanh();
                let si = F::one() / (F::one() + (-pre_g[j]).exp());
                tf_t[j] = th;
                sg_t[j] = si;
                z_t[j] = th * si;
            }
            let skip_t = &mut skip_sum.data[t * s..(t + 1) * s];
            for (o, b) in skip_t.iter_mut().zip(&layer.bskip.data) {
                *o += *b;
            }
            matvec_acc(&layer.wskip.data, s, g, z_t, skip_t);
            let out_t = &mut h_out.data[t * r..(t + 1) * r];
            out_t.copy_from_slice(x);
            for (o, b) in out_t.iter_mut().zip(&layer.bres.data) {
                *o += *b;
            }
            matvec_acc(&layer.wres.data, r, g, z_t, out_t);
        }
        h.push(h_out);
        tanh_f.push(tf);
        sig_g.push(sg);
        z_all.push(zz);
    }

    // head
    let mut s1 = Tensor::zeros(&[t_len, s]);
    let mut u = Tensor::zeros(&[t_len, s]);
    let mut s2 = Tensor::zeros(&[t_len, s]);
    let mut logits = Tensor::zeros(&[t_len, k]);
    for t in 0..t_len {
        let sk = &skip_sum.data[t * s..(t + 1) * s];
        let s1_t = &mut s1.data[t * s..(t + 1) * s];
        for (o, v) in s1_t.iter_mut().zip(sk) {
            *o = v.max(F::zero());
        }
        let u_t = &mut u.data[t * s..(t + 1) * s];
        u_t.copy_from_slice(&params.head1_b.data);
        matvec_acc(&params.head1_w.data, s, s, s1_t, u_t);
        let s2_t = &mut s2.data[t * s..(t + 1) * s];
        for (o, v) in s2_t.iter_mut().zip(u_t.iter()) {
            *o = v.max(F::zero());
        }
        let lg_t = &mut logits.data[t * k..(t + 1) * k];
        lg_t.copy_from_slice(&params.head2_b.data);
        matvec_acc(&params.head2_w.data, k, s, s2_t, lg_t);
    }

    Ok(ForwardCache {
        h,
        tanh_f,
        sig_g,
        z: z_all,
        skip_sum,
        s1,
        u,
        s2,
        logits,
    })
}

/// Logits only.
pub fn forward<F: Scalar>(params: &NetParams<F>, codes: &[u8], conds: &[F]) -> Result<Tensor<F>> {
    Ok(forward_full(params, codes, conds)?.logits)
}

/// Row-wise softmax probabilities in f64, max-stabilized.
pub fn softmax_row<F: Scalar>(logits: &[F]) -> Vec<f64> {
    let row: Vec<f64> = logits.iter().map(|v| v.to_f64().unwrap()).collect();
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Mean negative log-likelihood in nats per sample.
pub fn loss_nll<F: Scalar>(logits: &Tensor<F>, targets: &[u8]) -> Result<f64> {
    let k = *logits.shape.last().unwrap();
    let t_len = logits.shape[0];
    if targets.len() != t_len {
        return Err(Error::ShapeMismatch("targets vs logits length".into()));
    }
    let mut total = 0.0;
    for (t, &target) in targets.iter().enumerate() {
        let row: Vec<f64> = logits.data[t * k..(t + 1) * k]
            .iter()
            .map(|v| v.to_f64().unwrap())
            .collect();
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let logsum = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        total += logsum - row[target as usize];
    }
    Ok(total / t_len as f64)
}

/// Gradients of [`loss_nll`] with respect to logits: (softmax - onehot)/T.
pub fn loss_grad<F: Scalar>(logits: &Tensor<F>, targets: &[u8]) -> Tensor<F> {
    let k = *logits.shape.last().unwrap();
    let t_len = logits.shape[0];
    let mut grad = Tensor::zeros(&[t_len, k]);
    let inv_t = 1.0 / t_len as f64;
    for (t, &target) in targets.iter().enumerate() {
        let probs = softmax_row(&logits.data[t * k..(t + 1) * k]);
        let g = &mut grad.data[t * k..(t + 1) * k];
        for (j, p) in probs.iter().enumerate() {
            let onehot = if j == target as usize { 1.0 } else { 0.0 };
            g[j] = sc((p - onehot) * inv_t);
        }
    }
    grad
}

/// Full backpropagation; returns gradients in the same layout as the params.
pub fn backward<F: Scalar>(
    params: &NetParams<F>,
    codes: &[u8],
    conds: &[F],
    cache: &ForwardCache<F>,
    targets: &[u8],
) -> NetParams<F> {
    let cfg = &params.config;
    let t_len = codes.len();
    let (r, g, s, k, c) = (
        cfg.residual_channels,
        cfg.gate_channels,
        cfg.skip_channels,
        cfg.n_classes,
        cfg.cond_dim,
    );
    let mut grads = NetParams::zeros(cfg);
    let dlogits = loss_grad(&cache.logits, targets);

    // head backward
    let mut dskip = Tensor::<F>::zeros(&[t_len, s]);
    for t in 0..t_len {
        let dl = &dlogits.data[t * k..(t + 1) * k];
        let s2_t = &cache.s2.data[t * s..(t + 1) * s];
        let s1_t = &cache.s1.data[t * s..(t + 1) * s];
        let u_t = &cache.u.data[t * s..(t + 1) * s];
        let sk_t = &cache.skip_sum.data[t * s..(t + 1) * s];
        super::tensor::outer_acc(&mut grads.head2_w.data, dl, s2_t);
        for (b, d) in grads.head2_b.data.iter_mut().zip(dl) {
            *b += *d;
        }
        let mut ds2 = vec![F::zero(); s];
        super::tensor::matvec_t_acc(&params.head2_w.data, k, s, dl, &mut ds2);
        let mut du = ds2;
        for (dv, uv) in du.iter_mut().zip(u_t) {
            if *uv <= F::zero() {
                *dv = F::zero();
            }
        }
        super::tensor::outer_acc(&mut grads.head1_w.data, &du, s1_t);
        for (b, d) in grads.head1_b.data.iter_mut().zip(&du) {
            *b += *d;
        }
        let mut ds1 = vec![F::zero(); s];
        super::tensor::matvec_t_acc(&params.head1_w.data, s, s, &du, &mut ds1);
        let dsk = &mut dskip.data[t * s..(t + 1) * s];
        for ((o, d), skv) in dsk.iter_mut().zip(&ds1).zip(sk_t) {
            *o = if *skv > F::zero() { *d } else { F::zero() };
        }
    }

    // residual stack backward, top layer first
    let n_layers = cfg.n_layers();
    let mut dh = Tensor::<F>::zeros(&[t_len, r]); // grad wrt h[n_layers]
    let zero_in = vec![F::zero(); r];
    for l in (0..n_layers).rev() {
        let layer = &params.layers[l];
        let glayer = &mut grads.layers[l];
        let d = cfg.dilation(l);
        let h_in = &cache.h[l].data;
        let (wf0, wf1) = layer.wf.data.split_at(g * r);
        let (wg0, wg1) = layer.wg.data.split_at(g * r);
        let (gwf0, gwf1) = glayer.wf.data.split_at_mut(g * r);
        let (gwg0, gwg1) = glayer.wg.data.split_at_mut(g * r);
        let mut dh_in = Tensor::<F>::zeros(&[t_len, r]);
        // residual pass-through
        dh_in.data.copy_from_slice(&dh.data);
        for t in 0..t_len {
            let dh_t = &dh.data[t * r..(t + 1) * r];
            let z_t = &cache.z[l].data[t * g..(t + 1) * g];
            let tf_t = &cache.tanh_f[l].data[t * g..(t + 1) * g];
            let sg_t = &cache.sig_g[l].data[t * g..(t + 1) * g];
            let dsk_t = &dskip.data[t * s..(t + 1) * s];
            let cond = &conds[t * c..(t + 1) * c];
            let x = &h_in[t * r..(t + 1) * r];
            let x_past = if t >= d {
                &h_in[(t - d) * r..(t - d + 1) * r]
            } else {
                &zero_in[..]
            };

            // dz from residual and skip branches
            let mut dz = vec![F::zero(); g];
            super::tensor::matvec_t_acc(&layer.wres.data, r, g, dh_t, &mut dz);
            super::tensor::matvec_t_acc(&layer.wskip.data, s, g, dsk_t, &mut dz);
            super::tensor::outer_acc(&mut glayer.wres.data, dh_t, z_t);
            for (b, dv) in glayer.bres.data.iter_mut().zip(dh_t) {
                *b += *dv;
            }
            super::tensor::outer_acc(&mut glayer.wskip.data, dsk_t, z_t);
            for (b, dv) in glayer.bskip.data.iter_mut().zip(dsk_t) {
                *b += *dv;
            }

            // gated unit backward
            let mut dpre_f = vec![F::zero(); g];
            let mut dpre_g = vec![F::zero(); g];
            for j in 0..g {
                dpre_f[j] = dz[j] * sg_t[j] * (F::one() - tf_t[j] * tf_t[j]);
                dpre_g[j] = dz[j] * tf_t[j] * sg_t[j] * (F::one() - sg_t[j]);
            }
            super::tensor::outer_acc(gwf0, &dpre_f, x_past);
            super::tensor::outer_acc(gwf1, &dpre_f, x);
            super::tensor::outer_acc(&mut glayer.vf.data, &dpre_f, cond);
            for (b, dv) in glayer.bf.data.iter_mut().zip(&dpre_f) {
                *b += *dv;
            }
            super::tensor::outer_acc(gwg0, &dpre_g, x_past);
            super::tensor::outer_acc(gwg1, &dpre_g, x);
            super::tensor::outer_acc(&mut glayer.vg.data, &dpre_g, cond);
            for (b, dv) in glayer.bg.data.iter_mut().zip(&dpre_g) {
                *b += *dv;
            }

            // input gradient through the conv taps
            let dx = &mut dh_in.data[t * r..(t + 1) * r];
            super::tensor::matvec_t_acc(wf1, g, r, &dpre_f, dx);
            super::tensor::matvec_t_acc(wg1, g, r, &dpre_g, dx);
            if t >= d {
                let dxp = &mut dh_in.data[(t - d) * r..(t - d + 1) * r];
                super::tensor::matvec_t_acc(wf0, g, r, &dpre_f, dxp);
                super::tensor::matvec_t_acc(wg0, g, r, &dpre_g, dxp);
            }
        }
        dh = dh_in;
    }

    // embedding gradient
    for t in 0..t_len {
        let code = input_code(codes, t);
        let dh_t = &dh.data[t * r..(t + 1) * r];
        let row = &mut grads.embed.data[code * r..(code + 1) * r];
        for (o, dv) in row.iter_mut().zip(dh_t) {
            *o += *dv;
        }
    }

    grads
}
