//! LPC <-> line spectral frequency conversion.
//!
//! The sum/difference polynomials P(z) = A(z) + z^-(p+1) A(1/z) and
//! Q(z) = A(z) - z^-(p+1) A(1/z) are deflated by their trivial roots at
//! z = -1 and z = +1, reduced to Chebyshev-domain half polynomials, and
//! their roots located by grid scan plus bisection.

use super::lpc::LpcFrame;
use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Per-frame envelope as ordered angular frequencies in (0, pi).
#[derive(Debug, Clone, PartialEq)]
pub struct LsfFrame {
    pub order: usize,
    pub w: Vec<f64>,
}

const INITIAL_GRID: usize = 2048;
const MAX_GRID: usize = 131_072;
const BISECT_TOL: f64 = 1e-12;

/// Chebyshev half-polynomial coefficients of the deflated sum (`+1`) or
/// difference (`-1`) polynomial. `c` holds A(z) coefficients c_0..c_p.
fn half_poly(c: &[f64], sign: f64) -> Vec<f64> {
    let p = c.len() - 1;
    let m = p / 2;
    let mut f = vec![0.0; m + 1];
    f[0] = 1.0;
    for i in 1..=m {
        let sym = c[i] + sign * c[p + 1 - i];
        f[i] = if sign > 0.0 { sym - f[i - 1] } else { sym + f[i - 1] };
    }
    f
}

/// Evaluates f[0] T_m(x) + f[1] T_{m-1}(x) + ... + f[m-1] T_1(x) + f[m]/2.
fn cheb_eval(f: &[f64], x: f64) -> f64 {
    let m = f.len() - 1;
    let mut t_prev = 1.0; // T_0
    let mut t = x; // T_1
    let mut acc = 0.5 * f[m];
    if m >= 1 {
        acc += f[m - 1] * t;
    }
    for k in 2..=m {
        let t_next = 2.0 * x * t - t_prev;
        t_prev = t;
        t = t_next;
        acc += f[m - k] * t;
    }
    acc
}

fn find_roots(f: &[f64], expected: usize) -> Option<Vec<f64>> {
    let mut grid = INITIAL_GRID;
    loop {
        let mut roots = Vec::with_capacity(expected);
        let mut w_prev = 0.0;
        let mut g_prev = cheb_eval(f, 1.0); // x = cos 0
        for j in 1..=grid {
            let w = PI * j as f64 / grid as f64;
            let g = cheb_eval(f, w.cos());
            if g == 0.0 {
                roots.push(w);
            } else if g_prev * g < 0.0 {
                // bisection in w
                let (mut lo, mut hi) = (w_prev, w);
                let mut g_lo = g_prev;
                while hi - lo > BISECT_TOL {
                    let mid = 0.5 * (lo + hi);
                    let g_mid = cheb_eval(f, mid.cos());
                    if g_mid == 0.0 {
                        lo = mid;
                        hi = mid;
                    } else if g_lo * g_mid < 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        g_lo = g_mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            w_prev = w;
            g_prev = g;
        }
        if roots.len() == expected {
            return Some(roots);
        }
        if grid >= MAX_GRID {
            return None;
        }
        grid *= 4;
    }
}

/// Converts predictor coefficients to line spectral frequencies.
/// Requires an even order.
pub fn lpc_to_lsf(lpc: &LpcFrame) -> Result<LsfFrame> {
    let p = lpc.order;
    if p == 0 || p % 2 != 0 {
        return Err(Error::InvalidArg(format!("LSF order must be even, got {p}")));
    }
    if lpc.a.len() != p {
        return Err(Error::ShapeMismatch("LPC coefficient count".into()));
    }
    // A(z) coefficients under the predictor sign convention
    let mut c = vec![1.0];
    c.extend(lpc.a.iter().map(|ak| -ak));
    let m = p / 2;
    let f1 = half_poly(&c, 1.0);
    let f2 = half_poly(&c, -1.0);
    let p_roots =
        find_roots(&f1, m).ok_or_else(|| Error::LsfConversion("root bracketing (P)".into()))?;
    let q_roots =
        find_roots(&f2, m).ok_or_else(|| Error::LsfConversion("root bracketing (Q)".into()))?;
    let mut w = Vec::with_capacity(p);
    for i in 0..m {
        w.push(p_roots[i]);
        w.push(q_roots[i]);
    }
    for pair in w.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::LsfConversion("roots do not interleave".into()));
        }
    }
    if w[0] <= 0.0 || *w.last().unwrap() >= PI {
        return Err(Error::LsfConversion("root outside (0, pi)".into()));
    }
    Ok(LsfFrame { order: p, w })
}

fn poly_mul_quadratic(poly: &mut Vec<f64>, cos_w: f64) {
    // multiply by (1 - 2 cos(w) z^-1 + z^-2)
    let n = poly.len();
    let mut out = vec![0.0; n + 2];
    for (i, &v) in poly.iter().enumerate() {
        out[i] += v;
        out[i + 1] -= 2.0 * cos_w * v;
        out[i + 2] += v;
    }
    *poly = out;
}

fn poly_mul_linear(poly: &[f64], tap: f64) -> Vec<f64> {
    // multiply by (1 + tap z^-1)
    let mut out = vec![0.0; poly.len() + 1];
    for (i, &v) in poly.iter().enumerate() {
        out[i] += v;
        out[i + 1] += tap * v;
    }
    out
}

/// Reconstructs predictor coefficients from line spectral frequencies via
/// A(z) = (P(z) + Q(z)) / 2.
pub fn lsf_to_lpc(lsf: &LsfFrame) -> Result<LpcFrame> {
    let p = lsf.order;
    if p == 0 || p % 2 != 0 || lsf.w.len() != p {
        return Err(Error::InvalidArg("LSF order must be even".into()));
    }
    if lsf.w[0] <= 0.0 || *lsf.w.last().unwrap() >= PI {
        return Err(Error::LsfOrdering);
    }
    for pair in lsf.w.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::LsfOrdering);
        }
    }
    let mut p_poly = vec![1.0];
    let mut q_poly = vec![1.0];
    for (i, &w) in lsf.w.iter().enumerate() {
        if i % 2 == 0 {
            poly_mul_quadratic(&mut p_poly, w.cos());
        } else {
            poly_mul_quadratic(&mut q_poly, w.cos());
        }
    }
    let p_full = poly_mul_linear(&p_poly, 1.0);
    let q_full = poly_mul_linear(&q_poly, -1.0);
    let a: Vec<f64> = (1..=p)
        .map(|k| -0.5 * (p_full[k] + q_full[k]))
        .collect();
    Ok(LpcFrame {
        order: p,
        a,
        residual_energy: 0.0,
    })
}
