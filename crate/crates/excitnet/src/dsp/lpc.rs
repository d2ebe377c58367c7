//! Levinson-Durbin recursion for the Yule-Walker normal equations.

use crate::error::{Error, Result};

/// Per-frame spectral envelope as predictor coefficients.
///
/// Convention: A(z) = 1 - sum_{k=1..p} a_k z^{-k}, so the residual is
/// e[n] = x[n] - sum_k a_k x[n-k].
#[derive(Debug, Clone, PartialEq)]
pub struct LpcFrame {
    pub order: usize,
    pub a: Vec<f64>,
    pub residual_energy: f64,
}

impl LpcFrame {
    /// The zero predictor (flat spectrum) of the given order.
    pub fn zero(order: usize) -> Self {
        Self {
            order,
            a: vec![0.0; order],
            residual_energy: 0.0,
        }
    }
}

/// Solves the Yule-Walker equations for `order` predictor coefficients from
/// the autocorrelation `r[0..=order]`.
///
/// `r[0] <= 0` yields the zero predictor with `residual_energy = r[0]`.
pub fn levinson_durbin(r: &[f64], order: usize) -> Result<LpcFrame> {
    if r.len() < order + 1 {
        return Err(Error::InvalidArg(format!(
            "order {} exceeds available lags {}",
            order,
            r.len().saturating_sub(1)
        )));
    }
    if r[0] <= 0.0 {
        return Ok(LpcFrame {
            order,
            a: vec![0.0; order],
            residual_energy: r[0],
        });
    }
    let mut a = vec![0.0; order];
    let mut energy = r[0];
    for i in 1..=order {
        let mut acc = r[i];
        for j in 1..i {
            acc -= a[j - 1] * r[i - j];
        }
        let k = acc / energy;
        if !k.is_finite() || k.abs() >= 1.0 {
            return Err(Error::InvalidArg(format!(
                "unstable reflection coefficient {k} at order {i}"
            )));
        }
        let prev = a.clone();
        a[i - 1] = k;
        for j in 1..i {
            a[j - 1] = prev[j - 1] - k * prev[i - 1 - j];
        }
        energy *= 1.0 - k * k;
    }
    Ok(LpcFrame {
        order,
        a,
        residual_energy: energy,
    })
}
