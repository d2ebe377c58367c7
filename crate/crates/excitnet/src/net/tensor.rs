//! Dense row-major tensors over a float scalar.

use super::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<F> {
    pub data: Vec<F>,
    pub shape: Vec<usize>,
}

impl<F: Scalar> Tensor<F> {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            data: vec![F::zero(); shape.iter().product()],
            shape: shape.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Matrix row for a 2-D tensor.
    pub fn row(&self, i: usize) -> &[F] {
        let cols = self.shape[self.shape.len() - 1];
        &self.data[i * cols..(i + 1) * cols]
    }
}

/// out[i] += sum_j m[i, j] v[j] for a rows x cols matrix slice.
pub fn matvec_acc<F: Scalar>(m: &[F], rows: usize, cols: usize, v: &[F], out: &mut [F]) {
    debug_assert_eq!(m.len(), rows * cols);
    debug_assert_eq!(v.len(), cols);
    debug_assert_eq!(out.len(), rows);
    for i in 0..rows {
        let row = &m[i * cols..(i + 1) * cols];
        let mut acc = F::zero();
        for (w, x) in row.iter().zip(v) {
            acc = acc + *w * *x;
        }
        out[i] += acc;
    }
}

/// out[j] += sum_i m[i, j] v[i] (transposed matvec).
pub fn matvec_t_acc<F: Scalar>(m: &[F], rows: usize, cols: usize, v: &[F], out: &mut [F]) {
    debug_assert_eq!(m.len(), rows * cols);
    debug_assert_eq!(v.len(), rows);
    debug_assert_eq!(out.len(), cols);
    for i in 0..rows {
        let row = &m[i * cols..(i + 1) * cols];
        let vi = v[i];
        for (o, w) in out.iter_mut().zip(row) {
            *o += *w * vi;
        }
    }
}

/// m[i, j] += a[i] b[j] (outer-product accumulation).
pub fn outer_acc<F: Scalar>(m: &mut [F], a: &[F], b: &[F]) {
    debug_assert_eq!(m.len(), a.len() * b.len());
    for (i, ai) in a.iter().enumerate() {
        let row = &mut m[i * b.len()..(i + 1) * b.len()];
        for (w, bj) in row.iter_mut().zip(b) {
            *w += *ai * *bj;
        }
    }
}
