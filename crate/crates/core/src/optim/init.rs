//! Orthogonal weight initialization.

use crate::nn::{Activation, DenseParams, LstmParams};
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::tensor::{Matrix, Vector};

/// Random matrix with orthonormal columns (tall or square) or orthonormal
/// rows (wide).
///
/// A standard Gaussian matrix is QR-factorized by Householder reflections
/// and `Q` is sign-corrected by `sign(diag R)`, which makes the result
/// Haar-distributed.
pub fn orthogonal_init<T: Scalar>(rows: usize, cols: usize, rng: &mut Rng) -> Matrix<T> {
    assert!(
        rows >= 1 && cols >= 1,
        "orthogonal_init needs a nonempty shape"
    );
    let (m, n) = if rows >= cols {
        (rows, cols)
    } else {
        (cols, rows)
    };
    let gaussian: Vec<f64> = (0..m * n).map(|_| rng.normal()).collect();
    let q = householder_q(m, n, gaussian);
    let data: Vec<T> = if rows >= cols {
        q.into_iter().map(T::of).collect()
    } else {
        // transpose m×n → n×m
        let mut t = vec![T::zero(); m * n];
        for r in 0..m {
            for c in 0..n {
                t[c * m + r] = T::of(q[r * n + c]);
            }
        }
        t
    };
    Matrix::from_vec(rows, cols, data).expect("shape computed above")
}

/// Thin `Q` (m×n, m ≥ n, row-major) of the QR factorization of `a`, with
/// columns flipped so that `diag R > 0`.
fn householder_q(m: usize, n: usize, mut a: Vec<f64>) -> Vec<f64> {
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut r_sign = vec![1.0; n];
    for k in 0..n {
        let norm = (k..m).map(|i| a[i * n + k].powi(2)).sum::<f64>().sqrt();
        let x0 = a[k * n + k];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        // R[k][k] = alpha after reflecting
        r_sign[k] = if alpha < 0.0 { -1.0 } else { 1.0 };
        let mut v: Vec<f64> = (k..m).map(|i| a[i * n + k]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for j in k..n {
                let s: f64 = (k..m).map(|i| v[i - k] * a[i * n + j]).sum::<f64>() * 2.0 / vnorm2;
                for i in k..m {
                    a[i * n + j] -= s * v[i - k];
                }
            }
        }
        reflectors.push(v);
    }

    // Q = H_0 H_1 … H_{n-1} applied to the first n columns of I.
    let mut q = vec![0.0; m * n];
    for j in 0..n {
        q[j * n + j] = 1.0;
    }
    for k in (0..n).rev() {
        let v = &reflectors[k];
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in 0..n {
            let s: f64 = (k..m).map(|i| v[i - k] * q[i * n + j]).sum::<f64>() * 2.0 / vnorm2;
            for i in k..m {
                q[i * n + j] -= s * v[i - k];
            }
        }
    }
    for i in 0..m {
        for j in 0..n {
            q[i * n + j] *= r_sign[j];
        }
    }
    q
}

/// Forget-gate bias at initialization.
pub const FORGET_BIAS_INIT: f64 = 1.0;

/// Orthogonal input and recurrent blocks (each of the eight separately),
/// zero peepholes, zero biases except `b_f = 1`.
pub fn init_lstm<T: Scalar>(input_dim: usize, hidden_dim: usize, rng: &mut Rng) -> LstmParams<T> {
    let mut p = LstmParams::zeros(input_dim, hidden_dim);
    p.w_xi = orthogonal_init(hidden_dim, input_dim, rng);
    p.w_hi = orthogonal_init(hidden_dim, hidden_dim, rng);
    p.w_xf = orthogonal_init(hidden_dim, input_dim, rng);
    p.w_hf = orthogonal_init(hidden_dim, hidden_dim, rng);
    p.w_xc = orthogonal_init(hidden_dim, input_dim, rng);
    p.w_hc = orthogonal_init(hidden_dim, hidden_dim, rng);
    p.w_xo = orthogonal_init(hidden_dim, input_dim, rng);
    p.w_ho = orthogonal_init(hidden_dim, hidden_dim, rng);
    p.b_f = Vector::from_vec(vec![T::of(FORGET_BIAS_INIT); hidden_dim]);
    p
}

pub fn init_dense<T: Scalar>(
    input_dim: usize,
    output_dim: usize,
    activation: Activation,
    rng: &mut Rng,
) -> DenseParams<T> {
    DenseParams {
        w: orthogonal_init(output_dim, input_dim, rng),
        b: Vector::zeros(output_dim),
        activation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_is_orthogonal() {
        let m: Matrix<f64> = orthogonal_init(4, 4, &mut Rng::new(11));
        assert!(m.gram_deviation() <= 1e-8);
        assert!(m.transpose().gram_deviation() <= 1e-8);
    }

    #[test]
    fn scalar_is_plus_or_minus_one() {
        for seed in 0..20 {
            let m: Matrix<f64> = orthogonal_init(1, 1, &mut Rng::new(seed));
            assert!((m.get(0, 0).abs() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rectangular_shapes() {
        let tall: Matrix<f64> = orthogonal_init(9, 3, &mut Rng::new(1));
        let wide: Matrix<f64> = orthogonal_init(2, 7, &mut Rng::new(1));
        assert_eq!(tall.shape(), (9, 3));
        assert_eq!(wide.shape(), (2, 7));
        assert!(tall.gram_deviation() <= 1e-8);
        assert!(wide.gram_deviation() <= 1e-8);
    }

    #[test]
    fn deterministic_per_seed() {
        let a: Matrix<f64> = orthogonal_init(5, 3, &mut Rng::new(8));
        let b: Matrix<f64> = orthogonal_init(5, 3, &mut Rng::new(8));
        let c: Matrix<f64> = orthogonal_init(5, 3, &mut Rng::new(9));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn lstm_init_layout() {
        let p: LstmParams<f64> = init_lstm(3, 6, &mut Rng::new(2));
        for w in [&p.w_hi, &p.w_hf, &p.w_hc, &p.w_ho] {
            assert!(w.gram_deviation() <= 1e-8);
        }
        assert!(p.b_f.as_slice().iter().all(|&b| b == 1.0));
        for v in [&p.b_i, &p.b_c, &p.b_o, &p.w_ci, &p.w_cf, &p.w_co] {
            assert!(v.as_slice().iter().all(|&b| b == 0.0));
        }
    }
}
