use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{relu, Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

/// Fully connected layer `y = act(W·x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseParams<T> {
    pub w: Matrix<T>,
    pub b: Vector<T>,
    pub activation: Activation,
}

impl<T: Scalar> DenseParams<T> {
    pub fn zeros(input_dim: usize, output_dim: usize, activation: Activation) -> Self {
        Self {
            w: Matrix::zeros(output_dim, input_dim),
            b: Vector::zeros(output_dim),
            activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn validate(&self) -> Result<()> {
        if self.w.rows() != self.b.len() {
            return Err(Error::shape(
                "DenseParams",
                format!("W of {}", self.w.shape_str()),
                format!("b of length {}", self.b.len()),
            ));
        }
        Ok(())
    }

    pub(crate) fn slices(&self) -> Vec<&[T]> {
        vec![self.w.as_slice(), self.b.as_slice()]
    }

    pub(crate) fn slices_mut(&mut self) -> Vec<&mut [T]> {
        vec![self.w.as_mut_slice(), self.b.as_mut_slice()]
    }

    /// Returns `(pre_activation, output)`.
    pub(crate) fn forward_slice(&self, x: &[T]) -> (Vec<T>, Vec<T>) {
        let mut z = self.b.as_slice().to_vec();
        self.w.matvec_acc(x, &mut z);
        let y = match self.activation {
            Activation::Relu => z.iter().map(|&v| relu(v)).collect(),
            Activation::Linear => z.clone(),
        };
        (z, y)
    }

    pub fn forward(&self, x: &Vector<T>) -> Result<Vector<T>> {
        if x.len() != self.input_dim() {
            return Err(Error::shape(
                "dense",
                self.w.shape_str(),
                format!("[{}]", x.len()),
            ));
        }
        Ok(Vector::from_vec(self.forward_slice(x.as_slice()).1))
    }

    /// Accumulates parameter gradients and optionally returns ∂L/∂x.
    pub(crate) fn backward_slice(
        &self,
        x: &[T],
        pre: &[T],
        d_out: &[T],
        grads: &mut DenseParams<T>,
        need_input_grad: bool,
    ) -> Option<Vec<T>> {
        let dz: Vec<T> = match self.activation {
            Activation::Relu => d_out
                .iter()
                .zip(pre)
                .map(|(&d, &z)| if z > T::zero() { d } else { T::zero() })
                .collect(),
            Activation::Linear => d_out.to_vec(),
        };
        grads.w.add_outer(&dz, x);
        for (b, &d) in grads.b.as_mut_slice().iter_mut().zip(&dz) {
            *b = *b + d;
        }
        need_input_grad.then(|| {
            let mut dx = vec![T::zero(); self.input_dim()];
            self.w.matvec_t_acc(&dz, &mut dx);
            dx
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_layer_clips_negative_preactivations() {
        let mut d = DenseParams::<f64>::zeros(2, 2, Activation::Relu);
        d.w = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).unwrap();
        let y = d.forward(&Vector::from_vec(vec![2.0, 3.0])).unwrap();
        assert_eq!(y.as_slice(), &[2.0, 0.0]);
    }

    #[test]
    fn relu_gradient_is_gated() {
        let mut d = DenseParams::<f64>::zeros(1, 2, Activation::Relu);
        d.w = Matrix::from_rows(&[&[1.0], &[-1.0]]).unwrap();
        let x = [1.5];
        let (pre, _) = d.forward_slice(&x);
        let mut g = DenseParams::zeros(1, 2, Activation::Relu);
        let dx = d
            .backward_slice(&x, &pre, &[1.0, 1.0], &mut g, true)
            .unwrap();
        assert_eq!(g.w.as_slice(), &[1.5, 0.0]);
        assert_eq!(g.b.as_slice(), &[1.0, 0.0]);
        assert_eq!(dx, vec![1.0]);
    }
}
