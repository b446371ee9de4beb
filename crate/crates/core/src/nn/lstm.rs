//! Peephole LSTM layer.
//!
//! One time step, with `⊙` the elementwise product and diagonal peepholes:
//!
//! ```text
//! i = σ(W_xi·x + W_hi·h₋ + w_ci⊙c₋ + b_i)
//! f = σ(W_xf·x + W_hf·h₋ + w_cf⊙c₋ + b_f)
//! a = tanh(W_xc·x + W_hc·h₋ + b_c)
//! c = f⊙c₋ + i⊙a
//! o = σ(W_xo·x + W_ho·h₋ + w_co⊙c + b_o)
//! h = o⊙tanh(c)
//! ```
//!
//! The output gate peeks at the *updated* cell `c`, the input and forget
//! gates at the previous one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{sigmoid, Matrix, Sequence, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams<T> {
    pub w_xi: Matrix<T>,
    pub w_hi: Matrix<T>,
    pub w_xf: Matrix<T>,
    pub w_hf: Matrix<T>,
    pub w_xc: Matrix<T>,
    pub w_hc: Matrix<T>,
    pub w_xo: Matrix<T>,
    pub w_ho: Matrix<T>,
    pub w_ci: Vector<T>,
    pub w_cf: Vector<T>,
    pub w_co: Vector<T>,
    pub b_i: Vector<T>,
    pub b_f: Vector<T>,
    pub b_c: Vector<T>,
    pub b_o: Vector<T>,
}

pub(crate) const LSTM_PARAM_NAMES: [&str; 15] = [
    "w_xi", "w_hi", "w_xf", "w_hf", "w_xc", "w_hc", "w_xo", "w_ho", "w_ci", "w_cf", "w_co", "b_i",
    "b_f", "b_c", "b_o",
];

impl<T: Scalar> LstmParams<T> {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let wx = || Matrix::zeros(hidden_dim, input_dim);
        let wh = || Matrix::zeros(hidden_dim, hidden_dim);
        let v = || Vector::zeros(hidden_dim);
        Self {
            w_xi: wx(),
            w_hi: wh(),
            w_xf: wx(),
            w_hf: wh(),
            w_xc: wx(),
            w_hc: wh(),
            w_xo: wx(),
            w_ho: wh(),
            w_ci: v(),
            w_cf: v(),
            w_co: v(),
            b_i: v(),
            b_f: v(),
            b_c: v(),
            b_o: v(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_xi.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_xi.rows()
    }

    pub fn validate(&self) -> Result<()> {
        let (h, d) = (self.hidden_dim(), self.input_dim());
        for (name, m) in LSTM_PARAM_NAMES.iter().zip(self.matrices()) {
            let want = if name.starts_with("w_x") {
                (h, d)
            } else {
                (h, h)
            };
            if m.shape() != want {
                return Err(Error::shape(
                    "LstmParams",
                    format!("{name} of {}x{}", want.0, want.1),
                    m.shape_str(),
                ));
            }
        }
        for (name, v) in LSTM_PARAM_NAMES[8..].iter().zip(self.vectors()) {
            if v.len() != h {
                return Err(Error::shape(
                    "LstmParams",
                    format!("{name} of length {h}"),
                    format!("length {}", v.len()),
                ));
            }
        }
        Ok(())
    }

    fn matrices(&self) -> [&Matrix<T>; 8] {
        [
            &self.w_xi, &self.w_hi, &self.w_xf, &self.w_hf, &self.w_xc, &self.w_hc, &self.w_xo,
            &self.w_ho,
        ]
    }

    fn vectors(&self) -> [&Vector<T>; 7] {
        [
            &self.w_ci, &self.w_cf, &self.w_co, &self.b_i, &self.b_f, &self.b_c, &self.b_o,
        ]
    }

    pub(crate) fn slices(&self) -> Vec<&[T]> {
        let mut out: Vec<&[T]> = self.matrices().iter().map(|m| m.as_slice()).collect();
        out.extend(self.vectors().iter().map(|v| v.as_slice()));
        out
    }

    pub(crate) fn slices_mut(&mut self) -> Vec<&mut [T]> {
        vec![
            self.w_xi.as_mut_slice(),
            self.w_hi.as_mut_slice(),
            self.w_xf.as_mut_slice(),
            self.w_hf.as_mut_slice(),
            self.w_xc.as_mut_slice(),
            self.w_hc.as_mut_slice(),
            self.w_xo.as_mut_slice(),
            self.w_ho.as_mut_slice(),
            self.w_ci.as_mut_slice(),
            self.w_cf.as_mut_slice(),
            self.w_co.as_mut_slice(),
            self.b_i.as_mut_slice(),
            self.b_f.as_mut_slice(),
            self.b_c.as_mut_slice(),
            self.b_o.as_mut_slice(),
        ]
    }

    /// Runs one step on raw slices. Shapes are the caller's responsibility.
    pub(crate) fn step(&self, x: &[T], h_prev: &[T], c_prev: &[T]) -> LstmStep<T> {
        let n = self.hidden_dim();
        let pre = |wx: &Matrix<T>, wh: &Matrix<T>, b: &Vector<T>| {
            let mut z = b.as_slice().to_vec();
            wx.matvec_acc(x, &mut z);
            wh.matvec_acc(h_prev, &mut z);
            z
        };

        let mut i = pre(&self.w_xi, &self.w_hi, &self.b_i);
        let mut f = pre(&self.w_xf, &self.w_hf, &self.b_f);
        let mut a = pre(&self.w_xc, &self.w_hc, &self.b_c);
        let mut o = pre(&self.w_xo, &self.w_ho, &self.b_o);
        let mut c = vec![T::zero(); n];
        let mut tanh_c = vec![T::zero(); n];
        let mut h = vec![T::zero(); n];
        let (wci, wcf, wco) = (
            self.w_ci.as_slice(),
            self.w_cf.as_slice(),
            self.w_co.as_slice(),
        );
        for k in 0..n {
            i[k] = sigmoid(i[k] + wci[k] * c_prev[k]);
            f[k] = sigmoid(f[k] + wcf[k] * c_prev[k]);
            a[k] = a[k].tanh();
            c[k] = f[k] * c_prev[k] + i[k] * a[k];
            o[k] = sigmoid(o[k] + wco[k] * c[k]);
            tanh_c[k] = c[k].tanh();
            h[k] = o[k] * tanh_c[k];
        }

        LstmStep {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            c_prev: c_prev.to_vec(),
            gates: Gates { i, f, a, o },
            c,
            tanh_c,
            h,
        }
    }

    fn check_input(&self, dim: usize) -> Result<()> {
        if dim != self.input_dim() {
            return Err(Error::shape(
                "lstm input",
                format!("W_x of {}", self.w_xi.shape_str()),
                format!("input of width {dim}"),
            ));
        }
        Ok(())
    }

    /// One cell update. Returns the new state and the gate activations.
    pub fn cell_forward(
        &self,
        x: &Vector<T>,
        prev: &CellState<T>,
    ) -> Result<(CellState<T>, Gates<T>)> {
        self.check_input(x.len())?;
        prev.check(self.hidden_dim())?;
        let s = self.step(x.as_slice(), prev.h.as_slice(), prev.c.as_slice());
        Ok((
            CellState {
                h: Vector::from_vec(s.h),
                c: Vector::from_vec(s.c),
            },
            s.gates,
        ))
    }

    /// Threads the cell across a whole sequence starting from `init`.
    pub fn layer_forward(
        &self,
        seq: &Sequence<T>,
        init: &CellState<T>,
    ) -> Result<(Sequence<T>, LstmTape<T>)> {
        if seq.is_empty() {
            return Err(Error::Empty("sequence"));
        }
        self.check_input(seq.dim())?;
        init.check(self.hidden_dim())?;
        Ok(self.forward_unchecked(seq, init.h.as_slice(), init.c.as_slice()))
    }

    pub(crate) fn forward_unchecked(
        &self,
        seq: &Sequence<T>,
        h0: &[T],
        c0: &[T],
    ) -> (Sequence<T>, LstmTape<T>) {
        let n = self.hidden_dim();
        let mut out = Sequence::zeros(n, seq.len());
        let mut steps: Vec<LstmStep<T>> = Vec::with_capacity(seq.len());
        for t in 0..seq.len() {
            let s = match steps.last() {
                Some(p) => self.step(seq.step(t), &p.h, &p.c),
                None => self.step(seq.step(t), h0, c0),
            };
            out.step_mut(t).copy_from_slice(&s.h);
            steps.push(s);
        }
        (out, LstmTape { steps })
    }

    /// Backpropagation through time.
    ///
    /// `d_out[t]` is ∂L/∂h_t from the layer above. Parameter gradients are
    /// accumulated into `grads`; returns ∂L/∂x_t when `need_input_grad`.
    pub(crate) fn backward(
        &self,
        tape: &LstmTape<T>,
        d_out: &Sequence<T>,
        grads: &mut LstmParams<T>,
        need_input_grad: bool,
    ) -> Option<Sequence<T>> {
        let n = self.hidden_dim();
        let len = tape.steps.len();
        let one = T::one();
        let mut d_x = need_input_grad.then(|| Sequence::zeros(self.input_dim(), len));
        let mut dh_next = vec![T::zero(); n];
        let mut dc_next = vec![T::zero(); n];
        let (mut dzi, mut dzf, mut dza, mut dzo) = (
            vec![T::zero(); n],
            vec![T::zero(); n],
            vec![T::zero(); n],
            vec![T::zero(); n],
        );
        let (wci, wcf, wco) = (
            self.w_ci.as_slice(),
            self.w_cf.as_slice(),
            self.w_co.as_slice(),
        );

        for t in (0..len).rev() {
            let s = &tape.steps[t];
            let g = &s.gates;
            let dh_above = d_out.step(t);
            for k in 0..n {
                let dh = dh_above[k] + dh_next[k];
                dzo[k] = dh * s.tanh_c[k] * g.o[k] * (one - g.o[k]);
                let dc =
                    dh * g.o[k] * (one - s.tanh_c[k] * s.tanh_c[k]) + dzo[k] * wco[k] + dc_next[k];
                dzi[k] = dc * g.a[k] * g.i[k] * (one - g.i[k]);
                dzf[k] = dc * s.c_prev[k] * g.f[k] * (one - g.f[k]);
                dza[k] = dc * g.i[k] * (one - g.a[k] * g.a[k]);
                dc_next[k] = dc * g.f[k] + dzi[k] * wci[k] + dzf[k] * wcf[k];
            }

            for k in 0..n {
                let gci = grads.w_ci.as_mut_slice();
                gci[k] = gci[k] + dzi[k] * s.c_prev[k];
                let gcf = grads.w_cf.as_mut_slice();
                gcf[k] = gcf[k] + dzf[k] * s.c_prev[k];
                let gco = grads.w_co.as_mut_slice();
                gco[k] = gco[k] + dzo[k] * s.c[k];
            }
            for (gb, dz) in [
                (&mut grads.b_i, &dzi),
                (&mut grads.b_f, &dzf),
                (&mut grads.b_c, &dza),
                (&mut grads.b_o, &dzo),
            ] {
                for (b, &d) in gb.as_mut_slice().iter_mut().zip(dz.iter()) {
                    *b = *b + d;
                }
            }
            grads.w_xi.add_outer(&dzi, &s.x);
            grads.w_xf.add_outer(&dzf, &s.x);
            grads.w_xc.add_outer(&dza, &s.x);
            grads.w_xo.add_outer(&dzo, &s.x);
            grads.w_hi.add_outer(&dzi, &s.h_prev);
            grads.w_hf.add_outer(&dzf, &s.h_prev);
            grads.w_hc.add_outer(&dza, &s.h_prev);
            grads.w_ho.add_outer(&dzo, &s.h_prev);

            dh_next.iter_mut().for_each(|v| *v = T::zero());
            self.w_hi.matvec_t_acc(&dzi, &mut dh_next);
            self.w_hf.matvec_t_acc(&dzf, &mut dh_next);
            self.w_hc.matvec_t_acc(&dza, &mut dh_next);
            self.w_ho.matvec_t_acc(&dzo, &mut dh_next);

            if let Some(dx) = d_x.as_mut() {
                let dx = dx.step_mut(t);
                self.w_xi.matvec_t_acc(&dzi, dx);
                self.w_xf.matvec_t_acc(&dzf, dx);
                self.w_xc.matvec_t_acc(&dza, dx);
                self.w_xo.matvec_t_acc(&dzo, dx);
            }
        }
        d_x
    }
}

/// Recurrent state `(h, c)` carried between time steps.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState<T> {
    pub h: Vector<T>,
    pub c: Vector<T>,
}

impl<T: Scalar> CellState<T> {
    pub fn zeros(hidden_dim: usize) -> Self {
        Self {
            h: Vector::zeros(hidden_dim),
            c: Vector::zeros(hidden_dim),
        }
    }

    fn check(&self, hidden_dim: usize) -> Result<()> {
        if self.h.len() != hidden_dim || self.c.len() != hidden_dim {
            return Err(Error::shape(
                "cell state",
                format!("hidden width {hidden_dim}"),
                format!("h[{}], c[{}]", self.h.len(), self.c.len()),
            ));
        }
        Ok(())
    }
}

/// Gate activations of one step: input `i`, forget `f`, candidate `a`, output `o`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gates<T> {
    pub i: Vec<T>,
    pub f: Vec<T>,
    pub a: Vec<T>,
    pub o: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct LstmStep<T> {
    pub x: Vec<T>,
    pub h_prev: Vec<T>,
    pub c_prev: Vec<T>,
    pub gates: Gates<T>,
    pub c: Vec<T>,
    pub tanh_c: Vec<T>,
    pub h: Vec<T>,
}

/// Everything the backward pass needs from one forward pass over a sequence.
#[derive(Debug, Clone)]
pub struct LstmTape<T> {
    pub steps: Vec<LstmStep<T>>,
}

impl<T> LstmTape<T> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_params(values: [f64; 15]) -> LstmParams<f64> {
        let mut p = LstmParams::zeros(1, 1);
        for (s, v) in p.slices_mut().into_iter().zip(values) {
            s[0] = v;
        }
        p
    }

    #[test]
    fn zero_parameters_give_half_open_gates() {
        let p = LstmParams::<f64>::zeros(3, 2);
        let x = Vector::from_vec(vec![0.3, -1.0, 7.0]);
        let (state, g) = p.cell_forward(&x, &CellState::zeros(2)).unwrap();
        assert_eq!(g.i, vec![0.5; 2]);
        assert_eq!(g.f, vec![0.5; 2]);
        assert_eq!(g.o, vec![0.5; 2]);
        assert_eq!(g.a, vec![0.0; 2]);
        assert_eq!(state, CellState::zeros(2));
    }

    #[test]
    fn saturated_gates_carry_the_cell() {
        let mut p = LstmParams::<f64>::zeros(1, 1);
        p.b_i.as_mut_slice()[0] = 100.0;
        p.b_f.as_mut_slice()[0] = 100.0;
        p.w_co.as_mut_slice()[0] = 0.3;
        p.b_o.as_mut_slice()[0] = -0.2;
        let prev = CellState {
            h: Vector::zeros(1),
            c: Vector::from_vec(vec![2.0]),
        };
        let (s, g) = p.cell_forward(&Vector::zeros(1), &prev).unwrap();
        assert!((g.i[0] - 1.0).abs() < 1e-12 && (g.f[0] - 1.0).abs() < 1e-12);
        assert_eq!(g.a[0], 0.0);
        assert!((s.c[0] - 2.0).abs() < 1e-12);
        let expected_h = sigmoid(0.3 * 2.0 - 0.2) * 2f64.tanh();
        assert!((s.h[0] - expected_h).abs() < 1e-12);
    }

    #[test]
    fn output_gate_peeks_at_updated_cell() {
        // only w_co and b_c nonzero: o must depend on the new c, not on c_prev = 0
        let p = scalar_params([
            0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 4.0, 0.0, 0.0, 1.0, 0.0,
        ]);
        let (s, g) = p
            .cell_forward(&Vector::zeros(1), &CellState::zeros(1))
            .unwrap();
        let c = 0.5 * 1f64.tanh();
        assert!((s.c[0] - c).abs() < 1e-15);
        assert!((g.o[0] - sigmoid(4.0 * c)).abs() < 1e-15);
    }

    #[test]
    fn single_step_layer_matches_cell() {
        let p = scalar_params([
            0.1, -0.2, 0.3, 0.4, -0.5, 0.6, 0.7, -0.8, 0.9, -1.0, 1.1, 0.05, 0.5, -0.1, 0.2,
        ]);
        let seq = Sequence::from_scalars([0.42]);
        let (out, tape) = p.layer_forward(&seq, &CellState::zeros(1)).unwrap();
        let (s, _) = p
            .cell_forward(&Vector::from_vec(vec![0.42]), &CellState::zeros(1))
            .unwrap();
        assert_eq!(out.step(0), s.h.as_slice());
        assert_eq!(tape.len(), 1);
    }

    #[test]
    fn zero_parameters_give_zero_outputs() {
        let p = LstmParams::<f64>::zeros(1, 3);
        let seq = Sequence::from_scalars([0.2, 0.9, 0.5, 0.1]);
        let (out, _) = p.layer_forward(&seq, &CellState::zeros(3)).unwrap();
        assert!(out.to_vectors().iter().all(|v| v.as_slice() == [0.0; 3]));
    }

    #[test]
    fn empty_sequence_and_bad_width_are_errors() {
        let p = LstmParams::<f64>::zeros(2, 3);
        let empty = Sequence::from_flat(2, vec![]).unwrap();
        assert!(p.layer_forward(&empty, &CellState::zeros(3)).is_err());
        assert!(p
            .cell_forward(&Vector::zeros(1), &CellState::zeros(3))
            .is_err());
        assert!(p
            .cell_forward(&Vector::zeros(2), &CellState::zeros(2))
            .is_err());
    }

    #[test]
    fn validate_rejects_bad_shapes() {
        let mut p = LstmParams::<f64>::zeros(2, 3);
        assert!(p.validate().is_ok());
        p.w_hc = Matrix::zeros(3, 2);
        assert!(p.validate().is_err());
    }
}
