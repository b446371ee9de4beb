//! Peephole LSTM, dense layers, and sequence classifiers built from them.

mod dense;
mod lstm;
mod network;

pub use dense::{Activation, DenseParams};
pub use lstm::{CellState, Gates, LstmParams, LstmStep, LstmTape};
pub use network::{ForwardTape, Gradients, Layer, LayerTape, Network, Prediction};

use crate::error::Result;
use crate::scalar::Scalar;
use crate::tensor::{Sequence, Vector};

pub fn lstm_cell_forward<T: Scalar>(
    x: &Vector<T>,
    prev: &CellState<T>,
    params: &LstmParams<T>,
) -> Result<(CellState<T>, Gates<T>)> {
    params.cell_forward(x, prev)
}

pub fn lstm_layer_forward<T: Scalar>(
    seq: &Sequence<T>,
    params: &LstmParams<T>,
    init: &CellState<T>,
) -> Result<(Sequence<T>, LstmTape<T>)> {
    params.layer_forward(seq, init)
}

/// Returns the class probabilities together with the tape for [`network_backward`].
pub fn network_forward<T: Scalar>(
    net: &Network<T>,
    seq: &Sequence<T>,
) -> Result<(Vector<T>, ForwardTape<T>)> {
    let tape = net.forward(seq)?;
    Ok((Vector::from_vec(tape.probs.clone()), tape))
}

pub fn predict<T: Scalar>(net: &Network<T>, seq: &Sequence<T>) -> Result<Prediction<T>> {
    net.predict(seq)
}

pub fn network_backward<T: Scalar>(
    net: &Network<T>,
    tape: &ForwardTape<T>,
    target: usize,
) -> Result<Gradients<T>> {
    net.backward(tape, target)
}
