//! Deep peephole-LSTM networks for classifying two-phase flow regimes from
//! void-fraction time series.
//!
//! The numeric core ([`tensor`], [`nn`], [`optim`]) is generic over the
//! [`Scalar`] type; the aliases at the crate root fix it to `f64`, which is
//! what training, checkpoints, and the benchmarks use.

pub mod bench;
pub mod data;
pub mod error;
pub mod nn;
pub mod optim;
mod rng;
pub mod scalar;
pub mod tensor;
pub mod zoo;

pub use error::{Error, Result};
pub use rng::Rng;
pub use scalar::Scalar;
pub use zoo::{parse_arch, ArchSpec};

pub type Matrix = tensor::Matrix<f64>;
pub type Vector = tensor::Vector<f64>;
pub type Sequence = tensor::Sequence<f64>;
pub type Network = nn::Network<f64>;
pub type LstmParams = nn::LstmParams<f64>;
pub type DenseParams = nn::DenseParams<f64>;
pub type CellState = nn::CellState<f64>;
pub type Gradients = nn::Gradients<f64>;

pub type Network32 = nn::Network<f32>;
pub type Sequence32 = tensor::Sequence<f32>;
