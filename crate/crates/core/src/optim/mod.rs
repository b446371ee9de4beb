//! Loss, initialization, Adam, the training loop, and checkpoints.

mod adam;
pub mod checkpoint;
mod init;
mod loss;
mod train;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use checkpoint::{Checkpoint, Window};
pub use init::{init_dense, init_lstm, orthogonal_init, FORGET_BIAS_INIT};
pub use loss::{cross_entropy, PROB_FLOOR};
pub use train::{
    accuracy, confusion, prepare, train, BatchStats, EpochRecord, Prepared, StopReason,
    TrainConfig, TrainReport, Trainer,
};

use crate::error::Result;
use crate::nn::Network;
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::zoo::ArchSpec;

/// Fresh network for `arch`: orthogonal weights, forget bias 1, zero
/// peepholes and other biases.
pub fn init_network<T: Scalar>(arch: &ArchSpec, rng: &mut Rng) -> Result<Network<T>> {
    crate::zoo::build(arch, rng)
}

const INIT_STREAM: u64 = 3;

/// [`init_network`] drawing from the initialization stream of `seed`.
pub fn seeded_network<T: Scalar>(arch: &ArchSpec, seed: u64) -> Result<Network<T>> {
    init_network(arch, &mut Rng::with_stream(seed, INIT_STREAM))
}
