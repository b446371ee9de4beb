//! Synthetic two-phase flow signals, augmentation, amplitude statistics,
//! datasets, and their file formats.
//!
//! The default sample rate is 100 Hz rather than the 10 kHz of
//! impedance-meter acquisitions, so a 20 s window stays a 2000-step
//! sequence. Use [`GenConfig::sample_rate`] to change it.

mod dataset;
mod generate;
pub mod io;
mod regime;
mod signal;
mod stats;

pub use dataset::{build_dataset, Dataset, DatasetConfig, Item, Split};
pub use generate::{generate, Bursts, GenConfig, RegimeParams, Switching};
pub use regime::FlowRegime;
pub use signal::{reverse, segment, window_samples, Signal};
pub use stats::{compute_cpdf, compute_pdf, cumulative, Histogram};
