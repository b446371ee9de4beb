//! Versioned JSON checkpoints.
//!
//! ```text
//! {
//!   "format": "flowlstm-checkpoint",
//!   "version": 1,
//!   "descriptor": "LSTM-128H-2ReLU",
//!   "arch": { ArchSpec fields },
//!   "seed": 0,
//!   "window": { "samples": 500, "sample_rate": 100.0 },
//!   "summary": { TrainReport without wall-clock times } | null,
//!   "network": { "layers": [ { "kind": "dense" | "lstm", ...tensors } ], "class_count": 5 }
//! }
//! ```
//!
//! Every tensor is stored as `{ rows, cols, data }` or `{ data }`. Floats are
//! written in shortest round-trip form and parsed exactly, so a
//! write/read cycle is bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Network;
use crate::optim::train::TrainReport;
use crate::zoo::ArchSpec;

pub const CHECKPOINT_FORMAT: &str = "flowlstm-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Input window the model was trained on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub samples: usize,
    pub sample_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub descriptor: String,
    pub arch: ArchSpec,
    pub seed: u64,
    pub window: Option<Window>,
    pub summary: Option<TrainReport>,
    pub network: Network<f64>,
}

impl Checkpoint {
    pub fn new(
        arch: ArchSpec,
        network: Network<f64>,
        seed: u64,
        window: Option<Window>,
        summary: Option<&TrainReport>,
    ) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            descriptor: arch.to_string(),
            arch,
            seed,
            window,
            summary: summary.map(TrainReport::without_timings),
            network,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        ck.validate()?;
        Ok(ck)
    }

    fn validate(&self) -> Result<()> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!(
                "unknown format {:?}",
                self.format
            )));
        }
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {}",
                self.version
            )));
        }
        let parsed = crate::zoo::parse_arch(&self.descriptor)?;
        if parsed.to_string() != self.arch.to_string() {
            return Err(Error::Checkpoint(format!(
                "descriptor {:?} disagrees with stored architecture {}",
                self.descriptor, self.arch
            )));
        }
        self.network
            .validate()
            .map_err(|e| Error::Checkpoint(format!("invalid network: {e}")))?;
        if self.network.layout() != self.arch.layout() {
            return Err(Error::Checkpoint(format!(
                "network layers {:?} do not match {}",
                self.network.layout(),
                self.arch
            )));
        }
        if self
            .network
            .slices()
            .iter()
            .any(|s| s.iter().any(|x| !x.is_finite()))
        {
            return Err(Error::Checkpoint("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use crate::zoo::{build, parse_arch};

    fn sample() -> Checkpoint {
        let arch = parse_arch("(LSTM-4H-1ReLU)×2").unwrap().with_feature_dim(3);
        let mut net: Network<f64> = build(&arch, &mut Rng::new(4)).unwrap();
        let mut rng = Rng::new(5);
        for s in net.slices_mut() {
            s.iter_mut().for_each(|v| *v += rng.normal() * 1e-3);
        }
        Checkpoint::new(
            arch,
            net,
            4,
            Some(Window {
                samples: 50,
                sample_rate: 100.0,
            }),
            None,
        )
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let ck = sample();
        let text = ck.to_json();
        let back = Checkpoint::from_json(&text).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.to_json(), text);
        let bits = |c: &Checkpoint| -> Vec<u64> {
            c.network
                .slices()
                .iter()
                .flat_map(|s| s.iter().map(|x| x.to_bits()))
                .collect()
        };
        assert_eq!(bits(&back), bits(&ck));
    }

    #[test]
    fn tampered_checkpoints_are_rejected() {
        let ck = sample();
        let mut wrong_format = ck.clone();
        wrong_format.format = "other".into();
        assert!(Checkpoint::from_json(&wrong_format.to_json()).is_err());

        let mut wrong_arch = ck.clone();
        wrong_arch.descriptor = "LSTM-4H-1ReLU".into();
        assert!(Checkpoint::from_json(&wrong_arch.to_json()).is_err());

        let truncated = ck.to_json().replacen("\"rows\": 4", "\"rows\": 5", 1);
        assert!(Checkpoint::from_json(&truncated).is_err());
        assert!(Checkpoint::from_json("{}").is_err());
    }
}
