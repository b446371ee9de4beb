//! Optional TOML run configuration. Values here sit underneath command-line
//! flags: a flag always wins, then the file, then built-in defaults.
//!
//! ```toml
//! seed = 7
//!
//! [data]
//! conditions_per_regime = 40
//! seg_seconds = 5.0
//! augment_reverse = true
//! split_ratio = 0.8
//! [data.gen]
//! duration = 60.0
//! sample_rate = 100.0
//!
//! [train]
//! max_epochs = 100
//! batch_size = 32
//!
//! [bench]
//! lengths = [20.0, 10.0, 5.0, 3.0]
//! repetitions = 5
//! ```

use std::path::Path;

use anyhow::Context;
use flowlstm::data::{DatasetConfig, GenConfig};
use flowlstm::optim::TrainConfig;
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub data: DataSection,
    pub train: Option<TrainConfig>,
    pub bench: BenchSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub conditions_per_regime: Option<usize>,
    pub seg_seconds: Option<f64>,
    pub augment_reverse: Option<bool>,
    pub split_ratio: Option<f64>,
    pub gen: Option<GenConfig>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub arch: Option<String>,
    pub archs: Option<Vec<String>>,
    pub lengths: Option<Vec<f64>>,
    pub repetitions: Option<usize>,
    pub hidden_divisor: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Dataset settings before flags. Reversal stays off unless the file
    /// turns it on.
    pub fn dataset(&self) -> DatasetConfig {
        let d = &self.data;
        let base = DatasetConfig::default();
        let mut cfg = DatasetConfig {
            gen: d.gen.clone().unwrap_or(base.gen),
            conditions_per_regime: d
                .conditions_per_regime
                .unwrap_or(base.conditions_per_regime),
            seg_seconds: d.seg_seconds.unwrap_or(base.seg_seconds),
            augment_reverse: d.augment_reverse.unwrap_or(false),
            split_ratio: d.split_ratio.unwrap_or(base.split_ratio),
        };
        if let Some(seed) = self.seed {
            cfg.gen.seed = seed;
        }
        cfg
    }

    pub fn training(&self) -> TrainConfig {
        let mut cfg = self.train.clone().unwrap_or_default();
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg
    }
}
