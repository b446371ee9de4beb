use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::generate::{generate, GenConfig};
use crate::data::regime::FlowRegime;
use crate::data::signal::{reverse, segment, Signal};
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            _ => Err(Error::InvalidArgument(format!("unknown split {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub signal: Signal,
    /// Index of the parent test condition.
    pub condition: usize,
    pub split: Split,
}

impl Item {
    pub fn label(&self) -> FlowRegime {
        self.signal.label()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub gen: GenConfig,
    pub conditions_per_regime: usize,
    pub seg_seconds: f64,
    pub augment_reverse: bool,
    /// Fraction of each regime's conditions assigned to training.
    pub split_ratio: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            gen: GenConfig::default(),
            conditions_per_regime: 40,
            seg_seconds: 5.0,
            augment_reverse: true,
            split_ratio: 0.8,
        }
    }
}

impl DatasetConfig {
    /// Short hash of the full configuration (seed included).
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.gen.validate()?;
        if self.conditions_per_regime == 0 {
            return Err(Error::InvalidArgument(
                "conditions_per_regime must be at least 1".into(),
            ));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "split ratio must lie in (0, 1), got {}",
                self.split_ratio
            )));
        }
        Ok(())
    }

    /// Train conditions per regime after rounding.
    fn train_conditions(&self) -> usize {
        (self.split_ratio * self.conditions_per_regime as f64).round() as usize
    }
}

/// Fixed-length labelled segments with a condition-level train/test split.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    items: Vec<Item>,
}

const SPLIT_STREAM: u64 = 1;
const CONDITION_STREAM_BASE: u64 = 1 << 32;

impl Dataset {
    /// Checks that all segments share length and rate and both splits are populated.
    pub fn new(items: Vec<Item>) -> Result<Self> {
        let first = items.first().ok_or(Error::Empty("dataset"))?;
        let (len, rate) = (first.signal.len(), first.signal.sample_rate());
        if let Some(bad) = items
            .iter()
            .find(|it| it.signal.len() != len || it.signal.sample_rate() != rate)
        {
            return Err(Error::InvalidArgument(format!(
                "item {} has {} samples at {} Hz; dataset uses {len} at {rate} Hz",
                bad.signal.source_id(),
                bad.signal.len(),
                bad.signal.sample_rate()
            )));
        }
        for split in [Split::Train, Split::Test] {
            if !items.iter().any(|it| it.split == split) {
                return Err(Error::InvalidArgument(format!(
                    "{} split is empty",
                    split.as_str()
                )));
            }
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Item> {
        self.items.iter().filter(move |it| it.split == split)
    }

    pub fn seq_len(&self) -> usize {
        self.items[0].signal.len()
    }

    pub fn sample_rate(&self) -> f64 {
        self.items[0].signal.sample_rate()
    }

    /// Item count per regime code.
    pub fn label_counts(&self) -> [usize; FlowRegime::COUNT] {
        let mut counts = [0; FlowRegime::COUNT];
        for it in &self.items {
            counts[it.label().code()] += 1;
        }
        counts
    }
}

/// Generates `conditions_per_regime` conditions of every regime, cuts each
/// into segments, optionally appends the time-reversed copy of every
/// segment, and splits by condition so no condition straddles train/test.
///
/// Condition `c` draws from its own stream `(seed, c)`, so the result does
/// not depend on thread count.
pub fn build_dataset(cfg: &DatasetConfig) -> Result<Dataset> {
    cfg.validate()?;
    let per = cfg.conditions_per_regime;
    let n_train = cfg.train_conditions();
    if n_train == 0 || n_train == per {
        return Err(Error::InvalidArgument(format!(
            "split ratio {} of {per} conditions per regime leaves one side empty",
            cfg.split_ratio
        )));
    }

    let mut split_rng = Rng::with_stream(cfg.gen.seed, SPLIT_STREAM);
    let mut split_of = vec![Split::Test; per * FlowRegime::COUNT];
    for regime in FlowRegime::ALL {
        let mut order: Vec<usize> = (0..per).collect();
        split_rng.shuffle(&mut order);
        for &j in &order[..n_train] {
            split_of[regime.code() * per + j] = Split::Train;
        }
    }

    let groups: Vec<Vec<Item>> = (0..per * FlowRegime::COUNT)
        .into_par_iter()
        .map(|c| {
            let regime = FlowRegime::from_code(c / per).expect("code < COUNT");
            let mut rng = Rng::with_stream(cfg.gen.seed, CONDITION_STREAM_BASE + c as u64);
            let parent = generate(regime, &cfg.gen, &mut rng, &format!("c{c:04}"))?;
            let mut pieces = segment(&parent, cfg.seg_seconds)?;
            if cfg.augment_reverse {
                let reversed: Vec<Signal> = pieces.iter().map(reverse).collect();
                pieces.extend(reversed);
            }
            Ok(pieces
                .into_iter()
                .map(|signal| Item {
                    signal,
                    condition: c,
                    split: split_of[c],
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    Dataset::new(groups.into_iter().flatten().collect())
}
