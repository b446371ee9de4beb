use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Split};
use crate::error::{Error, Result};
use crate::nn::{Gradients, Network};
use crate::optim::adam::{adam_step, AdamHyper, AdamState};
use crate::optim::loss::nll;
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::tensor::{argmax, Sequence};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub initial_lr: f64,
    pub min_lr: f64,
    pub lr_reduce_factor: f64,
    /// Non-improving epochs between learning-rate reductions.
    pub lr_patience: usize,
    /// Non-improving epochs before training stops.
    pub early_stop_patience: usize,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Global-norm gradient clipping threshold; `None` disables clipping.
    pub clip_norm: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            initial_lr: 0.01,
            min_lr: 1e-4,
            lr_reduce_factor: 0.5,
            lr_patience: 2,
            early_stop_patience: 3,
            max_epochs: 100,
            batch_size: 32,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            clip_norm: Some(5.0),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.min_lr > 0.0 && self.min_lr <= self.initial_lr) {
            return bad(format!(
                "need 0 < min_lr ≤ initial_lr, got {} and {}",
                self.min_lr, self.initial_lr
            ));
        }
        if !(self.lr_reduce_factor > 0.0 && self.lr_reduce_factor < 1.0) {
            return bad(format!(
                "lr_reduce_factor must lie in (0, 1), got {}",
                self.lr_reduce_factor
            ));
        }
        if self.lr_patience < 1 || self.early_stop_patience < 1 {
            return bad("patience values must be at least 1".into());
        }
        if self.batch_size < 1 {
            return bad("batch_size must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.adam_beta1)
            || !(0.0..1.0).contains(&self.adam_beta2)
            || !(self.adam_eps > 0.0)
        {
            return bad("Adam needs β₁, β₂ ∈ [0, 1) and ε > 0".into());
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return bad(format!("clip_norm must be positive, got {c}"));
            }
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamHyper {
        AdamHyper {
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    EarlyStop,
    MaxEpochs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    /// Learning rate used during this epoch.
    pub lr: f64,
    /// Wall-clock time; not persisted.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub stop_reason: StopReason,
    pub best_test_accuracy: Option<f64>,
    pub best_epoch: Option<usize>,
}

impl TrainReport {
    pub fn loss_trace(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.train_loss).collect()
    }

    pub fn lr_trace(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.lr).collect()
    }

    /// Copy without wall-clock times, for persisting and comparing.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        r.epochs.iter_mut().for_each(|e| e.seconds = 0.0);
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchStats {
    /// Mean cross-entropy over the batch.
    pub loss: f64,
    pub correct: usize,
    /// Gradient norm before clipping.
    pub grad_norm: f64,
}

/// Network plus optimizer state; one call to [`Trainer::step`] is one
/// minibatch update.
#[derive(Debug, Clone)]
pub struct Trainer<T> {
    net: Network<T>,
    adam: AdamState<T>,
    hyper: AdamHyper,
    clip_norm: Option<f64>,
}

impl<T: Scalar> Trainer<T> {
    pub fn new(net: Network<T>, cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let adam = AdamState::for_params(&net.slices());
        Ok(Self {
            net,
            adam,
            hyper: cfg.adam(),
            clip_norm: cfg.clip_norm,
        })
    }

    pub fn network(&self) -> &Network<T> {
        &self.net
    }

    pub fn into_network(self) -> Network<T> {
        self.net
    }

    pub fn adam_state(&self) -> &AdamState<T> {
        &self.adam
    }

    /// Mean-loss gradient over the batch, clipped, then one Adam step.
    ///
    /// Per-sequence passes run in parallel; gradients are summed in batch
    /// order so the result is independent of the thread count. A non-finite
    /// loss aborts before any parameter changes.
    pub fn step(&mut self, batch: &[(&Sequence<T>, usize)], lr: f64) -> Result<BatchStats> {
        if batch.is_empty() {
            return Err(Error::Empty("batch"));
        }
        let net = &self.net;
        let per_item: Vec<(T, bool, Gradients<T>)> = batch
            .par_iter()
            .map(|&(seq, target)| {
                let tape = net.forward(seq)?;
                let loss = nll(&tape.probs, target);
                let hit = argmax(&tape.probs) == Some(target);
                let grads = net.backward(&tape, target)?;
                Ok((loss, hit, grads))
            })
            .collect::<Result<_>>()?;

        let mut iter = per_item.into_iter();
        let (mut loss, first_hit, mut grads) = iter.next().expect("nonempty batch");
        let mut correct = usize::from(first_hit);
        for (l, hit, g) in iter {
            loss = loss + l;
            correct += usize::from(hit);
            grads.add_assign(&g);
        }
        let n = T::of(batch.len() as f64);
        let loss = (loss / n).as_f64();
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch: 0, batch: 0 });
        }
        grads.scale(T::one() / n);
        let grad_norm = match self.clip_norm {
            Some(c) => grads.clip_global_norm(T::of(c)),
            None => grads.global_norm(),
        };

        let g = grads.slices();
        adam_step(
            &mut self.net.slices_mut(),
            &g,
            &mut self.adam,
            lr,
            &self.hyper,
        )?;
        Ok(BatchStats {
            loss,
            correct,
            grad_norm: grad_norm.as_f64(),
        })
    }
}

/// Labelled sequences ready for the network.
pub struct Prepared<T> {
    pub seq: Sequence<T>,
    pub target: usize,
}

pub fn prepare<T: Scalar>(data: &Dataset, split: Split) -> Vec<Prepared<T>> {
    data.split(split)
        .map(|it| Prepared {
            seq: Sequence::from_scalars(it.signal.samples().iter().copied()),
            target: it.label().code(),
        })
        .collect()
}

/// Fraction of correctly classified sequences.
pub fn accuracy<T: Scalar>(net: &Network<T>, items: &[Prepared<T>]) -> Result<f64> {
    if items.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    let correct = items
        .par_iter()
        .map(|p| Ok(usize::from(net.predict(&p.seq)?.class == p.target)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<usize>();
    Ok(correct as f64 / items.len() as f64)
}

/// `matrix[true][predicted]` counts.
pub fn confusion<T: Scalar>(net: &Network<T>, items: &[Prepared<T>]) -> Result<Vec<Vec<usize>>> {
    let k = net.class_count();
    let preds = items
        .par_iter()
        .map(|p| Ok((p.target, net.predict(&p.seq)?.class)))
        .collect::<Result<Vec<_>>>()?;
    let mut m = vec![vec![0; k]; k];
    for (t, p) in preds {
        m[t][p] += 1;
    }
    Ok(m)
}

const SHUFFLE_STREAM: u64 = 7;

/// Shuffled-minibatch Adam with test-accuracy early stopping and
/// plateau learning-rate reduction.
///
/// After each epoch the test split is scored. An epoch improves when its
/// accuracy is strictly above the best so far. After every `lr_patience`
/// consecutive non-improving epochs the rate is multiplied by
/// `lr_reduce_factor` (never below `min_lr`); after `early_stop_patience`
/// of them training stops. The parameters of the best epoch are returned.
pub fn train<T: Scalar>(
    net: Network<T>,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<(Network<T>, TrainReport)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    if net.input_dim() != 1 {
        return Err(Error::shape(
            "train",
            format!("network input width {}", net.input_dim()),
            "scalar signal samples",
        ));
    }
    let train_set = prepare::<T>(data, Split::Train);
    let test_set = prepare::<T>(data, Split::Test);
    if train_set.is_empty() {
        return Err(Error::Empty("train split"));
    }
    if test_set.is_empty() {
        return Err(Error::Empty("test split"));
    }

    let mut rng = Rng::with_stream(cfg.seed, SHUFFLE_STREAM);
    let mut best_net = net.clone();
    let mut trainer = Trainer::new(net, cfg)?;
    let mut report = TrainReport {
        epochs: Vec::new(),
        stop_reason: StopReason::MaxEpochs,
        best_test_accuracy: None,
        best_epoch: None,
    };
    let mut lr = cfg.initial_lr;
    let mut stale = 0usize;
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=cfg.max_epochs {
        let started = Instant::now();
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<(&Sequence<T>, usize)> = chunk
                .iter()
                .map(|&k| (&train_set[k].seq, train_set[k].target))
                .collect();
            let stats = trainer.step(&batch, lr).map_err(|e| match e {
                Error::NonFiniteLoss { .. } => Error::NonFiniteLoss { epoch, batch: b },
                e => e,
            })?;
            loss_sum += stats.loss * chunk.len() as f64;
            correct += stats.correct;
        }
        let test_accuracy = accuracy(trainer.network(), &test_set)?;
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            train_accuracy: correct as f64 / train_set.len() as f64,
            test_accuracy,
            lr,
            seconds: started.elapsed().as_secs_f64(),
        };
        log::info!(
            "epoch {epoch}: loss {:.5} train acc {:.4} test acc {:.4} lr {:.2e} ({:.1}s)",
            record.train_loss,
            record.train_accuracy,
            record.test_accuracy,
            record.lr,
            record.seconds
        );
        report.epochs.push(record);

        if report
            .best_test_accuracy
            .is_none_or(|best| test_accuracy > best)
        {
            report.best_test_accuracy = Some(test_accuracy);
            report.best_epoch = Some(epoch);
            best_net = trainer.network().clone();
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.early_stop_patience {
                report.stop_reason = StopReason::EarlyStop;
                break;
            }
            if stale % cfg.lr_patience == 0 {
                lr = (lr * cfg.lr_reduce_factor).max(cfg.min_lr);
            }
        }
    }
    Ok((best_net, report))
}
