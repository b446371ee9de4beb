//! Classifying signals longer than the trained window.

use flowlstm::data::Signal;
use flowlstm::optim::Window;
use flowlstm::tensor::{argmax, Sequence};
use flowlstm::{Error, Network, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Vote {
    /// Winning class; ties go to the lowest index.
    pub class: usize,
    /// Mean of the per-window probability vectors.
    pub probs: Vec<f64>,
    /// Per-class count of windows won.
    pub votes: Vec<usize>,
}

/// Cuts `signal` into consecutive non-overlapping windows of the trained
/// length (remainder dropped), classifies each, and takes the majority.
/// Without a stored window the whole signal is one window.
pub fn classify(net: &Network, signal: &Signal, window: Option<Window>) -> Result<Vote> {
    let len = match window {
        Some(w) => {
            if w.sample_rate != signal.sample_rate() {
                return Err(Error::InvalidArgument(format!(
                    "signal is sampled at {} Hz but the model was trained at {} Hz",
                    signal.sample_rate(),
                    w.sample_rate
                )));
            }
            if signal.len() < w.samples {
                return Err(Error::InvalidArgument(format!(
                    "signal has {} samples; the model needs at least {} ({} s)",
                    signal.len(),
                    w.samples,
                    w.samples as f64 / w.sample_rate
                )));
            }
            w.samples
        }
        None => signal.len(),
    };

    let k = net.class_count();
    let mut votes = vec![0; k];
    let mut probs = vec![0.0; k];
    let windows = signal.samples().chunks_exact(len);
    let n = windows.len();
    for chunk in windows {
        let p = net.predict(&Sequence::from_scalars(chunk.iter().copied()))?;
        votes[p.class] += 1;
        for (acc, x) in probs.iter_mut().zip(p.probs.as_slice()) {
            *acc += x / n as f64;
        }
    }
    let class = argmax(&votes.iter().map(|&v| v as f64).collect::<Vec<_>>()).expect("k >= 1");
    Ok(Vote {
        class,
        probs,
        votes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use flowlstm::data::FlowRegime;
    use flowlstm::optim::seeded_network;
    use flowlstm::parse_arch;

    fn net() -> Network {
        seeded_network(&parse_arch("LSTM-4H-1ReLU").unwrap().with_feature_dim(4), 0).unwrap()
    }

    fn signal(n: usize) -> Signal {
        Signal::new(
            (0..n).map(|i| (i % 7) as f64 / 7.0).collect(),
            10.0,
            FlowRegime::Slug,
            "s",
        )
        .unwrap()
    }

    #[test]
    fn windows_are_counted_and_probabilities_averaged() {
        let w = Window {
            samples: 10,
            sample_rate: 10.0,
        };
        let v = classify(&net(), &signal(35), Some(w)).unwrap();
        assert_eq!(v.votes.iter().sum::<usize>(), 3);
        assert!((v.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(v.votes[v.class], *v.votes.iter().max().unwrap());
    }

    #[test]
    fn short_or_mismatched_signals_are_rejected() {
        let w = Window {
            samples: 10,
            sample_rate: 10.0,
        };
        let err = classify(&net(), &signal(9), Some(w))
            .unwrap_err()
            .to_string();
        assert!(err.contains("at least 10"), "{err}");
        let other_rate = Window {
            samples: 10,
            sample_rate: 100.0,
        };
        assert!(classify(&net(), &signal(20), Some(other_rate)).is_err());
    }

    #[test]
    fn single_window_matches_direct_prediction() {
        let s = signal(10);
        let direct = net()
            .predict(&Sequence::from_scalars(s.samples().iter().copied()))
            .unwrap();
        let v = classify(&net(), &s, None).unwrap();
        assert_eq!(v.class, direct.class);
        assert_eq!(v.probs, direct.probs.as_slice());
    }
}
