use crate::data::regime::FlowRegime;
use crate::error::{Error, Result};

/// One void-fraction time series. Samples lie in `[0, 1]`: 0 is all
/// liquid, 1 is all gas.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate: f64,
    label: FlowRegime,
    source_id: String,
}

impl Signal {
    pub fn new(
        samples: Vec<f64>,
        sample_rate: f64,
        label: FlowRegime,
        source_id: impl Into<String>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("signal"));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if let Some((k, x)) = samples
            .iter()
            .enumerate()
            .find(|(_, x)| !(0.0..=1.0).contains(*x))
        {
            return Err(Error::InvalidArgument(format!(
                "sample {k} = {x} lies outside [0, 1]"
            )));
        }
        let source_id = source_id.into();
        if source_id.is_empty() || source_id.chars().any(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!(
                "source id {source_id:?} must be nonempty without whitespace"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
            label,
            source_id,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn label(&self) -> FlowRegime {
        self.label
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn std_dev(&self) -> f64 {
        let m = self.mean();
        (self.samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / self.samples.len() as f64)
            .sqrt()
    }
}

/// Number of samples in a window of `seconds` at `sample_rate`, rounded down.
pub fn window_samples(seconds: f64, sample_rate: f64) -> usize {
    // tolerate representation error such as 0.29 * 100 = 28.999999999999996
    (seconds * sample_rate * (1.0 + 1e-12)).floor() as usize
}

/// Cuts a steady-state signal into consecutive, non-overlapping windows of
/// `seg_seconds`. The trailing remainder is dropped; every piece keeps the
/// parent label.
pub fn segment(s: &Signal, seg_seconds: f64) -> Result<Vec<Signal>> {
    let n = window_samples(seg_seconds, s.sample_rate);
    if !(seg_seconds > 0.0) || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "segment of {seg_seconds} s holds no sample at {} Hz",
            s.sample_rate
        )));
    }
    if n > s.len() {
        return Err(Error::InvalidArgument(format!(
            "segment of {seg_seconds} s ({n} samples) exceeds signal {} of {} samples",
            s.source_id,
            s.len()
        )));
    }
    Ok(s.samples
        .chunks_exact(n)
        .enumerate()
        .map(|(k, chunk)| Signal {
            samples: chunk.to_vec(),
            sample_rate: s.sample_rate,
            label: s.label,
            source_id: format!("{}/s{k:02}", s.source_id),
        })
        .collect())
}

/// Time-reversed copy; the source id gains a `/rev` suffix.
pub fn reverse(s: &Signal) -> Signal {
    Signal {
        samples: s.samples.iter().rev().copied().collect(),
        sample_rate: s.sample_rate,
        label: s.label,
        source_id: format!("{}/rev", s.source_id),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::stats::compute_pdf;
    use proptest::prelude::*;

    fn sig(samples: Vec<f64>, rate: f64) -> Signal {
        Signal::new(samples, rate, FlowRegime::Slug, "t").unwrap()
    }

    #[test]
    fn rejects_invalid_signals() {
        assert!(Signal::new(vec![], 10.0, FlowRegime::Bubbly, "a").is_err());
        assert!(Signal::new(vec![0.5], 0.0, FlowRegime::Bubbly, "a").is_err());
        assert!(Signal::new(vec![1.2], 1.0, FlowRegime::Bubbly, "a").is_err());
        assert!(Signal::new(vec![0.2], 1.0, FlowRegime::Bubbly, "a b").is_err());
    }

    #[test]
    fn segment_counts() {
        let s = sig(vec![0.5; 6000], 100.0);
        assert_eq!(segment(&s, 5.0).unwrap().len(), 12);
        assert_eq!(segment(&s, 20.0).unwrap().len(), 3);
        let s61 = sig(vec![0.5; 6100], 100.0);
        let pieces = segment(&s61, 20.0).unwrap();
        assert_eq!(pieces.len(), 3);
        assert!(pieces
            .iter()
            .all(|p| p.len() == 2000 && p.label() == FlowRegime::Slug));
        assert!(segment(&s, 61.0).is_err());
        assert!(segment(&s, 0.001).is_err());
    }

    #[test]
    fn reverse_basics() {
        let s = sig(vec![0.1, 0.2, 0.3], 1.0);
        let r = reverse(&s);
        assert_eq!(r.samples(), &[0.3, 0.2, 0.1]);
        assert_eq!(r.source_id(), "t/rev");
        assert_eq!(reverse(&r).samples(), s.samples());
        assert_eq!(compute_pdf(&r, 7).unwrap(), compute_pdf(&s, 7).unwrap());
    }

    proptest! {
        #[test]
        fn segments_concatenate_to_a_prefix(
            samples in proptest::collection::vec(0.0f64..=1.0, 1..300),
            seg in 1usize..50,
        ) {
            prop_assume!(seg <= samples.len());
            let s = sig(samples.clone(), 10.0);
            let pieces = segment(&s, seg as f64 / 10.0).unwrap();
            let joined: Vec<f64> = pieces.iter().flat_map(|p| p.samples().iter().copied()).collect();
            prop_assert_eq!(pieces.len(), samples.len() / seg);
            prop_assert_eq!(&joined[..], &samples[..joined.len()]);
        }
    }
}
