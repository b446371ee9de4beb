//! Amplitude histograms (PDF) and their running sums (CPDF).

use crate::data::signal::Signal;
use crate::error::{Error, Result};

/// Probability mass per equal-width bin over `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub mass: Vec<f64>,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.mass.len()
    }

    pub fn centers(&self) -> Vec<f64> {
        let w = 1.0 / self.bins() as f64;
        (0..self.bins()).map(|k| (k as f64 + 0.5) * w).collect()
    }

    /// Mass in bins whose upper edge is at most `x`.
    pub fn mass_below(&self, x: f64) -> f64 {
        let w = 1.0 / self.bins() as f64;
        self.mass
            .iter()
            .enumerate()
            .filter(|(k, _)| (*k as f64 + 1.0) * w <= x + 1e-12)
            .map(|(_, m)| m)
            .sum()
    }

    /// Mass in bins whose lower edge is at least `x`.
    pub fn mass_above(&self, x: f64) -> f64 {
        let w = 1.0 / self.bins() as f64;
        self.mass
            .iter()
            .enumerate()
            .filter(|(k, _)| *k as f64 * w >= x - 1e-12)
            .map(|(_, m)| m)
            .sum()
    }
}

fn bin_of(x: f64, bins: usize) -> usize {
    ((x * bins as f64).floor() as usize).min(bins - 1)
}

pub fn compute_pdf(s: &Signal, bins: usize) -> Result<Histogram> {
    if bins < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 bins, got {bins}"
        )));
    }
    if s.is_empty() {
        return Err(Error::Empty("signal"));
    }
    let mut counts = vec![0usize; bins];
    for &x in s.samples() {
        counts[bin_of(x, bins)] += 1;
    }
    let n = s.len() as f64;
    Ok(Histogram {
        mass: counts.into_iter().map(|c| c as f64 / n).collect(),
    })
}

pub fn compute_cpdf(s: &Signal, bins: usize) -> Result<Vec<f64>> {
    Ok(cumulative(&compute_pdf(s, bins)?))
}

pub fn cumulative(pdf: &Histogram) -> Vec<f64> {
    pdf.mass
        .iter()
        .scan(0.0, |acc, m| {
            *acc += m;
            Some(*acc)
        })
        .collect()
}
