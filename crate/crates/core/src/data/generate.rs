//! Synthetic void-fraction signals for the five regime archetypes.
//!
//! Every regime is a base level plus band-limited Gaussian fluctuation
//! (a unit AR(1) process with the given correlation time, scaled to the
//! fluctuation amplitude). Slug flow alternates between a liquid-slug and
//! a Taylor-bubble plateau with exponentially distributed dwell times.
//! Churn-turbulent and cap-bubbly flow add Poisson-arriving bursts with
//! Pareto (heavy-tailed) amplitudes that decay exponentially. Samples are
//! clamped to `[0, 1]`.
//!
//! Level and amplitude are drawn once per test condition from the given
//! ranges, so conditions of one regime differ the way different flow rates
//! would.

use serde::{Deserialize, Serialize};

use crate::data::regime::FlowRegime;
use crate::data::signal::Signal;
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Switching {
    /// Range of the Taylor-bubble (gas plateau) level.
    pub high_level: [f64; 2],
    pub high_fluctuation: [f64; 2],
    /// Mean dwell time in the liquid-slug state, seconds.
    pub low_dwell: f64,
    /// Mean dwell time in the Taylor-bubble state, seconds.
    pub high_dwell: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bursts {
    /// Mean arrivals per second.
    pub rate: f64,
    /// Pareto scale (minimum amplitude).
    pub amplitude: f64,
    /// Pareto tail index; smaller is heavier.
    pub tail_index: f64,
    /// Exponential decay time, seconds.
    pub decay: f64,
    /// Probability that a burst pushes the void fraction down (a liquid wave).
    pub downward_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeParams {
    /// Range of the per-condition base void fraction.
    pub level: [f64; 2],
    /// Range of the per-condition fluctuation standard deviation.
    pub fluctuation: [f64; 2],
    /// Correlation time of the fluctuation, seconds.
    pub correlation_time: f64,
    #[serde(default)]
    pub switching: Option<Switching>,
    #[serde(default)]
    pub bursts: Option<Bursts>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub sample_rate: f64,
    /// Length of one test condition, seconds.
    pub duration: f64,
    pub seed: u64,
    pub bubbly: RegimeParams,
    pub cap_bubbly: RegimeParams,
    pub slug: RegimeParams,
    pub churn_turbulent: RegimeParams,
    pub annular: RegimeParams,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            sample_rate: 100.0,
            duration: 60.0,
            seed: 0,
            bubbly: RegimeParams {
                level: [0.05, 0.15],
                fluctuation: [0.015, 0.03],
                correlation_time: 0.02,
                switching: None,
                bursts: None,
            },
            cap_bubbly: RegimeParams {
                level: [0.2, 0.3],
                fluctuation: [0.03, 0.05],
                correlation_time: 0.05,
                switching: None,
                bursts: Some(Bursts {
                    rate: 1.0,
                    amplitude: 0.08,
                    tail_index: 3.0,
                    decay: 0.08,
                    downward_fraction: 0.0,
                }),
            },
            slug: RegimeParams {
                level: [0.1, 0.25],
                fluctuation: [0.03, 0.05],
                correlation_time: 0.03,
                switching: Some(Switching {
                    high_level: [0.65, 0.8],
                    high_fluctuation: [0.03, 0.05],
                    low_dwell: 0.6,
                    high_dwell: 0.9,
                }),
                bursts: None,
            },
            churn_turbulent: RegimeParams {
                level: [0.5, 0.65],
                fluctuation: [0.1, 0.14],
                correlation_time: 0.05,
                switching: None,
                bursts: Some(Bursts {
                    rate: 1.5,
                    amplitude: 0.1,
                    tail_index: 2.5,
                    decay: 0.15,
                    downward_fraction: 0.6,
                }),
            },
            annular: RegimeParams {
                level: [0.82, 0.92],
                fluctuation: [0.015, 0.03],
                correlation_time: 0.05,
                switching: None,
                bursts: None,
            },
        }
    }
}

fn check_range(name: &str, r: [f64; 2], lo: f64, hi: f64) -> Result<()> {
    if !(r[0] <= r[1] && r[0] >= lo && r[1] <= hi) {
        return Err(Error::InvalidArgument(format!(
            "{name} range {r:?} must be ordered within [{lo}, {hi}]"
        )));
    }
    Ok(())
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "{name} must be positive, got {x}"
        )));
    }
    Ok(())
}

impl RegimeParams {
    pub fn validate(&self, regime: FlowRegime) -> Result<()> {
        let n = regime.name();
        check_range(&format!("{n}.level"), self.level, 0.0, 1.0)?;
        check_range(&format!("{n}.fluctuation"), self.fluctuation, 0.0, 1.0)?;
        check_positive(&format!("{n}.correlation_time"), self.correlation_time)?;
        if let Some(s) = &self.switching {
            check_range(&format!("{n}.switching.high_level"), s.high_level, 0.0, 1.0)?;
            check_range(
                &format!("{n}.switching.high_fluctuation"),
                s.high_fluctuation,
                0.0,
                1.0,
            )?;
            check_positive(&format!("{n}.switching.low_dwell"), s.low_dwell)?;
            check_positive(&format!("{n}.switching.high_dwell"), s.high_dwell)?;
        }
        if let Some(b) = &self.bursts {
            check_positive(&format!("{n}.bursts.rate"), b.rate)?;
            check_positive(&format!("{n}.bursts.amplitude"), b.amplitude)?;
            check_positive(&format!("{n}.bursts.tail_index"), b.tail_index)?;
            check_positive(&format!("{n}.bursts.decay"), b.decay)?;
            check_range(
                &format!("{n}.bursts.downward_fraction"),
                [b.downward_fraction, b.downward_fraction],
                0.0,
                1.0,
            )?;
        }
        Ok(())
    }
}

impl GenConfig {
    pub fn params(&self, regime: FlowRegime) -> &RegimeParams {
        match regime {
            FlowRegime::Bubbly => &self.bubbly,
            FlowRegime::CapBubbly => &self.cap_bubbly,
            FlowRegime::Slug => &self.slug,
            FlowRegime::ChurnTurbulent => &self.churn_turbulent,
            FlowRegime::Annular => &self.annular,
        }
    }

    pub fn samples_per_condition(&self) -> usize {
        crate::data::signal::window_samples(self.duration, self.sample_rate)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("sample_rate", self.sample_rate)?;
        check_positive("duration", self.duration)?;
        if self.samples_per_condition() == 0 {
            return Err(Error::InvalidArgument("duration holds no sample".into()));
        }
        for r in FlowRegime::ALL {
            self.params(r).validate(r)?;
        }
        Ok(())
    }
}

/// Unit-variance AR(1) process: stationary N(0, 1) with correlation
/// `exp(−dt/τ)` between consecutive samples.
struct UnitAr1 {
    phi: f64,
    innovation: f64,
    state: f64,
}

impl UnitAr1 {
    fn new(dt: f64, tau: f64, rng: &mut Rng) -> Self {
        let phi = (-dt / tau).exp();
        Self {
            phi,
            innovation: (1.0 - phi * phi).sqrt(),
            state: rng.normal(),
        }
    }

    fn next(&mut self, rng: &mut Rng) -> f64 {
        self.state = self.phi * self.state + self.innovation * rng.normal();
        self.state
    }
}

/// Draws one test condition of `regime`.
pub fn generate(
    regime: FlowRegime,
    cfg: &GenConfig,
    rng: &mut Rng,
    source_id: &str,
) -> Result<Signal> {
    cfg.validate()?;
    let p = cfg.params(regime);
    let dt = 1.0 / cfg.sample_rate;
    let n = cfg.samples_per_condition();

    let level = rng.uniform_range(p.level[0], p.level[1]);
    let sigma = rng.uniform_range(p.fluctuation[0], p.fluctuation[1]);
    let mut noise = UnitAr1::new(dt, p.correlation_time, rng);

    // slug plateau state: (in_high, remaining seconds)
    let slug = p.switching.as_ref().map(|s| {
        let high_level = rng.uniform_range(s.high_level[0], s.high_level[1]);
        let high_sigma = rng.uniform_range(s.high_fluctuation[0], s.high_fluctuation[1]);
        let in_high = rng.uniform() < s.high_dwell / (s.low_dwell + s.high_dwell);
        let mean = if in_high { s.high_dwell } else { s.low_dwell };
        let remaining = rng.exponential(mean);
        (s, high_level, high_sigma, in_high, remaining)
    });
    let mut slug = slug;

    let mut burst_level = 0.0;
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let (base, amp) = match slug.as_mut() {
            Some((s, high_level, high_sigma, in_high, remaining)) => {
                *remaining -= dt;
                while *remaining <= 0.0 {
                    *in_high = !*in_high;
                    *remaining +=
                        rng.exponential(if *in_high { s.high_dwell } else { s.low_dwell });
                }
                if *in_high {
                    (*high_level, *high_sigma)
                } else {
                    (level, sigma)
                }
            }
            None => (level, sigma),
        };

        let mut x = base + amp * noise.next(rng);
        if let Some(b) = &p.bursts {
            burst_level *= (-dt / b.decay).exp();
            if rng.uniform() < b.rate * dt {
                // Pareto(scale, tail) by inversion
                let magnitude = b.amplitude / (1.0 - rng.uniform()).powf(1.0 / b.tail_index);
                let sign = if rng.uniform() < b.downward_fraction {
                    -1.0
                } else {
                    1.0
                };
                burst_level += sign * magnitude;
            }
            x += burst_level;
        }
        samples.push(x.clamp(0.0, 1.0));
    }
    Signal::new(samples, cfg.sample_rate, regime, source_id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::stats::compute_pdf;

    fn draw(regime: FlowRegime, seed: u64) -> Signal {
        generate(regime, &GenConfig::default(), &mut Rng::new(seed), "t").unwrap()
    }

    /// Bins that beat both neighbours and hold at least `min_mass`.
    fn modes(mass: &[f64], min_mass: f64) -> Vec<usize> {
        (0..mass.len())
            .filter(|&k| {
                let left = if k == 0 {
                    f64::NEG_INFINITY
                } else {
                    mass[k - 1]
                };
                let right = mass.get(k + 1).copied().unwrap_or(f64::NEG_INFINITY);
                mass[k] > left && mass[k] > right && mass[k] >= min_mass
            })
            .collect()
    }

    #[test]
    fn bubbly_is_low_and_narrow() {
        for seed in 0..5 {
            let s = draw(FlowRegime::Bubbly, seed);
            let h = compute_pdf(&s, 20).unwrap();
            assert!(s.mean() < 0.3);
            assert!(h.mass_above(0.5) < 0.05);
            assert_eq!(s.len(), 6000);
        }
    }

    #[test]
    fn annular_is_high_and_narrow() {
        for seed in 0..5 {
            let s = draw(FlowRegime::Annular, seed);
            let h = compute_pdf(&s, 20).unwrap();
            assert!(s.mean() > 0.7);
            assert!(h.mass_below(0.5) < 0.05);
        }
    }

    #[test]
    fn slug_is_bimodal() {
        for seed in 0..5 {
            let h = compute_pdf(&draw(FlowRegime::Slug, seed), 20).unwrap();
            let m = modes(&h.mass, 0.02);
            assert_eq!(m.len(), 2, "seed {seed}: {:?}", h.mass);
            let sep = (m[1] - m[0]) as f64 / 20.0;
            assert!(sep >= 0.3, "modes {m:?}");
        }
    }

    #[test]
    fn archetype_ordering() {
        let cap = draw(FlowRegime::CapBubbly, 1);
        let churn = draw(FlowRegime::ChurnTurbulent, 1);
        assert!((0.2..0.45).contains(&cap.mean()), "{}", cap.mean());
        assert!(churn.mean() > 0.4);
        assert!(churn.std_dev() > 2.0 * draw(FlowRegime::Bubbly, 1).std_dev());
        assert!(churn.std_dev() > cap.std_dev());
        assert_eq!(
            modes(
                &compute_pdf(&draw(FlowRegime::Annular, 3), 20).unwrap().mass,
                0.02
            )
            .len(),
            1
        );
    }

    #[test]
    fn deterministic_and_in_range() {
        for r in FlowRegime::ALL {
            let a = draw(r, 9);
            assert_eq!(a, draw(r, 9));
            assert!(a.samples().iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = GenConfig::default();
        cfg.slug.level = [0.6, 0.2];
        assert!(cfg.validate().is_err());
        let mut cfg = GenConfig::default();
        cfg.sample_rate = 0.0;
        assert!(generate(FlowRegime::Bubbly, &cfg, &mut Rng::new(0), "x").is_err());
    }
}
