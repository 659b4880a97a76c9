//! Synthetic relevance curves with planted ground truth.
//!
//! Scores are `baseline + bumps + noise`. Noise is Gaussian with standard
//! deviation `noise_sigma`, drawn in frame order from a ChaCha8 stream seeded
//! with `seed` (`rand_chacha::ChaCha8Rng::seed_from_u64`). With
//! `noise_sigma == 0` no random numbers are drawn and the output is the exact
//! analytic shape.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{AksError, Result};
use crate::io::Interval;
use crate::series::ScoreSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BumpShape {
    /// Constant height over the whole interval.
    Plateau,
    /// Gaussian centred on the interval, standard deviation a quarter of its
    /// length, truncated at the interval ends.
    GaussianBump,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedInterval {
    pub start: usize,
    pub end: usize,
    pub peak_height: f64,
    pub shape: BumpShape,
}

impl PlantedInterval {
    fn value_at(&self, t: usize) -> f64 {
        if t < self.start || t >= self.end {
            return 0.0;
        }
        match self.shape {
            BumpShape::Plateau => self.peak_height,
            BumpShape::GaussianBump => {
                let len = (self.end - self.start) as f64;
                let center = self.start as f64 + (len - 1.0) / 2.0;
                let width = len / 4.0;
                let z = (t as f64 - center) / width;
                self.peak_height * (-0.5 * z * z).exp()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    /// Number of frames.
    pub t: usize,
    #[serde(default)]
    pub planted: Vec<PlantedInterval>,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub baseline: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.t == 0 {
            return Err(AksError::InvalidParam("synthetic series needs T >= 1".into()));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(AksError::InvalidParam(format!(
                "noise_sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        if !self.baseline.is_finite() {
            return Err(AksError::InvalidParam("baseline must be finite".into()));
        }
        let mut prev_end = 0;
        for (i, p) in self.planted.iter().enumerate() {
            if p.start >= p.end || p.end > self.t {
                return Err(AksError::InvalidParam(format!(
                    "planted interval {i} [{}, {}) is empty or outside [0, {})",
                    p.start, p.end, self.t
                )));
            }
            if !p.peak_height.is_finite() || p.peak_height <= 0.0 {
                return Err(AksError::InvalidParam(format!("planted interval {i}: peak height must be positive")));
            }
            if i > 0 && p.start < prev_end {
                return Err(AksError::InvalidParam(format!(
                    "planted interval {i} overlaps or precedes interval {}",
                    i - 1
                )));
            }
            prev_end = p.end;
        }
        Ok(())
    }

    pub fn truth(&self) -> Vec<Interval> {
        self.planted.iter().map(|p| Interval::new(p.start, p.end)).collect()
    }
}

/// Builds the series (1 frame per second, timestamps `0..T`) and returns the
/// planted intervals as ground truth.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(ScoreSeries, Vec<Interval>)> {
    spec.validate()?;
    let mut scores: Vec<f64> = (0..spec.t)
        .map(|t| spec.baseline + spec.planted.iter().map(|p| p.value_at(t)).sum::<f64>())
        .collect();
    if spec.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let normal = Normal::new(0.0, spec.noise_sigma).expect("sigma validated");
        for s in &mut scores {
            *s += normal.sample(&mut rng);
        }
    }
    let series = ScoreSeries::from_scores(scores, 1.0)?;
    Ok((series, spec.truth()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plateau(start: usize, end: usize, h: f64) -> PlantedInterval {
        PlantedInterval {
            start,
            end,
            peak_height: h,
            shape: BumpShape::Plateau,
        }
    }

    #[test]
    fn noise_free_plateau_is_exact() {
        let spec = SyntheticSpec {
            t: 100,
            planted: vec![plateau(40, 50, 0.8)],
            noise_sigma: 0.0,
            baseline: 0.1,
            seed: 0,
        };
        let (s, truth) = generate_synthetic(&spec).unwrap();
        for (t, &v) in s.scores().iter().enumerate() {
            let want = if (40..50).contains(&t) { 0.1 + 0.8 } else { 0.1 };
            assert_eq!(v, want, "frame {t}");
        }
        assert_eq!(truth, vec![Interval::new(40, 50)]);
    }

    #[test]
    fn gaussian_peaks_in_the_middle() {
        let spec = SyntheticSpec {
            t: 30,
            planted: vec![PlantedInterval {
                start: 10,
                end: 19,
                peak_height: 1.0,
                shape: BumpShape::GaussianBump,
            }],
            noise_sigma: 0.0,
            baseline: 0.0,
            seed: 0,
        };
        let (s, _) = generate_synthetic(&spec).unwrap();
        assert_eq!(s.scores()[14], 1.0);
        assert_eq!(s.scores()[13], s.scores()[15]);
        assert_eq!(s.scores()[9], 0.0);
        assert_eq!(s.scores()[19], 0.0);
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let spec = SyntheticSpec {
            t: 100,
            planted: vec![plateau(40, 50, 0.8)],
            noise_sigma: 0.05,
            baseline: 0.1,
            seed: 42,
        };
        let (a, _) = generate_synthetic(&spec).unwrap();
        let (b, _) = generate_synthetic(&spec).unwrap();
        assert_eq!(a, b);
        let (c, _) = generate_synthetic(&SyntheticSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn bumps_stand_out_from_noise() {
        let bump = |s, e| PlantedInterval {
            start: s,
            end: e,
            peak_height: 0.6,
            shape: BumpShape::GaussianBump,
        };
        let spec = SyntheticSpec {
            t: 100,
            planted: vec![bump(20, 30), bump(70, 80)],
            noise_sigma: 0.05,
            baseline: 0.1,
            seed: 7,
        };
        let (s, truth) = generate_synthetic(&spec).unwrap();
        let (mut inside, mut n_in, mut outside, mut n_out) = (0.0, 0, 0.0, 0);
        for (t, &v) in s.scores().iter().enumerate() {
            if truth.iter().any(|iv| iv.contains(t)) {
                inside += v;
                n_in += 1;
            } else {
                outside += v;
                n_out += 1;
            }
        }
        assert!(inside / n_in as f64 > outside / n_out as f64);
    }

    #[test]
    fn rejects_bad_specs() {
        let base = SyntheticSpec {
            t: 50,
            planted: vec![plateau(10, 20, 1.0), plateau(15, 25, 1.0)],
            noise_sigma: 0.0,
            baseline: 0.0,
            seed: 0,
        };
        assert!(generate_synthetic(&base).is_err());
        let out_of_range = SyntheticSpec {
            planted: vec![plateau(45, 55, 1.0)],
            ..base.clone()
        };
        assert!(generate_synthetic(&out_of_range).is_err());
        let flat = SyntheticSpec {
            planted: vec![plateau(1, 2, 0.0)],
            ..base.clone()
        };
        assert!(generate_synthetic(&flat).is_err());
        let noisy = SyntheticSpec {
            planted: vec![],
            noise_sigma: -1.0,
            ..base
        };
        assert!(generate_synthetic(&noisy).is_err());
    }
}
