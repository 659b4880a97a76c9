//! Named synthetic corpora.
//!
//! * `single-moment`: the relevant content is one short event made of four
//!   closely spaced true keyframes; everything else is quiet. Top-score
//!   sampling catches several of them while per-bin sampling spends most of
//!   its budget on empty bins.
//! * `multi-moment`: six moderate Gaussian bumps spread over the whole video,
//!   one per sixth of the axis. Per-bin sampling visits most of them; top-score
//!   sampling piles onto the tallest one.
//! * `single-plateau`: exactly one planted plateau.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{AksError, Result};
use crate::scorer::{BumpShape, PlantedInterval, SyntheticSpec};

pub const PRESETS: [&str; 3] = ["single-moment", "multi-moment", "single-plateau"];

pub const DEFAULT_NOISE: f64 = 0.05;
const BASELINE: f64 = 0.1;

/// `videos` specs for preset `name`, reproducible from `seed`.
pub fn preset_corpus(name: &str, videos: usize, noise_sigma: f64, seed: u64) -> Result<Vec<SyntheticSpec>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let make: fn(&mut ChaCha8Rng, f64) -> SyntheticSpec = match name {
        "single-moment" => single_moment,
        "multi-moment" => multi_moment,
        "single-plateau" => single_plateau,
        other => {
            return Err(AksError::Config(format!(
                "unknown preset '{other}' (expected one of {})",
                PRESETS.join(", ")
            )))
        }
    };
    Ok((0..videos).map(|_| make(&mut rng, noise_sigma)).collect())
}

fn single_moment(rng: &mut ChaCha8Rng, noise_sigma: f64) -> SyntheticSpec {
    let t = rng.random_range(160..=320);
    let (events, len) = (4, 3);
    let gaps: Vec<usize> = (0..events - 1).map(|_| rng.random_range(2..=6)).collect();
    let span = events * len + gaps.iter().sum::<usize>();
    let mut start = rng.random_range(0..=t - span);
    let mut planted = Vec::with_capacity(events);
    for e in 0..events {
        planted.push(PlantedInterval {
            start,
            end: start + len,
            peak_height: 0.8,
            shape: BumpShape::Plateau,
        });
        start += len + gaps.get(e).copied().unwrap_or(0);
    }
    SyntheticSpec {
        t,
        planted,
        noise_sigma,
        baseline: BASELINE,
        seed: rng.random(),
    }
}

fn multi_moment(rng: &mut ChaCha8Rng, noise_sigma: f64) -> SyntheticSpec {
    let t: usize = rng.random_range(180..=360);
    let moments = 6;
    let len = t / 12;
    let sixth = t / moments;
    let planted = (0..moments)
        .map(|i| {
            let lo = i * sixth;
            let start = rng.random_range(lo..=lo + sixth - len);
            PlantedInterval {
                start,
                end: start + len,
                peak_height: rng.random_range(0.4..0.7),
                shape: BumpShape::GaussianBump,
            }
        })
        .collect();
    SyntheticSpec {
        t,
        planted,
        noise_sigma,
        baseline: BASELINE,
        seed: rng.random(),
    }
}

fn single_plateau(rng: &mut ChaCha8Rng, noise_sigma: f64) -> SyntheticSpec {
    let t: usize = rng.random_range(160..=320);
    let len = rng.random_range(5..=15);
    let start = rng.random_range(0..=t - len);
    SyntheticSpec {
        t,
        planted: vec![PlantedInterval {
            start,
            end: start + len,
            peak_height: 0.8,
            shape: BumpShape::Plateau,
        }],
        noise_sigma,
        baseline: BASELINE,
        seed: rng.random(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid_and_reproducible() {
        for name in PRESETS {
            let a = preset_corpus(name, 20, DEFAULT_NOISE, 3).unwrap();
            let b = preset_corpus(name, 20, DEFAULT_NOISE, 3).unwrap();
            assert_eq!(a, b);
            for spec in &a {
                spec.validate().unwrap();
            }
        }
        assert!(preset_corpus("nope", 1, 0.0, 0).is_err());
    }

    #[test]
    fn multi_moment_has_six_bumps() {
        for spec in preset_corpus("multi-moment", 10, 0.0, 9).unwrap() {
            assert_eq!(spec.planted.len(), 6);
        }
    }
}
