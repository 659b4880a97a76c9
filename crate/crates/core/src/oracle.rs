//! Exhaustive optimisers for the selection objective, used to verify the
//! sampling strategies on small instances.
//!
//! Subsets are enumerated in lexicographic order and only a strictly better
//! candidate replaces the incumbent, so ties always resolve to the
//! lexicographically smallest index sequence.

use itertools::Itertools;

use crate::coverage::{coverage_in, BinTree};
use crate::error::{AksError, Result};
use crate::series::{KeyframeSelection, ScoreSeries, SelectionParams, Strategy};

/// Default ceiling on the number of subsets an oracle call may enumerate.
pub const DEFAULT_ENUMERATION_CAP: u128 = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleConfig {
    pub cap: u128,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

fn check_size(series: &ScoreSeries, m: usize, max_level: usize, config: &OracleConfig) -> Result<usize> {
    if m == 0 {
        return Err(AksError::InvalidParam("M must be at least 1".into()));
    }
    if max_level == 0 {
        return Err(AksError::InvalidParam("the oracle needs L >= 1".into()));
    }
    let m = m.min(series.len());
    let subsets = binomial(series.len(), m);
    if subsets > config.cap {
        return Err(AksError::CapExceeded {
            subsets,
            cap: config.cap,
        });
    }
    Ok(m)
}

fn relevance(scores: &[f64], subset: &[usize]) -> f64 {
    subset.iter().map(|&i| scores[i]).sum()
}

/// Maximises `sum of scores + lambda * coverage` over every subset of size
/// `min(M, T)`. Returns the winner and its objective value.
pub fn brute_force(
    series: &ScoreSeries,
    m: usize,
    lambda: f64,
    max_level: usize,
    config: &OracleConfig,
) -> Result<(KeyframeSelection, f64)> {
    let m = check_size(series, m, max_level, config)?;
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(AksError::InvalidParam(format!("lambda must be >= 0, got {lambda}")));
    }
    let tree = BinTree::new(series.len(), max_level);
    let scores = series.scores();
    let mut best: Option<(Vec<usize>, f64)> = None;
    for subset in (0..series.len()).combinations(m) {
        let value = relevance(scores, &subset) + lambda * coverage_in(&tree, &subset) as f64;
        if best.as_ref().is_none_or(|(_, v)| value > *v) {
            best = Some((subset, value));
        }
    }
    let (indices, value) = best.expect("at least one subset");
    let params = SelectionParams {
        m,
        max_level,
        s_thr: 0.0,
        lambda,
    };
    Ok((KeyframeSelection::new(indices, Strategy::Oracle, params, series.id())?, value))
}

/// The infinite-coverage-weight limit: maximise coverage first, then the
/// score sum.
pub fn lexicographic(series: &ScoreSeries, m: usize, max_level: usize, config: &OracleConfig) -> Result<KeyframeSelection> {
    let m = check_size(series, m, max_level, config)?;
    let tree = BinTree::new(series.len(), max_level);
    let scores = series.scores();
    let mut best: Option<(Vec<usize>, i64, f64)> = None;
    for subset in (0..series.len()).combinations(m) {
        let cov = coverage_in(&tree, &subset);
        let rel = relevance(scores, &subset);
        let better = match &best {
            None => true,
            Some((_, bc, br)) => cov > *bc || (cov == *bc && rel > *br),
        };
        if better {
            best = Some((subset, cov, rel));
        }
    }
    let (indices, _, _) = best.expect("at least one subset");
    let params = SelectionParams {
        m,
        max_level,
        s_thr: 0.0,
        // stands in for an unbounded weight; must stay finite to serialize
        lambda: f64::MAX,
    };
    KeyframeSelection::new(indices, Strategy::Oracle, params, series.id())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::coverage;

    fn series(scores: &[f64]) -> ScoreSeries {
        ScoreSeries::from_scores(scores.to_vec(), 1.0).unwrap()
    }

    const S4: [f64; 4] = [0.9, 0.8, 0.1, 0.2];

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(8, 2), 28);
        assert_eq!(binomial(12, 4), 495);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(60, 30), 118264581564861424);
        assert_eq!(binomial(200, 100), u128::MAX);
    }

    #[test]
    fn brute_force_examples() {
        let cfg = OracleConfig::default();
        let (sel, v) = brute_force(&series(&S4), 2, 1.0, 1, &cfg).unwrap();
        assert_eq!(sel.indices(), &[0, 3]);
        assert!((v - 1.1).abs() < 1e-12);

        let (sel, v) = brute_force(&series(&S4), 2, 0.0, 1, &cfg).unwrap();
        assert_eq!(sel.indices(), &[0, 1]);
        assert!((v - 1.7).abs() < 1e-12);

        let (sel, v) = brute_force(&series(&S4), 2, 100.0, 1, &cfg).unwrap();
        assert_eq!(sel.indices(), &[0, 3]);
        assert!((v - 1.1).abs() < 1e-12);
    }

    #[test]
    fn lexicographic_examples() {
        let cfg = OracleConfig::default();
        let sel = lexicographic(&series(&[0., 3., 1., 2., 5., 0., 0., 4.]), 2, 1, &cfg).unwrap();
        assert_eq!(sel.indices(), &[1, 4]);
        let sel = lexicographic(&series(&[1.0; 4]), 2, 1, &cfg).unwrap();
        assert_eq!(sel.indices(), &[0, 2]);
        let sel = lexicographic(&series(&[9., 8., 0., 0., 0., 0., 0., 0.]), 2, 1, &cfg).unwrap();
        assert_eq!(sel.indices(), &[0, 4]);
    }

    #[test]
    fn cap_is_enforced() {
        let s = series(&[0.0; 30]);
        let err = brute_force(&s, 15, 1.0, 2, &OracleConfig { cap: 1000 }).unwrap_err();
        assert!(matches!(err, AksError::CapExceeded { cap: 1000, .. }));
        assert!(lexicographic(&s, 15, 2, &OracleConfig::default()).is_err());
    }

    #[test]
    fn lexicographic_reaches_best_coverage() {
        let s = series(&[0.3, 0.1, 0.4, 0.1, 0.5, 0.9, 0.2, 0.6, 0.5]);
        for m in 1..=5 {
            for l in 1..=3 {
                let sel = lexicographic(&s, m, l, &OracleConfig::default()).unwrap();
                let got = coverage(sel.indices(), 9, l).unwrap();
                let best = (0..9)
                    .combinations(m)
                    .map(|c| coverage(&c, 9, l).unwrap())
                    .max()
                    .unwrap();
                assert_eq!(got, best);
            }
        }
    }
}
