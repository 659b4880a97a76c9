//! Adaptive sampling (`ADA`).
//!
//! The axis is judged top-down. For a segment with keyframe quota `q`, let
//! `s_all` be its mean score and `s_top` the mean of its `min(q, len)` best
//! scores. The segment is kept whole when `q == 1`, when
//! `s_top - s_all >= s_thr`, when it sits at depth `L`, or when it is a single
//! frame. Otherwise it is halved at the center and each half is judged with
//! quota `max(1, q / 2)`.
//!
//! The completed segments partition `[0, T)`. The budget is then apportioned
//! to them by length (largest remainder, ties to the left) and each segment
//! contributes its best-scoring frames.

use std::ops::Range;

use crate::coverage::split_center;
use crate::error::{AksError, Result};
use crate::series::{KeyframeSelection, ScoreSeries, SelectionParams, Strategy};

use super::{effective_budget, top_k_in};

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub range: Range<usize>,
    pub depth: usize,
    /// Budget used for the top-k statistic of the judge step.
    pub quota_hint: usize,
    pub completed: bool,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }
}

/// `s_top - s_all` for `range`, clamped at zero: the mean of the best `k`
/// values can never fall below the overall mean, and rounding must not make
/// it look as if it did.
pub fn top_gap(scores: &[f64], range: Range<usize>, k: usize) -> f64 {
    let window = &scores[range];
    let n = window.len();
    let k = k.clamp(1, n);
    let s_all = window.iter().sum::<f64>() / n as f64;
    let mut scratch = window.to_vec();
    if k < n {
        scratch.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    }
    let s_top = scratch[..k].iter().sum::<f64>() / k as f64;
    (s_top - s_all).max(0.0)
}

fn judge(scores: &[f64], params: &SelectionParams, seg: Segment, out: &mut Vec<Segment>) {
    let done = seg.quota_hint <= 1
        || seg.len() < 2
        || seg.depth >= params.max_level
        || top_gap(scores, seg.range.clone(), seg.quota_hint) >= params.s_thr;
    if done {
        out.push(Segment { completed: true, ..seg });
        return;
    }
    let (left, right) = split_center(&seg.range);
    let quota_hint = (seg.quota_hint / 2).max(1);
    for range in [left, right] {
        let child = Segment {
            range,
            depth: seg.depth + 1,
            quota_hint,
            completed: false,
        };
        judge(scores, params, child, out);
    }
}

/// Judge-and-split recursion from the root `[0, T)` with quota `M`. Returns
/// the completed segments left to right.
pub fn segment_tree(series: &ScoreSeries, params: &SelectionParams) -> Result<Vec<Segment>> {
    params.validate()?;
    let root = Segment {
        range: 0..series.len(),
        depth: 0,
        quota_hint: params.m,
        completed: false,
    };
    let mut out = Vec::new();
    judge(series.scores(), params, root, &mut out);
    Ok(out)
}

/// Largest-remainder apportionment of `m` frames over segments of the given
/// lengths: floors of `m * len / total`, then one extra frame at a time by
/// descending remainder (ties to the left), never beyond a segment's length.
pub fn apportion(lengths: &[usize], m: usize) -> Result<Vec<usize>> {
    let total: usize = lengths.iter().sum();
    if m > total {
        return Err(AksError::InvalidParam(format!(
            "cannot place {m} frames in segments totalling {total}"
        )));
    }
    if total == 0 {
        return Ok(vec![0; lengths.len()]);
    }
    let (m128, total128) = (m as u128, total as u128);
    let mut quotas: Vec<usize> = Vec::with_capacity(lengths.len());
    let mut remainders: Vec<u128> = Vec::with_capacity(lengths.len());
    for &len in lengths {
        let share = m128 * len as u128;
        quotas.push(((share / total128) as usize).min(len));
        remainders.push(share % total128);
    }
    let mut shortfall = m - quotas.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.sort_by(|&a, &b| remainders[b].cmp(&remainders[a]).then(a.cmp(&b)));
    while shortfall > 0 {
        for &i in &order {
            if shortfall == 0 {
                break;
            }
            if quotas[i] < lengths[i] {
                quotas[i] += 1;
                shortfall -= 1;
            }
        }
    }
    Ok(quotas)
}

pub fn allocate_quotas(segments: &[Segment], m: usize) -> Result<Vec<usize>> {
    let lengths: Vec<usize> = segments.iter().map(Segment::len).collect();
    apportion(&lengths, m)
}

pub fn ada_indices(series: &ScoreSeries, params: &SelectionParams) -> Result<Vec<usize>> {
    let m = effective_budget(params.m, series.len());
    let segments = segment_tree(series, params)?;
    let quotas = allocate_quotas(&segments, m)?;
    let scores = series.scores();
    let mut out: Vec<usize> = segments
        .iter()
        .zip(&quotas)
        .flat_map(|(seg, &q)| top_k_in(scores, seg.range.clone(), q))
        .collect();
    out.sort_unstable();
    Ok(out)
}

pub fn select_ada(series: &ScoreSeries, params: &SelectionParams) -> Result<KeyframeSelection> {
    let indices = ada_indices(series, params)?;
    KeyframeSelection::new(indices, Strategy::Ada, *params, series.id())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategies::{bin_indices, top_indices};
    use proptest::prelude::*;

    fn series(scores: &[f64]) -> ScoreSeries {
        ScoreSeries::from_scores(scores.to_vec(), 1.0).unwrap()
    }

    fn ranges(segs: &[Segment]) -> Vec<Range<usize>> {
        segs.iter().map(|s| s.range.clone()).collect()
    }

    const LATE_PEAK: [f64; 8] = [0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.9, 0.9];

    #[test]
    fn late_peak_splits_to_max_depth() {
        let segs = segment_tree(&series(&LATE_PEAK), &SelectionParams::new(4, 2, 0.5)).unwrap();
        assert_eq!(ranges(&segs), vec![0..2, 2..4, 4..6, 6..8]);
        assert!(segs.iter().all(|s| s.completed && s.depth == 2 && s.quota_hint == 1));
    }

    #[test]
    fn zero_threshold_or_unit_budget_keeps_root() {
        let s = series(&LATE_PEAK);
        for p in [SelectionParams::new(4, 3, 0.0), SelectionParams::new(1, 3, 10.0)] {
            let segs = segment_tree(&s, &p).unwrap();
            assert_eq!(ranges(&segs), vec![0..8]);
        }
    }

    #[test]
    fn quota_examples() {
        assert_eq!(apportion(&[2, 2, 2, 2], 4).unwrap(), vec![1, 1, 1, 1]);
        assert_eq!(apportion(&[3, 5], 4).unwrap(), vec![2, 2]);
        assert_eq!(apportion(&[1, 7], 4).unwrap(), vec![1, 3]);
        assert!(apportion(&[1, 2], 4).is_err());
    }

    #[test]
    fn ada_examples() {
        let p = SelectionParams::new(4, 2, 0.5);
        assert_eq!(ada_indices(&series(&LATE_PEAK), &p).unwrap(), vec![0, 2, 4, 6]);
        let p = SelectionParams::new(1, 4, 0.3);
        assert_eq!(ada_indices(&series(&[0.9, 0.1, 0.1, 0.1]), &p).unwrap(), vec![0]);
    }

    #[test]
    fn single_frame_segments_do_not_split() {
        let s = series(&[0.3, 0.1, 0.2]);
        let segs = segment_tree(&s, &SelectionParams::new(8, 6, 5.0)).unwrap();
        assert!(segs.iter().all(|s| !s.is_empty()));
        assert_eq!(ada_indices(&s, &SelectionParams::new(8, 6, 5.0)).unwrap(), vec![0, 1, 2]);
    }

    proptest! {
        #[test]
        fn segments_partition_axis(scores in prop::collection::vec(0.0f64..1.0, 1..300), m in 1usize..70, l in 0usize..8, thr in 0.0f64..0.6) {
            let segs = segment_tree(&series(&scores), &SelectionParams::new(m, l, thr)).unwrap();
            let mut next = 0;
            for s in &segs {
                prop_assert_eq!(s.range.start, next);
                prop_assert!(!s.is_empty() && s.depth <= l && s.completed);
                next = s.range.end;
            }
            prop_assert_eq!(next, scores.len());
        }

        #[test]
        fn apportion_sums_to_budget(lengths in prop::collection::vec(1usize..50, 1..20), frac in 0.0f64..=1.0) {
            let total: usize = lengths.iter().sum();
            let m = ((total as f64) * frac) as usize;
            let q = apportion(&lengths, m).unwrap();
            prop_assert_eq!(q.iter().sum::<usize>(), m);
            for (qi, li) in q.iter().zip(&lengths) {
                prop_assert!(qi <= li);
                let exact = m as f64 * *li as f64 / total as f64;
                prop_assert!((*qi as f64) >= exact.floor() && (*qi as f64) <= exact.floor() + 1.0);
            }
        }

        #[test]
        fn zero_threshold_matches_top(scores in prop::collection::vec(0.0f64..1.0, 1..200), m in 1usize..70, l in 0usize..7) {
            let p = SelectionParams::new(m, l, 0.0);
            prop_assert_eq!(ada_indices(&series(&scores), &p).unwrap(), top_indices(&scores, m));
        }

        #[test]
        fn high_threshold_matches_bin(log_m in 1usize..4, extra in 0usize..100, seed in any::<u64>()) {
            let m = 1usize << log_m;
            let t = m + extra;
            let scores: Vec<f64> = (0..t).map(|i| ((i as u64).wrapping_mul(seed | 1).wrapping_add(seed >> 7) % 1_000_003) as f64 / 7.0 + i as f64 * 1e-9).collect();
            let range = scores.iter().cloned().fold(f64::MIN, f64::max) - scores.iter().cloned().fold(f64::MAX, f64::min);
            let p = SelectionParams::new(m, log_m, range + 1.0);
            prop_assert_eq!(ada_indices(&series(&scores), &p).unwrap(), bin_indices(&scores, m, log_m).unwrap());
        }
    }
}
