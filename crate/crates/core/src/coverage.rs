//! Coverage of a keyframe set over the time axis.
//!
//! The axis `[0, T)` is halved recursively; at every level each pair of
//! sibling bins contributes `|m_left - m_right|` to a penalty. Coverage is the
//! negated penalty, so `0` means perfectly balanced and the selection
//! objective stays a pure maximisation.

use std::ops::Range;

use crate::error::{AksError, Result};
use crate::series::check_indices;

/// Recursive halving of `[0, horizon)` down to `max_level`.
///
/// A range `[lo, hi)` splits at `lo + (hi - lo) / 2`, so the left child gets
/// the smaller half of an odd range. Deep levels of a short horizon may hold
/// empty ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinTree {
    horizon: usize,
    levels: Vec<Vec<Range<usize>>>,
}

/// Center split shared by the bin tree and adaptive segmenting.
pub fn split_center(range: &Range<usize>) -> (Range<usize>, Range<usize>) {
    let mid = range.start + (range.end - range.start) / 2;
    (range.start..mid, mid..range.end)
}

impl BinTree {
    pub fn new(horizon: usize, max_level: usize) -> Self {
        let mut levels: Vec<Vec<Range<usize>>> = Vec::with_capacity(max_level + 1);
        levels.push(std::iter::once(0..horizon).collect());
        for _ in 0..max_level {
            let next = levels
                .last()
                .unwrap()
                .iter()
                .flat_map(|r| {
                    let (a, b) = split_center(r);
                    [a, b]
                })
                .collect();
            levels.push(next);
        }
        Self { horizon, levels }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    /// Bins of `level`, left to right. Panics if `level > max_level`.
    pub fn level(&self, level: usize) -> &[Range<usize>] {
        &self.levels[level]
    }

    /// Non-empty bins of `level`.
    pub fn non_empty(&self, level: usize) -> impl Iterator<Item = &Range<usize>> {
        self.levels[level].iter().filter(|r| !r.is_empty())
    }
}

fn sorted(indices: &[usize]) -> Vec<usize> {
    let mut v = indices.to_vec();
    v.sort_unstable();
    v
}

fn count_in(sorted: &[usize], range: &Range<usize>) -> usize {
    sorted.partition_point(|&i| i < range.end) - sorted.partition_point(|&i| i < range.start)
}

/// Number of selected indices inside each bin of `level`, left to right.
pub fn bin_counts(indices: &[usize], tree: &BinTree, level: usize) -> Result<Vec<usize>> {
    if level == 0 || level > tree.max_level() {
        return Err(AksError::LevelOutOfRange {
            level,
            max_level: tree.max_level(),
        });
    }
    check_indices(indices, tree.horizon())?;
    let s = sorted(indices);
    Ok(tree.level(level).iter().map(|r| count_in(&s, r)).collect())
}

/// Coverage value: minus the sum over levels `1..=max_level` of the
/// sibling-pair imbalances. Always `<= 0`.
pub fn coverage(indices: &[usize], horizon: usize, max_level: usize) -> Result<i64> {
    if max_level == 0 {
        return Err(AksError::InvalidParam("coverage needs L >= 1".into()));
    }
    check_indices(indices, horizon)?;
    Ok(coverage_in(&BinTree::new(horizon, max_level), indices))
}

/// [`coverage`] against a prebuilt tree, for callers evaluating many sets on
/// the same horizon. Indices must lie inside the tree's horizon.
pub fn coverage_in(tree: &BinTree, indices: &[usize]) -> i64 {
    let s = sorted(indices);
    let mut penalty = 0i64;
    for level in 1..=tree.max_level() {
        for pair in tree.level(level).chunks_exact(2) {
            let left = count_in(&s, &pair[0]) as i64;
            let right = count_in(&s, &pair[1]) as i64;
            penalty += (left - right).abs();
        }
    }
    -penalty
}

/// Pair-count form of Ripley's K: the number of unordered pairs of selected
/// positions closer than `r`. Diagnostic only.
pub fn ripley_k(indices: &[usize], r: f64) -> Result<u64> {
    if r.is_nan() || r <= 0.0 {
        return Err(AksError::InvalidParam(format!("radius must be positive, got {r}")));
    }
    let s = sorted(indices);
    let mut count = 0u64;
    let mut lo = 0;
    for hi in 0..s.len() {
        while ((s[hi] - s[lo]) as f64) >= r {
            lo += 1;
        }
        count += (hi - lo) as u64;
    }
    Ok(count)
}
