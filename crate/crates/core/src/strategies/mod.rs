//! Keyframe sampling strategies and the relevance + coverage objective.
//!
//! * `UNI` spreads the budget evenly and ignores scores.
//! * `TOP` keeps the highest-scoring frames (coverage weight 0).
//! * `BIN` keeps the champion of every level-`L` bin (coverage enforced).
//! * `ADA` splits the axis only where the top frames do not stand out, see
//!   [`ada`].
//!
//! Every strategy returns exactly `min(M, T)` strictly increasing indices,
//! and every tie is broken toward the smaller frame index.

use std::cmp::Ordering;
use std::ops::Range;

use crate::coverage::{coverage, BinTree};
use crate::error::{AksError, Result};
use crate::series::{check_indices, KeyframeSelection, ScoreSeries, SelectionParams, Strategy};

pub mod ada;

pub use ada::{allocate_quotas, apportion, segment_tree, select_ada, Segment};

/// Higher score first, then smaller index.
#[inline]
pub(crate) fn rank_order(scores: &[f64], a: usize, b: usize) -> Ordering {
    scores[b]
        .partial_cmp(&scores[a])
        .unwrap_or(Ordering::Equal)
        .then(a.cmp(&b))
}

/// The `k` best-ranked absolute indices inside `range`, in rank order.
pub(crate) fn top_k_in(scores: &[f64], range: Range<usize>, k: usize) -> Vec<usize> {
    let k = k.min(range.len());
    if k == 0 {
        return Vec::new();
    }
    let mut idx: Vec<usize> = range.collect();
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, |&a, &b| rank_order(scores, a, b));
        idx.truncate(k);
    }
    idx.sort_unstable_by(|&a, &b| rank_order(scores, a, b));
    idx
}

/// Clamps the budget to the horizon, warning when frames run short.
pub(crate) fn effective_budget(m: usize, horizon: usize) -> usize {
    if m > horizon {
        log::warn!("budget M={m} exceeds the {horizon} available frames; selecting all of them");
    }
    m.min(horizon)
}

/// Uniform indices `floor((i + 0.5) T / M)`, i < min(M, T).
pub fn uniform_indices(horizon: usize, m: usize) -> Vec<usize> {
    let k = m.min(horizon);
    if k == horizon {
        return (0..horizon).collect();
    }
    let mut out: Vec<usize> = (0..k)
        .map(|i| ((2 * i + 1) as u128 * horizon as u128 / (2 * k) as u128) as usize)
        .collect();
    out.dedup();
    if out.len() < k {
        // Collisions only arise from rounding; pad with the nearest free frames.
        let mut taken = vec![false; horizon];
        for &i in &out {
            taken[i] = true;
        }
        let anchors = out.clone();
        'fill: for d in 1..horizon {
            for &a in &anchors {
                for c in [a.checked_sub(d), a.checked_add(d).filter(|&c| c < horizon)].into_iter().flatten() {
                    if !taken[c] {
                        taken[c] = true;
                        out.push(c);
                        if out.len() == k {
                            break 'fill;
                        }
                    }
                }
            }
        }
        out.sort_unstable();
    }
    out
}

pub fn top_indices(scores: &[f64], m: usize) -> Vec<usize> {
    let mut out = top_k_in(scores, 0..scores.len(), m);
    out.sort_unstable();
    out
}

/// Champion-per-bin sampling over the non-empty bins of level `max_level`.
pub fn bin_indices(scores: &[f64], m: usize, max_level: usize) -> Result<Vec<usize>> {
    if max_level == 0 {
        return Err(AksError::InvalidParam("BIN sampling needs L >= 1".into()));
    }
    let horizon = scores.len();
    let m = m.min(horizon);
    let tree = BinTree::new(horizon, max_level);
    let bins: Vec<Range<usize>> = tree.non_empty(max_level).cloned().collect();
    let b = bins.len();

    let mut out = if b >= m {
        let champions: Vec<usize> = bins.iter().map(|r| top_k_in(scores, r.clone(), 1)[0]).collect();
        let mut order = champions;
        order.sort_unstable_by(|&x, &y| rank_order(scores, x, y));
        order.truncate(m);
        order
    } else {
        let mut quotas: Vec<usize> = (0..b).map(|i| m / b + usize::from(i < m % b)).collect();
        // A short bin cannot host its whole quota; move the excess rightwards
        // to the leftmost bins with room.
        let mut excess = 0;
        for (q, r) in quotas.iter_mut().zip(&bins) {
            if *q > r.len() {
                excess += *q - r.len();
                *q = r.len();
            }
        }
        while excess > 0 {
            for (q, r) in quotas.iter_mut().zip(&bins) {
                if excess > 0 && *q < r.len() {
                    *q += 1;
                    excess -= 1;
                }
            }
        }
        bins.iter()
            .zip(&quotas)
            .flat_map(|(r, &q)| top_k_in(scores, r.clone(), q))
            .collect()
    };
    out.sort_unstable();
    Ok(out)
}

fn finish(
    indices: Vec<usize>,
    strategy: Strategy,
    series: &ScoreSeries,
    params: &SelectionParams,
) -> Result<KeyframeSelection> {
    KeyframeSelection::new(indices, strategy, *params, series.id())
}

pub fn select_uni(series: &ScoreSeries, params: &SelectionParams) -> Result<KeyframeSelection> {
    params.validate()?;
    let m = effective_budget(params.m, series.len());
    finish(uniform_indices(series.len(), m), Strategy::Uni, series, params)
}

pub fn select_top(series: &ScoreSeries, params: &SelectionParams) -> Result<KeyframeSelection> {
    params.validate()?;
    let m = effective_budget(params.m, series.len());
    finish(top_indices(series.scores(), m), Strategy::Top, series, params)
}

pub fn select_bin(series: &ScoreSeries, params: &SelectionParams) -> Result<KeyframeSelection> {
    params.validate()?;
    let m = effective_budget(params.m, series.len());
    finish(bin_indices(series.scores(), m, params.max_level)?, Strategy::Bin, series, params)
}

/// Runs one of the four sampling strategies.
pub fn select(series: &ScoreSeries, strategy: Strategy, params: &SelectionParams) -> Result<KeyframeSelection> {
    match strategy {
        Strategy::Uni => select_uni(series, params),
        Strategy::Top => select_top(series, params),
        Strategy::Bin => select_bin(series, params),
        Strategy::Ada => select_ada(series, params),
        Strategy::Oracle => Err(AksError::InvalidParam(
            "the oracle is not a sampling strategy; use the oracle module".into(),
        )),
    }
}

/// Score sum over `indices` plus `lambda` times their coverage at depth
/// `max_level`.
pub fn objective(series: &ScoreSeries, indices: &[usize], lambda: f64, max_level: usize) -> Result<f64> {
    check_indices(indices, series.len())?;
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(AksError::InvalidParam(format!("lambda must be >= 0, got {lambda}")));
    }
    let cov = coverage(indices, series.len(), max_level)?;
    let scores = series.scores();
    let relevance: f64 = indices.iter().map(|&i| scores[i]).sum();
    Ok(relevance + lambda * cov as f64)
}
