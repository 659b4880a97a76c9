//! Domain types shared by every other module: score series, selection
//! parameters, keyframe selections and frame manifests.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{AksError, Result};

/// One candidate frame of a [`ScoreSeries`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreEntry {
    pub index: usize,
    pub timestamp_s: f64,
    pub score: f64,
}

/// Per-candidate-frame relevance scores for one prompt.
///
/// Stored column-wise; frame indices are implicit and contiguous from 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSeries {
    timestamps: Vec<f64>,
    scores: Vec<f64>,
    native_fps: f64,
    query_id: Option<String>,
}

impl ScoreSeries {
    /// Builds a validated series. When `native_fps` is `None` it is inferred
    /// from the median timestamp spacing.
    pub fn new(
        timestamps: Vec<f64>,
        scores: Vec<f64>,
        native_fps: Option<f64>,
        query_id: Option<String>,
    ) -> Result<Self> {
        if scores.is_empty() {
            return Err(AksError::InvalidSeries("series must have at least one entry".into()));
        }
        if timestamps.len() != scores.len() {
            return Err(AksError::InvalidSeries(format!(
                "{} timestamps for {} scores",
                timestamps.len(),
                scores.len()
            )));
        }
        for (i, (&t, &s)) in timestamps.iter().zip(&scores).enumerate() {
            if !t.is_finite() {
                return Err(AksError::InvalidSeries(format!("entry {i}: non-finite timestamp")));
            }
            if !s.is_finite() {
                return Err(AksError::InvalidSeries(format!("entry {i}: non-finite score")));
            }
            if i > 0 && t <= timestamps[i - 1] {
                return Err(AksError::InvalidSeries(format!(
                    "entry {i}: timestamps must be strictly increasing"
                )));
            }
        }
        let native_fps = match native_fps {
            Some(fps) if fps.is_finite() && fps > 0.0 => fps,
            Some(fps) => {
                return Err(AksError::InvalidSeries(format!("native_fps {fps} must be positive")))
            }
            None => infer_fps(&timestamps),
        };
        Ok(Self {
            timestamps,
            scores,
            native_fps,
            query_id,
        })
    }

    /// A series sampled at `fps` starting at t = 0.
    pub fn from_scores(scores: Vec<f64>, fps: f64) -> Result<Self> {
        let timestamps = (0..scores.len()).map(|i| i as f64 / fps).collect();
        Self::new(timestamps, scores, Some(fps), None)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    /// Always false for a constructed series; provided for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn native_fps(&self) -> f64 {
        self.native_fps
    }

    pub fn query_id(&self) -> Option<&str> {
        self.query_id.as_deref()
    }

    /// Identifier recorded as the source of selections made on this series.
    pub fn id(&self) -> &str {
        self.query_id.as_deref().unwrap_or("series")
    }

    pub fn entry(&self, index: usize) -> ScoreEntry {
        ScoreEntry {
            index,
            timestamp_s: self.timestamps[index],
            score: self.scores[index],
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = ScoreEntry> + '_ {
        (0..self.len()).map(|i| self.entry(i))
    }

    /// Same frames with every score mapped through `f`.
    pub fn map_scores(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.timestamps.clone(),
            self.scores.iter().map(|&s| f(s)).collect(),
            Some(self.native_fps),
            self.query_id.clone(),
        )
    }
}

/// Median spacing tolerates an occasional dropped frame.
fn infer_fps(timestamps: &[f64]) -> f64 {
    if timestamps.len() < 2 {
        return 1.0;
    }
    let mut gaps: Vec<f64> = timestamps.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(f64::total_cmp);
    let n = gaps.len();
    let median = if n % 2 == 1 {
        gaps[n / 2]
    } else {
        0.5 * (gaps[n / 2 - 1] + gaps[n / 2])
    };
    1.0 / median
}

/// Decimates a series to roughly `target_fps`, keeping every k-th entry from
/// index 0. Returns the resampled series together with the stride `k`.
pub fn resample_with_stride(series: &ScoreSeries, target_fps: f64) -> Result<(ScoreSeries, usize)> {
    if !target_fps.is_finite() || target_fps <= 0.0 {
        return Err(AksError::InvalidParam(format!(
            "target_fps must be positive and finite, got {target_fps}"
        )));
    }
    if target_fps >= series.native_fps {
        if target_fps > series.native_fps {
            log::warn!(
                "target fps {target_fps} exceeds native fps {}; keeping all candidates",
                series.native_fps
            );
        }
        return Ok((series.clone(), 1));
    }
    let stride = ((series.native_fps / target_fps).round() as usize).max(1);
    Ok((decimate(series, stride)?, stride))
}

/// Keeps every `stride`-th entry starting at index 0.
pub fn decimate(series: &ScoreSeries, stride: usize) -> Result<ScoreSeries> {
    if stride == 0 {
        return Err(AksError::InvalidParam("stride must be at least 1".into()));
    }
    if stride == 1 {
        return Ok(series.clone());
    }
    let keep = |v: &[f64]| v.iter().step_by(stride).copied().collect::<Vec<_>>();
    Ok(ScoreSeries {
        timestamps: keep(&series.timestamps),
        scores: keep(&series.scores),
        native_fps: series.native_fps / stride as f64,
        query_id: series.query_id.clone(),
    })
}

pub fn resample_candidates(series: &ScoreSeries, target_fps: f64) -> Result<ScoreSeries> {
    resample_with_stride(series, target_fps).map(|(s, _)| s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Uni,
    Top,
    Bin,
    Ada,
    Oracle,
}

impl Strategy {
    pub const SAMPLERS: [Strategy; 4] = [Strategy::Uni, Strategy::Top, Strategy::Bin, Strategy::Ada];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Uni => "uni",
            Strategy::Top => "top",
            Strategy::Bin => "bin",
            Strategy::Ada => "ada",
            Strategy::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = AksError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uni" => Ok(Strategy::Uni),
            "top" => Ok(Strategy::Top),
            "bin" => Ok(Strategy::Bin),
            "ada" => Ok(Strategy::Ada),
            "oracle" => Ok(Strategy::Oracle),
            other => Err(AksError::InvalidParam(format!("unknown strategy '{other}'"))),
        }
    }
}

/// Knobs of the selection objective and of adaptive sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionParams {
    /// Keyframe budget.
    pub m: usize,
    /// Maximum recursion level of the bin hierarchy.
    pub max_level: usize,
    /// Threshold on `s_top - s_all` that stops adaptive splitting.
    pub s_thr: f64,
    /// Coverage weight; only used when evaluating the objective.
    pub lambda: f64,
}

impl Default for SelectionParams {
    fn default() -> Self {
        Self {
            m: 64,
            max_level: 5,
            s_thr: 0.8,
            lambda: 1.0,
        }
    }
}

impl SelectionParams {
    pub fn new(m: usize, max_level: usize, s_thr: f64) -> Self {
        Self {
            m,
            max_level,
            s_thr,
            ..Self::default()
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    /// Checks hard constraints. `L > ceil(log2 M)` only logs a warning.
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(AksError::InvalidParam("M must be at least 1".into()));
        }
        if !self.s_thr.is_finite() || self.s_thr < 0.0 {
            return Err(AksError::InvalidParam(format!("s_thr must be >= 0, got {}", self.s_thr)));
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(AksError::InvalidParam(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if self.max_level > ceil_log2(self.m) {
            log::warn!(
                "max level {} exceeds ceil(log2 M) = {}",
                self.max_level,
                ceil_log2(self.m)
            );
        }
        Ok(())
    }
}

pub(crate) fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// The selected index set plus how it was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyframeSelection {
    indices: Vec<usize>,
    pub strategy: Strategy,
    pub params: SelectionParams,
    pub source_series_id: String,
}

impl KeyframeSelection {
    /// `indices` must be strictly increasing.
    pub fn new(
        indices: Vec<usize>,
        strategy: Strategy,
        params: SelectionParams,
        source_series_id: impl Into<String>,
    ) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(AksError::InvalidParam(
                "selection indices must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            indices,
            strategy,
            params,
            source_series_id: source_series_id.into(),
        })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Errors if any index falls outside `[0, horizon)`.
    pub fn check_horizon(&self, horizon: usize) -> Result<()> {
        check_indices(&self.indices, horizon)
    }
}

pub(crate) fn check_indices(indices: &[usize], horizon: usize) -> Result<()> {
    match indices.iter().find(|&&i| i >= horizon) {
        Some(&index) => Err(AksError::IndexOutOfRange { index, horizon }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFrame {
    pub index: usize,
    pub timestamp_s: f64,
    pub asset: String,
}

/// Candidate frames of one video and where to find their pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameManifest {
    pub video_id: String,
    pub frames: Vec<ManifestFrame>,
    pub width: Option<u32>,
    pub height: Option<u32>,
    pub channels: Option<u32>,
}

impl FrameManifest {
    pub fn new(video_id: impl Into<String>, frames: Vec<ManifestFrame>) -> Result<Self> {
        for (i, frame) in frames.iter().enumerate() {
            if frame.index != i {
                return Err(AksError::InvalidSeries(format!(
                    "manifest frame {i} has index {}",
                    frame.index
                )));
            }
            if !frame.timestamp_s.is_finite() || (i > 0 && frame.timestamp_s <= frames[i - 1].timestamp_s) {
                return Err(AksError::InvalidSeries(format!(
                    "manifest frame {i}: timestamps must be finite and strictly increasing"
                )));
            }
        }
        Ok(Self {
            video_id: video_id.into(),
            frames,
            width: None,
            height: None,
            channels: None,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn timestamps(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.timestamp_s).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(n: usize, fps: f64) -> ScoreSeries {
        ScoreSeries::from_scores((0..n).map(|i| i as f64 * 0.1).collect(), fps).unwrap()
    }

    fn original_indices(resampled: &ScoreSeries, original: &ScoreSeries) -> Vec<usize> {
        resampled
            .timestamps()
            .iter()
            .map(|t| original.timestamps().iter().position(|u| u == t).unwrap())
            .collect()
    }

    #[test]
    fn stride_two_keeps_even_indices() {
        let s = series(10, 1.0);
        let r = resample_candidates(&s, 0.5).unwrap();
        assert_eq!(original_indices(&r, &s), vec![0, 2, 4, 6, 8]);
        assert_eq!(r.native_fps(), 0.5);
    }

    #[test]
    fn same_rate_is_identity() {
        let s = series(7, 2.0);
        assert_eq!(resample_candidates(&s, 2.0).unwrap(), s);
        assert_eq!(resample_candidates(&s, 30.0).unwrap(), s);
    }

    #[test]
    fn stride_ten_keeps_only_first() {
        let s = series(10, 1.0);
        let (r, k) = resample_with_stride(&s, 0.1).unwrap();
        assert_eq!(k, 10);
        assert_eq!(original_indices(&r, &s), vec![0]);
    }

    #[test]
    fn rejects_bad_target() {
        let s = series(3, 1.0);
        for bad in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(resample_candidates(&s, bad).is_err());
        }
    }

    #[test]
    fn fps_inferred_from_median_spacing() {
        // one dropped frame at t=3
        let s = ScoreSeries::new(vec![0.0, 0.5, 1.0, 1.5, 2.5, 3.0], vec![0.0; 6], None, None).unwrap();
        assert_eq!(s.native_fps(), 2.0);
    }

    #[test]
    fn ceil_log2_small_values() {
        let got: Vec<usize> = [1, 2, 3, 4, 5, 8, 9, 64, 65].iter().map(|&n| ceil_log2(n)).collect();
        assert_eq!(got, vec![0, 1, 2, 2, 3, 3, 4, 6, 7]);
    }

    #[test]
    fn selection_requires_increasing_indices() {
        let p = SelectionParams::default();
        assert!(KeyframeSelection::new(vec![1, 1], Strategy::Top, p, "x").is_err());
        assert!(KeyframeSelection::new(vec![2, 1], Strategy::Top, p, "x").is_err());
        assert!(KeyframeSelection::new(vec![], Strategy::Top, p, "x").is_ok());
    }

    proptest::proptest! {
        #[test]
        fn resample_is_idempotent_and_sized(n in 1usize..200, native in 0.5f64..30.0, target in 0.05f64..40.0) {
            let s = series(n, native);
            let (once, k) = resample_with_stride(&s, target).unwrap();
            let twice = resample_candidates(&once, target).unwrap();
            proptest::prop_assert_eq!(&once, &twice);
            proptest::prop_assert_eq!(once.len(), n.div_ceil(k));
        }
    }
}
