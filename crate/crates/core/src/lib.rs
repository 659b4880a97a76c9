//! Adaptive keyframe sampling.
//!
//! Given a per-frame relevance series for a prompt, pick `M` keyframes that
//! balance total relevance against coverage of the timeline. Coverage is
//! measured on a recursive halving of `[0, T)` into bins; a selection spread
//! evenly across sibling bins scores 0, lopsided ones go negative.
//!
//! ```
//! use aks::{select, ScoreSeries, SelectionParams, Strategy};
//!
//! let series = ScoreSeries::from_scores(vec![0.1, 0.2, 0.1, 0.2, 0.1, 0.2, 0.9, 0.8], 1.0).unwrap();
//! let params = SelectionParams::new(4, 2, 0.5);
//! let picked = select(&series, Strategy::Ada, &params).unwrap();
//! assert_eq!(picked.indices(), &[1, 3, 5, 6]);
//! ```

pub mod bench;
pub mod cli;
pub mod coverage;
pub mod error;
pub mod io;
pub mod oracle;
pub mod scorer;
pub mod series;
pub mod strategies;

pub use coverage::{bin_counts, coverage, ripley_k, BinTree};
pub use error::{AksError, Result};
pub use io::Interval;
pub use oracle::{brute_force, lexicographic, OracleConfig};
pub use scorer::{generate_synthetic, score_frames, ScorerSpec, SyntheticSpec};
pub use series::{
    decimate, resample_candidates, resample_with_stride, FrameManifest, KeyframeSelection, ManifestFrame,
    ScoreSeries, SelectionParams, Strategy,
};
pub use strategies::{objective, select, select_ada, select_bin, select_top, select_uni};
