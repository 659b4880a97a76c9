//! Synthetic benchmark harness.
//!
//! A run sweeps every (video, strategy, M, L, s_thr, fps) cell: the video's
//! series is decimated to `fps`, a selection is made, and the cell records
//! keyframe recall against the planted ground truth, coverage and the
//! objective value. Results go to `results.csv` (one row per cell, columns
//! `video,strategy,M,L,s_thr,fps,recall,coverage,objective`) and
//! `summary.txt` (per-corpus means as an aligned table).
//!
//! Configuration is TOML:
//!
//! ```toml
//! seed = 7
//! output_dir = "bench-out"
//! lambda = 1.0
//! strategies = ["top", "bin", "ada"]
//!
//! [grid]
//! m = [4]
//! max_level = [1, 2, 3]
//! s_thr = [0.0, 0.5, 1.0]
//! fps = [1.0]
//!
//! [[corpus]]
//! kind = "preset"
//! name = "multi-moment"
//! videos = 100
//!
//! [[corpus]]
//! kind = "files"
//! scores = "clip.jsonl"
//! truth = "clip.truth.jsonl"
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coverage::coverage;
use crate::error::{AksError, Result};
use crate::io::{load_scores_auto, load_truth, Interval};
use crate::scorer::{generate_synthetic, SyntheticSpec};
use crate::series::{resample_with_stride, ScoreSeries, SelectionParams, Strategy};
use crate::strategies::{objective, select};

pub mod plot;
pub mod presets;

pub use plot::{emit_plot, render_plot};
pub use presets::{preset_corpus, PRESETS};

/// Fraction of ground-truth intervals that contain at least one selected
/// index.
pub fn keyframe_recall(indices: &[usize], truth: &[Interval]) -> Result<f64> {
    if truth.is_empty() {
        return Err(AksError::EmptyTruth);
    }
    if let Some(bad) = truth.iter().find(|iv| iv.is_empty()) {
        return Err(AksError::InvalidParam(format!("empty truth interval [{}, {})", bad.start, bad.end)));
    }
    let hit = truth
        .iter()
        .filter(|iv| indices.iter().any(|&i| iv.contains(i)))
        .count();
    Ok(hit as f64 / truth.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CorpusSource {
    Preset {
        name: String,
        videos: usize,
        #[serde(default = "default_noise")]
        noise_sigma: f64,
    },
    Synthetic(SyntheticSpec),
    Files {
        scores: PathBuf,
        truth: PathBuf,
    },
}

fn default_noise() -> f64 {
    presets::DEFAULT_NOISE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub m: Vec<usize>,
    pub max_level: Vec<usize>,
    pub s_thr: Vec<f64>,
    #[serde(default = "default_fps")]
    pub fps: Vec<f64>,
}

fn default_fps() -> Vec<f64> {
    vec![1.0]
}

fn default_lambda() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub corpus: Vec<CorpusSource>,
    pub strategies: Vec<Strategy>,
    pub grid: Grid,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Coverage weight of the objective column.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| AksError::Config(e.to_string()))
    }

    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| AksError::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            let rebase = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            };
            rebase(&mut cfg.output_dir);
            for c in &mut cfg.corpus {
                if let CorpusSource::Files { scores, truth } = c {
                    rebase(scores);
                    rebase(truth);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |what: &str| Err(AksError::Config(format!("{what} must not be empty")));
        if self.corpus.is_empty() {
            return empty("corpus");
        }
        if self.strategies.is_empty() {
            return empty("strategies");
        }
        if self.grid.m.is_empty() {
            return empty("grid.m");
        }
        if self.grid.max_level.is_empty() {
            return empty("grid.max_level");
        }
        if self.grid.s_thr.is_empty() {
            return empty("grid.s_thr");
        }
        if self.grid.fps.is_empty() {
            return empty("grid.fps");
        }
        if self.strategies.contains(&Strategy::Oracle) {
            return Err(AksError::Config("the oracle is not a benchmark strategy".into()));
        }
        if self.grid.m.contains(&0) {
            return Err(AksError::Config("grid.m values must be >= 1".into()));
        }
        if self.grid.max_level.contains(&0) {
            return Err(AksError::Config("grid.max_level values must be >= 1".into()));
        }
        if self.grid.s_thr.iter().any(|&s| !s.is_finite() || s < 0.0) {
            return Err(AksError::Config("grid.s_thr values must be >= 0".into()));
        }
        if self.grid.fps.iter().any(|&f| !f.is_finite() || f <= 0.0) {
            return Err(AksError::Config("grid.fps values must be > 0".into()));
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(AksError::Config("lambda must be >= 0".into()));
        }
        Ok(())
    }
}

/// One benchmark video with its ground truth.
#[derive(Debug, Clone)]
pub struct Video {
    pub name: String,
    pub corpus: String,
    pub series: ScoreSeries,
    pub truth: Vec<Interval>,
}

/// Derives an independent stream seed per corpus entry.
fn corpus_seed(seed: u64, entry: usize) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ (entry as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn expand_corpus(config: &BenchConfig) -> Result<Vec<Video>> {
    let mut videos = Vec::new();
    for (k, source) in config.corpus.iter().enumerate() {
        match source {
            CorpusSource::Preset {
                name,
                videos: count,
                noise_sigma,
            } => {
                for (i, spec) in preset_corpus(name, *count, *noise_sigma, corpus_seed(config.seed, k))?
                    .iter()
                    .enumerate()
                {
                    let (series, truth) = generate_synthetic(spec)?;
                    videos.push(Video {
                        name: format!("{name}-{i:03}"),
                        corpus: name.clone(),
                        series,
                        truth,
                    });
                }
            }
            CorpusSource::Synthetic(spec) => {
                let (series, truth) = generate_synthetic(spec)?;
                videos.push(Video {
                    name: format!("synthetic-{k}"),
                    corpus: "synthetic".into(),
                    series,
                    truth,
                });
            }
            CorpusSource::Files { scores, truth } => {
                let name = scores
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| format!("file-{k}"));
                videos.push(Video {
                    name,
                    corpus: "files".into(),
                    series: load_scores_auto(scores)?,
                    truth: load_truth(truth)?,
                });
            }
        }
    }
    Ok(videos)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub video: String,
    pub corpus: String,
    pub strategy: Strategy,
    pub m: usize,
    pub max_level: usize,
    pub s_thr: f64,
    pub fps: f64,
    pub recall: f64,
    pub coverage: i64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub rows: Vec<CellResult>,
}

pub const RESULTS_HEADER: &str = "video,strategy,M,L,s_thr,fps,recall,coverage,objective";

impl Report {
    /// Mean recall over rows accepted by `filter`; `None` when no row matches.
    pub fn mean_recall(&self, filter: impl Fn(&CellResult) -> bool) -> Option<f64> {
        let picked: Vec<f64> = self.rows.iter().filter(|r| filter(r)).map(|r| r.recall).collect();
        (!picked.is_empty()).then(|| picked.iter().sum::<f64>() / picked.len() as f64)
    }

    pub fn results_csv(&self) -> String {
        let mut out = String::from(RESULTS_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{:.6},{},{:.6}",
                r.video, r.strategy, r.m, r.max_level, r.s_thr, r.fps, r.recall, r.coverage, r.objective
            )
            .unwrap();
        }
        out
    }

    /// Per-corpus means, one line per (corpus, strategy, M, L, s_thr, fps).
    pub fn summary(&self) -> String {
        type Key = (String, Strategy, usize, usize, String, String);
        let mut groups: BTreeMap<usize, (Key, Vec<&CellResult>)> = BTreeMap::new();
        let mut order: Vec<Key> = Vec::new();
        for r in &self.rows {
            let key: Key = (r.corpus.clone(), r.strategy, r.m, r.max_level, r.s_thr.to_string(), r.fps.to_string());
            let slot = match order.iter().position(|k| *k == key) {
                Some(p) => p,
                None => {
                    order.push(key.clone());
                    order.len() - 1
                }
            };
            groups.entry(slot).or_insert_with(|| (key, Vec::new())).1.push(r);
        }

        let header = ["corpus", "strategy", "M", "L", "s_thr", "fps", "videos", "recall", "coverage", "objective"];
        let mut table: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        for (key, rows) in groups.values() {
            let n = rows.len() as f64;
            let mean = |f: &dyn Fn(&CellResult) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
            table.push(vec![
                key.0.clone(),
                key.1.to_string(),
                key.2.to_string(),
                key.3.to_string(),
                key.4.clone(),
                key.5.clone(),
                rows.len().to_string(),
                format!("{:.4}", mean(&|r| r.recall)),
                format!("{:.3}", mean(&|r| r.coverage as f64)),
                format!("{:.4}", mean(&|r| r.objective)),
            ]);
        }
        let widths: Vec<usize> = (0..header.len())
            .map(|c| table.iter().map(|row| row[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &table {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (cell, w))| if c < 2 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| AksError::io(dir, e))?;
        let results = dir.join("results.csv");
        fs::write(&results, self.results_csv()).map_err(|e| AksError::io(&results, e))?;
        let summary = dir.join("summary.txt");
        fs::write(&summary, self.summary()).map_err(|e| AksError::io(&summary, e))
    }
}

fn run_cell(video: &Video, strategy: Strategy, params: SelectionParams, fps: f64) -> Result<CellResult> {
    let (series, stride) = resample_with_stride(&video.series, fps)?;
    let selection = select(&series, strategy, &params)?;
    let original: Vec<usize> = selection.indices().iter().map(|&i| i * stride).collect();
    let recall = keyframe_recall(&original, &video.truth)?;
    let cov = coverage(selection.indices(), series.len(), params.max_level)?;
    let obj = objective(&series, selection.indices(), params.lambda, params.max_level)?;
    Ok(CellResult {
        video: video.name.clone(),
        corpus: video.corpus.clone(),
        strategy,
        m: params.m,
        max_level: params.max_level,
        s_thr: params.s_thr,
        fps,
        recall,
        coverage: cov,
        objective: obj,
    })
}

/// Evaluates every grid cell for `videos`. Row order is fixed (video, then
/// strategy, M, L, s_thr, fps in config order) regardless of parallelism.
pub fn evaluate(config: &BenchConfig, videos: &[Video]) -> Result<Report> {
    config.validate()?;
    let g = &config.grid;
    let per_video: Vec<Result<Vec<CellResult>>> = videos
        .par_iter()
        .map(|video| {
            let mut rows = Vec::new();
            for &strategy in &config.strategies {
                for &m in &g.m {
                    for &max_level in &g.max_level {
                        for &s_thr in &g.s_thr {
                            for &fps in &g.fps {
                                let params = SelectionParams {
                                    m,
                                    max_level,
                                    s_thr,
                                    lambda: config.lambda,
                                };
                                let row = run_cell(video, strategy, params, fps).map_err(|e| AksError::Cell {
                                    video: video.name.clone(),
                                    strategy: strategy.to_string(),
                                    m,
                                    max_level,
                                    s_thr,
                                    fps,
                                    source: Box::new(e),
                                })?;
                                rows.push(row);
                            }
                        }
                    }
                }
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::new();
    for part in per_video {
        rows.extend(part?);
    }
    Ok(Report { rows })
}

/// Validates the config, runs the whole grid and writes both report files to
/// `config.output_dir`.
pub fn run_grid(config: &BenchConfig) -> Result<Report> {
    config.validate()?;
    let videos = expand_corpus(config)?;
    let report = evaluate(config, &videos)?;
    report.write(&config.output_dir)?;
    Ok(report)
}
