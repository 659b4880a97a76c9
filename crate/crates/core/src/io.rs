//! File formats: score series, selections, frame manifests and
//! ground-truth interval lists.
//!
//! Score files come in two flavours, both UTF-8 with LF line endings:
//!
//! * line-delimited JSON: an optional header object
//!   `{"native_fps":1.0,"query_id":"q"}` followed by one
//!   `{"index":0,"timestamp_s":0.0,"score":0.1}` record per line;
//! * comma-separated: optional `# native_fps=1.0` / `# query_id=q` comment
//!   lines, the header row `index,timestamp_s,score`, then one row per frame.
//!
//! Selection files are line-delimited JSON: a header
//! `{"type":"selection","strategy":"ada","m":64,"max_level":5,"s_thr":0.8,"lambda":1.0,"source":"q","horizon":T,"stride":1}`
//! followed by `{"index":..,"timestamp_s":..,"score":..}` records in ascending
//! index order. `horizon` is the length of the series the indices refer to.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{AksError, Result};
use crate::series::{FrameManifest, KeyframeSelection, ManifestFrame, ScoreSeries, SelectionParams, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreFormat {
    Jsonl,
    Csv,
}

impl ScoreFormat {
    /// `.csv` selects the comma-separated format, anything else JSON lines.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => ScoreFormat::Csv,
            _ => ScoreFormat::Jsonl,
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct ScoreHeader {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    native_fps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    query_id: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FrameRecord {
    index: usize,
    timestamp_s: f64,
    score: f64,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| AksError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| AksError::io(path, e))
}

pub fn load_scores(path: &Path, format: ScoreFormat) -> Result<ScoreSeries> {
    let text = read_text(path)?;
    parse_scores(&text, format)
}

/// Loads a score file, picking the format from its extension.
pub fn load_scores_auto(path: &Path) -> Result<ScoreSeries> {
    load_scores(path, ScoreFormat::from_path(path))
}

pub fn save_scores(series: &ScoreSeries, path: &Path, format: ScoreFormat) -> Result<()> {
    write_text(path, &format_scores(series, format))
}

pub fn parse_scores(text: &str, format: ScoreFormat) -> Result<ScoreSeries> {
    match format {
        ScoreFormat::Jsonl => parse_scores_jsonl(text),
        ScoreFormat::Csv => parse_scores_csv(text),
    }
}

pub fn format_scores(series: &ScoreSeries, format: ScoreFormat) -> String {
    let mut out = String::new();
    match format {
        ScoreFormat::Jsonl => {
            let header = ScoreHeader {
                native_fps: Some(series.native_fps()),
                query_id: series.query_id().map(str::to_owned),
            };
            out.push_str(&serde_json::to_string(&header).expect("header serializes"));
            out.push('\n');
            for e in series.entries() {
                let rec = FrameRecord {
                    index: e.index,
                    timestamp_s: e.timestamp_s,
                    score: e.score,
                };
                out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
                out.push('\n');
            }
        }
        ScoreFormat::Csv => {
            out.push_str(&format!("# native_fps={}\n", series.native_fps()));
            if let Some(q) = series.query_id() {
                out.push_str(&format!("# query_id={q}\n"));
            }
            out.push_str("index,timestamp_s,score\n");
            for e in series.entries() {
                out.push_str(&format!("{},{},{}\n", e.index, e.timestamp_s, e.score));
            }
        }
    }
    out
}

/// Accumulates records, checking contiguity, monotonicity and finiteness.
struct SeriesBuilder {
    timestamps: Vec<f64>,
    scores: Vec<f64>,
}

impl SeriesBuilder {
    fn new() -> Self {
        Self {
            timestamps: Vec::new(),
            scores: Vec::new(),
        }
    }

    fn push(&mut self, line: usize, index: usize, timestamp_s: f64, score: f64) -> Result<()> {
        let expected = self.scores.len();
        if index != expected {
            return Err(AksError::parse(line, format!("expected index {expected}, found {index}")));
        }
        if !timestamp_s.is_finite() {
            return Err(AksError::parse(line, "non-finite timestamp"));
        }
        if let Some(&prev) = self.timestamps.last() {
            if timestamp_s <= prev {
                return Err(AksError::NonMonotonic {
                    line,
                    timestamp: timestamp_s,
                });
            }
        }
        if !score.is_finite() {
            return Err(AksError::NonFinite { line });
        }
        self.timestamps.push(timestamp_s);
        self.scores.push(score);
        Ok(())
    }

    fn finish(self, header: ScoreHeader) -> Result<ScoreSeries> {
        if self.scores.is_empty() {
            return Err(AksError::EmptyScoreFile);
        }
        ScoreSeries::new(self.timestamps, self.scores, header.native_fps, header.query_id)
    }
}

fn parse_scores_jsonl(text: &str) -> Result<ScoreSeries> {
    let mut header = ScoreHeader::default();
    let mut builder = SeriesBuilder::new();
    let mut seen_any = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(raw).map_err(|e| AksError::parse(line, e.to_string()))?;
        let first = !seen_any;
        seen_any = true;
        if first && value.get("index").is_none() {
            header = serde_json::from_value(value).map_err(|e| AksError::parse(line, e.to_string()))?;
            continue;
        }
        if !value.get("score").is_none_or(serde_json::Value::is_number) {
            return Err(AksError::NonFinite { line });
        }
        let rec: FrameRecord =
            serde_json::from_value(value).map_err(|e| AksError::parse(line, e.to_string()))?;
        builder.push(line, rec.index, rec.timestamp_s, rec.score)?;
    }
    builder.finish(header)
}

fn parse_scores_csv(text: &str) -> Result<ScoreSeries> {
    let mut header = ScoreHeader::default();
    for (i, raw) in text.lines().enumerate() {
        let Some(comment) = raw.trim().strip_prefix('#') else {
            break;
        };
        if let Some((key, value)) = comment.split_once('=') {
            let value = value.trim();
            match key.trim() {
                "native_fps" => {
                    header.native_fps = Some(
                        value
                            .parse()
                            .map_err(|_| AksError::parse(i + 1, format!("bad native_fps '{value}'")))?,
                    )
                }
                "query_id" => header.query_id = Some(value.to_owned()),
                _ => {}
            }
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let columns = reader
        .headers()
        .map_err(|e| AksError::parse(1, e.to_string()))?
        .clone();
    if columns.is_empty() {
        return Err(AksError::EmptyScoreFile);
    }
    if columns.iter().collect::<Vec<_>>() != ["index", "timestamp_s", "score"] {
        return Err(AksError::parse(
            1,
            format!("expected header 'index,timestamp_s,score', found '{}'", columns.iter().collect::<Vec<_>>().join(",")),
        ));
    }

    let mut builder = SeriesBuilder::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            AksError::parse(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let field = |k: usize, name: &str| -> Result<&str> {
            row.get(k).ok_or_else(|| AksError::parse(line, format!("missing field '{name}'")))
        };
        let index: usize = field(0, "index")?
            .parse()
            .map_err(|_| AksError::parse(line, "bad index"))?;
        let timestamp_s: f64 = field(1, "timestamp_s")?
            .parse()
            .map_err(|_| AksError::parse(line, "bad timestamp_s"))?;
        let score: f64 = field(2, "score")?
            .parse()
            .map_err(|_| AksError::parse(line, "bad score"))?;
        builder.push(line, index, timestamp_s, score)?;
    }
    builder.finish(header)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SelectionHeader {
    #[serde(rename = "type")]
    kind: String,
    strategy: Strategy,
    m: usize,
    max_level: usize,
    s_thr: f64,
    lambda: f64,
    source: String,
    horizon: usize,
    stride: usize,
}

/// A selection read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionFile {
    pub selection: KeyframeSelection,
    /// Length of the series the indices refer to.
    pub horizon: usize,
    /// Decimation stride that was applied before selecting (1 = none).
    pub stride: usize,
}

/// Renders a selection made on `series`. `stride` documents any decimation
/// applied before selecting; indices always refer to `series`.
pub fn format_selection(series: &ScoreSeries, selection: &KeyframeSelection, stride: usize) -> Result<String> {
    selection.check_horizon(series.len())?;
    let p = selection.params;
    let header = SelectionHeader {
        kind: "selection".into(),
        strategy: selection.strategy,
        m: p.m,
        max_level: p.max_level,
        s_thr: p.s_thr,
        lambda: p.lambda,
        source: selection.source_series_id.clone(),
        horizon: series.len(),
        stride,
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for &i in selection.indices() {
        let e = series.entry(i);
        let rec = FrameRecord {
            index: e.index,
            timestamp_s: e.timestamp_s,
            score: e.score,
        };
        out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
        out.push('\n');
    }
    Ok(out)
}

pub fn save_selection(series: &ScoreSeries, selection: &KeyframeSelection, stride: usize, path: &Path) -> Result<()> {
    let text = format_selection(series, selection, stride)?;
    write_text(path, &text)
}

pub fn parse_selection(text: &str) -> Result<SelectionFile> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines
        .next()
        .ok_or_else(|| AksError::parse(1, "empty selection file"))?;
    let header: SelectionHeader =
        serde_json::from_str(first).map_err(|e| AksError::parse(1, format!("bad selection header: {e}")))?;
    if header.kind != "selection" {
        return Err(AksError::parse(1, format!("expected type 'selection', found '{}'", header.kind)));
    }
    let mut indices = Vec::new();
    for (i, raw) in lines {
        let rec: FrameRecord =
            serde_json::from_str(raw).map_err(|e| AksError::parse(i + 1, e.to_string()))?;
        if rec.index >= header.horizon {
            return Err(AksError::parse(
                i + 1,
                format!("index {} outside horizon {}", rec.index, header.horizon),
            ));
        }
        indices.push(rec.index);
    }
    let params = SelectionParams {
        m: header.m,
        max_level: header.max_level,
        s_thr: header.s_thr,
        lambda: header.lambda,
    };
    let selection = KeyframeSelection::new(indices, header.strategy, params, header.source)?;
    Ok(SelectionFile {
        selection,
        horizon: header.horizon,
        stride: header.stride,
    })
}

pub fn load_selection(path: &Path) -> Result<SelectionFile> {
    parse_selection(&read_text(path)?)
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct ManifestHeader {
    video_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    width: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    height: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    channels: Option<u32>,
}

/// Manifest files are line-delimited JSON: a
/// `{"video_id":"v","width":W,"height":H,"channels":C}` header, then one
/// `{"index":0,"timestamp_s":0.0,"asset":"frames/0.jpg"}` record per frame.
pub fn parse_manifest(text: &str) -> Result<FrameManifest> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, first)) = lines.next() else {
        return Err(AksError::EmptyManifest);
    };
    let header: ManifestHeader =
        serde_json::from_str(first).map_err(|e| AksError::parse(1, format!("bad manifest header: {e}")))?;
    let mut frames = Vec::new();
    for (i, raw) in lines {
        let frame: ManifestFrame =
            serde_json::from_str(raw).map_err(|e| AksError::parse(i + 1, e.to_string()))?;
        frames.push(frame);
    }
    let mut manifest = FrameManifest::new(header.video_id, frames)?;
    manifest.width = header.width;
    manifest.height = header.height;
    manifest.channels = header.channels;
    Ok(manifest)
}

pub fn load_manifest(path: &Path) -> Result<FrameManifest> {
    parse_manifest(&read_text(path)?)
}

pub fn format_manifest(manifest: &FrameManifest) -> String {
    let header = ManifestHeader {
        video_id: manifest.video_id.clone(),
        width: manifest.width,
        height: manifest.height,
        channels: manifest.channels,
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for f in &manifest.frames {
        out.push_str(&serde_json::to_string(f).expect("frame serializes"));
        out.push('\n');
    }
    out
}

/// Half-open frame interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
}

impl Interval {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index < self.end
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Ground-truth files hold one `{"start":s,"end":e}` object per line.
pub fn load_truth(path: &Path) -> Result<Vec<Interval>> {
    let text = read_text(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, raw)| {
            let iv: Interval = serde_json::from_str(raw).map_err(|e| AksError::parse(i + 1, e.to_string()))?;
            if iv.is_empty() {
                return Err(AksError::parse(i + 1, "empty interval"));
            }
            Ok(iv)
        })
        .collect()
}

pub fn save_truth(intervals: &[Interval], path: &Path) -> Result<()> {
    let mut out = Vec::new();
    for iv in intervals {
        writeln!(out, "{}", serde_json::to_string(iv).expect("interval serializes")).expect("vec write");
    }
    fs::write(path, out).map_err(|e| AksError::io(path, e))
}
