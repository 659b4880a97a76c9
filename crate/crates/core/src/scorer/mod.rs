//! Relevance scores for (query, frame) pairs.
//!
//! The image-text model itself lives outside this crate behind the wire
//! protocol in [`protocol`]; the other scorer kinds exist for tests,
//! benchmarks and precomputed scores.

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{AksError, Result};
use crate::io::load_scores_auto;
use crate::series::{FrameManifest, ScoreSeries};

pub mod echo;
pub mod protocol;
pub mod remote;
pub mod synthetic;

pub use protocol::{FrameRef, FrameScore, Message, PROTOCOL_VERSION};
pub use remote::{score_remote, RemoteSpec, Transport};
pub use synthetic::{generate_synthetic, BumpShape, PlantedInterval, SyntheticSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScorerSpec {
    /// Precomputed scores; the file must have one entry per manifest frame.
    File { path: PathBuf },
    Constant { value: f64 },
    Synthetic(SyntheticSpec),
    Remote(RemoteSpec),
}

impl FromStr for ScorerSpec {
    type Err = AksError;

    /// `constant:0.5`, `file:scores.jsonl`, `synthetic:spec.toml`,
    /// `stdio:<command line>` or an `http://` / `https://` URL.
    fn from_str(s: &str) -> Result<Self> {
        if s.starts_with("http://") || s.starts_with("https://") {
            return Ok(ScorerSpec::Remote(RemoteSpec::new(s, Transport::Http)));
        }
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| AksError::InvalidParam(format!("scorer '{s}' must look like kind:argument")))?;
        match kind {
            "constant" => rest
                .trim()
                .parse()
                .map(|value| ScorerSpec::Constant { value })
                .map_err(|_| AksError::InvalidParam(format!("bad constant '{rest}'"))),
            "file" => Ok(ScorerSpec::File { path: rest.into() }),
            "synthetic" => {
                let text = std::fs::read_to_string(rest).map_err(|e| AksError::io(rest, e))?;
                let spec: SyntheticSpec = toml::from_str(&text).map_err(|e| AksError::Config(format!("{rest}: {e}")))?;
                Ok(ScorerSpec::Synthetic(spec))
            }
            "stdio" => Ok(ScorerSpec::Remote(RemoteSpec::new(rest, Transport::StdioPipe))),
            "http" => Ok(ScorerSpec::Remote(RemoteSpec::new(rest, Transport::Http))),
            other => Err(AksError::InvalidParam(format!("unknown scorer kind '{other}'"))),
        }
    }
}

/// Scores every manifest frame against `query`, in manifest order. The
/// series records `query` as its query id and takes its timestamps from the
/// manifest.
pub fn score_frames(manifest: &FrameManifest, query: &str, scorer: &ScorerSpec) -> Result<ScoreSeries> {
    if manifest.is_empty() {
        return Err(AksError::EmptyManifest);
    }
    let n = manifest.len();
    let scores = match scorer {
        ScorerSpec::Constant { value } => {
            if !value.is_finite() {
                return Err(AksError::Scorer {
                    index: 0,
                    message: "non-finite constant score".into(),
                });
            }
            vec![*value; n]
        }
        ScorerSpec::File { path } => {
            let series = load_scores_auto(path)?;
            if series.len() != n {
                return Err(AksError::InvalidParam(format!(
                    "{} holds {} scores for a {n}-frame manifest",
                    path.display(),
                    series.len()
                )));
            }
            series.scores().to_vec()
        }
        ScorerSpec::Synthetic(spec) => {
            if spec.t != n {
                return Err(AksError::InvalidParam(format!(
                    "synthetic spec has T={} for a {n}-frame manifest",
                    spec.t
                )));
            }
            generate_synthetic(spec)?.0.scores().to_vec()
        }
        ScorerSpec::Remote(remote) => {
            let frames: Vec<FrameRef> = manifest
                .frames
                .iter()
                .map(|f| FrameRef {
                    index: f.index,
                    asset: f.asset.clone(),
                })
                .collect();
            score_remote(remote, query, &frames)?
        }
    };
    ScoreSeries::new(manifest.timestamps(), scores, None, Some(query.to_owned()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::ManifestFrame;

    fn manifest(n: usize) -> FrameManifest {
        FrameManifest::new(
            "v",
            (0..n)
                .map(|i| ManifestFrame {
                    index: i,
                    timestamp_s: i as f64,
                    asset: format!("frames/{i}.jpg"),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn constant_scorer() {
        let s = score_frames(&manifest(3), "q", &ScorerSpec::Constant { value: 0.5 }).unwrap();
        assert_eq!(s.scores(), &[0.5, 0.5, 0.5]);
        assert_eq!(s.query_id(), Some("q"));
    }

    #[test]
    fn empty_manifest() {
        let m = FrameManifest::new("v", vec![]).unwrap();
        let err = score_frames(&m, "q", &ScorerSpec::Constant { value: 0.5 }).unwrap_err();
        assert_eq!(err.to_string(), "empty manifest");
    }

    #[test]
    fn synthetic_length_must_match() {
        let spec = SyntheticSpec {
            t: 4,
            planted: vec![],
            noise_sigma: 0.0,
            baseline: 0.2,
            seed: 1,
        };
        assert!(score_frames(&manifest(3), "q", &ScorerSpec::Synthetic(spec.clone())).is_err());
        let s = score_frames(&manifest(4), "q", &ScorerSpec::Synthetic(spec)).unwrap();
        assert_eq!(s.scores(), &[0.2; 4]);
    }

    #[test]
    fn parses_scorer_strings() {
        assert_eq!("constant:0.25".parse::<ScorerSpec>().unwrap(), ScorerSpec::Constant { value: 0.25 });
        assert!(matches!(
            "http://127.0.0.1:9/".parse::<ScorerSpec>().unwrap(),
            ScorerSpec::Remote(RemoteSpec { transport: Transport::Http, .. })
        ));
        match "stdio:python3 sidecar.py --toy".parse::<ScorerSpec>().unwrap() {
            ScorerSpec::Remote(r) => {
                assert_eq!(r.transport, Transport::StdioPipe);
                assert_eq!(r.endpoint, "python3 sidecar.py --toy");
            }
            other => panic!("{other:?}"),
        }
        assert!("bogus".parse::<ScorerSpec>().is_err());
        assert!("magic:1".parse::<ScorerSpec>().is_err());
    }
}
