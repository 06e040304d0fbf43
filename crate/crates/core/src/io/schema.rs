//! JSON record files and plain-text lexicons.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{GtInstance, SpotResult};
use crate::geometry::{Polygon, Rect};
use crate::labels::CharBox;

/// One annotated word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotation {
    pub polygon: Polygon,
    #[serde(default)]
    pub transcription: String,
    #[serde(default)]
    pub ignore: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chars: Option<Vec<CharBox>>,
}

impl Annotation {
    pub fn to_gt(&self) -> GtInstance {
        GtInstance {
            polygon: self.polygon.clone(),
            transcription: self.transcription.clone(),
            ignore: self.ignore,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotatedImage {
    pub name: String,
    #[serde(default)]
    pub instances: Vec<Annotation>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationFile {
    pub images: Vec<AnnotatedImage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictedImage {
    pub name: String,
    #[serde(default)]
    pub results: Vec<SpotResult>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionFile {
    pub images: Vec<PredictedImage>,
}

/// A proposal box, optionally tied to the annotation it was sampled for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "RawProposal", into = "RawProposal")]
pub struct Proposal {
    pub rect: Rect,
    pub instance: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProposal {
    rect: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    instance: Option<usize>,
}

impl TryFrom<RawProposal> for Proposal {
    type Error = Error;

    fn try_from(r: RawProposal) -> Result<Self> {
        let [x0, y0, x1, y1] = r.rect;
        Ok(Self {
            rect: Rect::new(x0, y0, x1, y1)?,
            instance: r.instance,
        })
    }
}

impl From<Proposal> for RawProposal {
    fn from(p: Proposal) -> Self {
        Self {
            rect: [p.rect.x_min, p.rect.y_min, p.rect.x_max, p.rect.y_max],
            instance: p.instance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProposalImage {
    pub name: String,
    #[serde(default)]
    pub proposals: Vec<Proposal>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProposalFile {
    pub images: Vec<ProposalImage>,
}

/// Reads and parses a JSON file; parse failures carry the path and the
/// line/column reported by the parser.
pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Schema {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(value).expect("records serialize");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// One word per line; blank lines are skipped.
pub fn read_lexicon(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}
