//! The operations behind the command-line tool, callable as a library.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::decoded::{DecodedText, Source};
use crate::error::{Error, Result};
use crate::eval::{
    detection_prf, end_to_end_eval, match_detections, EvalCounts, EvalReport, GtInstance, RecognitionMode,
    DEFAULT_IOU_THRESHOLD,
};
use crate::geometry::Rect;
use crate::io::{
    load_bundle, read_json, read_lexicon, read_tensor, write_tensor, AnnotatedImage, AnnotationFile, DType,
    PredictionFile, ProposalFile,
};
use crate::labels::{generate_targets, LabelMap, LabelTargets, DEFAULT_TARGET_H, DEFAULT_TARGET_W};
use crate::lexicon::{fuse, match_lexicon, Lexicon, LexiconMode};
use crate::sam::{SamConfig, SamDecoder, SamWeights};
use crate::seg_decode::{pixel_vote, CharMapStack, DEFAULT_BG_THRESHOLD};
use crate::tensor::Tensor;

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if jobs > 0 {
        b = b.num_threads(jobs);
    }
    b.build().map_err(|e| Error::invalid(format!("thread pool: {e}")))
}

/// Builds a lexicon from an optional word file and mode. A file without a
/// mode is treated as a strong lexicon.
pub fn load_lexicon(path: Option<&Path>, mode: Option<LexiconMode>) -> Result<Option<Lexicon>> {
    match (path, mode) {
        (None, None | Some(LexiconMode::None)) => Ok(None),
        (None, Some(m)) => Err(Error::LexiconRequired(format!("{m} mode needs --lexicon"))),
        (Some(_), Some(LexiconMode::None)) => Ok(None),
        (Some(p), m) => Ok(Some(Lexicon::new(read_lexicon(p)?, m.unwrap_or(LexiconMode::Strong))?)),
    }
}

#[derive(Debug, Clone)]
pub struct GenLabelsOptions {
    pub annotations: PathBuf,
    pub proposals: PathBuf,
    pub out_dir: PathBuf,
    pub width: usize,
    pub height: usize,
    pub jobs: usize,
}

impl GenLabelsOptions {
    pub fn new(annotations: impl Into<PathBuf>, proposals: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            annotations: annotations.into(),
            proposals: proposals.into(),
            out_dir: out_dir.into(),
            width: DEFAULT_TARGET_W,
            height: DEFAULT_TARGET_H,
            jobs: 1,
        }
    }
}

/// Parses a `WxH` size string.
pub fn parse_size(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::invalid(format!("size must look like 128x32, got {s:?}"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    let h: usize = h.trim().parse().map_err(|_| bad())?;
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok((w, h))
}

/// Picks the annotation a proposal is trained against: the explicit index if
/// given, else the instance whose bounding box overlaps the proposal most.
fn assign_instance(image: &AnnotatedImage, rect: &Rect, explicit: Option<usize>, path: &Path) -> Result<Option<usize>> {
    if let Some(i) = explicit {
        if i >= image.instances.len() {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                message: format!("image {:?}: proposal refers to missing instance {i}", image.name),
            });
        }
        return Ok(Some(i));
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, inst) in image.instances.iter().enumerate() {
        let iou = inst.polygon.bounding_rect().map(|b| b.iou(rect)).unwrap_or(0.0);
        if iou > 0.0 && best.is_none_or(|(_, b)| iou > b) {
            best = Some((i, iou));
        }
    }
    Ok(best.map(|(i, _)| i))
}

fn check_image_name(name: &str, path: &Path) -> Result<()> {
    if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            message: format!("image name {name:?} cannot be used in an output file name"),
        });
    }
    Ok(())
}

/// Writes `<image>_<k>.ins.tspt` (`[1,H,W]`) and `<image>_<k>.chr.tspt`
/// (`[H,W]` codes) for every proposal, as `f32`. Proposals overlapping no
/// instance get an empty instance map and an all-ignore character map.
/// Returns the written paths in input order.
pub fn gen_labels(opts: &GenLabelsOptions) -> Result<Vec<PathBuf>> {
    let ann: AnnotationFile = read_json(&opts.annotations)?;
    let props: ProposalFile = read_json(&opts.proposals)?;
    let by_name: HashMap<&str, &AnnotatedImage> = ann.images.iter().map(|i| (i.name.as_str(), i)).collect();
    std::fs::create_dir_all(&opts.out_dir).map_err(|e| Error::io(&opts.out_dir, e))?;

    let mut jobs = Vec::new();
    for img in &props.images {
        check_image_name(&img.name, &opts.proposals)?;
        let ann_img = by_name.get(img.name.as_str()).ok_or_else(|| Error::Schema {
            path: opts.proposals.clone(),
            message: format!("image {:?} has no annotations", img.name),
        })?;
        for (k, p) in img.proposals.iter().enumerate() {
            let inst = assign_instance(ann_img, &p.rect, p.instance, &opts.proposals)?;
            jobs.push((img.name.as_str(), k, p.rect, inst.map(|i| &ann_img.instances[i])));
        }
    }

    let (w, h) = (opts.width, opts.height);
    let written: Vec<Vec<PathBuf>> = pool(opts.jobs)?.install(|| {
        jobs.par_iter()
            .map(|&(name, k, rect, inst)| {
                let targets = match inst {
                    Some(a) => generate_targets(&a.polygon, a.chars.as_deref(), &rect, w, h)?,
                    None => LabelTargets {
                        instance_map: Tensor::zeros(&[1, h, w])?,
                        char_map: LabelMap::filled(h, w, crate::labels::IGNORE)?,
                    },
                };
                let ins = opts.out_dir.join(format!("{name}_{k}.ins.tspt"));
                let chr = opts.out_dir.join(format!("{name}_{k}.chr.tspt"));
                write_tensor(&ins, &targets.instance_map, DType::F32)?;
                write_tensor(&chr, &targets.char_map.to_tensor(), DType::F32)?;
                Ok(vec![ins, chr])
            })
            .collect::<Result<_>>()
    })?;
    Ok(written.into_iter().flatten().collect())
}

/// Where the attention decoder's weights come from.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSource {
    Bundle(PathBuf),
    /// Seeded uniform weights sized to the feature map's channel count.
    Random(u64),
}

#[derive(Debug, Clone, Default)]
pub struct DecodeOptions {
    pub seg: Option<PathBuf>,
    pub sam: Option<PathBuf>,
    pub weights: Option<WeightSource>,
    pub lexicon: Option<PathBuf>,
    pub lexicon_mode: Option<LexiconMode>,
    pub weighted_ed: bool,
    /// Beam width; greedy decoding when absent.
    pub beam: Option<usize>,
    pub bg_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecodeOutput {
    pub text: String,
    pub confidence: f64,
    pub source: Source,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matched_word: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
}

/// Decodes a character map stack file.
pub fn decode_seg_file(path: &Path, thresh: f64) -> Result<DecodedText> {
    let (t, _) = read_tensor(path)?;
    pixel_vote(&CharMapStack::new(t)?, thresh)
}

/// Runs the attention decoder on a `[C,H,W]` feature file.
pub fn decode_sam_file(path: &Path, weights: &WeightSource, beam: Option<usize>) -> Result<DecodedText> {
    let (feat, _) = read_tensor(path)?;
    let (cfg, w) = match weights {
        WeightSource::Bundle(dir) => load_bundle(dir)?,
        WeightSource::Random(seed) => {
            let &[c, _, _] = feat.shape() else {
                return Err(Error::shape(format!("feature map must be [C,H,W], got {:?}", feat.shape())));
            };
            let cfg = SamConfig {
                in_channels: c,
                ..SamConfig::default()
            };
            (cfg, SamWeights::random(&cfg, *seed)?)
        }
    };
    let dec = SamDecoder::from_features(&feat, &w, &cfg)?;
    match beam {
        None => dec.greedy_decode(),
        Some(k) => dec.beam_decode(k),
    }
}

/// Runs whichever branches have inputs, fuses by confidence and applies
/// lexicon matching when a lexicon is configured.
pub fn decode(opts: &DecodeOptions) -> Result<DecodeOutput> {
    if opts.seg.is_none() && opts.sam.is_none() {
        return Err(Error::invalid("decode needs --seg, --sam or both"));
    }
    let lex = load_lexicon(opts.lexicon.as_deref(), opts.lexicon_mode)?;
    if opts.weighted_ed && lex.is_none() {
        return Err(Error::LexiconRequired("--weighted-ed needs a lexicon".into()));
    }
    let seg = opts
        .seg
        .as_deref()
        .map(|p| decode_seg_file(p, opts.bg_threshold.unwrap_or(DEFAULT_BG_THRESHOLD)))
        .transpose()?;
    let sam = match &opts.sam {
        Some(p) => {
            let w = opts
                .weights
                .as_ref()
                .ok_or_else(|| Error::Weights("--sam needs --weights".into()))?;
            Some(decode_sam_file(p, w, opts.beam)?)
        }
        None => None,
    };
    let fused = fuse(seg.as_ref(), sam.as_ref())?;
    let (matched_word, distance) = match &lex {
        Some(l) => {
            let m = match_lexicon(&fused, &fused.char_prob_table(), l, opts.weighted_ed)?;
            (Some(m.word), Some(m.distance))
        }
        None => (None, None),
    };
    Ok(DecodeOutput {
        text: fused.text,
        confidence: fused.confidence,
        source: fused.source,
        matched_word,
        distance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Det,
    E2e,
    Spotting,
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "det" => Ok(Task::Det),
            "e2e" => Ok(Task::E2e),
            "spotting" => Ok(Task::Spotting),
            _ => Err(Error::invalid(format!("unknown task {s:?} (det, e2e, spotting)"))),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Det => "det",
            Task::E2e => "e2e",
            Task::Spotting => "spotting",
        })
    }
}

#[derive(Debug, Clone)]
pub struct EvaluateOptions {
    pub gt: PathBuf,
    pub pred: PathBuf,
    pub task: Task,
    pub lexicon: Option<PathBuf>,
    pub lexicon_mode: Option<LexiconMode>,
    pub weighted_ed: bool,
    pub iou: f64,
    pub jobs: usize,
}

impl EvaluateOptions {
    pub fn new(gt: impl Into<PathBuf>, pred: impl Into<PathBuf>, task: Task) -> Self {
        Self {
            gt: gt.into(),
            pred: pred.into(),
            task,
            lexicon: None,
            lexicon_mode: None,
            weighted_ed: false,
            iou: DEFAULT_IOU_THRESHOLD,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageReport {
    pub name: String,
    #[serde(flatten)]
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationOutput {
    pub task: Task,
    pub iou: f64,
    pub images: Vec<ImageReport>,
    pub aggregate: EvalReport,
}

/// Scores every ground-truth image. Images missing from the prediction file
/// count as having no predictions.
pub fn evaluate(opts: &EvaluateOptions) -> Result<EvaluationOutput> {
    if !(opts.iou > 0.0 && opts.iou <= 1.0) {
        return Err(Error::invalid(format!("IoU threshold {} outside (0,1]", opts.iou)));
    }
    let gt: AnnotationFile = read_json(&opts.gt)?;
    let pred: PredictionFile = read_json(&opts.pred)?;
    let gt_names: HashMap<&str, ()> = gt.images.iter().map(|i| (i.name.as_str(), ())).collect();
    let mut preds_by_name = HashMap::new();
    for img in &pred.images {
        if !gt_names.contains_key(img.name.as_str()) {
            return Err(Error::Schema {
                path: opts.pred.clone(),
                message: format!("image {:?} is not in the ground truth", img.name),
            });
        }
        if preds_by_name.insert(img.name.as_str(), &img.results).is_some() {
            return Err(Error::Schema {
                path: opts.pred.clone(),
                message: format!("image {:?} listed twice", img.name),
            });
        }
    }
    let lex = match opts.task {
        Task::Det => None,
        _ => load_lexicon(opts.lexicon.as_deref(), opts.lexicon_mode)?,
    };
    if opts.weighted_ed && opts.task != Task::Det && lex.is_none() {
        return Err(Error::LexiconRequired("--weighted-ed needs a lexicon".into()));
    }

    let images: Vec<ImageReport> = pool(opts.jobs)?.install(|| {
        gt.images
            .par_iter()
            .map(|img| {
                let gts: Vec<GtInstance> = img.instances.iter().map(|a| a.to_gt()).collect();
                let preds = preds_by_name.get(img.name.as_str()).map_or(&[][..], |v| v.as_slice());
                let report = match opts.task {
                    Task::Det => detection_prf(&match_detections(preds, &gts, opts.iou)),
                    Task::E2e | Task::Spotting => {
                        let mode = if opts.task == Task::E2e {
                            RecognitionMode::EndToEnd
                        } else {
                            RecognitionMode::WordSpotting
                        };
                        end_to_end_eval(preds, &gts, lex.as_ref(), mode, opts.weighted_ed, opts.iou)?
                    }
                };
                Ok(ImageReport {
                    name: img.name.clone(),
                    report,
                })
            })
            .collect::<Result<_>>()
    })?;
    let mut total = EvalCounts::default();
    for r in &images {
        total += r.report.counts;
    }
    Ok(EvaluationOutput {
        task: opts.task,
        iou: opts.iou,
        images,
        aggregate: total.report(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::write_json;

    #[test]
    fn size_parsing() {
        assert_eq!(parse_size("128x32").unwrap(), (128, 32));
        assert_eq!(parse_size("4X2").unwrap(), (4, 2));
        for bad in ["128", "0x3", "ax3", "3x", ""] {
            assert!(parse_size(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn task_parsing() {
        for t in [Task::Det, Task::E2e, Task::Spotting] {
            assert_eq!(t.to_string().parse::<Task>().unwrap(), t);
        }
        assert!("recognition".parse::<Task>().is_err());
    }

    #[test]
    fn lexicon_loading_rules() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("lex.txt");
        std::fs::write(&p, "hello\nworld\n").unwrap();
        assert!(load_lexicon(None, None).unwrap().is_none());
        assert!(matches!(load_lexicon(None, Some(LexiconMode::Weak)), Err(Error::LexiconRequired(_))));
        assert_eq!(load_lexicon(Some(&p), None).unwrap().unwrap().mode(), LexiconMode::Strong);
        assert!(load_lexicon(Some(&p), Some(LexiconMode::None)).unwrap().is_none());
    }

    #[test]
    fn evaluate_rejects_unknown_images() {
        let dir = tempfile::tempdir().unwrap();
        let gt = dir.path().join("gt.json");
        let pred = dir.path().join("pred.json");
        write_json(&gt, &AnnotationFile::default()).unwrap();
        std::fs::write(&pred, r#"{"images":[{"name":"x","results":[]}]}"#).unwrap();
        assert!(matches!(
            evaluate(&EvaluateOptions::new(&gt, &pred, Task::Det)),
            Err(Error::Schema { .. })
        ));
    }
}
