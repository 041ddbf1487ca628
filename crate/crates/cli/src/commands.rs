//! Batch subcommands. Each validates its inputs, does the work, writes its
//! outputs into `--out` and finishes with a run manifest.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use twstrs_core::avatar::{read_pgm, write_pgm};
use twstrs_core::dataset::{read_dataset, write_dataset};
use twstrs_core::protocol::{clinical_only, read_frames, write_summaries_csv};
use twstrs_core::shift::{classify, dataset_features, read_predictions, select_threshold, Prediction};
use twstrs_core::stats::{classification_metrics, mean_rating, read_ratings_csv, ClassificationMetrics, Confusion};
use twstrs_core::study::agreement_by_item;
use twstrs_core::{
    angles_to_twstrs, asymmetry, build_timeline, generate_dataset, geometric_shift_feature, pearson_r, preprocess,
    render_mask, summarize, FigureParams, GroundTruthLabel, Item, Keypoints, LabeledMask, SamplerConfig,
    ShiftDistribution, ShiftModel, TaskSummary,
};

use crate::args::{AgreementArgs, CalibrateArgs, EvaluateArgs, GenerateArgs, Mode, RenderArgs, TimelineArgs};
use crate::error::{require_dir, require_file, CliError, CliResult};
use crate::run_manifest::{write_json, RunManifest, FILE_NAME};

pub const DATASET_FILE: &str = "dataset.jsonl";
pub const MASK_DIR: &str = "masks";
pub const MASK_INDEX_FILE: &str = "masks.jsonl";
pub const MODEL_FILE: &str = "model.json";
pub const REPORT_FILE: &str = "report.json";
pub const PREDICTIONS_FILE: &str = "predictions.jsonl";
pub const AGREEMENT_FILE: &str = "agreement.json";
pub const TIMELINE_JSON: &str = "timeline.json";
pub const TIMELINE_CSV: &str = "timeline.csv";

fn create_out(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

fn finish<P: Serialize>(out: &Path, command: &str, seed: Option<u64>, params: &P, outputs: &[&str]) -> CliResult<()> {
    let outputs = outputs.iter().map(|s| s.to_string()).collect();
    RunManifest::new(command, seed, params, outputs).write(&out.join(FILE_NAME))
}

fn load_labels(path: &Path) -> CliResult<Vec<GroundTruthLabel>> {
    let labels = read_dataset(open(path)?).map_err(|e| CliError::data(path, e))?;
    let mut seen = BTreeSet::new();
    for l in &labels {
        if !seen.insert(l.scene_id.as_str()) {
            return Err(CliError::data(path, format!("duplicate scene_id '{}'", l.scene_id)));
        }
    }
    Ok(labels)
}

pub fn generate(args: &GenerateArgs) -> CliResult<()> {
    if args.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let config = SamplerConfig {
        sigma_deg: args.sigma,
        zero_prob: args.zero_prob,
        shift_distribution: match &args.shift_values {
            Some(v) => ShiftDistribution::FixedList(v.clone()),
            None => ShiftDistribution::Uniform01,
        },
        shift_threshold: args.shift_threshold,
        seed: args.seed,
        count: args.count,
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    create_out(&args.out)?;
    let labels = generate_dataset(&config).map_err(|e| CliError::Usage(e.to_string()))?;
    let path = args.out.join(DATASET_FILE);
    write_dataset(create(&path)?, &labels).map_err(|e| CliError::io(&path, e))?;
    finish(&args.out, "generate", Some(args.seed), &config, &[DATASET_FILE])
}

/// One row of the mask index written by `render`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaskEntry {
    pub scene_id: String,
    pub file: String,
    pub width: u32,
    pub height: u32,
    pub appearance_seed: u64,
    pub keypoints: Keypoints,
}

fn appearance(base: u64, index: usize) -> (u64, FigureParams) {
    let seed = base.wrapping_add(index as u64);
    (seed, FigureParams::with_appearance(seed))
}

pub fn render(args: &RenderArgs) -> CliResult<()> {
    require_file(&args.dataset, "--dataset")?;
    let labels = load_labels(&args.dataset)?;
    let mask_dir = args.out.join(MASK_DIR);
    fs::create_dir_all(&mask_dir).map_err(|e| CliError::io(&mask_dir, e))?;
    let entries: Vec<MaskEntry> = labels
        .par_iter()
        .enumerate()
        .map(|(i, label)| {
            let (seed, params) = appearance(args.seed, i);
            let mask = render_mask(label, &params).map_err(|e| CliError::Data(e.to_string()))?;
            let file = format!("{MASK_DIR}/{}.pgm", label.scene_id);
            let path = args.out.join(&file);
            write_pgm(create(&path)?, &mask).map_err(|e| CliError::io(&path, e))?;
            Ok(MaskEntry {
                scene_id: label.scene_id.clone(),
                file,
                width: mask.width,
                height: mask.height,
                appearance_seed: seed,
                keypoints: mask.keypoints,
            })
        })
        .collect::<CliResult<_>>()?;
    let index = args.out.join(MASK_INDEX_FILE);
    twstrs_core::jsonl::write_jsonl(create(&index)?, &entries).map_err(|e| CliError::io(&index, e))?;
    finish(&args.out, "render", Some(args.seed), args, &[MASK_DIR, MASK_INDEX_FILE])
}

/// Features from masks previously written by `render`, in label order.
fn features_from_masks(dir: &Path, labels: &[GroundTruthLabel]) -> CliResult<Vec<f64>> {
    let index_path = dir.join(MASK_INDEX_FILE);
    require_file(&index_path, "--masks")?;
    let entries: Vec<MaskEntry> =
        twstrs_core::jsonl::read_jsonl(open(&index_path)?).map_err(|e| CliError::data(&index_path, e))?;
    let by_id: BTreeMap<&str, &MaskEntry> = entries.iter().map(|e| (e.scene_id.as_str(), e)).collect();
    labels
        .par_iter()
        .map(|label| {
            let entry = by_id
                .get(label.scene_id.as_str())
                .ok_or_else(|| CliError::data(&index_path, format!("no mask for scene {}", label.scene_id)))?;
            let path = dir.join(&entry.file);
            let (width, height, pixels) = read_pgm(open(&path)?).map_err(|e| CliError::data(&path, e))?;
            let mask = LabeledMask {
                width,
                height,
                labels: pixels,
                keypoints: entry.keypoints.clone(),
                truth: label.clone(),
            };
            let p = preprocess(&mask).map_err(|e| CliError::data(&path, e))?;
            geometric_shift_feature(&p).map_err(|e| CliError::data(&path, e))
        })
        .collect()
}

fn shift_features(labels: &[GroundTruthLabel], masks: Option<&Path>, seed: u64) -> CliResult<Vec<f64>> {
    match masks {
        Some(dir) => features_from_masks(dir, labels),
        None => dataset_features(labels, seed).map_err(|e| CliError::Data(e.to_string())),
    }
}

pub fn calibrate(args: &CalibrateArgs) -> CliResult<()> {
    require_file(&args.dataset, "--dataset")?;
    if let Some(m) = &args.masks {
        require_dir(m, "--masks")?;
    }
    let labels = load_labels(&args.dataset)?;
    let features = shift_features(&labels, args.masks.as_deref(), args.seed)?;
    let truths: Vec<f64> = labels.iter().map(|l| l.pose.shift).collect();
    let present: Vec<bool> = labels.iter().map(|l| l.assessment.lateral_shift == 1).collect();
    let model = ShiftModel::fit(&features, &truths, &present).map_err(|e| CliError::Data(e.to_string()))?;
    create_out(&args.out)?;
    write_json(&args.out.join(MODEL_FILE), &model)?;
    finish(&args.out, "calibrate", Some(args.seed), args, &[MODEL_FILE])
}

#[derive(Debug, Serialize)]
struct ShiftReport {
    #[serde(serialize_with = "twstrs_core::shift::extended_f64::serialize")]
    threshold: f64,
    threshold_source: &'static str,
    tpr: Option<f64>,
    accuracy: f64,
    confusion: Confusion,
    pearson_r: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ItemReport {
    item: Item,
    #[serde(skip_serializing_if = "Option::is_none")]
    presence: Option<ClassificationMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ordinal_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct AvatarReport {
    mode: Mode,
    n_scenes: usize,
    estimator: &'static str,
    lateral_shift: ShiftReport,
    items: Vec<ItemReport>,
}

#[derive(Debug, Serialize)]
struct ClinicalItem {
    item: Item,
    n_images: usize,
    pearson_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct ClinicalReport {
    mode: Mode,
    n_images: usize,
    items: Vec<ClinicalItem>,
}

fn load_predictions(path: &Path) -> CliResult<BTreeMap<String, Prediction>> {
    read_predictions(open(path)?).map_err(|e| CliError::data(path, e))
}

/// Errors unless both id sets are identical.
fn check_ids<'a>(
    expected: impl Iterator<Item = &'a str>,
    got: impl Iterator<Item = &'a str>,
    what: &str,
) -> CliResult<()> {
    let expected: BTreeSet<&str> = expected.collect();
    let got: BTreeSet<&str> = got.collect();
    let missing = expected.difference(&got).count();
    let extra = got.difference(&expected).count();
    if missing == 0 && extra == 0 {
        return Ok(());
    }
    let example = expected.symmetric_difference(&got).next().copied().unwrap_or_default();
    Err(CliError::Data(format!(
        "{what} ids do not match the predictions: {missing} missing, {extra} extra (e.g. '{example}')"
    )))
}

fn rotational_items(labels: &[GroundTruthLabel], preds: &[&Prediction]) -> Vec<ItemReport> {
    let angles: Option<Vec<_>> = preds.iter().map(|p| p.angles()).collect();
    Item::ALL
        .into_iter()
        .filter(|i| i.is_rotational())
        .map(|item| {
            let Some(angles) = &angles else {
                return ItemReport {
                    item,
                    presence: None,
                    ordinal_accuracy: None,
                    error: Some("predictions carry no yaw/pitch/roll".into()),
                };
            };
            let pred: Vec<u8> = angles.iter().map(|a| angles_to_twstrs(a, false).score(item)).collect();
            let truth: Vec<u8> = labels.iter().map(|l| l.assessment.score(item)).collect();
            let exact = pred.iter().zip(&truth).filter(|(p, t)| p == t).count();
            let p_bool: Vec<bool> = pred.iter().map(|&s| s > 0).collect();
            let t_bool: Vec<bool> = truth.iter().map(|&s| s > 0).collect();
            let (presence, error) = match classification_metrics(&p_bool, &t_bool) {
                Ok(m) => (Some(m), None),
                Err(e) => (None, Some(e.to_string())),
            };
            ItemReport {
                item,
                presence,
                ordinal_accuracy: Some(exact as f64 / truth.len() as f64),
                error,
            }
        })
        .collect()
}

fn evaluate_avatar(args: &EvaluateArgs) -> CliResult<Vec<&'static str>> {
    let dataset = args
        .dataset
        .as_ref()
        .ok_or_else(|| CliError::Usage("--mode avatar requires --dataset".into()))?;
    require_file(dataset, "--dataset")?;
    if let Some(p) = &args.predictions {
        require_file(p, "--predictions")?;
    } else {
        let model = args
            .model
            .as_ref()
            .ok_or_else(|| CliError::Usage("the internal estimator needs --model (or pass --predictions)".into()))?;
        require_file(model, "--model")?;
        if let Some(m) = &args.masks {
            require_dir(m, "--masks")?;
        }
    }
    let labels = load_labels(dataset)?;
    let truths: Vec<f64> = labels.iter().map(|l| l.pose.shift).collect();
    let present: Vec<bool> = labels.iter().map(|l| l.assessment.lateral_shift == 1).collect();
    create_out(&args.out)?;
    let mut outputs = vec![REPORT_FILE];

    let (estimator, preds, model_threshold): (_, Vec<Prediction>, Option<f64>) = match &args.predictions {
        Some(path) => {
            let map = load_predictions(path)?;
            check_ids(labels.iter().map(|l| l.scene_id.as_str()), map.keys().map(String::as_str), "dataset")?;
            let preds = labels.iter().map(|l| map[&l.scene_id].clone()).collect();
            ("external", preds, None)
        }
        None => {
            let path = args.model.as_ref().expect("checked above");
            let model: ShiftModel = serde_json::from_reader(open(path)?).map_err(|e| CliError::data(path, e))?;
            let features = shift_features(&labels, args.masks.as_deref(), args.seed)?;
            let preds: Vec<Prediction> = labels
                .iter()
                .zip(&features)
                .map(|(l, &f)| Prediction {
                    scene_id: l.scene_id.clone(),
                    score: model.calibration().predict(f),
                    yaw: None,
                    pitch: None,
                    roll: None,
                })
                .collect();
            let path = args.out.join(PREDICTIONS_FILE);
            twstrs_core::jsonl::write_jsonl(create(&path)?, &preds).map_err(|e| CliError::io(&path, e))?;
            outputs.push(PREDICTIONS_FILE);
            ("geometric", preds, Some(model.threshold))
        }
    };

    let scores: Vec<f64> = preds.iter().map(|p| p.score).collect();
    let (threshold, threshold_source) = match (args.threshold, model_threshold) {
        (Some(t), _) => (t, "flag"),
        (None, Some(t)) => (t, "model"),
        (None, None) => (
            select_threshold(&scores, &present).map_err(|e| CliError::Data(e.to_string()))?,
            "selected_on_evaluation_set",
        ),
    };
    let predicted: Vec<bool> = scores.iter().map(|&s| classify(s, threshold).binary == 1).collect();
    let confusion = Confusion::from_pairs(&predicted, &present).map_err(|e| CliError::Data(e.to_string()))?;
    let lateral_shift = ShiftReport {
        threshold,
        threshold_source,
        tpr: confusion.tpr().ok(),
        accuracy: confusion.accuracy().unwrap_or(f64::NAN),
        confusion,
        pearson_r: pearson_r(&scores, &truths).ok(),
    };
    let pred_refs: Vec<&Prediction> = preds.iter().collect();
    let report = AvatarReport {
        mode: Mode::Avatar,
        n_scenes: labels.len(),
        estimator,
        lateral_shift,
        items: rotational_items(&labels, &pred_refs),
    };
    write_json(&args.out.join(REPORT_FILE), &report)?;
    Ok(outputs)
}

fn evaluate_clinical(args: &EvaluateArgs) -> CliResult<Vec<&'static str>> {
    let ratings_path = args
        .ratings
        .as_ref()
        .ok_or_else(|| CliError::Usage("--mode clinical requires --ratings".into()))?;
    let pred_path = args
        .predictions
        .as_ref()
        .ok_or_else(|| CliError::Usage("--mode clinical requires --predictions".into()))?;
    require_file(ratings_path, "--ratings")?;
    require_file(pred_path, "--predictions")?;
    let records = read_ratings_csv(open(ratings_path)?).map_err(|e| CliError::data(ratings_path, e))?;
    let preds = load_predictions(pred_path)?;
    let images: BTreeSet<&str> = records.iter().map(|r| r.image_id.as_str()).collect();
    check_ids(images.iter().copied(), preds.keys().map(String::as_str), "rated image")?;

    let items = Item::ALL
        .into_iter()
        .map(|item| {
            let mut predicted = Vec::new();
            let mut rated = Vec::new();
            let mut error = None;
            for &id in &images {
                let p = &preds[id];
                let value = if item == Item::LateralShift {
                    Some(p.score)
                } else {
                    p.angles().map(|a| angles_to_twstrs(&a, false).score(item) as f64)
                };
                let Some(value) = value else {
                    error = Some(format!("prediction for {id} carries no yaw/pitch/roll"));
                    break;
                };
                match mean_rating(&records, id, item) {
                    Ok(m) => {
                        predicted.push(value);
                        rated.push(m);
                    }
                    Err(e) => {
                        error = Some(e.to_string());
                        break;
                    }
                }
            }
            let pearson = if error.is_none() {
                match pearson_r(&predicted, &rated) {
                    Ok(r) => Some(r),
                    Err(e) => {
                        error = Some(e.to_string());
                        None
                    }
                }
            } else {
                None
            };
            ClinicalItem { item, n_images: rated.len(), pearson_r: pearson, error }
        })
        .collect();
    let report = ClinicalReport { mode: Mode::Clinical, n_images: images.len(), items };
    create_out(&args.out)?;
    write_json(&args.out.join(REPORT_FILE), &report)?;
    Ok(vec![REPORT_FILE])
}

pub fn evaluate(args: &EvaluateArgs) -> CliResult<()> {
    let outputs = match args.mode {
        Mode::Avatar => evaluate_avatar(args)?,
        Mode::Clinical => evaluate_clinical(args)?,
    };
    finish(&args.out, "evaluate", Some(args.seed), args, &outputs)
}

#[derive(Debug, Serialize)]
struct AgreementEntry {
    item: Item,
    image_kind: twstrs_core::ImageKind,
    metric: twstrs_core::DistanceMetric,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ci: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_units: Option<usize>,
    n_iter: usize,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

pub fn agreement(args: &AgreementArgs) -> CliResult<()> {
    require_file(&args.ratings, "--ratings")?;
    if args.n_bootstrap == 0 {
        return Err(CliError::Usage("--n-bootstrap must be at least 1".into()));
    }
    let records = read_ratings_csv(open(&args.ratings)?).map_err(|e| CliError::data(&args.ratings, e))?;
    let results =
        agreement_by_item(&records, args.n_bootstrap, args.seed).map_err(|e| CliError::data(&args.ratings, e))?;
    let entries: Vec<AgreementEntry> = results
        .into_iter()
        .map(|a| AgreementEntry {
            item: a.item,
            image_kind: a.image_kind,
            metric: a.metric,
            alpha: a.result.as_ref().map(|r| r.alpha),
            ci: a.result.as_ref().map(|r| [r.ci_low, r.ci_high]),
            n_units: a.result.as_ref().map(|r| r.n_units),
            n_iter: args.n_bootstrap,
            seed: args.seed,
            error: a.error,
        })
        .collect();
    create_out(&args.out)?;
    write_json(&args.out.join(AGREEMENT_FILE), &entries)?;
    finish(&args.out, "agreement", Some(args.seed), args, &[AGREEMENT_FILE])
}

#[derive(Debug, Serialize)]
struct TimelineReport {
    n_frames: usize,
    tasks: Vec<TaskSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    asymmetry: Option<twstrs_core::Asymmetry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    asymmetry_error: Option<String>,
}

pub fn timeline(args: &TimelineArgs) -> CliResult<()> {
    require_file(&args.predictions, "--predictions")?;
    let frames = read_frames(open(&args.predictions)?).map_err(|e| CliError::data(&args.predictions, e))?;
    let all = summarize(&frames, &build_timeline()).map_err(|e| CliError::data(&args.predictions, e))?;
    let (asymmetry, asymmetry_error) = match asymmetry(&all) {
        Ok(a) => (Some(a), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let tasks = if args.include_nonclinical { all } else { clinical_only(all) };
    create_out(&args.out)?;
    let csv_path = args.out.join(TIMELINE_CSV);
    write_summaries_csv(create(&csv_path)?, &tasks).map_err(|e| CliError::io(&csv_path, e))?;
    let report = TimelineReport { n_frames: frames.len(), tasks, asymmetry, asymmetry_error };
    write_json(&args.out.join(TIMELINE_JSON), &report)?;
    finish(&args.out, "timeline", None, args, &[TIMELINE_JSON, TIMELINE_CSV])
}

/// Directory receiving the serve manifest: the store's parent.
pub fn store_dir(store: &Path) -> PathBuf {
    match store.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}
