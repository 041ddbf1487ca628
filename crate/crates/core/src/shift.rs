//! Lateral-shift estimation chain: mask preprocessing, a geometric feature,
//! linear calibration, validation-set threshold selection and an interface
//! for externally produced prediction scores.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;
use thiserror::Error;

use crate::avatar::{centroid, render_mask, FigureParams, LabeledMask, RenderError, BACKGROUND, CLOTHES, HEAD_NECK};
use crate::sampler::GroundTruthLabel;
use crate::rotation::EulerAngles;
use crate::stats::metrics::{mean, pearson_r};

pub const INPUT_SIZE: u32 = 224;
/// Crop width as a fraction of crop height.
pub const CROP_WIDTH_PER_HEIGHT: f64 = 3.0 / 4.0;
pub const MIN_CALIBRATION_SAMPLES: usize = 30;

#[derive(Debug, Error)]
pub enum ShiftError {
    #[error("missing keypoint: {0}")]
    MissingKeypoint(&'static str),
    #[error("mask has no {0} pixels")]
    EmptyMask(&'static str),
    #[error("degenerate crop: top row {top} is not above bottom row {bottom}")]
    InvalidCrop { top: u32, bottom: u32 },
    #[error("degenerate fit: {0}")]
    DegenerateFit(&'static str),
    #[error("calibration needs at least {MIN_CALIBRATION_SAMPLES} samples, got {0}")]
    InsufficientSamples(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("labels contain a single class")]
    SingleClass,
    #[error("non-finite score at index {0}")]
    NonFinite(usize),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate scene_id '{0}'")]
    DuplicateId(String),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropRecord {
    /// First kept row (inclusive).
    pub top_row: u32,
    /// First discarded row; the higher elbow's row.
    pub bottom_row: u32,
    /// Kept source columns `[left_col, right_col)` after clamping to the image.
    pub left_col: u32,
    pub right_col: u32,
    pub mass_center_x: f64,
    /// Unclamped crop window; columns outside the source are padded with background.
    pub window_left: i64,
    pub window_width: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessedMask {
    /// `INPUT_SIZE × INPUT_SIZE` row-major region codes.
    pub labels: Vec<u8>,
    pub crop: CropRecord,
    pub source_scene_id: String,
}

impl PreprocessedMask {
    pub fn mirrored(&self) -> PreprocessedMask {
        let n = INPUT_SIZE as usize;
        let mut labels = self.labels.clone();
        for row in labels.chunks_mut(n) {
            row.reverse();
        }
        PreprocessedMask {
            labels,
            ..self.clone()
        }
    }
}

pub fn preprocess(mask: &LabeledMask) -> Result<PreprocessedMask, ShiftError> {
    let left = mask.keypoints.elbow_left.ok_or(ShiftError::MissingKeypoint("elbow_left"))?;
    let right = mask.keypoints.elbow_right.ok_or(ShiftError::MissingKeypoint("elbow_right"))?;
    let (w, h) = (mask.width, mask.height);
    // Image space: the higher elbow has the smaller row index.
    let bottom_row = (left.y.min(right.y).floor().max(0.0) as u32).min(h);

    let top_row = mask
        .labels
        .chunks(w as usize)
        .position(|row| row.iter().any(|&v| v != BACKGROUND))
        .ok_or(ShiftError::EmptyMask("foreground"))? as u32;
    if top_row >= bottom_row {
        return Err(ShiftError::InvalidCrop { top: top_row, bottom: bottom_row });
    }

    let band = &mask.labels[(top_row * w) as usize..(bottom_row * w) as usize];
    let (center, _) = centroid(band, w, &[HEAD_NECK]).ok_or(ShiftError::EmptyMask("head/neck"))?;
    let mass_center_x = center.x;

    let crop_h = bottom_row - top_row;
    let crop_w = ((crop_h as f64 * CROP_WIDTH_PER_HEIGHT).round() as u32).max(1);
    let window_left = (mass_center_x - crop_w as f64 / 2.0).round() as i64;
    let left_col = window_left.clamp(0, w as i64) as u32;
    let right_col = (window_left + crop_w as i64).clamp(0, w as i64) as u32;

    let n = INPUT_SIZE as usize;
    let mut labels = vec![BACKGROUND; n * n];
    for j in 0..n {
        let src_row = top_row as usize + ((j as f64 + 0.5) * crop_h as f64 / n as f64) as usize;
        let row = &mask.labels[src_row * w as usize..(src_row + 1) * w as usize];
        for i in 0..n {
            let src_col = window_left + ((i as f64 + 0.5) * crop_w as f64 / n as f64) as i64;
            if (0..w as i64).contains(&src_col) {
                labels[j * n + i] = row[src_col as usize];
            }
        }
    }

    Ok(PreprocessedMask {
        labels,
        crop: CropRecord {
            top_row,
            bottom_row,
            left_col,
            right_col,
            mass_center_x,
            window_left,
            window_width: crop_w,
        },
        source_scene_id: mask.truth.scene_id.clone(),
    })
}

/// Signed head-neck offset from the trunk midline, as a fraction of the input width.
pub fn geometric_shift_feature(p: &PreprocessedMask) -> Result<f64, ShiftError> {
    let n = INPUT_SIZE as usize;
    let (head, _) = centroid(&p.labels, INPUT_SIZE, &[HEAD_NECK]).ok_or(ShiftError::EmptyMask("head/neck"))?;
    let (mut lo, mut hi) = (usize::MAX, 0usize);
    for (i, _) in p.labels.iter().enumerate().filter(|(_, &v)| v == CLOTHES) {
        let col = i % n;
        lo = lo.min(col);
        hi = hi.max(col);
    }
    if lo == usize::MAX {
        return Err(ShiftError::EmptyMask("clothes"));
    }
    let midline = (lo + hi + 1) as f64 / 2.0;
    Ok((head.x - midline) / n as f64)
}

/// Renders `label` with `params` and returns its geometric feature.
pub fn scene_feature(label: &GroundTruthLabel, params: &FigureParams) -> Result<f64, ShiftError> {
    let mask = render_mask(label, params)?;
    geometric_shift_feature(&preprocess(&mask)?)
}

/// Features for a whole dataset, rendered in parallel. Scene `i` uses
/// appearance seed `appearance_base + i`.
pub fn dataset_features(labels: &[GroundTruthLabel], appearance_base: u64) -> Result<Vec<f64>, ShiftError> {
    labels
        .par_iter()
        .enumerate()
        .map(|(i, l)| scene_feature(l, &FigureParams::with_appearance(appearance_base.wrapping_add(i as u64))))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitStats {
    pub r_train: f64,
    pub n_train: usize,
}

/// Linear map from the geometric feature to the normalised shift scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationModel {
    pub slope: f64,
    pub intercept: f64,
    pub fit_stats: FitStats,
}

impl CalibrationModel {
    pub fn predict(&self, feature: f64) -> f64 {
        self.slope * feature + self.intercept
    }
}

/// Ordinary least squares of `truths` on `features`.
pub fn calibrate(features: &[f64], truths: &[f64]) -> Result<CalibrationModel, ShiftError> {
    if features.len() != truths.len() {
        return Err(ShiftError::LengthMismatch(features.len(), truths.len()));
    }
    let n = features.len();
    if n < MIN_CALIBRATION_SAMPLES {
        return Err(ShiftError::InsufficientSamples(n));
    }
    if let Some(i) = features.iter().chain(truths).position(|v| !v.is_finite()) {
        return Err(ShiftError::NonFinite(i % n));
    }
    let (mx, my) = (mean(features), mean(truths));
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in features.iter().zip(truths) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 {
        return Err(ShiftError::DegenerateFit("feature variance is zero"));
    }
    if syy <= 0.0 {
        return Err(ShiftError::DegenerateFit("truth variance is zero"));
    }
    let slope = sxy / sxx;
    let r_train = pearson_r(features, truths).map_err(|_| ShiftError::DegenerateFit("correlation undefined"))?;
    Ok(CalibrationModel {
        slope,
        intercept: my - slope * mx,
        fit_stats: FitStats { r_train, n_train: n },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdChoice {
    pub threshold: f64,
    pub tpr: f64,
    pub accuracy: f64,
}

impl ThresholdChoice {
    pub fn objective(&self) -> f64 {
        self.tpr + self.accuracy
    }
}

/// Threshold maximising `TPR + accuracy`, predicting positive when `score >= threshold`.
///
/// Candidates are the midpoints between consecutive distinct scores plus
/// `±∞`; ties go to the smallest threshold.
pub fn select_threshold(scores: &[f64], labels: &[bool]) -> Result<f64, ShiftError> {
    select_threshold_detailed(scores, labels).map(|c| c.threshold)
}

pub fn select_threshold_detailed(scores: &[f64], labels: &[bool]) -> Result<ThresholdChoice, ShiftError> {
    if scores.len() != labels.len() {
        return Err(ShiftError::LengthMismatch(scores.len(), labels.len()));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(ShiftError::NonFinite(i));
    }
    let n = labels.len() as u128;
    let positives = labels.iter().filter(|&&l| l).count() as u128;
    if positives == 0 || positives == n {
        return Err(ShiftError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // TPR + accuracy scaled by positives·n, so ties compare exactly.
    let objective = |tp: u128, tn: u128| tp * n + (tp + tn) * positives;

    // Start at -inf: everything predicted positive.
    let (mut tp, mut tn) = (positives, 0u128);
    let mut best = (objective(tp, tn), f64::NEG_INFINITY, tp, tn);
    let mut i = 0;
    while i < order.len() {
        let value = scores[order[i]];
        while i < order.len() && scores[order[i]] == value {
            if labels[order[i]] {
                tp -= 1;
            } else {
                tn += 1;
            }
            i += 1;
        }
        let threshold = if i < order.len() {
            let next = scores[order[i]];
            let mid = 0.5 * value + 0.5 * next;
            if mid > value { mid } else { next }
        } else {
            f64::INFINITY
        };
        let obj = objective(tp, tn);
        if obj > best.0 {
            best = (obj, threshold, tp, tn);
        }
    }
    let (_, threshold, tp, tn) = best;
    Ok(ThresholdChoice {
        threshold,
        tpr: tp as f64 / positives as f64,
        accuracy: (tp + tn) as f64 / n as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftEstimate {
    pub score: f64,
    pub binary: u8,
    pub threshold_used: f64,
}

/// Calibration plus decision threshold; persisted as
/// `{slope, intercept, r_train, n_train, threshold}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftModel {
    pub slope: f64,
    pub intercept: f64,
    pub r_train: f64,
    pub n_train: usize,
    #[serde(with = "extended_f64")]
    pub threshold: f64,
}

/// JSON has no infinities; `±inf` thresholds are written as strings.
pub mod extended_f64 {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            Err(serde::ser::Error::custom("threshold is NaN"))
        } else {
            s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(D::Error::custom(format!("expected a number, \"inf\" or \"-inf\", got {other:?}"))),
            },
        }
    }
}

impl ShiftModel {
    pub fn new(calibration: CalibrationModel, threshold: f64) -> Self {
        Self {
            slope: calibration.slope,
            intercept: calibration.intercept,
            r_train: calibration.fit_stats.r_train,
            n_train: calibration.fit_stats.n_train,
            threshold,
        }
    }

    pub fn calibration(&self) -> CalibrationModel {
        CalibrationModel {
            slope: self.slope,
            intercept: self.intercept,
            fit_stats: FitStats { r_train: self.r_train, n_train: self.n_train },
        }
    }

    /// Fits the calibration and picks the threshold on the same training set.
    pub fn fit(features: &[f64], truths: &[f64], labels: &[bool]) -> Result<Self, ShiftError> {
        let calibration = calibrate(features, truths)?;
        let scores: Vec<f64> = features.iter().map(|&f| calibration.predict(f)).collect();
        let threshold = select_threshold(&scores, labels)?;
        Ok(Self::new(calibration, threshold))
    }

    pub fn estimate_feature(&self, feature: f64) -> ShiftEstimate {
        classify(self.calibration().predict(feature), self.threshold)
    }

    pub fn estimate(&self, mask: &PreprocessedMask) -> Result<ShiftEstimate, ShiftError> {
        Ok(self.estimate_feature(geometric_shift_feature(mask)?))
    }
}

pub fn classify(score: f64, threshold: f64) -> ShiftEstimate {
    ShiftEstimate {
        score,
        binary: u8::from(score >= threshold),
        threshold_used: threshold,
    }
}

/// One line of a prediction file. Angles are optional so the same file can
/// carry head-pose outputs next to the shift score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub scene_id: String,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yaw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pitch: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roll: Option<f64>,
}

impl Prediction {
    pub fn angles(&self) -> Option<EulerAngles> {
        Some(EulerAngles::new(self.yaw?, self.pitch?, self.roll?))
    }
}

pub fn read_predictions<R: BufRead>(r: R) -> Result<BTreeMap<String, Prediction>, ShiftError> {
    let mut out = BTreeMap::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let p: Prediction = serde_json::from_str(&line).map_err(|e| ShiftError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if !p.score.is_finite() {
            return Err(ShiftError::Parse { line: i + 1, message: "score is not finite".into() });
        }
        if out.contains_key(&p.scene_id) {
            return Err(ShiftError::DuplicateId(p.scene_id));
        }
        out.insert(p.scene_id.clone(), p);
    }
    Ok(out)
}

/// Loads `{scene_id, score}` lines into a map of scores.
pub fn load_external_predictions(path: impl AsRef<Path>) -> Result<BTreeMap<String, f64>, ShiftError> {
    let file = File::open(path)?;
    Ok(read_predictions(BufReader::new(file))?
        .into_iter()
        .map(|(k, p)| (k, p.score))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_threshold_round_trips_through_json() {
        for t in [f64::NEG_INFINITY, f64::INFINITY, 0.25] {
            let m = ShiftModel { slope: 1.0, intercept: 0.0, r_train: 0.5, n_train: 40, threshold: t };
            let text = serde_json::to_string(&m).unwrap();
            let back: ShiftModel = serde_json::from_str(&text).unwrap();
            assert_eq!(back.threshold, t, "{text}");
        }
    }
    use crate::avatar::{render_mask, FigureParams, Keypoints, Point};
    use crate::sampler::{CervicalPose, GroundTruthLabel};

    fn rendered(shift: f64) -> LabeledMask {
        let label = GroundTruthLabel::from_pose("s", CervicalPose { shift, ..CervicalPose::neutral() }, 0.2).unwrap();
        render_mask(&label, &FigureParams::default()).unwrap()
    }

    #[test]
    fn centred_figure_crop_is_symmetric() {
        let p = preprocess(&rendered(0.0)).unwrap();
        assert!((p.crop.mass_center_x - 240.0).abs() <= 1.0);
        let left_margin = p.crop.mass_center_x - p.crop.window_left as f64;
        let right_margin = (p.crop.window_left + p.crop.window_width as i64) as f64 - p.crop.mass_center_x;
        assert!((left_margin - right_margin).abs() <= 1.0);
        assert_eq!(p.labels.len(), 224 * 224);
        assert!(geometric_shift_feature(&p).unwrap().abs() < 0.01);
    }

    #[test]
    fn bottom_row_is_higher_elbow() {
        let mut mask = rendered(0.0);
        mask.keypoints.elbow_left = Some(Point::new(120.0, 400.0));
        mask.keypoints.elbow_right = Some(Point::new(360.0, 420.0));
        assert_eq!(preprocess(&mask).unwrap().crop.bottom_row, 400);
        mask.keypoints.elbow_left = Some(Point::new(120.0, 430.0));
        assert_eq!(preprocess(&mask).unwrap().crop.bottom_row, 420);
    }

    #[test]
    fn crop_aspect_is_three_by_four() {
        let p = preprocess(&rendered(0.5)).unwrap();
        let h = (p.crop.bottom_row - p.crop.top_row) as f64;
        assert!((p.crop.window_width as f64 - 0.75 * h).abs() <= 0.5);
        assert!(p.crop.left_col <= p.crop.right_col && p.crop.right_col <= 480);
    }

    #[test]
    fn crop_tracks_shifted_head() {
        let centred = preprocess(&rendered(0.0)).unwrap();
        let mask = rendered(1.0);
        let p = preprocess(&mask).unwrap();
        let (head, _) = mask.region_centroid(&[HEAD_NECK]).unwrap();
        assert!((p.crop.mass_center_x - head.x).abs() < 0.5);
        assert!(p.crop.mass_center_x > centred.crop.mass_center_x + 10.0);
        // Head-neck pixels are centred in the resized window.
        let (c, _) = centroid(&p.labels, INPUT_SIZE, &[HEAD_NECK]).unwrap();
        assert!((c.x - 112.0).abs() < 1.5, "{c:?}");
    }

    #[test]
    fn missing_keypoint_and_empty_mask() {
        let mut mask = rendered(0.0);
        mask.keypoints.elbow_right = None;
        assert!(matches!(preprocess(&mask), Err(ShiftError::MissingKeypoint("elbow_right"))));
        let mut mask = rendered(0.0);
        mask.labels.iter_mut().filter(|v| **v == HEAD_NECK).for_each(|v| *v = CLOTHES);
        assert!(matches!(preprocess(&mask), Err(ShiftError::EmptyMask(_))));
    }

    #[test]
    fn full_shift_feature_matches_geometry() {
        let params = FigureParams::default();
        let p = preprocess(&rendered(1.0)).unwrap();
        let expected = params.neck_length * 12.5f64.to_radians().sin() / p.crop.window_width as f64;
        let got = geometric_shift_feature(&p).unwrap();
        assert!(got > 0.0);
        assert!((got - expected).abs() < 0.01, "{got} vs {expected}");
    }

    #[test]
    fn feature_flips_under_mirror() {
        let p = preprocess(&rendered(0.7)).unwrap();
        let a = geometric_shift_feature(&p).unwrap();
        let b = geometric_shift_feature(&p.mirrored()).unwrap();
        assert!(a > 0.0);
        assert!((a + b).abs() < 1e-12);
        let q = preprocess(&rendered(0.7).mirrored()).unwrap();
        assert!(geometric_shift_feature(&q).unwrap() < 0.0);
    }

    #[test]
    fn recropping_a_tight_crop_is_stable() {
        let mask = rendered(0.6);
        let p = preprocess(&mask).unwrap();
        let c = p.crop;
        let (w, h) = (c.window_width, c.bottom_row - c.top_row + 1);
        let mut labels = vec![BACKGROUND; (w * h) as usize];
        for r in 0..h - 1 {
            for col in 0..w {
                let src = c.window_left + col as i64;
                if (0..mask.width as i64).contains(&src) {
                    labels[(r * w + col) as usize] = mask.get(src as u32, c.top_row + r);
                }
            }
        }
        let bottom = (h - 1) as f64;
        let tight = LabeledMask {
            width: w,
            height: h,
            labels,
            keypoints: Keypoints {
                elbow_left: Some(Point::new(1.0, bottom)),
                elbow_right: Some(Point::new(w as f64 - 1.0, bottom)),
                head_center: mask.keypoints.head_center,
                trunk_midline_x: 0.0,
            },
            truth: mask.truth.clone(),
        };
        let q = preprocess(&tight).unwrap();
        assert_eq!(q.crop.top_row, 0);
        assert_eq!(q.crop.bottom_row, h - 1);
        assert!(q.crop.window_left.abs() <= 1);
        assert!((q.crop.window_width as i64 - w as i64).abs() <= 1);
    }

    #[test]
    fn calibrate_identity_and_affine() {
        let truths: Vec<f64> = (0..40).map(|i| i as f64 / 39.0).collect();
        let m = calibrate(&truths, &truths).unwrap();
        assert!((m.slope - 1.0).abs() < 1e-12 && m.intercept.abs() < 1e-12);
        assert!((m.fit_stats.r_train - 1.0).abs() < 1e-12);
        assert_eq!(m.fit_stats.n_train, 40);
        let features: Vec<f64> = truths.iter().map(|t| 2.0 * t + 0.1).collect();
        let m = calibrate(&features, &truths).unwrap();
        assert!((m.slope - 0.5).abs() < 1e-12);
        assert!((m.intercept + 0.05).abs() < 1e-12);
    }

    #[test]
    fn calibrate_errors() {
        let t: Vec<f64> = (0..40).map(f64::from).collect();
        assert!(matches!(calibrate(&[1.0; 40], &t), Err(ShiftError::DegenerateFit(_))));
        assert!(matches!(calibrate(&t[..10], &t[..10]), Err(ShiftError::InsufficientSamples(10))));
        assert!(matches!(calibrate(&t, &t[..39]), Err(ShiftError::LengthMismatch(40, 39))));
    }

    #[test]
    fn separable_threshold() {
        let c = select_threshold_detailed(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap();
        assert!((c.threshold - 0.5).abs() < 1e-12);
        assert_eq!(c.objective(), 2.0);
    }

    #[test]
    fn single_class_rejected() {
        assert!(matches!(select_threshold(&[0.1, 0.2], &[true, true]), Err(ShiftError::SingleClass)));
        assert!(matches!(select_threshold(&[0.1, 0.2], &[false, false]), Err(ShiftError::SingleClass)));
    }

    #[test]
    fn ties_prefer_smallest_threshold() {
        // -inf (tp 3, tn 0) and 3.5 (tp 2, tn 3) both score 1.5.
        let scores = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let labels = [true, false, false, false, true, true];
        let c = select_threshold_detailed(&scores, &labels).unwrap();
        assert_eq!(c.threshold, f64::NEG_INFINITY);
        assert_eq!(c.objective(), 1.5);
    }

    #[test]
    fn adjacent_floats_keep_partition() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let t = select_threshold(&[a, b], &[false, true]).unwrap();
        assert!(t > a && t <= b);
    }

    #[test]
    fn prediction_files() {
        assert!(read_predictions("".as_bytes()).unwrap().is_empty());
        let ok = "{\"scene_id\":\"a\",\"score\":0.1}\n{\"scene_id\":\"b\",\"score\":0.2,\"yaw\":1,\"pitch\":2,\"roll\":3}\n{\"scene_id\":\"c\",\"score\":0.3}\n";
        let m = read_predictions(ok.as_bytes()).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m["b"].angles(), Some(EulerAngles::new(1.0, 2.0, 3.0)));
        assert_eq!(m["a"].angles(), None);
        let dup = "{\"scene_id\":\"a\",\"score\":0.1}\n{\"scene_id\":\"a\",\"score\":0.2}\n";
        match read_predictions(dup.as_bytes()) {
            Err(ShiftError::DuplicateId(id)) => assert_eq!(id, "a"),
            other => panic!("{other:?}"),
        }
        match read_predictions("{\"scene_id\":\"a\",\"score\":0.1}\nnot json\n".as_bytes()) {
            Err(ShiftError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn load_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        std::fs::write(&path, "{\"scene_id\":\"x\",\"score\":0.5}\n").unwrap();
        let m = load_external_predictions(&path).unwrap();
        assert_eq!(m["x"], 0.5);
        assert!(matches!(load_external_predictions(dir.path().join("none")), Err(ShiftError::Io(_))));
    }

    #[test]
    fn model_json_shape() {
        let m = ShiftModel { slope: 1.0, intercept: 0.0, r_train: 0.9, n_train: 30, threshold: 0.2 };
        let v = serde_json::to_value(m).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys.len(), 5);
        for k in ["slope", "intercept", "r_train", "n_train", "threshold"] {
            assert!(v.get(k).is_some());
        }
        assert_eq!(m.estimate_feature(0.2).binary, 1);
        assert_eq!(m.estimate_feature(0.19).binary, 0);
    }
}
