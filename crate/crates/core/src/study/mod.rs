//! Rating-study state: rater registration and image assignment, rating
//! collection with a durable log, and live agreement snapshots.
//!
//! The type is synchronous and single-writer; callers share it behind a
//! lock. Every mutation is logged before it is applied in memory.

mod manifest;
mod store;

pub use manifest::{ImageEntry, Quota, StudyManifest};
pub use store::{EventLog, LogEvent};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

use crate::stats::{
    bootstrap_alpha_ci, write_ratings_csv, AgreementResult, DistanceMetric, ImageKind, RatingMatrix, RatingRecord,
    StatsError,
};
use crate::twstrs::Item;

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("rater {0} is already registered")]
    DuplicateRater(String),
    #[error("unknown rater {0}")]
    UnknownRater(String),
    #[error("invalid rater id: {0}")]
    InvalidRaterId(String),
    #[error("missing or invalid token for rater {0}")]
    Unauthorized(String),
    #[error("rater {rater_id} submitted {got} but the current image is {}", expected.as_deref().unwrap_or("none (assignment complete)"))]
    WrongImage { rater_id: String, expected: Option<String>, got: String },
    #[error("{item} score {value} is out of range 0..={max}")]
    OutOfRangeScore { item: Item, value: u8, max: u8 },
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("corrupt study log at line {line}: {message}")]
    CorruptLog { line: usize, message: String },
    #[error("study log io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// One submission: a score for every item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scores {
    pub torticollis: u8,
    pub laterocollis: u8,
    pub antero_retrocollis: u8,
    pub lateral_shift: u8,
}

impl Scores {
    pub fn get(&self, item: Item) -> u8 {
        match item {
            Item::Torticollis => self.torticollis,
            Item::Laterocollis => self.laterocollis,
            Item::AnteroRetrocollis => self.antero_retrocollis,
            Item::LateralShift => self.lateral_shift,
        }
    }

    pub fn validate(&self) -> Result<(), StudyError> {
        for item in Item::ALL {
            let (value, max) = (self.get(item), item.max_score());
            if value > max {
                return Err(StudyError::OutOfRangeScore { item, value, max });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub rater_id: String,
    pub images: Vec<String>,
    pub cursor: usize,
}

impl Assignment {
    pub fn current(&self) -> Option<&str> {
        self.images.get(self.cursor).map(String::as_str)
    }

    pub fn remaining(&self) -> usize {
        self.images.len() - self.cursor
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Registration {
    pub rater_id: String,
    pub token: String,
    pub n_images: usize,
    pub n_avatar: usize,
    pub n_real: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NextImage {
    Task {
        image_id: String,
        image_kind: ImageKind,
        front_uri: String,
        side_uri: String,
        items_to_rate: Vec<ItemRange>,
        /// Zero-based position in the assignment.
        position: usize,
        total: usize,
    },
    Done {
        completed: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemRange {
    pub item: Item,
    pub max: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub rater_id: String,
    pub image_id: String,
    pub cursor: usize,
    pub remaining: usize,
}

#[derive(Debug, Clone)]
struct RaterState {
    token: String,
    assignment: Assignment,
}

/// Nominal for the presence item, ordinal for the graded ones.
pub fn metric_for(item: Item) -> DistanceMetric {
    if item == Item::LateralShift {
        DistanceMetric::Nominal
    } else {
        DistanceMetric::Ordinal
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemAgreement {
    pub item: Item,
    pub image_kind: ImageKind,
    pub metric: DistanceMetric,
    pub result: Option<AgreementResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementSnapshot {
    pub seed: u64,
    pub n_bootstrap: usize,
    pub n_raters: usize,
    pub n_submissions: usize,
    pub items: Vec<ItemAgreement>,
    /// Number of completed ratings → number of images with that count.
    pub rating_count_histogram: BTreeMap<usize, usize>,
    pub images_at_target: usize,
    pub target_ratings_per_image: usize,
}

/// Per-item, per-kind agreement over `records`. Items that lack data carry
/// an error message instead of a result.
pub fn agreement_by_item(records: &[RatingRecord], n_bootstrap: usize, seed: u64) -> Result<Vec<ItemAgreement>, StudyError> {
    let matrix = RatingMatrix::from_records(records)?;
    let mut out = Vec::new();
    for kind in ImageKind::ALL {
        let sub = matrix.of_kind(kind);
        for item in Item::ALL {
            let metric = metric_for(item);
            let (result, error) = match bootstrap_alpha_ci(&sub.units(item), metric, n_bootstrap, seed) {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            };
            out.push(ItemAgreement { item, image_kind: kind, metric, result, error });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SnapshotInput {
    seed: u64,
    n_raters: usize,
    n_submissions: usize,
    ratings: Vec<RatingRecord>,
    rating_count_histogram: BTreeMap<usize, usize>,
    images_at_target: usize,
    target_ratings_per_image: usize,
}

impl SnapshotInput {
    pub fn compute(self, n_bootstrap: usize) -> Result<AgreementSnapshot, StudyError> {
        Ok(AgreementSnapshot {
            seed: self.seed,
            n_bootstrap,
            n_raters: self.n_raters,
            n_submissions: self.n_submissions,
            items: agreement_by_item(&self.ratings, n_bootstrap, self.seed)?,
            rating_count_histogram: self.rating_count_histogram,
            images_at_target: self.images_at_target,
            target_ratings_per_image: self.target_ratings_per_image,
        })
    }
}

fn make_token(seed: u64, index: usize) -> String {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let mut bytes = [0u8; 16];
    rng.fill_bytes(&mut bytes);
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug)]
pub struct Study {
    manifest: StudyManifest,
    seed: u64,
    raters: BTreeMap<String, RaterState>,
    assigned: HashMap<String, usize>,
    completed: HashMap<String, usize>,
    ratings: Vec<RatingRecord>,
    log: Option<EventLog>,
}

impl Study {
    /// In-memory study without persistence.
    pub fn new(manifest: StudyManifest, seed: u64) -> Result<Self, StudyError> {
        manifest.validate()?;
        Ok(Study {
            manifest,
            seed,
            raters: BTreeMap::new(),
            assigned: HashMap::new(),
            completed: HashMap::new(),
            ratings: Vec::new(),
            log: None,
        })
    }

    /// Persistent study; replays the log at `path` if it exists.
    pub fn open(manifest: StudyManifest, seed: u64, path: &Path) -> Result<Self, StudyError> {
        let mut study = Study::new(manifest, seed)?;
        let (log, events) = EventLog::open(path)?;
        for (i, event) in events.into_iter().enumerate() {
            let corrupt = |e: StudyError| StudyError::CorruptLog { line: i + 1, message: e.to_string() };
            match event {
                LogEvent::Registered { rater_id, token, images } => {
                    study.check_assignment(&images).map_err(corrupt)?;
                    if study.raters.contains_key(&rater_id) {
                        return Err(corrupt(StudyError::DuplicateRater(rater_id)));
                    }
                    study.apply_registration(rater_id, token, images);
                }
                LogEvent::Rated { rater_id, image_id, scores } => {
                    study.check_submission(&rater_id, &image_id, &scores).map_err(corrupt)?;
                    study.apply_rating(&rater_id, &image_id, &scores);
                }
            }
        }
        study.log = Some(log);
        Ok(study)
    }

    pub fn manifest(&self) -> &StudyManifest {
        &self.manifest
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn ratings(&self) -> &[RatingRecord] {
        &self.ratings
    }

    pub fn n_raters(&self) -> usize {
        self.raters.len()
    }

    pub fn assignment(&self, rater_id: &str) -> Option<&Assignment> {
        self.raters.get(rater_id).map(|r| &r.assignment)
    }

    /// How many raters were assigned each image.
    pub fn assignment_counts(&self) -> &HashMap<String, usize> {
        &self.assigned
    }

    pub fn completed_count(&self, image_id: &str) -> usize {
        self.completed.get(image_id).copied().unwrap_or(0)
    }

    /// Least-assigned images of each kind (ties by image id), with kinds
    /// interleaved.
    fn choose_images(&self) -> Vec<String> {
        let quota = self.manifest.per_rater_quota;
        let mut per_kind: Vec<Vec<String>> = ImageKind::ALL
            .iter()
            .map(|&kind| {
                let mut pool: Vec<&ImageEntry> = self.manifest.images.iter().filter(|i| i.image_kind == kind).collect();
                pool.sort_by(|a, b| {
                    let ca = self.assigned.get(&a.image_id).copied().unwrap_or(0);
                    let cb = self.assigned.get(&b.image_id).copied().unwrap_or(0);
                    ca.cmp(&cb).then_with(|| a.image_id.cmp(&b.image_id))
                });
                pool.into_iter().take(quota.for_kind(kind)).map(|i| i.image_id.clone()).rev().collect()
            })
            .collect();
        let mut out = Vec::with_capacity(quota.total());
        loop {
            let mut any = false;
            for list in per_kind.iter_mut() {
                if let Some(id) = list.pop() {
                    out.push(id);
                    any = true;
                }
            }
            if !any {
                break;
            }
        }
        out
    }

    fn check_assignment(&self, images: &[String]) -> Result<(), StudyError> {
        let mut seen = std::collections::HashSet::new();
        for id in images {
            if self.manifest.image(id).is_none() {
                return Err(StudyError::InvalidManifest(format!("image {id} is not in the manifest")));
            }
            if !seen.insert(id) {
                return Err(StudyError::InvalidManifest(format!("image {id} assigned twice")));
            }
        }
        Ok(())
    }

    fn apply_registration(&mut self, rater_id: String, token: String, images: Vec<String>) {
        for id in &images {
            *self.assigned.entry(id.clone()).or_default() += 1;
        }
        let assignment = Assignment { rater_id: rater_id.clone(), images, cursor: 0 };
        self.raters.insert(rater_id, RaterState { token, assignment });
    }

    pub fn register_rater(&mut self, rater_id: &str) -> Result<Registration, StudyError> {
        if rater_id.is_empty() || rater_id.len() > 128 || rater_id.chars().any(|c| c.is_control() || c == '/') {
            return Err(StudyError::InvalidRaterId(rater_id.to_string()));
        }
        if self.raters.contains_key(rater_id) {
            return Err(StudyError::DuplicateRater(rater_id.to_string()));
        }
        let images = self.choose_images();
        let token = make_token(self.seed, self.raters.len());
        if let Some(log) = self.log.as_mut() {
            log.append(&LogEvent::Registered {
                rater_id: rater_id.to_string(),
                token: token.clone(),
                images: images.clone(),
            })?;
        }
        let n_avatar = images
            .iter()
            .filter(|id| self.manifest.image(id).map(|i| i.image_kind) == Some(ImageKind::Avatar))
            .count();
        let n_images = images.len();
        self.apply_registration(rater_id.to_string(), token.clone(), images);
        Ok(Registration {
            rater_id: rater_id.to_string(),
            token,
            n_images,
            n_avatar,
            n_real: n_images - n_avatar,
        })
    }

    pub fn authenticate(&self, rater_id: &str, token: &str) -> Result<(), StudyError> {
        let state = self.raters.get(rater_id).ok_or_else(|| StudyError::UnknownRater(rater_id.to_string()))?;
        // Constant-time comparison is unnecessary for a study harness.
        if state.token == token {
            Ok(())
        } else {
            Err(StudyError::Unauthorized(rater_id.to_string()))
        }
    }

    pub fn next_image(&self, rater_id: &str) -> Result<NextImage, StudyError> {
        let state = self.raters.get(rater_id).ok_or_else(|| StudyError::UnknownRater(rater_id.to_string()))?;
        let a = &state.assignment;
        let Some(id) = a.current() else {
            return Ok(NextImage::Done { completed: a.cursor });
        };
        let img = self
            .manifest
            .image(id)
            .expect("assignments only reference manifest images");
        Ok(NextImage::Task {
            image_id: img.image_id.clone(),
            image_kind: img.image_kind,
            front_uri: img.front_uri.clone(),
            side_uri: img.side_uri.clone(),
            items_to_rate: Item::ALL.iter().map(|&item| ItemRange { item, max: item.max_score() }).collect(),
            position: a.cursor,
            total: a.images.len(),
        })
    }

    fn check_submission(&self, rater_id: &str, image_id: &str, scores: &Scores) -> Result<(), StudyError> {
        let state = self.raters.get(rater_id).ok_or_else(|| StudyError::UnknownRater(rater_id.to_string()))?;
        let expected = state.assignment.current();
        if expected != Some(image_id) {
            return Err(StudyError::WrongImage {
                rater_id: rater_id.to_string(),
                expected: expected.map(str::to_string),
                got: image_id.to_string(),
            });
        }
        scores.validate()
    }

    fn apply_rating(&mut self, rater_id: &str, image_id: &str, scores: &Scores) {
        let kind = self.manifest.image(image_id).map(|i| i.image_kind).unwrap_or(ImageKind::Avatar);
        for item in Item::ALL {
            self.ratings.push(RatingRecord {
                rater_id: rater_id.to_string(),
                image_id: image_id.to_string(),
                image_kind: kind,
                item,
                value: scores.get(item),
            });
        }
        *self.completed.entry(image_id.to_string()).or_default() += 1;
        if let Some(state) = self.raters.get_mut(rater_id) {
            state.assignment.cursor += 1;
        }
    }

    /// Validates, logs durably, then advances the rater's cursor.
    pub fn submit_rating(&mut self, rater_id: &str, image_id: &str, scores: Scores) -> Result<Ack, StudyError> {
        self.check_submission(rater_id, image_id, &scores)?;
        if let Some(log) = self.log.as_mut() {
            log.append(&LogEvent::Rated {
                rater_id: rater_id.to_string(),
                image_id: image_id.to_string(),
                scores,
            })?;
        }
        self.apply_rating(rater_id, image_id, &scores);
        let a = &self.raters[rater_id].assignment;
        Ok(Ack {
            rater_id: rater_id.to_string(),
            image_id: image_id.to_string(),
            cursor: a.cursor,
            remaining: a.remaining(),
        })
    }

    pub fn rating_count_histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for img in &self.manifest.images {
            *hist.entry(self.completed_count(&img.image_id)).or_default() += 1;
        }
        hist
    }

    /// Copies what a snapshot needs so the expensive part can run without
    /// holding a lock on the study.
    pub fn snapshot_input(&self) -> SnapshotInput {
        let target = self.manifest.target_ratings_per_image;
        SnapshotInput {
            seed: self.seed,
            n_raters: self.raters.len(),
            n_submissions: self.completed.values().sum(),
            ratings: self.ratings.clone(),
            rating_count_histogram: self.rating_count_histogram(),
            images_at_target: self.manifest.images.iter().filter(|i| self.completed_count(&i.image_id) >= target).count(),
            target_ratings_per_image: target,
        }
    }

    /// Agreement computed with the study seed, so repeated snapshots of the
    /// same data are identical.
    pub fn agreement_snapshot(&self, n_bootstrap: usize) -> Result<AgreementSnapshot, StudyError> {
        self.snapshot_input().compute(n_bootstrap)
    }

    pub fn export_csv<W: Write>(&self, w: W) -> Result<(), StudyError> {
        Ok(write_ratings_csv(w, &self.ratings)?)
    }
}
