//! Evaluation statistics: correlation, classification metrics, rating
//! aggregation and inter-rater agreement.

pub mod agreement;
pub mod metrics;
pub mod ratings;

use thiserror::Error;

use crate::twstrs::Item;

pub use agreement::{bootstrap_alpha_ci, krippendorff_alpha, AgreementResult, DistanceMetric};
pub use metrics::{classification_metrics, mean, pearson_r, ClassificationMetrics, Confusion};
pub use ratings::{mean_rating, read_ratings_csv, write_ratings_csv, ImageKind, RatingMatrix, RatingRecord};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} values, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("zero variance in input")]
    ZeroVariance,
    #[error("no positive cases; true positive rate is undefined")]
    NoPositives,
    #[error("no ratings for image {image_id}, item {item}")]
    NoRatings { image_id: String, item: Item },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid rating record at line {line}: {message}")]
    InvalidRecord { line: usize, message: String },
    #[error("duplicate rating by {rater_id} for {image_id}, item {item}")]
    DuplicateRating { rater_id: String, image_id: String, item: Item },
    #[error("csv: {0}")]
    Csv(String),
}
