//! Correlation and classification metrics.

use serde::{Deserialize, Serialize};

use super::StatsError;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample Pearson correlation.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StatsError::TooFew { needed: 3, got: x.len() });
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Confusion counts for a binary decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn from_pairs(pred: &[bool], truth: &[bool]) -> Result<Self, StatsError> {
        if pred.len() != truth.len() {
            return Err(StatsError::LengthMismatch(pred.len(), truth.len()));
        }
        let mut c = Confusion::default();
        for (&p, &t) in pred.iter().zip(truth) {
            match (p, t) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn tpr(&self) -> Result<f64, StatsError> {
        match self.tp + self.fn_ {
            0 => Err(StatsError::NoPositives),
            p => Ok(self.tp as f64 / p as f64),
        }
    }

    /// `None` for an empty set.
    pub fn accuracy(&self) -> Option<f64> {
        match self.total() {
            0 => None,
            n => Some((self.tp + self.tn) as f64 / n as f64),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub tpr: f64,
    pub accuracy: f64,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tp: usize,
}

pub fn classification_metrics(pred: &[bool], truth: &[bool]) -> Result<ClassificationMetrics, StatsError> {
    let c = Confusion::from_pairs(pred, truth)?;
    Ok(ClassificationMetrics {
        tpr: c.tpr()?,
        accuracy: c.accuracy().ok_or(StatsError::TooFew { needed: 1, got: 0 })?,
        tn: c.tn,
        fp: c.fp,
        fn_: c.fn_,
        tp: c.tp,
    })
}
