//! Ground-truth pose sampling for the synthetic avatar dataset.
//!
//! Each of the six cervical angles (head and neck yaw/pitch/roll) is drawn
//! independently from a zero-inflated Gaussian. A lateral shift is modelled as
//! opposing head and neck roll of up to 12.5° each. Every scene owns an RNG
//! stream derived from `(seed, index)`, so output is independent of generation
//! order and thread count.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rotation::{compose_head_neck, EulerAngles};
use crate::twstrs::{angles_to_twstrs, TwstrsAssessment};

/// Opposing head/neck roll at `shift = 1`.
pub const MAX_SHIFT_ROTATION_DEG: f64 = 12.5;
pub const DEFAULT_SIGMA_DEG: f64 = 10.0;
pub const DEFAULT_ZERO_PROB: f64 = 0.2;
/// Ground-truth shift values at or above this are labelled as lateral shift present.
pub const DEFAULT_SHIFT_THRESHOLD: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("invalid sampler config: {0}")]
    InvalidConfig(String),
    #[error("shift {0} is outside [0, 1]")]
    OutOfRange(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "values")]
pub enum ShiftDistribution {
    Uniform01,
    /// Each scene picks one of the listed values uniformly at random.
    FixedList(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub sigma_deg: f64,
    pub zero_prob: f64,
    pub shift_distribution: ShiftDistribution,
    pub shift_threshold: f64,
    pub seed: u64,
    pub count: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            sigma_deg: DEFAULT_SIGMA_DEG,
            zero_prob: DEFAULT_ZERO_PROB,
            shift_distribution: ShiftDistribution::Uniform01,
            shift_threshold: DEFAULT_SHIFT_THRESHOLD,
            seed: 0,
            count: 1,
        }
    }
}

impl SamplerConfig {
    pub fn with_seed(seed: u64, count: usize) -> Self {
        Self {
            seed,
            count,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        let bad = |msg: String| Err(SamplerError::InvalidConfig(msg));
        if !(self.sigma_deg.is_finite() && self.sigma_deg > 0.0) {
            return bad(format!("sigma_deg must be > 0, got {}", self.sigma_deg));
        }
        if !(0.0..=1.0).contains(&self.zero_prob) {
            return bad(format!("zero_prob must be in [0, 1], got {}", self.zero_prob));
        }
        if !(0.0..=1.0).contains(&self.shift_threshold) {
            return bad(format!("shift_threshold must be in [0, 1], got {}", self.shift_threshold));
        }
        if self.count == 0 {
            return bad("count must be at least 1".into());
        }
        if let ShiftDistribution::FixedList(values) = &self.shift_distribution {
            if values.is_empty() {
                return bad("fixed shift list is empty".into());
            }
            if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return bad(format!("fixed shift value {v} is outside [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Sampled head and neck rotations plus the normalised lateral shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CervicalPose {
    pub head: EulerAngles,
    pub neck: EulerAngles,
    pub shift: f64,
}

impl CervicalPose {
    pub fn neutral() -> Self {
        Self {
            head: EulerAngles::zero(),
            neck: EulerAngles::zero(),
            shift: 0.0,
        }
    }

    /// Head and neck orientations after the opposing shift rotations are applied.
    pub fn shifted_segments(&self) -> Result<(EulerAngles, EulerAngles), SamplerError> {
        let (head_delta, neck_delta) = shift_to_opposing_angles(self.shift)?;
        Ok((self.head.offset_by(&head_delta), self.neck.offset_by(&neck_delta)))
    }

    /// Orientation seen by the camera, including the shift rotations.
    pub fn composed(&self) -> Result<EulerAngles, SamplerError> {
        let (head, neck) = self.shifted_segments()?;
        Ok(compose_head_neck(&head, &neck))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthLabel {
    pub scene_id: String,
    pub pose: CervicalPose,
    pub composed: EulerAngles,
    pub assessment: TwstrsAssessment,
}

impl GroundTruthLabel {
    pub fn from_pose(scene_id: impl Into<String>, pose: CervicalPose, shift_threshold: f64) -> Result<Self, SamplerError> {
        let composed = pose.composed()?;
        let mut assessment = angles_to_twstrs(&composed, pose.shift >= shift_threshold);
        assessment.source_shift = Some(pose.shift);
        Ok(Self {
            scene_id: scene_id.into(),
            pose,
            composed,
            assessment,
        })
    }
}

/// Head (first) and neck (second) roll deltas for a normalised shift.
pub fn shift_to_opposing_angles(shift: f64) -> Result<(EulerAngles, EulerAngles), SamplerError> {
    if !(0.0..=1.0).contains(&shift) {
        return Err(SamplerError::OutOfRange(shift));
    }
    let deg = MAX_SHIFT_ROTATION_DEG * shift;
    Ok((EulerAngles::new(0.0, 0.0, -deg), EulerAngles::new(0.0, 0.0, deg)))
}

fn sample_angle<R: Rng + ?Sized>(rng: &mut R, normal: &Normal<f64>, zero_prob: f64, limit: f64) -> f64 {
    if rng.random::<f64>() < zero_prob {
        return 0.0;
    }
    loop {
        let v = normal.sample(rng);
        if (-limit..=limit).contains(&v) {
            return v;
        }
    }
}

fn sample_euler<R: Rng + ?Sized>(rng: &mut R, normal: &Normal<f64>, zero_prob: f64) -> EulerAngles {
    EulerAngles {
        yaw: sample_angle(rng, normal, zero_prob, EulerAngles::YAW_LIMIT),
        pitch: sample_angle(rng, normal, zero_prob, EulerAngles::PITCH_LIMIT),
        roll: sample_angle(rng, normal, zero_prob, EulerAngles::ROLL_LIMIT),
    }
}

/// Draws one pose. The config is assumed valid.
pub fn sample_pose<R: Rng + ?Sized>(rng: &mut R, config: &SamplerConfig) -> CervicalPose {
    let normal = Normal::new(0.0, config.sigma_deg).expect("sigma validated");
    let head = sample_euler(rng, &normal, config.zero_prob);
    let neck = sample_euler(rng, &normal, config.zero_prob);
    let shift = match &config.shift_distribution {
        ShiftDistribution::Uniform01 => rng.random::<f64>(),
        ShiftDistribution::FixedList(values) => values[rng.random_range(0..values.len())],
    };
    CervicalPose { head, neck, shift }
}

/// RNG for scene `index` of a dataset seeded with `seed`.
pub fn scene_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn scene_id(index: usize) -> String {
    format!("scene_{index:06}")
}

pub fn generate_label(config: &SamplerConfig, index: usize) -> GroundTruthLabel {
    let mut rng = scene_rng(config.seed, index as u64);
    let pose = sample_pose(&mut rng, config);
    GroundTruthLabel::from_pose(scene_id(index), pose, config.shift_threshold)
        .expect("sampled shift lies in [0, 1]")
}

pub fn generate_dataset(config: &SamplerConfig) -> Result<Vec<GroundTruthLabel>, SamplerError> {
    config.validate()?;
    Ok((0..config.count)
        .into_par_iter()
        .map(|i| generate_label(config, i))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_prob_one_gives_neutral_angles() {
        let config = SamplerConfig {
            zero_prob: 1.0,
            ..SamplerConfig::default()
        };
        let mut rng = scene_rng(3, 0);
        for _ in 0..100 {
            let p = sample_pose(&mut rng, &config);
            assert_eq!(p.head, EulerAngles::zero());
            assert_eq!(p.neck, EulerAngles::zero());
        }
    }

    #[test]
    fn opposing_angles() {
        let (h, n) = shift_to_opposing_angles(0.0).unwrap();
        assert_eq!(h.roll.abs(), 0.0);
        assert_eq!(n.roll, 0.0);
        let (h, n) = shift_to_opposing_angles(1.0).unwrap();
        assert_eq!((h.roll, n.roll), (-12.5, 12.5));
        let (h, n) = shift_to_opposing_angles(0.4).unwrap();
        assert!((h.roll + 5.0).abs() < 1e-12 && (n.roll - 5.0).abs() < 1e-12);
        assert_eq!((h.yaw, h.pitch, n.yaw, n.pitch), (0.0, 0.0, 0.0, 0.0));
        assert!(matches!(shift_to_opposing_angles(1.01), Err(SamplerError::OutOfRange(_))));
        assert!(matches!(shift_to_opposing_angles(-0.1), Err(SamplerError::OutOfRange(_))));
    }

    #[test]
    fn determinism() {
        let config = SamplerConfig::with_seed(42, 1);
        assert_eq!(generate_dataset(&config).unwrap(), generate_dataset(&config).unwrap());
    }

    #[test]
    fn order_independent() {
        let config = SamplerConfig::with_seed(9, 50);
        let all = generate_dataset(&config).unwrap();
        for i in [0, 17, 49] {
            assert_eq!(all[i], generate_label(&config, i));
        }
    }

    #[test]
    fn labels_are_consistent() {
        let config = SamplerConfig::with_seed(11, 2000);
        let labels = generate_dataset(&config).unwrap();
        let mut ids = std::collections::HashSet::new();
        for l in &labels {
            assert!(ids.insert(l.scene_id.clone()));
            assert!((0.0..=1.0).contains(&l.pose.shift));
            assert!(l.pose.head.is_valid() && l.pose.neck.is_valid() && l.composed.is_valid());
            let expected = angles_to_twstrs(&l.composed, l.pose.shift >= DEFAULT_SHIFT_THRESHOLD);
            assert_eq!(l.assessment.torticollis, expected.torticollis);
            assert_eq!(l.assessment.laterocollis, expected.laterocollis);
            assert_eq!(l.assessment.antero_retrocollis, expected.antero_retrocollis);
            assert_eq!(l.assessment.antero_retro_direction, expected.antero_retro_direction);
            assert_eq!(l.assessment.lateral_shift, expected.lateral_shift);
        }
    }

    #[test]
    fn fixed_list_only_emits_listed_values() {
        let config = SamplerConfig {
            shift_distribution: ShiftDistribution::FixedList(vec![0.0, 0.5, 1.0]),
            count: 300,
            ..SamplerConfig::default()
        };
        let labels = generate_dataset(&config).unwrap();
        assert!(labels.iter().all(|l| [0.0, 0.5, 1.0].contains(&l.pose.shift)));
        for v in [0.0, 0.5, 1.0] {
            assert!(labels.iter().any(|l| l.pose.shift == v));
        }
    }

    #[test]
    fn uniform_shift_mean() {
        let labels = generate_dataset(&SamplerConfig::with_seed(5, 10_000)).unwrap();
        let mean = labels.iter().map(|l| l.pose.shift).sum::<f64>() / labels.len() as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean shift {mean}");
    }

    #[test]
    fn invalid_configs() {
        let base = SamplerConfig::default();
        for bad in [
            SamplerConfig { sigma_deg: 0.0, ..base.clone() },
            SamplerConfig { zero_prob: 1.5, ..base.clone() },
            SamplerConfig { count: 0, ..base.clone() },
            SamplerConfig { shift_distribution: ShiftDistribution::FixedList(vec![]), ..base.clone() },
            SamplerConfig { shift_distribution: ShiftDistribution::FixedList(vec![2.0]), ..base.clone() },
        ] {
            assert!(matches!(generate_dataset(&bad), Err(SamplerError::InvalidConfig(_))));
        }
    }
}
