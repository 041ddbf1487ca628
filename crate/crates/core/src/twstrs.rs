//! Mapping from continuous head angles to the static TWSTRS postural items.
//!
//! Bin edges are applied to the real-valued magnitude as half-open intervals
//! whose lower edges are the integer labels of the scoring table:
//!
//! | score | torticollis `|yaw|` | laterocollis `|roll|`, antero/retrocollis `|pitch|` |
//! |-------|---------------------|-----------------------------------------------------|
//! | 0     | `[0, 5)`            | `[0, 5)`                                            |
//! | 1     | `[5, 23)`           | `[5, 16)`                                           |
//! | 2     | `[23, 46)`          | `[16, 36)`                                          |
//! | 3     | `[46, 68)`          | `[36, ∞)`                                           |
//! | 4     | `[68, ∞)`           | n/a                                                 |

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::rotation::EulerAngles;

/// Rotations below this magnitude are not considered pathological.
pub const PATHOLOGY_THRESHOLD_DEG: f64 = 5.0;

const TORTICOLLIS_EDGES: [f64; 4] = [PATHOLOGY_THRESHOLD_DEG, 23.0, 46.0, 68.0];
const TILT_EDGES: [f64; 3] = [PATHOLOGY_THRESHOLD_DEG, 16.0, 36.0];

/// One static TWSTRS item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Item {
    Torticollis,
    Laterocollis,
    AnteroRetrocollis,
    LateralShift,
}

impl Item {
    pub const ALL: [Item; 4] = [
        Item::Torticollis,
        Item::Laterocollis,
        Item::AnteroRetrocollis,
        Item::LateralShift,
    ];

    /// Largest legal score for the item.
    pub fn max_score(self) -> u8 {
        match self {
            Item::Torticollis => 4,
            Item::Laterocollis | Item::AnteroRetrocollis => 3,
            Item::LateralShift => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Item::Torticollis => "torticollis",
            Item::Laterocollis => "laterocollis",
            Item::AnteroRetrocollis => "antero_retrocollis",
            Item::LateralShift => "lateral_shift",
        }
    }

    pub fn is_rotational(self) -> bool {
        !matches!(self, Item::LateralShift)
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Item {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Item::ALL
            .into_iter()
            .find(|i| i.as_str() == s)
            .ok_or_else(|| format!("unknown TWSTRS item '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SagittalDirection {
    #[default]
    None,
    Anterocollis,
    Retrocollis,
}

impl SagittalDirection {
    pub fn as_str(self) -> &'static str {
        match self {
            SagittalDirection::None => "none",
            SagittalDirection::Anterocollis => "anterocollis",
            SagittalDirection::Retrocollis => "retrocollis",
        }
    }
}

/// Per-item ordinal TWSTRS scores, optionally with the angles that produced them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwstrsAssessment {
    pub torticollis: u8,
    pub laterocollis: u8,
    pub antero_retrocollis: u8,
    pub antero_retro_direction: SagittalDirection,
    pub lateral_shift: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_angles: Option<EulerAngles>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_shift: Option<f64>,
}

impl TwstrsAssessment {
    pub fn score(&self, item: Item) -> u8 {
        match item {
            Item::Torticollis => self.torticollis,
            Item::Laterocollis => self.laterocollis,
            Item::AnteroRetrocollis => self.antero_retrocollis,
            Item::LateralShift => self.lateral_shift,
        }
    }

    /// Checks per-item ranges and the direction/score consistency.
    pub fn is_consistent(&self) -> bool {
        Item::ALL.iter().all(|&i| self.score(i) <= i.max_score())
            && ((self.antero_retrocollis == 0)
                == (self.antero_retro_direction == SagittalDirection::None))
    }
}

fn bin(magnitude: f64, edges: &[f64]) -> u8 {
    edges.iter().take_while(|&&edge| magnitude >= edge).count() as u8
}

pub fn torticollis_score(yaw_deg: f64) -> u8 {
    bin(yaw_deg.abs(), &TORTICOLLIS_EDGES)
}

pub fn laterocollis_score(roll_deg: f64) -> u8 {
    bin(roll_deg.abs(), &TILT_EDGES)
}

pub fn antero_retrocollis_score(pitch_deg: f64) -> u8 {
    bin(pitch_deg.abs(), &TILT_EDGES)
}

pub fn angles_to_twstrs(e: &EulerAngles, shift_detected: bool) -> TwstrsAssessment {
    let antero_retrocollis = antero_retrocollis_score(e.pitch);
    let antero_retro_direction = match antero_retrocollis {
        0 => SagittalDirection::None,
        _ if e.pitch > 0.0 => SagittalDirection::Retrocollis,
        _ => SagittalDirection::Anterocollis,
    };
    TwstrsAssessment {
        torticollis: torticollis_score(e.yaw),
        laterocollis: laterocollis_score(e.roll),
        antero_retrocollis,
        antero_retro_direction,
        lateral_shift: u8::from(shift_detected),
        source_angles: Some(*e),
        source_shift: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_examples() {
        let a = angles_to_twstrs(&EulerAngles::new(23.0, 0.0, 0.0), false);
        assert_eq!((a.torticollis, a.laterocollis, a.antero_retrocollis), (2, 0, 0));

        let a = angles_to_twstrs(&EulerAngles::new(4.9, 4.9, 4.9), false);
        assert_eq!((a.torticollis, a.laterocollis, a.antero_retrocollis, a.lateral_shift), (0, 0, 0, 0));
        assert_eq!(a.antero_retro_direction, SagittalDirection::None);

        let a = angles_to_twstrs(&EulerAngles::new(0.0, -16.0, 40.0), false);
        assert_eq!(a.laterocollis, 3);
        assert_eq!(a.antero_retrocollis, 2);
        assert_eq!(a.antero_retro_direction, SagittalDirection::Anterocollis);

        assert_eq!(angles_to_twstrs(&EulerAngles::new(90.0, 0.0, 0.0), false).torticollis, 4);
    }

    #[test]
    fn integer_boundaries() {
        for (deg, want) in [(4.0, 0), (5.0, 1), (22.0, 1), (23.0, 2), (45.0, 2), (46.0, 3), (67.0, 3), (68.0, 4)] {
            assert_eq!(torticollis_score(deg), want, "yaw {deg}");
            assert_eq!(torticollis_score(-deg), want, "yaw -{deg}");
        }
        for (deg, want) in [(4.0, 0), (5.0, 1), (15.0, 1), (16.0, 2), (35.0, 2), (36.0, 3)] {
            assert_eq!(laterocollis_score(deg), want, "roll {deg}");
            assert_eq!(antero_retrocollis_score(-deg), want, "pitch -{deg}");
        }
    }

    #[test]
    fn fractional_values_use_lower_edges() {
        assert_eq!(torticollis_score(22.6), 1);
        assert_eq!(torticollis_score(4.999), 0);
        assert_eq!(laterocollis_score(35.5), 2);
    }

    #[test]
    fn large_yaw_clamps_to_four() {
        assert_eq!(torticollis_score(135.0), 4);
        assert_eq!(torticollis_score(-180.0), 4);
    }

    #[test]
    fn direction_and_shift() {
        let a = angles_to_twstrs(&EulerAngles::new(0.0, 20.0, 0.0), true);
        assert_eq!(a.antero_retro_direction, SagittalDirection::Retrocollis);
        assert_eq!(a.lateral_shift, 1);
        assert!(a.is_consistent());
    }

    #[test]
    fn item_parsing() {
        for item in Item::ALL {
            assert_eq!(item.as_str().parse::<Item>().unwrap(), item);
        }
        assert!("shoulder".parse::<Item>().is_err());
    }

    proptest! {
        #[test]
        fn monotone_in_magnitude(a in 0.0f64..180.0, b in 0.0f64..180.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(torticollis_score(lo) <= torticollis_score(hi));
            prop_assert!(laterocollis_score(lo) <= laterocollis_score(hi));
            prop_assert!(antero_retrocollis_score(lo) <= antero_retrocollis_score(hi));
        }

        #[test]
        fn zero_below_threshold(x in -4.999_999f64..4.999_999) {
            let a = angles_to_twstrs(&EulerAngles::new(x, x, x), false);
            prop_assert_eq!((a.torticollis, a.laterocollis, a.antero_retrocollis), (0, 0, 0));
        }

        #[test]
        fn assessment_consistent(y in -180.0f64..180.0, p in -90.0f64..90.0, r in -180.0f64..180.0, s: bool) {
            prop_assert!(angles_to_twstrs(&EulerAngles::new(y, p, r), s).is_consistent());
        }
    }
}
