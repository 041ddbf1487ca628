//! Dataset file format: one ground-truth label per line.
//!
//! ```text
//! {"scene_id":"scene_000000","head":{"yaw":..,"pitch":..,"roll":..},"neck":{..},
//!  "shift":..,"composed":{..},"twstrs":{"torticollis":..,"laterocollis":..,
//!  "antero_retrocollis":..,"direction":"none","lateral_shift":..}}
//! ```
//!
//! Angles and shifts are written with exactly six decimals.

use serde::{Deserialize, Serialize};
use std::io::{self, BufRead, Write};

use crate::jsonl::{fixed6, read_jsonl, JsonlError};
use crate::rotation::EulerAngles;
use crate::sampler::{CervicalPose, GroundTruthLabel};
use crate::twstrs::{SagittalDirection, TwstrsAssessment};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TwstrsRecord {
    torticollis: u8,
    laterocollis: u8,
    antero_retrocollis: u8,
    direction: SagittalDirection,
    lateral_shift: u8,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LabelRecord {
    scene_id: String,
    head: EulerAngles,
    neck: EulerAngles,
    shift: f64,
    composed: EulerAngles,
    twstrs: TwstrsRecord,
}

fn euler_json(e: &EulerAngles) -> String {
    format!(
        "{{\"yaw\":{},\"pitch\":{},\"roll\":{}}}",
        fixed6(e.yaw),
        fixed6(e.pitch),
        fixed6(e.roll)
    )
}

pub fn format_label(label: &GroundTruthLabel) -> String {
    let a = &label.assessment;
    format!(
        "{{\"scene_id\":{},\"head\":{},\"neck\":{},\"shift\":{},\"composed\":{},\"twstrs\":{{\"torticollis\":{},\"laterocollis\":{},\"antero_retrocollis\":{},\"direction\":\"{}\",\"lateral_shift\":{}}}}}",
        serde_json::Value::String(label.scene_id.clone()),
        euler_json(&label.pose.head),
        euler_json(&label.pose.neck),
        fixed6(label.pose.shift),
        euler_json(&label.composed),
        a.torticollis,
        a.laterocollis,
        a.antero_retrocollis,
        a.antero_retro_direction.as_str(),
        a.lateral_shift,
    )
}

pub fn write_dataset<W: Write>(mut w: W, labels: &[GroundTruthLabel]) -> io::Result<()> {
    for label in labels {
        writeln!(w, "{}", format_label(label))?;
    }
    w.flush()
}

/// Reads labels as stored; scores are taken from the file, not recomputed.
pub fn read_dataset<R: BufRead>(r: R) -> Result<Vec<GroundTruthLabel>, JsonlError> {
    let records: Vec<LabelRecord> = read_jsonl(r)?;
    Ok(records.into_iter().map(LabelRecord::into_label).collect())
}

impl LabelRecord {
    fn into_label(self) -> GroundTruthLabel {
        let t = self.twstrs;
        GroundTruthLabel {
            scene_id: self.scene_id,
            pose: CervicalPose {
                head: self.head,
                neck: self.neck,
                shift: self.shift,
            },
            composed: self.composed,
            assessment: TwstrsAssessment {
                torticollis: t.torticollis,
                laterocollis: t.laterocollis,
                antero_retrocollis: t.antero_retrocollis,
                antero_retro_direction: t.direction,
                lateral_shift: t.lateral_shift,
                source_angles: Some(self.composed),
                source_shift: Some(self.shift),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{generate_dataset, SamplerConfig};

    #[test]
    fn line_layout() {
        let labels = generate_dataset(&SamplerConfig::with_seed(1, 1)).unwrap();
        let line = format_label(&labels[0]);
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        for key in ["scene_id", "head", "neck", "shift", "composed", "twstrs"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert!(v["twstrs"]["direction"].is_string());
        // Six decimals on every float.
        let shift_text = line.split("\"shift\":").nth(1).unwrap().split(',').next().unwrap();
        assert_eq!(shift_text.split('.').nth(1).unwrap().len(), 6);
    }

    #[test]
    fn round_trip_within_rounding() {
        let labels = generate_dataset(&SamplerConfig::with_seed(2, 20)).unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &labels).unwrap();
        let back = read_dataset(buf.as_slice()).unwrap();
        assert_eq!(back.len(), labels.len());
        for (a, b) in labels.iter().zip(&back) {
            assert_eq!(a.scene_id, b.scene_id);
            assert!(a.composed.max_abs_diff(&b.composed) <= 5e-7);
            assert!((a.pose.shift - b.pose.shift).abs() <= 5e-7);
            assert_eq!(a.assessment.torticollis, b.assessment.torticollis);
            assert_eq!(a.assessment.antero_retro_direction, b.assessment.antero_retro_direction);
        }
    }

    #[test]
    fn corrupt_line_reports_line_number() {
        let labels = generate_dataset(&SamplerConfig::with_seed(2, 2)).unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &labels).unwrap();
        buf.extend_from_slice(b"{\"scene_id\": 3}\n");
        match read_dataset(buf.as_slice()) {
            Err(JsonlError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
