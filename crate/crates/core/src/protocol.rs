//! Fixed-duration video protocol and per-task analytics over frame-wise
//! head pose and shift predictions.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{BufRead, Write};
use thiserror::Error;

use crate::jsonl::{read_jsonl, JsonlError};
use crate::rotation::EulerAngles;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("t = {t} s is outside the protocol [0, {total})")]
    OutOfProtocol { t: f64, total: f64 },
    #[error("frames are not time-sorted: frame {index} at t = {t} s precedes its predecessor")]
    Unsorted { index: usize, t: f64 },
    #[error("frame {index} has an invalid timestamp {t}")]
    InvalidTime { index: usize, t: f64 },
    #[error("task {0} has fewer than 2 frames")]
    MissingTask(TaskKind),
    #[error("task {0} has zero peak amplitude; ratio undefined")]
    ZeroPeak(TaskKind),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Preparation,
    Instruction,
    EyesOpen,
    EyesClosed,
    Neutral,
    HeadRight,
    HeadLeft,
    TiltRight,
    TiltLeft,
    PositionChange,
    SideNeutral,
    HeadUp,
    HeadDown,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Preparation => "preparation",
            TaskKind::Instruction => "instruction",
            TaskKind::EyesOpen => "eyes_open",
            TaskKind::EyesClosed => "eyes_closed",
            TaskKind::Neutral => "neutral",
            TaskKind::HeadRight => "head_right",
            TaskKind::HeadLeft => "head_left",
            TaskKind::TiltRight => "tilt_right",
            TaskKind::TiltLeft => "tilt_left",
            TaskKind::PositionChange => "position_change",
            TaskKind::SideNeutral => "side_neutral",
            TaskKind::HeadUp => "head_up",
            TaskKind::HeadDown => "head_down",
        }
    }

    /// Instruction and preparation segments carry no clinical signal.
    pub fn is_clinical(self) -> bool {
        !matches!(self, TaskKind::Instruction | TaskKind::Preparation)
    }

    /// Recorded in profile, so frontal pose estimates are unreliable.
    pub fn is_side_view(self) -> bool {
        matches!(self, TaskKind::SideNeutral | TaskKind::HeadUp | TaskKind::HeadDown)
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Segment durations in seconds, in recording order.
pub const TASK_SEQUENCE: [(TaskKind, f64); 22] = [
    (TaskKind::Preparation, 7.0),
    (TaskKind::Instruction, 9.0),
    (TaskKind::EyesOpen, 6.0),
    (TaskKind::Instruction, 12.0),
    (TaskKind::EyesClosed, 10.0),
    (TaskKind::Instruction, 21.0),
    (TaskKind::Neutral, 60.0),
    (TaskKind::Instruction, 9.0),
    (TaskKind::HeadRight, 7.0),
    (TaskKind::Instruction, 12.0),
    (TaskKind::HeadLeft, 7.0),
    (TaskKind::Instruction, 12.0),
    (TaskKind::TiltRight, 7.0),
    (TaskKind::Instruction, 12.0),
    (TaskKind::TiltLeft, 7.0),
    (TaskKind::PositionChange, 20.0),
    (TaskKind::Instruction, 8.0),
    (TaskKind::SideNeutral, 10.0),
    (TaskKind::Instruction, 9.0),
    (TaskKind::HeadUp, 7.0),
    (TaskKind::Instruction, 12.0),
    (TaskKind::HeadDown, 7.0),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTask {
    /// Unique within a timeline, e.g. `instruction_3`.
    pub name: String,
    pub start_s: f64,
    pub end_s: f64,
    pub kind: TaskKind,
}

impl ProtocolTask {
    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }

    pub fn contains(&self, t: f64) -> bool {
        self.start_s <= t && t < self.end_s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Timeline {
    tasks: Vec<ProtocolTask>,
}

/// Cumulative tiling of [`TASK_SEQUENCE`].
pub fn build_timeline() -> Timeline {
    let mut start = 0.0;
    let mut instruction_no = 0;
    let tasks = TASK_SEQUENCE
        .iter()
        .map(|&(kind, dur)| {
            let name = if kind == TaskKind::Instruction {
                instruction_no += 1;
                format!("instruction_{instruction_no}")
            } else {
                kind.as_str().to_string()
            };
            let task = ProtocolTask { name, start_s: start, end_s: start + dur, kind };
            start += dur;
            task
        })
        .collect();
    Timeline { tasks }
}

impl Timeline {
    pub fn tasks(&self) -> &[ProtocolTask] {
        &self.tasks
    }

    pub fn total(&self) -> f64 {
        self.tasks.last().map_or(0.0, |t| t.end_s)
    }

    pub fn task_at(&self, t: f64) -> Result<&ProtocolTask, ProtocolError> {
        let out = || ProtocolError::OutOfProtocol { t, total: self.total() };
        if !(t >= 0.0 && t < self.total()) {
            return Err(out());
        }
        // Tiles are contiguous, so the last start ≤ t is the owner.
        let i = self.tasks.partition_point(|task| task.start_s <= t);
        self.tasks.get(i.wrapping_sub(1)).ok_or_else(out)
    }

    pub fn index_at(&self, t: f64) -> Option<usize> {
        if !(t >= 0.0 && t < self.total()) {
            return None;
        }
        Some(self.tasks.partition_point(|task| task.start_s <= t) - 1)
    }

    pub fn first_of(&self, kind: TaskKind) -> Option<&ProtocolTask> {
        self.tasks.iter().find(|t| t.kind == kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FramePrediction {
    pub t: f64,
    pub euler: EulerAngles,
    pub shift_score: f64,
}

/// On-disk frame layout.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct FrameRecord {
    t: f64,
    yaw: f64,
    pitch: f64,
    roll: f64,
    shift: f64,
}

impl From<FrameRecord> for FramePrediction {
    fn from(r: FrameRecord) -> Self {
        FramePrediction {
            t: r.t,
            euler: EulerAngles { yaw: r.yaw, pitch: r.pitch, roll: r.roll },
            shift_score: r.shift,
        }
    }
}

pub fn read_frames<R: BufRead>(r: R) -> Result<Vec<FramePrediction>, ProtocolError> {
    let records: Vec<FrameRecord> = read_jsonl(r)?;
    let frames: Vec<FramePrediction> = records.into_iter().map(Into::into).collect();
    check_sorted(&frames)?;
    Ok(frames)
}

pub fn write_frames<W: Write>(mut w: W, frames: &[FramePrediction]) -> std::io::Result<()> {
    for f in frames {
        let rec = FrameRecord {
            t: f.t,
            yaw: f.euler.yaw,
            pitch: f.euler.pitch,
            roll: f.euler.roll,
            shift: f.shift_score,
        };
        writeln!(w, "{}", serde_json::to_string(&rec).map_err(std::io::Error::other)?)?;
    }
    w.flush()
}

pub fn check_sorted(frames: &[FramePrediction]) -> Result<(), ProtocolError> {
    for (i, f) in frames.iter().enumerate() {
        if !(f.t.is_finite() && f.t >= 0.0) {
            return Err(ProtocolError::InvalidTime { index: i, t: f.t });
        }
        if i > 0 && f.t < frames[i - 1].t {
            return Err(ProtocolError::Unsorted { index: i, t: f.t });
        }
    }
    Ok(())
}

pub fn sort_frames(frames: &mut [FramePrediction]) {
    frames.sort_by(|a, b| a.t.total_cmp(&b.t));
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub task: ProtocolTask,
    pub n_frames: usize,
    pub yaw_range: Option<f64>,
    pub pitch_range: Option<f64>,
    pub roll_range: Option<f64>,
    /// Least-squares slope of yaw against time, degrees per second.
    pub yaw_drift_slope: Option<f64>,
    pub mean_shift: Option<f64>,
    pub peak_abs_yaw: Option<f64>,
    pub peak_abs_roll: Option<f64>,
    pub clinical: bool,
    /// Set for profile-view tasks, whose frontal estimates are unreliable.
    pub side_view_caveat: bool,
}

fn range(xs: &[f64]) -> Option<f64> {
    let lo = xs.iter().copied().reduce(f64::min)?;
    let hi = xs.iter().copied().reduce(f64::max)?;
    Some(hi - lo)
}

fn peak_abs(xs: &[f64]) -> Option<f64> {
    xs.iter().map(|x| x.abs()).reduce(f64::max)
}

/// `None` with fewer than two distinct timestamps.
pub fn ols_slope(t: &[f64], y: &[f64]) -> Option<f64> {
    if t.len() < 2 {
        return None;
    }
    let n = t.len() as f64;
    let mt = t.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sty, mut stt) = (0.0, 0.0);
    for (a, b) in t.iter().zip(y) {
        sty += (a - mt) * (b - my);
        stt += (a - mt) * (a - mt);
    }
    (stt > 0.0).then(|| sty / stt)
}

fn summarize_task(task: &ProtocolTask, frames: &[FramePrediction]) -> TaskSummary {
    let t: Vec<f64> = frames.iter().map(|f| f.t).collect();
    let yaw: Vec<f64> = frames.iter().map(|f| f.euler.yaw).collect();
    let pitch: Vec<f64> = frames.iter().map(|f| f.euler.pitch).collect();
    let roll: Vec<f64> = frames.iter().map(|f| f.euler.roll).collect();
    let mean_shift = (!frames.is_empty())
        .then(|| frames.iter().map(|f| f.shift_score).sum::<f64>() / frames.len() as f64);
    TaskSummary {
        task: task.clone(),
        n_frames: frames.len(),
        yaw_range: range(&yaw),
        pitch_range: range(&pitch),
        roll_range: range(&roll),
        yaw_drift_slope: ols_slope(&t, &yaw),
        mean_shift,
        peak_abs_yaw: peak_abs(&yaw),
        peak_abs_roll: peak_abs(&roll),
        clinical: task.kind.is_clinical(),
        side_view_caveat: task.kind.is_side_view(),
    }
}

/// One summary per task, in timeline order. Frames outside the protocol
/// window are ignored; tasks without frames report `n_frames = 0` and no
/// metrics.
pub fn summarize(frames: &[FramePrediction], timeline: &Timeline) -> Result<Vec<TaskSummary>, ProtocolError> {
    check_sorted(frames)?;
    let mut buckets: Vec<Vec<FramePrediction>> = vec![Vec::new(); timeline.tasks().len()];
    for f in frames {
        if let Some(i) = timeline.index_at(f.t) {
            buckets[i].push(*f);
        }
    }
    Ok(timeline
        .tasks()
        .iter()
        .zip(&buckets)
        .map(|(task, fs)| summarize_task(task, fs))
        .collect())
}

/// Drops instruction and preparation segments.
pub fn clinical_only(summaries: Vec<TaskSummary>) -> Vec<TaskSummary> {
    summaries.into_iter().filter(|s| s.clinical).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Asymmetry {
    pub rotation_ratio: f64,
    pub tilt_ratio: f64,
}

fn paired_ratio(
    summaries: &[TaskSummary],
    a: TaskKind,
    b: TaskKind,
    peak: fn(&TaskSummary) -> Option<f64>,
) -> Result<f64, ProtocolError> {
    let get = |kind| {
        summaries
            .iter()
            .find(|s| s.task.kind == kind && s.n_frames >= 2)
            .and_then(peak)
            .ok_or(ProtocolError::MissingTask(kind))
    };
    let (pa, pb) = (get(a)?, get(b)?);
    let (hi, lo) = if pa >= pb { (pa, pb) } else { (pb, pa) };
    if lo == 0.0 {
        return Err(ProtocolError::ZeroPeak(if pa >= pb { b } else { a }));
    }
    Ok(hi / lo)
}

/// Larger over smaller peak amplitude for the rotation and tilt pairs.
pub fn asymmetry(summaries: &[TaskSummary]) -> Result<Asymmetry, ProtocolError> {
    Ok(Asymmetry {
        rotation_ratio: paired_ratio(summaries, TaskKind::HeadRight, TaskKind::HeadLeft, |s| s.peak_abs_yaw)?,
        tilt_ratio: paired_ratio(summaries, TaskKind::TiltRight, TaskKind::TiltLeft, |s| s.peak_abs_roll)?,
    })
}

/// Flat CSV for plotting; empty metrics are written as empty fields.
pub fn write_summaries_csv<W: Write>(w: W, summaries: &[TaskSummary]) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    out.write_record([
        "name", "kind", "start_s", "end_s", "n_frames", "yaw_range", "pitch_range", "roll_range",
        "yaw_drift_slope", "mean_shift", "clinical", "side_view_caveat",
    ])?;
    for s in summaries {
        out.write_record([
            s.task.name.clone(),
            s.task.kind.to_string(),
            s.task.start_s.to_string(),
            s.task.end_s.to_string(),
            s.n_frames.to_string(),
            opt(s.yaw_range),
            opt(s.pitch_range),
            opt(s.roll_range),
            opt(s.yaw_drift_slope),
            opt(s.mean_shift),
            s.clinical.to_string(),
            s.side_view_caveat.to_string(),
        ])?;
    }
    out.flush()
}
