//! Articulated 2D figure renderer producing region-label masks with exact geometry.
//!
//! The figure is a trunk rectangle, a neck segment rising from the shoulder
//! midpoint and an elliptical head on top of the neck. Head and neck
//! orientations are 3D rotations projected orthographically onto a frontal
//! image plane. The image is mirrored like a front-camera preview: columns
//! increase toward the subject's right, rows increase downward.
//!
//! Pixels are labelled when their centre lies inside a shape; there is no
//! anti-aliasing, so masks are bit-identical across platforms.

use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::io::{self, Read, Write};
use thiserror::Error;

use crate::rotation::euler_to_matrix;
use crate::sampler::{GroundTruthLabel, SamplerError, MAX_SHIFT_ROTATION_DEG};

pub const BACKGROUND: u8 = 0;
pub const HEAD_NECK: u8 = 1;
pub const HAIR: u8 = 2;
pub const CLOTHES: u8 = 3;
pub const SKIN: u8 = 4;
pub const UPPER_LIP: u8 = 5;
pub const LOWER_LIP: u8 = 6;
pub const MAX_LABEL: u8 = LOWER_LIP;

/// Appearance jitter applied to body proportions.
pub const APPEARANCE_JITTER: f64 = 0.15;

// Head features in units of the head radii, measured along the head axis
// (positive toward the crown) and across it.
const HAIR_START: f64 = 0.5;
const LIP_TOP: f64 = -0.50;
const LIP_SPLIT: f64 = -0.56;
const LIP_BOTTOM: f64 = -0.62;
const LIP_HALF_WIDTH: f64 = 0.22;
const NECK_HALF_WIDTH: f64 = 0.45;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("scene {scene_id}: figure leaves the {width}x{height} raster ({detail})")]
    OutOfFrame {
        scene_id: String,
        width: u32,
        height: u32,
        detail: String,
    },
    #[error("invalid figure parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Pose(#[from] SamplerError),
    #[error("malformed PGM: {0}")]
    Pgm(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    fn add_scaled(self, d: (f64, f64), k: f64) -> Point {
        Point::new(self.x + k * d.0, self.y + k * d.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureParams {
    pub image_w: u32,
    pub image_h: u32,
    pub trunk_width: f64,
    pub trunk_height: f64,
    pub neck_length: f64,
    pub head_radius_x: f64,
    pub head_radius_y: f64,
    pub shoulder_y: f64,
    pub elbow_left: Point,
    pub elbow_right: Point,
    pub appearance_seed: u64,
}

impl Default for FigureParams {
    /// 480×640 portrait canvas.
    fn default() -> Self {
        Self {
            image_w: 480,
            image_h: 640,
            trunk_width: 200.0,
            trunk_height: 220.0,
            neck_length: 80.0,
            head_radius_x: 50.0,
            head_radius_y: 64.0,
            shoulder_y: 380.0,
            elbow_left: Point::new(125.0, 540.0),
            elbow_right: Point::new(355.0, 540.0),
            appearance_seed: 0,
        }
    }
}

impl FigureParams {
    /// Default proportions jittered by up to ±15% with a seeded RNG.
    pub fn with_appearance(seed: u64) -> Self {
        let base = Self::default();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut jitter = || 1.0 + rng.random_range(-APPEARANCE_JITTER..=APPEARANCE_JITTER);
        let trunk_width = base.trunk_width * jitter();
        let trunk_height = base.trunk_height * jitter();
        let neck_length = base.neck_length * jitter();
        let head_radius_x = base.head_radius_x * jitter();
        let head_radius_y = base.head_radius_y * jitter();
        let cx = base.image_w as f64 / 2.0;
        let drop = base.elbow_left.y - base.shoulder_y;
        let elbow_left = Point::new(cx - trunk_width / 2.0 - 15.0, base.shoulder_y + drop * jitter());
        let elbow_right = Point::new(cx + trunk_width / 2.0 + 15.0, base.shoulder_y + drop * jitter());
        Self {
            trunk_width,
            trunk_height,
            neck_length,
            head_radius_x,
            head_radius_y,
            elbow_left,
            elbow_right,
            appearance_seed: seed,
            ..base
        }
    }

    pub fn trunk_midline_x(&self) -> f64 {
        self.image_w as f64 / 2.0
    }

    fn shoulder_mid(&self) -> Point {
        Point::new(self.trunk_midline_x(), self.shoulder_y)
    }

    /// Checks positivity and that the figure fits for every pose whose
    /// composed roll is within ±50° at any shift up to 1.
    pub fn validate(&self) -> Result<(), RenderError> {
        let bad = |m: String| Err(RenderError::InvalidParams(m));
        let dims = [
            ("trunk_width", self.trunk_width),
            ("trunk_height", self.trunk_height),
            ("neck_length", self.neck_length),
            ("head_radius_x", self.head_radius_x),
            ("head_radius_y", self.head_radius_y),
            ("shoulder_y", self.shoulder_y),
        ];
        if self.image_w == 0 || self.image_h == 0 {
            return bad("image dimensions must be positive".into());
        }
        if let Some((name, v)) = dims.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return bad(format!("{name} must be positive, got {v}"));
        }
        let (w, h) = (self.image_w as f64, self.image_h as f64);
        for (name, p) in [("elbow_left", self.elbow_left), ("elbow_right", self.elbow_right)] {
            if !(0.0..w).contains(&p.x) || !(0.0..h).contains(&p.y) {
                return bad(format!("{name} ({}, {}) is outside the image", p.x, p.y));
            }
        }
        if self.trunk_width > w || self.shoulder_y + self.trunk_height > h {
            return bad("trunk does not fit in the image".into());
        }
        let head_extent = self.head_radius_x.max(self.head_radius_y);
        let max_neck_tilt = (50.0 + MAX_SHIFT_ROTATION_DEG).to_radians().sin();
        let lateral = self.neck_length * max_neck_tilt + self.head_radius_y + head_extent;
        if lateral > w / 2.0 {
            return bad(format!("head can reach {lateral:.1} px from the midline, image half-width is {}", w / 2.0));
        }
        if self.shoulder_y < self.neck_length + self.head_radius_y + head_extent {
            return bad("head can leave the top of the image".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keypoints {
    pub elbow_left: Option<Point>,
    pub elbow_right: Option<Point>,
    pub head_center: Point,
    pub trunk_midline_x: f64,
}

/// Region-label raster with keypoints and the scene's ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMask {
    pub width: u32,
    pub height: u32,
    /// Row-major region codes.
    pub labels: Vec<u8>,
    pub keypoints: Keypoints,
    pub truth: GroundTruthLabel,
}

impl LabeledMask {
    pub fn get(&self, col: u32, row: u32) -> u8 {
        self.labels[(row * self.width + col) as usize]
    }

    /// Centroid of pixel centres whose label is in `set`, with the pixel count.
    pub fn region_centroid(&self, set: &[u8]) -> Option<(Point, usize)> {
        centroid(&self.labels, self.width, set)
    }

    /// Horizontal reflection, keypoints included. Left and right elbows swap roles.
    pub fn mirrored(&self) -> LabeledMask {
        let (w, h) = (self.width as usize, self.height as usize);
        let mut labels = vec![0u8; w * h];
        for r in 0..h {
            for c in 0..w {
                labels[r * w + (w - 1 - c)] = self.labels[r * w + c];
            }
        }
        let wf = self.width as f64;
        let flip = |p: Point| Point::new(wf - p.x, p.y);
        LabeledMask {
            width: self.width,
            height: self.height,
            labels,
            keypoints: Keypoints {
                elbow_left: self.keypoints.elbow_right.map(flip),
                elbow_right: self.keypoints.elbow_left.map(flip),
                head_center: flip(self.keypoints.head_center),
                trunk_midline_x: wf - self.keypoints.trunk_midline_x,
            },
            truth: self.truth.clone(),
        }
    }
}

pub(crate) fn centroid(labels: &[u8], width: u32, set: &[u8]) -> Option<(Point, usize)> {
    let w = width as usize;
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for (i, &l) in labels.iter().enumerate() {
        if set.contains(&l) {
            sx += (i % w) as f64 + 0.5;
            sy += (i / w) as f64 + 0.5;
            n += 1;
        }
    }
    (n > 0).then(|| (Point::new(sx / n as f64, sy / n as f64), n))
}

/// Projects a body-frame direction onto image axes (right, down).
fn project(v: Vector3<f64>) -> (f64, f64) {
    (-v.x, -v.y)
}

/// Posed figure geometry in image coordinates.
#[derive(Debug, Clone, Copy)]
struct Skeleton {
    shoulder: Point,
    neck_tip: Point,
    head_center: Point,
    /// Unit vector from the head centre toward the crown.
    head_axis: (f64, f64),
}

impl Skeleton {
    fn new(label: &GroundTruthLabel, params: &FigureParams) -> Result<Self, RenderError> {
        let (head, neck) = label.pose.shifted_segments()?;
        let r_neck = euler_to_matrix(&neck);
        let r_comp = r_neck.compose(&euler_to_matrix(&head));
        let up = Vector3::new(0.0, 1.0, 0.0);
        let shoulder = params.shoulder_mid();
        let neck_tip = shoulder.add_scaled(project(r_neck.rotate(up)), params.neck_length);
        let head_dir = project(r_comp.rotate(up));
        let head_center = neck_tip.add_scaled(head_dir, params.head_radius_y);
        let len = head_dir.0.hypot(head_dir.1);
        let head_axis = if len > 1e-9 {
            (head_dir.0 / len, head_dir.1 / len)
        } else {
            (0.0, -1.0)
        };
        Ok(Self {
            shoulder,
            neck_tip,
            head_center,
            head_axis,
        })
    }

    /// Across-axis unit vector, pointing to image right for an upright head.
    fn head_across(&self) -> (f64, f64) {
        (-self.head_axis.1, self.head_axis.0)
    }

    /// Head-frame coordinates of an image point: (along axis, across axis).
    fn head_coords(&self, p: Point) -> (f64, f64) {
        let (dx, dy) = (p.x - self.head_center.x, p.y - self.head_center.y);
        let a = self.head_axis;
        let b = self.head_across();
        (dx * a.0 + dy * a.1, dx * b.0 + dy * b.1)
    }

    /// Exact centroid of head pixels excluding the lips (labels 1 ∪ 2).
    fn head_region_centroid(&self, params: &FigureParams) -> Point {
        let (rx, ry) = (params.head_radius_x, params.head_radius_y);
        let ellipse_area = std::f64::consts::PI * rx * ry;
        let lip_area = (2.0 * LIP_HALF_WIDTH * rx) * ((LIP_TOP - LIP_BOTTOM) * ry);
        let lip_offset = 0.5 * (LIP_TOP + LIP_BOTTOM) * ry;
        // Removing the lips moves the centroid away from them along the axis.
        let shift = -lip_area * lip_offset / (ellipse_area - lip_area);
        self.head_center.add_scaled(self.head_axis, shift)
    }
}

/// Horizontal displacement of the head centre from the trunk midline, in pixels.
pub fn analytic_head_offset(label: &GroundTruthLabel, params: &FigureParams) -> Result<f64, RenderError> {
    let sk = Skeleton::new(label, params)?;
    Ok(sk.head_region_centroid(params).x - params.trunk_midline_x())
}

pub fn render_mask(label: &GroundTruthLabel, params: &FigureParams) -> Result<LabeledMask, RenderError> {
    params.validate()?;
    let sk = Skeleton::new(label, params)?;
    let (w, h) = (params.image_w, params.image_h);
    let (wf, hf) = (w as f64, h as f64);
    let (rx, ry) = (params.head_radius_x, params.head_radius_y);
    let out_of_frame = |detail: String| RenderError::OutOfFrame {
        scene_id: label.scene_id.clone(),
        width: w,
        height: h,
        detail,
    };

    // Frame checks on analytic bounding boxes.
    let (a, b) = (sk.head_axis, sk.head_across());
    let ex = (ry * a.0).hypot(rx * b.0);
    let ey = (ry * a.1).hypot(rx * b.1);
    let c = sk.head_center;
    if c.x - ex < 0.0 || c.x + ex > wf || c.y - ey < 0.0 || c.y + ey > hf {
        return Err(out_of_frame(format!("head box x [{:.1}, {:.1}] y [{:.1}, {:.1}]", c.x - ex, c.x + ex, c.y - ey, c.y + ey)));
    }
    let neck_hw = NECK_HALF_WIDTH * rx;
    let seg = (sk.neck_tip.x - sk.shoulder.x, sk.neck_tip.y - sk.shoulder.y);
    let seg_len = seg.0.hypot(seg.1);
    let seg_dir = if seg_len > 1e-9 { (seg.0 / seg_len, seg.1 / seg_len) } else { (0.0, -1.0) };
    let seg_norm = (-seg_dir.1, seg_dir.0);
    for p in [sk.shoulder, sk.neck_tip] {
        for s in [-1.0, 1.0] {
            let q = p.add_scaled(seg_norm, s * neck_hw);
            if q.x < 0.0 || q.x > wf || q.y < 0.0 || q.y > hf {
                return Err(out_of_frame("neck".into()));
            }
        }
    }

    let mut labels = vec![BACKGROUND; (w * h) as usize];
    let mut paint = |x0: f64, x1: f64, y0: f64, y1: f64, f: &dyn Fn(Point) -> Option<u8>| {
        let c0 = x0.floor().max(0.0) as u32;
        let c1 = (x1.ceil().max(0.0) as u32).min(w);
        let r0 = y0.floor().max(0.0) as u32;
        let r1 = (y1.ceil().max(0.0) as u32).min(h);
        for r in r0..r1 {
            for col in c0..c1 {
                let p = Point::new(col as f64 + 0.5, r as f64 + 0.5);
                if let Some(l) = f(p) {
                    labels[(r * w + col) as usize] = l;
                }
            }
        }
    };

    // Trunk.
    let tx0 = params.trunk_midline_x() - params.trunk_width / 2.0;
    let tx1 = params.trunk_midline_x() + params.trunk_width / 2.0;
    let ty0 = params.shoulder_y;
    let ty1 = params.shoulder_y + params.trunk_height;
    paint(tx0, tx1, ty0, ty1, &|p| (p.x >= tx0 && p.x < tx1 && p.y >= ty0 && p.y < ty1).then_some(CLOTHES));

    // Neck.
    let (nx0, nx1) = (sk.shoulder.x.min(sk.neck_tip.x) - neck_hw, sk.shoulder.x.max(sk.neck_tip.x) + neck_hw);
    let (ny0, ny1) = (sk.shoulder.y.min(sk.neck_tip.y) - neck_hw, sk.shoulder.y.max(sk.neck_tip.y) + neck_hw);
    let shoulder = sk.shoulder;
    paint(nx0, nx1, ny0, ny1, &|p| {
        let (dx, dy) = (p.x - shoulder.x, p.y - shoulder.y);
        let along = dx * seg_dir.0 + dy * seg_dir.1;
        let across = dx * seg_norm.0 + dy * seg_norm.1;
        (along >= 0.0 && along <= seg_len && across.abs() <= neck_hw).then_some(SKIN)
    });

    // Head with hair cap and lips.
    paint(c.x - ex, c.x + ex, c.y - ey, c.y + ey, &|p| {
        let (s, t) = sk.head_coords(p);
        if (s / ry).powi(2) + (t / rx).powi(2) > 1.0 {
            return None;
        }
        let lip = t.abs() <= LIP_HALF_WIDTH * rx;
        Some(if s >= HAIR_START * ry {
            HAIR
        } else if lip && s < LIP_TOP * ry && s >= LIP_SPLIT * ry {
            UPPER_LIP
        } else if lip && s < LIP_SPLIT * ry && s >= LIP_BOTTOM * ry {
            LOWER_LIP
        } else {
            HEAD_NECK
        })
    });

    Ok(LabeledMask {
        width: w,
        height: h,
        labels,
        keypoints: Keypoints {
            elbow_left: Some(params.elbow_left),
            elbow_right: Some(params.elbow_right),
            head_center: sk.head_region_centroid(params),
            trunk_midline_x: params.trunk_midline_x(),
        },
        truth: label.clone(),
    })
}

/// Writes a binary PGM with region codes as gray levels (maxval 6).
pub fn write_pgm<W: Write>(mut w: W, mask: &LabeledMask) -> io::Result<()> {
    write!(w, "P5\n{} {}\n{}\n", mask.width, mask.height, MAX_LABEL)?;
    w.write_all(&mask.labels)?;
    w.flush()
}

/// Reads a P5 raster written by [`write_pgm`]; returns `(width, height, labels)`.
pub fn read_pgm<R: Read>(mut r: R) -> Result<(u32, u32, Vec<u8>), RenderError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut pos = 0usize;
    let mut next_token = || -> Result<String, RenderError> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(RenderError::Pgm("truncated header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if next_token()? != "P5" {
        return Err(RenderError::Pgm("missing P5 magic".into()));
    }
    let parse = |t: String| t.parse::<u32>().map_err(|_| RenderError::Pgm(format!("bad header field '{t}'")));
    let width = parse(next_token()?)?;
    let height = parse(next_token()?)?;
    let maxval = parse(next_token()?)?;
    if maxval == 0 || maxval > 255 {
        return Err(RenderError::Pgm(format!("unsupported maxval {maxval}")));
    }
    let data_start = pos + 1;
    let n = (width as usize) * (height as usize);
    if bytes.len() < data_start + n {
        return Err(RenderError::Pgm("truncated raster".into()));
    }
    let labels = bytes[data_start..data_start + n].to_vec();
    if let Some(v) = labels.iter().find(|&&v| v > MAX_LABEL) {
        return Err(RenderError::Pgm(format!("region code {v} is outside 0-{MAX_LABEL}")));
    }
    Ok((width, height, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rotation::EulerAngles;
    use crate::sampler::{generate_dataset, CervicalPose, SamplerConfig};

    fn label(pose: CervicalPose) -> GroundTruthLabel {
        GroundTruthLabel::from_pose("t", pose, 0.2).unwrap()
    }

    fn shifted(shift: f64) -> GroundTruthLabel {
        label(CervicalPose { shift, ..CervicalPose::neutral() })
    }

    #[test]
    fn default_params_are_valid() {
        FigureParams::default().validate().unwrap();
        for seed in 0..200 {
            FigureParams::with_appearance(seed).validate().unwrap();
        }
    }

    #[test]
    fn neutral_pose_is_centred() {
        let params = FigureParams::default();
        let mask = render_mask(&shifted(0.0), &params).unwrap();
        let (c, _) = mask.region_centroid(&[HEAD_NECK, HAIR]).unwrap();
        assert!((c.x - params.trunk_midline_x()).abs() < 1.0, "{c:?}");
        assert_eq!(analytic_head_offset(&shifted(0.0), &params).unwrap(), 0.0);
    }

    #[test]
    fn full_shift_offset() {
        let params = FigureParams::default();
        let expected = params.neck_length * 12.5f64.to_radians().sin();
        let analytic = analytic_head_offset(&shifted(1.0), &params).unwrap();
        assert!((analytic - expected).abs() < 1e-9);
        let mask = render_mask(&shifted(1.0), &params).unwrap();
        let (c, _) = mask.region_centroid(&[HEAD_NECK, HAIR]).unwrap();
        assert!((c.x - params.trunk_midline_x() - expected).abs() < 1.5);
    }

    #[test]
    fn half_shift_offset() {
        let params = FigureParams { neck_length: 80.0, ..FigureParams::default() };
        let got = analytic_head_offset(&shifted(0.5), &params).unwrap();
        assert!((got - 80.0 * 6.25f64.to_radians().sin()).abs() < 1e-9, "{got}");
        assert!((got - 8.71).abs() < 0.005);
    }

    #[test]
    fn render_is_deterministic() {
        let labels = generate_dataset(&SamplerConfig::with_seed(4, 3)).unwrap();
        let params = FigureParams::with_appearance(17);
        for l in &labels {
            assert_eq!(render_mask(l, &params).unwrap(), render_mask(l, &params).unwrap());
        }
    }

    #[test]
    fn only_known_region_codes() {
        let labels = generate_dataset(&SamplerConfig::with_seed(8, 10)).unwrap();
        for l in &labels {
            let mask = render_mask(l, &FigureParams::default()).unwrap();
            assert_eq!(mask.labels.len(), 480 * 640);
            assert!(mask.labels.iter().all(|&v| v <= MAX_LABEL));
            for code in [HEAD_NECK, HAIR, CLOTHES, SKIN, UPPER_LIP, LOWER_LIP] {
                assert!(mask.labels.contains(&code), "missing region {code}");
            }
        }
    }

    #[test]
    fn head_center_keypoint_matches_raster() {
        let labels = generate_dataset(&SamplerConfig::with_seed(12, 40)).unwrap();
        for l in &labels {
            let params = FigureParams::with_appearance(l.scene_id.len() as u64);
            let mask = render_mask(l, &params).unwrap();
            let (c, _) = mask.region_centroid(&[HEAD_NECK, HAIR]).unwrap();
            let k = mask.keypoints.head_center;
            assert!((c.x - k.x).abs() < 1.0 && (c.y - k.y).abs() < 1.0, "{c:?} vs {k:?}");
        }
    }

    #[test]
    fn extreme_pose_is_out_of_frame() {
        // Low shoulders leave no room for a head hanging below them.
        let params = FigureParams { shoulder_y: 450.0, trunk_height: 180.0, ..FigureParams::default() };
        params.validate().unwrap();
        let l = label(CervicalPose {
            head: EulerAngles::new(0.0, 0.0, 0.0),
            neck: EulerAngles::new(0.0, 0.0, 179.0),
            shift: 0.0,
        });
        assert!(matches!(render_mask(&l, &params), Err(RenderError::OutOfFrame { .. })));
    }

    #[test]
    fn offset_increases_with_shift() {
        let params = FigureParams::default();
        let pose = CervicalPose {
            head: EulerAngles::new(8.0, -6.0, 4.0),
            neck: EulerAngles::new(-5.0, 7.0, -9.0),
            shift: 0.0,
        };
        let mut last = f64::NEG_INFINITY;
        for i in 0..=20 {
            let l = label(CervicalPose { shift: i as f64 / 20.0, ..pose });
            let off = analytic_head_offset(&l, &params).unwrap();
            assert!(off > last, "shift {i}: {off} <= {last}");
            last = off;
        }
    }

    #[test]
    fn pgm_round_trip() {
        let mask = render_mask(&shifted(0.3), &FigureParams::default()).unwrap();
        let mut buf = Vec::new();
        write_pgm(&mut buf, &mask).unwrap();
        assert!(buf.starts_with(b"P5\n480 640\n6\n"));
        let (w, h, labels) = read_pgm(buf.as_slice()).unwrap();
        assert_eq!((w, h), (480, 640));
        assert_eq!(labels, mask.labels);
        assert!(read_pgm(&b"P2\n1 1\n6\n0"[..]).is_err());
        assert!(read_pgm(&b"P5\n2 2\n6\n\x00"[..]).is_err());
    }

    #[test]
    fn mirror_flips_head_offset() {
        let mask = render_mask(&shifted(1.0), &FigureParams::default()).unwrap();
        let m = mask.mirrored();
        let (a, _) = mask.region_centroid(&[HEAD_NECK]).unwrap();
        let (b, _) = m.region_centroid(&[HEAD_NECK]).unwrap();
        assert!((a.x - 240.0 + (b.x - 240.0)).abs() < 1e-9);
        assert_eq!(m.mirrored(), mask);
    }
}
