//! Rotation algebra: 6D representation, rotation matrices and Euler angles.
//!
//! Body frame: `x` points to the subject's left, `y` up, `z` forward (out of
//! the face, toward the camera). Euler angles are intrinsic Tait–Bryan,
//! applied yaw (about `y`), then pitch (about the subject's left-right axis),
//! then roll (about `z`):
//!
//! ```text
//! R = Ry(yaw) · Rx(-pitch) · Rz(roll)
//! ```
//!
//! Signs: positive yaw turns the face toward the subject's left, positive
//! pitch lifts the face (extension), positive roll tilts the top of the head
//! toward the subject's right.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const DEGENERATE_EPS: f64 = 1e-12;
const ORTHONORMAL_TOL: f64 = 1e-9;
/// Below this value of `cos(pitch)` the decomposition treats the matrix as gimbal locked.
const GIMBAL_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RotationError {
    #[error("degenerate 6D input: {0}")]
    DegenerateInput(&'static str),
    #[error("matrix is not a proper rotation (orthonormality residual {residual:e}, det {det})")]
    NotRotation { residual: f64, det: f64 },
    #[error("Euler angle {name} = {value} is outside [{min}, {max}]")]
    AngleOutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
}

/// Continuous 6D rotation parameterisation: the first two columns of an
/// unconstrained 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SixDRep {
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
}

impl SixDRep {
    pub fn new(a: [f64; 3], b: [f64; 3]) -> Self {
        Self {
            a: Vector3::from(a),
            b: Vector3::from(b),
        }
    }

    /// Gram–Schmidt orthonormalisation into a proper rotation matrix.
    pub fn to_matrix(&self) -> Result<RotationMatrix, RotationError> {
        sixd_to_matrix(self)
    }
}

/// A proper rotation matrix (orthonormal, determinant +1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Validates orthonormality and orientation to within `1e-9`.
    pub fn new(m: Matrix3<f64>) -> Result<Self, RotationError> {
        let residual = orthonormality_residual(&m);
        let det = m.determinant();
        if !residual.is_finite() || residual >= ORTHONORMAL_TOL || (det - 1.0).abs() >= ORTHONORMAL_TOL
        {
            return Err(RotationError::NotRotation { residual, det });
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn to_euler(&self) -> EulerAngles {
        matrix_to_euler(self)
    }

    /// Matrix product `self · rhs`; the product of rotations stays a rotation.
    pub fn compose(&self, rhs: &RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * rhs.0)
    }

    pub fn rotate(&self, v: Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }
}

/// Max-norm of `mᵀm − I`.
pub fn orthonormality_residual(m: &Matrix3<f64>) -> f64 {
    (m.transpose() * m - Matrix3::identity()).amax()
}

/// Head or neck orientation in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerAngles {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl EulerAngles {
    pub const YAW_LIMIT: f64 = 180.0;
    pub const PITCH_LIMIT: f64 = 90.0;
    pub const ROLL_LIMIT: f64 = 180.0;

    pub const fn new(yaw: f64, pitch: f64, roll: f64) -> Self {
        Self { yaw, pitch, roll }
    }

    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<(), RotationError> {
        check_range("yaw", self.yaw, Self::YAW_LIMIT)?;
        check_range("pitch", self.pitch, Self::PITCH_LIMIT)?;
        check_range("roll", self.roll, Self::ROLL_LIMIT)
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    pub fn to_matrix(&self) -> RotationMatrix {
        euler_to_matrix(self)
    }

    /// Componentwise sum with yaw and roll wrapped back into `[-180, 180]`
    /// and pitch clamped to `[-90, 90]`.
    pub fn offset_by(&self, delta: &EulerAngles) -> EulerAngles {
        EulerAngles {
            yaw: wrap_degrees(self.yaw + delta.yaw),
            pitch: (self.pitch + delta.pitch).clamp(-Self::PITCH_LIMIT, Self::PITCH_LIMIT),
            roll: wrap_degrees(self.roll + delta.roll),
        }
    }

    pub fn max_abs_diff(&self, other: &EulerAngles) -> f64 {
        angle_diff(self.yaw, other.yaw)
            .abs()
            .max(angle_diff(self.pitch, other.pitch).abs())
            .max(angle_diff(self.roll, other.roll).abs())
    }
}

fn check_range(name: &'static str, value: f64, limit: f64) -> Result<(), RotationError> {
    if value.is_finite() && (-limit..=limit).contains(&value) {
        Ok(())
    } else {
        Err(RotationError::AngleOutOfRange {
            name,
            value,
            min: -limit,
            max: limit,
        })
    }
}

/// Wraps an angle in degrees into `[-180, 180]`.
pub fn wrap_degrees(deg: f64) -> f64 {
    if (-180.0..=180.0).contains(&deg) {
        return deg;
    }
    let w = (deg + 180.0).rem_euclid(360.0) - 180.0;
    if w == -180.0 && deg > 0.0 {
        180.0
    } else {
        w
    }
}

/// Signed smallest difference `a - b` on the circle.
fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

pub fn sixd_to_matrix(rep: &SixDRep) -> Result<RotationMatrix, RotationError> {
    let SixDRep { a, b } = rep;
    if !a.iter().chain(b.iter()).all(|v| v.is_finite()) {
        return Err(RotationError::DegenerateInput("non-finite component"));
    }
    let a_norm = a.norm();
    if a_norm <= DEGENERATE_EPS {
        return Err(RotationError::DegenerateInput("first column has zero length"));
    }
    let c1 = a / a_norm;
    let b_perp = b - c1 * c1.dot(b);
    let b_perp_norm = b_perp.norm();
    // Parallel test relative to |b| so that scaling b does not change the verdict.
    if b_perp_norm <= DEGENERATE_EPS * b.norm().max(1.0) {
        return Err(RotationError::DegenerateInput("columns are parallel"));
    }
    let c2 = b_perp / b_perp_norm;
    let c3 = c1.cross(&c2);
    Ok(RotationMatrix(Matrix3::from_columns(&[c1, c2, c3])))
}

fn rot_y(deg: f64) -> Matrix3<f64> {
    let (s, c) = deg.to_radians().sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

fn rot_x(deg: f64) -> Matrix3<f64> {
    let (s, c) = deg.to_radians().sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

fn rot_z(deg: f64) -> Matrix3<f64> {
    let (s, c) = deg.to_radians().sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

pub fn euler_to_matrix(e: &EulerAngles) -> RotationMatrix {
    RotationMatrix(rot_y(e.yaw) * rot_x(-e.pitch) * rot_z(e.roll))
}

/// Decomposes a rotation into yaw → pitch → roll.
///
/// At gimbal lock (`|pitch| = 90°`) roll is fixed to 0 and yaw carries the
/// remaining rotation about the vertical axis.
pub fn matrix_to_euler(m: &RotationMatrix) -> EulerAngles {
    let m = &m.0;
    // m[(1,2)] = sin(pitch) for R = Ry(yaw) Rx(-pitch) Rz(roll).
    let sin_pitch = m[(1, 2)].clamp(-1.0, 1.0);
    let pitch = sin_pitch.asin();
    let cos_pitch = (m[(1, 0)].powi(2) + m[(1, 1)].powi(2)).sqrt();
    let (yaw, roll) = if cos_pitch > GIMBAL_EPS {
        (m[(0, 2)].atan2(m[(2, 2)]), m[(1, 0)].atan2(m[(1, 1)]))
    } else {
        ((-m[(2, 0)]).atan2(m[(0, 0)]), 0.0)
    };
    EulerAngles {
        yaw: clean_zero(yaw.to_degrees()),
        pitch: clean_zero(pitch.to_degrees()),
        roll: clean_zero(roll.to_degrees()),
    }
}

/// Maps `-0.0` to `0.0` so serialised angles never carry a signed zero.
fn clean_zero(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

/// Orientation seen by the camera: the head rotates on top of the neck.
pub fn compose_head_neck(head: &EulerAngles, neck: &EulerAngles) -> EulerAngles {
    euler_to_matrix(neck)
        .compose(&euler_to_matrix(head))
        .to_euler()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn assert_matrix_eq(a: &Matrix3<f64>, b: &Matrix3<f64>, tol: f64) {
        assert!((a - b).amax() < tol, "{a} != {b}");
    }

    #[test]
    fn sixd_identity_cases() {
        let m = SixDRep::new([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]).to_matrix().unwrap();
        assert_matrix_eq(m.matrix(), &Matrix3::identity(), 1e-15);
        let m = SixDRep::new([2.0, 0.0, 0.0], [1.0, 1.0, 0.0]).to_matrix().unwrap();
        assert_matrix_eq(m.matrix(), &Matrix3::identity(), 1e-15);
    }

    #[test]
    fn sixd_oblique_first_column() {
        let m = SixDRep::new([1.0, 1.0, 0.0], [0.0, 1.0, 0.0]).to_matrix().unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(m.matrix()[(0, 0)], h, epsilon = 1e-15);
        assert_abs_diff_eq!(m.matrix()[(1, 0)], h, epsilon = 1e-15);
        assert_abs_diff_eq!(m.matrix()[(2, 0)], 0.0, epsilon = 1e-15);
        assert!(orthonormality_residual(m.matrix()) < 1e-9);
        assert_abs_diff_eq!(m.matrix().determinant(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn sixd_degenerate_inputs() {
        assert!(matches!(
            SixDRep::new([0.0; 3], [0.0, 1.0, 0.0]).to_matrix(),
            Err(RotationError::DegenerateInput(_))
        ));
        assert!(matches!(
            SixDRep::new([1.0, 2.0, 3.0], [-2.0, -4.0, -6.0]).to_matrix(),
            Err(RotationError::DegenerateInput(_))
        ));
        assert!(matches!(
            SixDRep::new([f64::NAN, 0.0, 0.0], [0.0, 1.0, 0.0]).to_matrix(),
            Err(RotationError::DegenerateInput(_))
        ));
    }

    #[test]
    fn rotation_matrix_rejects_non_rotation() {
        let reflection = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(RotationMatrix::new(reflection).is_err());
        assert!(RotationMatrix::new(Matrix3::identity() * 2.0).is_err());
        assert!(RotationMatrix::new(*euler_to_matrix(&EulerAngles::new(10.0, 20.0, 30.0)).matrix()).is_ok());
    }

    #[test]
    fn euler_known_matrices() {
        assert_eq!(RotationMatrix::identity().to_euler(), EulerAngles::zero());
        assert_matrix_eq(
            euler_to_matrix(&EulerAngles::zero()).matrix(),
            &Matrix3::identity(),
            1e-15,
        );
        // Half turn about the vertical axis flips x and z.
        let half = euler_to_matrix(&EulerAngles::new(180.0, 0.0, 0.0));
        assert_matrix_eq(
            half.matrix(),
            &Matrix3::from_diagonal(&Vector3::new(-1.0, 1.0, -1.0)),
            1e-15,
        );
    }

    #[test]
    fn pure_yaw_decomposes() {
        let e = RotationMatrix(rot_y(90.0)).to_euler();
        assert_abs_diff_eq!(e.yaw, 90.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.pitch, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.roll, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn composed_rotation_round_trips() {
        let e = EulerAngles::new(30.0, 10.0, -20.0);
        let back = euler_to_matrix(&e).to_euler();
        assert!(back.max_abs_diff(&e) < 1e-6, "{back:?}");
    }

    #[test]
    fn sign_conventions() {
        let forward = Vector3::new(0.0, 0.0, 1.0);
        let up = Vector3::new(0.0, 1.0, 0.0);
        // Positive yaw: face toward the subject's left (+x).
        assert!(euler_to_matrix(&EulerAngles::new(20.0, 0.0, 0.0)).rotate(forward).x > 0.0);
        // Positive pitch: face lifts (+y).
        assert!(euler_to_matrix(&EulerAngles::new(0.0, 20.0, 0.0)).rotate(forward).y > 0.0);
        // Positive roll: crown moves toward the subject's right (-x).
        assert!(euler_to_matrix(&EulerAngles::new(0.0, 0.0, 20.0)).rotate(up).x < 0.0);
    }

    #[test]
    fn gimbal_lock_sets_roll_to_zero() {
        for pitch in [90.0, -90.0] {
            let m = euler_to_matrix(&EulerAngles::new(25.0, pitch, 15.0));
            let e = m.to_euler();
            assert_eq!(e.roll, 0.0);
            assert_abs_diff_eq!(e.pitch.abs(), 90.0, epsilon = 1e-6);
            assert_matrix_eq(euler_to_matrix(&e).matrix(), m.matrix(), 1e-6);
        }
    }

    #[test]
    fn head_neck_composition() {
        let z = EulerAngles::zero();
        assert_eq!(compose_head_neck(&z, &z), z);
        let e = compose_head_neck(&EulerAngles::new(10.0, 0.0, 0.0), &z);
        assert!(e.max_abs_diff(&EulerAngles::new(10.0, 0.0, 0.0)) < 1e-9);
        let e = compose_head_neck(&EulerAngles::new(10.0, 0.0, 0.0), &EulerAngles::new(15.0, 0.0, 0.0));
        assert!(e.max_abs_diff(&EulerAngles::new(25.0, 0.0, 0.0)) < 1e-6);
        // Opposing rolls cancel.
        let e = compose_head_neck(&EulerAngles::new(0.0, 0.0, -12.5), &EulerAngles::new(0.0, 0.0, 12.5));
        assert!(e.max_abs_diff(&z) < 1e-9);
    }

    #[test]
    fn composition_matches_matrix_product() {
        let head = EulerAngles::new(12.0, -7.0, 3.0);
        let neck = EulerAngles::new(-5.0, 9.0, 14.0);
        let composed = compose_head_neck(&head, &neck);
        let expected = euler_to_matrix(&neck).matrix() * euler_to_matrix(&head).matrix();
        assert_matrix_eq(euler_to_matrix(&composed).matrix(), &expected, 1e-12);
    }

    #[test]
    fn wrap_degrees_bounds() {
        assert_eq!(wrap_degrees(190.0), -170.0);
        assert_eq!(wrap_degrees(-190.0), 170.0);
        assert_eq!(wrap_degrees(180.0), 180.0);
        assert_eq!(wrap_degrees(540.0), 180.0);
        assert_eq!(wrap_degrees(12.5), 12.5);
    }

    #[test]
    fn validate_ranges() {
        assert!(EulerAngles::new(180.0, 90.0, -180.0).is_valid());
        assert!(!EulerAngles::new(0.0, 90.5, 0.0).is_valid());
        assert!(!EulerAngles::new(f64::NAN, 0.0, 0.0).is_valid());
    }

    proptest! {
        #[test]
        fn sixd_always_orthonormal(
            a in prop::array::uniform3(-100.0f64..100.0),
            b in prop::array::uniform3(-100.0f64..100.0),
        ) {
            let rep = SixDRep::new(a, b);
            if let Ok(m) = rep.to_matrix() {
                prop_assert!(orthonormality_residual(m.matrix()) < 1e-9);
                prop_assert!((m.matrix().determinant() - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn euler_round_trip(yaw in -180.0f64..=180.0, pitch in -89.0f64..=89.0, roll in -180.0f64..=180.0) {
            let e = EulerAngles::new(yaw, pitch, roll);
            let back = e.to_matrix().to_euler();
            prop_assert!(back.is_valid());
            prop_assert!(back.max_abs_diff(&e) < 1e-6, "{:?} -> {:?}", e, back);
        }

        #[test]
        fn matrix_round_trip(yaw in -180.0f64..=180.0, pitch in -90.0f64..=90.0, roll in -180.0f64..=180.0) {
            let m = EulerAngles::new(yaw, pitch, roll).to_matrix();
            let again = m.to_euler().to_matrix();
            prop_assert!((m.matrix() - again.matrix()).amax() < 1e-6);
        }
    }
}
