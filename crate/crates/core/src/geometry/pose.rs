use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector3, Vector6};
use std::ops::Mul;

/// A rigid body transform in SE(3).
///
/// Acts on points as `x' = R x + t`. Composition `a * b` applies `b` first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Rotation3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Rotation3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Rotation3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    /// Builds a pose from a raw 3x3 matrix, projecting it onto SO(3).
    pub fn from_matrix(rotation: &Matrix3<f64>, translation: Vector3<f64>) -> Self {
        let rotation = Rotation3::from_matrix_eps(rotation, 1e-15, 100, Rotation3::identity());
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Rotation3::identity(),
            translation,
        }
    }

    /// Rotation from a scaled axis (axis * angle), followed by a translation.
    pub fn from_axis_angle(axis_angle: Vector3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation: Rotation3::new(axis_angle),
            translation,
        }
    }

    /// TUM ordering: translation, then quaternion (x, y, z, w).
    pub fn from_tum(t: [f64; 3], q: [f64; 4]) -> Self {
        let q = UnitQuaternion::from_quaternion(Quaternion::new(q[3], q[0], q[1], q[2]));
        Self {
            rotation: q.to_rotation_matrix(),
            translation: Vector3::new(t[0], t[1], t[2]),
        }
    }

    /// Quaternion as `[qx, qy, qz, qw]`, with `qw >= 0`.
    pub fn quaternion(&self) -> [f64; 4] {
        let q = UnitQuaternion::from_rotation_matrix(&self.rotation);
        let c = q.coords;
        let sign = if c.w < 0.0 { -1.0 } else { 1.0 };
        [sign * c.x, sign * c.y, sign * c.z, sign * c.w]
    }

    pub fn inverse(&self) -> Self {
        let rotation = self.rotation.inverse();
        Self {
            rotation,
            translation: -(rotation * self.translation),
        }
    }

    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    #[inline]
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Axis-angle vector of the rotation.
    pub fn rotation_log(&self) -> Vector3<f64> {
        self.rotation.scaled_axis()
    }

    /// `[axis-angle, translation]`; the translation block is not the SE(3)
    /// log, just the raw translation.
    pub fn twist_coordinates(&self) -> Vector6<f64> {
        let w = self.rotation_log();
        let t = self.translation;
        Vector6::new(w.x, w.y, w.z, t.x, t.y, t.z)
    }

    pub fn rotation_angle(&self) -> f64 {
        self.rotation.angle()
    }

    /// Frobenius distance between rotation matrices and L2 distance between translations.
    pub fn distance(&self, other: &Pose) -> (f64, f64) {
        let dr = (self.rotation.matrix() - other.rotation.matrix()).norm();
        let dt = (self.translation - other.translation).norm();
        (dr, dt)
    }

    /// Re-orthonormalises the rotation; used after long composition chains.
    pub fn renormalized(&self) -> Pose {
        Pose::from_matrix(self.rotation.matrix(), self.translation)
    }
}

impl Mul for Pose {
    type Output = Pose;
    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

impl Mul<&Pose> for &Pose {
    type Output = Pose;
    fn mul(self, rhs: &Pose) -> Pose {
        self.compose(rhs)
    }
}
