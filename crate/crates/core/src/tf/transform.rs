use nalgebra::{Isometry3, Quaternion, Translation3, UnitQuaternion, Vector3};

use crate::model::TransformStamped;
use crate::time::Stamp;

/// Rigid transform mapping child coordinates into parent coordinates.
pub type Transform = Isometry3<f64>;

pub fn from_parts(translation: [f64; 3], rotation_wxyz: [f64; 4]) -> Transform {
    let [w, x, y, z] = rotation_wxyz;
    Isometry3::from_parts(
        Translation3::new(translation[0], translation[1], translation[2]),
        UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z)),
    )
}

/// `(w, x, y, z)` of the rotation.
pub fn rotation_wxyz(t: &Transform) -> [f64; 4] {
    let q = t.rotation.quaternion();
    [q.w, q.i, q.j, q.k]
}

pub fn from_message(m: &TransformStamped) -> Transform {
    from_parts(
        m.translation.map(f64::from),
        m.rotation.map(f64::from),
    )
}

pub fn to_message(t: &Transform, stamp: Stamp, parent: &str, child: &str) -> TransformStamped {
    let v = t.translation.vector;
    let q = rotation_wxyz(t);
    TransformStamped {
        stamp,
        parent: parent.to_string(),
        child: child.to_string(),
        translation: [v.x as f32, v.y as f32, v.z as f32],
        rotation: normalized_f32(q),
    }
}

/// Rounds a quaternion to `f32` and renormalizes so the stored value stays a
/// unit quaternion within `f32` precision. The sign is fixed so `w >= 0`.
fn normalized_f32(q: [f64; 4]) -> [f32; 4] {
    let sign = if q[0] < 0.0 { -1.0 } else { 1.0 };
    let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut out = q.map(|v| (sign * v / norm) as f32);
    let n32 = out.iter().map(|v| (*v as f64).powi(2)).sum::<f64>().sqrt();
    if (n32 - 1.0).abs() > 1e-7 {
        out = out.map(|v| (v as f64 / n32) as f32);
    }
    out
}

/// Linear in translation, spherical (shortest arc) in rotation.
pub fn interpolate(a: &Transform, b: &Transform, s: f64) -> Transform {
    let translation = a.translation.vector.lerp(&b.translation.vector, s);
    let rotation = a
        .rotation
        .try_slerp(&b.rotation, s, 1e-12)
        .unwrap_or_else(|| a.rotation.nlerp(&b.rotation, s));
    Isometry3::from_parts(Translation3::from(translation), rotation)
}

/// Angle in radians between two rotations.
pub fn rotation_distance(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>) -> f64 {
    a.angle_to(b)
}

pub fn translation_distance(a: &Transform, b: &Transform) -> f64 {
    (a.translation.vector - b.translation.vector).norm()
}

pub fn axis_x(t: &Transform) -> Vector3<f64> {
    t.rotation * Vector3::x()
}

pub fn axis_y(t: &Transform) -> Vector3<f64> {
    t.rotation * Vector3::y()
}

pub fn axis_z(t: &Transform) -> Vector3<f64> {
    t.rotation * Vector3::z()
}
