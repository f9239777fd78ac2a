//! Human frame names and axis conventions.
//!
//! Face frames sit at the sellion with x out of the face and z toward the
//! scalp. Gaze frames share the origin but use optical axes: z forward, y down.

use nalgebra::{Point3, Quaternion, UnitQuaternion, Vector3};

use super::transform::{axis_x, axis_y, axis_z, Transform};
use crate::model::HexId;

/// The fifteen body segments, in kinematic order.
pub const SEGMENTS: [&str; 15] = [
    "waist", "torso", "head", "l_shoulder", "r_shoulder", "l_elbow", "r_elbow", "l_wrist",
    "r_wrist", "l_hip", "r_hip", "l_knee", "r_knee", "l_ankle", "r_ankle",
];

/// Rotation of `gaze_<id>` relative to `face_<id>`, `(w, x, y, z)`.
pub const FACE_TO_GAZE_WXYZ: [f64; 4] = [0.5, -0.5, 0.5, -0.5];

pub fn face_to_gaze() -> UnitQuaternion<f64> {
    let [w, x, y, z] = FACE_TO_GAZE_WXYZ;
    UnitQuaternion::new_unchecked(Quaternion::new(w, x, y, z))
}

/// Tolerance on the distance between a face origin and the eye midpoint.
pub const SELLION_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HumanFrame<'a> {
    Face(HexId),
    Gaze(HexId),
    Person(HexId),
    Body(HexId),
    Segment(&'a str, HexId),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("frame `{0}` uses a human prefix but does not end in `_<8 hex id>`")]
pub struct FrameNameError(pub String);

/// Classifies a frame name. `Ok(None)` means a non-human frame (sensor, world).
pub fn parse_frame(name: &str) -> Result<Option<HumanFrame<'_>>, FrameNameError> {
    let Some((prefix, id)) = name.rsplit_once('_') else {
        return Ok(None);
    };
    let human = matches!(prefix, "face" | "gaze" | "person" | "body") || SEGMENTS.contains(&prefix);
    if !human {
        return Ok(None);
    }
    let id: HexId = id.parse().map_err(|_| FrameNameError(name.to_string()))?;
    Ok(Some(match prefix {
        "face" => HumanFrame::Face(id),
        "gaze" => HumanFrame::Gaze(id),
        "person" => HumanFrame::Person(id),
        "body" => HumanFrame::Body(id),
        seg => HumanFrame::Segment(seg, id),
    }))
}

/// 3D facial reference points in the same frame as the checked transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceGeometry {
    pub left_eye: Point3<f64>,
    pub right_eye: Point3<f64>,
    /// Scalp direction of the head, e.g. world up for a standing person.
    pub up: Vector3<f64>,
}

impl FaceGeometry {
    pub fn sellion(&self) -> Point3<f64> {
        nalgebra::center(&self.left_eye, &self.right_eye)
    }

    /// Out of the face: left-eye direction crossed with up.
    pub fn forward(&self) -> Vector3<f64> {
        (self.left_eye - self.right_eye).cross(&self.up)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameViolation {
    pub rule: &'static str,
    pub detail: String,
}

pub type FrameReport = Vec<FrameViolation>;

fn check_origin(report: &mut FrameReport, frame: &Transform, g: &FaceGeometry) {
    let d = (Point3::from(frame.translation.vector) - g.sellion()).norm();
    if d > SELLION_TOLERANCE {
        report.push(FrameViolation {
            rule: "origin at sellion",
            detail: format!("origin is {d:.4} m from the eye midpoint"),
        });
    }
}

fn check_axis(report: &mut FrameReport, rule: &'static str, axis: Vector3<f64>, want: Vector3<f64>) {
    if axis.dot(&want) <= 0.0 {
        report.push(FrameViolation {
            rule,
            detail: format!("axis {axis:?} points away from {want:?}"),
        });
    }
}

/// Verifies the face frame origin and axes against the eye positions.
pub fn check_face_frame(face: &Transform, g: &FaceGeometry) -> FrameReport {
    let mut report = FrameReport::new();
    check_origin(&mut report, face, g);
    check_axis(&mut report, "x-axis orientation", axis_x(face), g.forward());
    check_axis(&mut report, "y-axis orientation", axis_y(face), g.left_eye - g.right_eye);
    check_axis(&mut report, "z-axis orientation", axis_z(face), g.up);
    report
}

/// Verifies a gaze frame: same origin as the face, z forward, y down.
pub fn check_gaze_frame(gaze: &Transform, g: &FaceGeometry) -> FrameReport {
    let mut report = FrameReport::new();
    check_origin(&mut report, gaze, g);
    check_axis(&mut report, "gaze z-axis forward", axis_z(gaze), g.forward());
    check_axis(&mut report, "gaze y-axis down", axis_y(gaze), -g.up);
    report
}
