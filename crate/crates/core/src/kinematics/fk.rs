use std::collections::BTreeMap;

use nalgebra::{Isometry3, Point3, Translation3, Unit, UnitQuaternion, Vector3};

use super::anthropometry::face;
use super::model::{Axis, JointAngles, KinematicModel, KinematicsError};
use crate::model::{Keypoint, SKELETON_KEYPOINT_COUNT};
use crate::tf::Transform;

pub(crate) fn rot(axis: Axis, angle: f64) -> UnitQuaternion<f64> {
    let [x, y, z] = axis.vector();
    UnitQuaternion::from_axis_angle(&Unit::new_unchecked(Vector3::new(x, y, z)), angle)
}

pub(crate) fn zyx(z: f64, y: f64, x: f64) -> UnitQuaternion<f64> {
    rot(Axis::Z, z) * rot(Axis::Y, y) * rot(Axis::X, x)
}

fn offset(x: f64, y: f64, z: f64) -> Transform {
    Isometry3::from_parts(Translation3::new(x, y, z), UnitQuaternion::identity())
}

fn turn(q: UnitQuaternion<f64>) -> Transform {
    Isometry3::from_parts(Translation3::identity(), q)
}

/// Segment frames in the `body_<id>` frame, without limit checks.
pub fn segment_frames(model: &KinematicModel, q: &JointAngles) -> BTreeMap<&'static str, Transform> {
    let d = &model.dims;
    let g = |name: &str| q.get(name);
    let mut out = BTreeMap::new();
    let waist = turn(rot(Axis::Z, g("waist_z")));
    let torso = waist;
    out.insert("waist", waist);
    out.insert("torso", torso);
    out.insert(
        "head",
        torso * offset(0.0, 0.0, d.torso) * turn(zyx(g("head_z"), g("head_y"), g("head_x"))),
    );
    for (side, sign) in [("l", 1.0), ("r", -1.0)] {
        let shoulder = torso
            * offset(0.0, sign * d.shoulder_half_width, d.torso)
            * turn(zyx(
                g(&format!("{side}_shoulder_z")),
                g(&format!("{side}_shoulder_y")),
                g(&format!("{side}_shoulder_x")),
            ));
        let elbow = shoulder * offset(0.0, 0.0, -d.upper_arm) * turn(rot(Axis::NegY, g(&format!("{side}_elbow"))));
        let wrist = elbow * offset(0.0, 0.0, -d.forearm);
        let hip = offset(0.0, sign * d.hip_half_width, 0.0)
            * turn(rot(Axis::Y, g(&format!("{side}_hip_y"))) * rot(Axis::X, g(&format!("{side}_hip_x"))));
        let knee = hip * offset(0.0, 0.0, -d.thigh) * turn(rot(Axis::Y, g(&format!("{side}_knee"))));
        let ankle = knee * offset(0.0, 0.0, -d.shank);
        let names: [&'static str; 6] = if side == "l" {
            ["l_shoulder", "l_elbow", "l_wrist", "l_hip", "l_knee", "l_ankle"]
        } else {
            ["r_shoulder", "r_elbow", "r_wrist", "r_hip", "r_knee", "r_ankle"]
        };
        for (name, frame) in names.into_iter().zip([shoulder, elbow, wrist, hip, knee, ankle]) {
            out.insert(name, frame);
        }
    }
    out
}

/// All fifteen segment frames in the `body_<id>` frame.
pub fn forward_kinematics(
    model: &KinematicModel,
    q: &JointAngles,
) -> Result<BTreeMap<&'static str, Transform>, KinematicsError> {
    let bad = q.out_of_limits();
    if !bad.is_empty() {
        return Err(KinematicsError::Range(format!(
            "joints outside limits: {}",
            bad.join(", ")
        )));
    }
    Ok(segment_frames(model, q))
}

/// Facial points of the head in the head frame, in metres.
pub fn head_point(model: &KinematicModel, p: [f64; 3]) -> Point3<f64> {
    Point3::new(p[0], p[1], p[2]) * model.height
}

pub fn eye_point(model: &KinematicModel, left: bool) -> Point3<f64> {
    let sign = if left { 1.0 } else { -1.0 };
    head_point(
        model,
        [face::SELLION[0], sign * face::EYE_HALF_SPACING, face::SELLION[2]],
    )
}

fn ear_point(model: &KinematicModel, left: bool) -> Point3<f64> {
    let sign = if left { 1.0 } else { -1.0 };
    head_point(model, [face::EAR[0], sign * face::EAR[1], face::EAR[2]])
}

/// The eighteen COCO keypoints, expressed in the frame `root` maps into.
pub fn keypoints(
    model: &KinematicModel,
    q: &JointAngles,
    root: &Transform,
) -> [Point3<f64>; SKELETON_KEYPOINT_COUNT] {
    let frames = segment_frames(model, q);
    let origin = |seg: &str| root * (frames[seg] * Point3::origin());
    let head = root * frames["head"];
    let mut out = [Point3::origin(); SKELETON_KEYPOINT_COUNT];
    for kp in Keypoint::ALL {
        out[kp.index()] = match kp {
            Keypoint::Nose => head * head_point(model, face::NOSE),
            Keypoint::Neck => origin("head"),
            Keypoint::RShoulder => origin("r_shoulder"),
            Keypoint::RElbow => origin("r_elbow"),
            Keypoint::RWrist => origin("r_wrist"),
            Keypoint::LShoulder => origin("l_shoulder"),
            Keypoint::LElbow => origin("l_elbow"),
            Keypoint::LWrist => origin("l_wrist"),
            Keypoint::RHip => origin("r_hip"),
            Keypoint::RKnee => origin("r_knee"),
            Keypoint::RAnkle => origin("r_ankle"),
            Keypoint::LHip => origin("l_hip"),
            Keypoint::LKnee => origin("l_knee"),
            Keypoint::LAnkle => origin("l_ankle"),
            Keypoint::REye => head * eye_point(model, false),
            Keypoint::LEye => head * eye_point(model, true),
            Keypoint::REar => head * ear_point(model, false),
            Keypoint::LEar => head * ear_point(model, true),
        };
    }
    out
}

/// Pose of the face frame (sellion origin, head axes) in the frame `root` maps into.
pub fn face_frame(model: &KinematicModel, q: &JointAngles, root: &Transform) -> Transform {
    let head = root * segment_frames(model, q)["head"];
    let sellion = head_point(model, face::SELLION);
    head * offset(sellion.x, sellion.y, sellion.z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::HexId;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn model() -> KinematicModel {
        KinematicModel::generate(HexId::from_u32(0x37ef0000), 1.75).unwrap()
    }

    #[test]
    fn zero_pose_arm_hangs_down() {
        let f = forward_kinematics(&model(), &JointAngles::zero()).unwrap();
        let shoulder = f["l_shoulder"].translation.vector;
        let elbow = f["l_elbow"].translation.vector;
        assert_relative_eq!(elbow, shoulder - Vector3::new(0.0, 0.0, 0.186 * 1.75), epsilon = 1e-12);
    }

    #[test]
    fn zero_pose_head_above_waist_by_torso() {
        let f = forward_kinematics(&model(), &JointAngles::zero()).unwrap();
        let dz = f["head"].translation.vector.z - f["waist"].translation.vector.z;
        assert_relative_eq!(dz, (0.818 - 0.530) * 1.75, epsilon = 1e-12);
    }

    #[test]
    fn elbow_flexion_points_forearm_forward() {
        let m = model();
        let mut q = JointAngles::zero();
        q.set("l_elbow", FRAC_PI_2);
        let f = forward_kinematics(&m, &q).unwrap();
        let upper = f["l_shoulder"];
        let forearm = f["l_wrist"].translation.vector - f["l_elbow"].translation.vector;
        let local = upper.rotation.inverse() * forearm / m.dims.forearm;
        assert_relative_eq!(local, Vector3::x(), epsilon = 1e-12);
    }

    #[test]
    fn limits_are_enforced() {
        let mut q = JointAngles::zero();
        q.set("l_knee", -0.1);
        q.set("waist_z", 2.0);
        match forward_kinematics(&model(), &q) {
            Err(KinematicsError::Range(msg)) => assert!(msg.contains("l_knee") && msg.contains("waist_z")),
            other => panic!("{other:?}"),
        }
    }
}
