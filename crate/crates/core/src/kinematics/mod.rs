//! Height-parameterised human kinematic model.

pub mod anthropometry;
pub mod fk;
pub mod ik;
pub mod model;
pub mod urdf;

pub use fk::{face_frame, forward_kinematics, keypoints, segment_frames};
pub use ik::{estimate_joint_state, keypoint_set, zyx_angles, KeypointSet};
pub use model::{
    joint_index, Axis, Dimensions, JointAngles, JointSpec, KinematicModel, KinematicsError, Link,
    DOF, DOF_GROUPS, JOINTS,
};
pub use urdf::emit_urdf;

use crate::model::JointState;
use crate::time::Stamp;

/// Shorthand for [`KinematicModel::generate`].
pub fn generate_model(body_id: crate::model::HexId, height: f64) -> Result<KinematicModel, KinematicsError> {
    KinematicModel::generate(body_id, height)
}

impl JointAngles {
    pub fn to_message(&self, stamp: Stamp) -> JointState {
        JointState {
            stamp,
            names: JOINTS.iter().map(|j| j.name.to_string()).collect(),
            positions: self.values.iter().map(|v| *v as f32).collect(),
            valid: self.valid.to_vec(),
        }
    }
}
