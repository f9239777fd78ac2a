use std::f64::consts::{FRAC_PI_2, PI};

use super::anthropometry as a;
use crate::model::HexId;
use crate::tf::SEGMENTS;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KinematicsError {
    #[error("out of range: {0}")]
    Range(String),
    #[error("cannot estimate joint state: {0}")]
    Estimation(String),
}

/// Rotation axis of a revolute joint, in the joint's parent frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
    NegY,
}

impl Axis {
    pub fn vector(self) -> [f64; 3] {
        match self {
            Axis::X => [1.0, 0.0, 0.0],
            Axis::Y => [0.0, 1.0, 0.0],
            Axis::Z => [0.0, 0.0, 1.0],
            Axis::NegY => [0.0, -1.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointSpec {
    pub name: &'static str,
    /// Segment whose frame this joint (or the last joint of its chain) moves.
    pub segment: &'static str,
    pub axis: Axis,
    pub lower: f64,
    pub upper: f64,
}

const fn joint(name: &'static str, segment: &'static str, axis: Axis, lower: f64, upper: f64) -> JointSpec {
    JointSpec {
        name,
        segment,
        axis,
        lower,
        upper,
    }
}

const FLEX: f64 = 2.6;

pub const DOF: usize = 18;

/// All scalar degrees of freedom. Multi-axis joints are listed in Z-Y-X order.
pub const JOINTS: [JointSpec; DOF] = [
    joint("waist_z", "waist", Axis::Z, -FRAC_PI_2, FRAC_PI_2),
    joint("head_z", "head", Axis::Z, -FRAC_PI_2, FRAC_PI_2),
    joint("head_y", "head", Axis::Y, -FRAC_PI_2, FRAC_PI_2),
    joint("head_x", "head", Axis::X, -FRAC_PI_2, FRAC_PI_2),
    joint("l_shoulder_z", "l_shoulder", Axis::Z, -PI, PI),
    joint("l_shoulder_y", "l_shoulder", Axis::Y, -FRAC_PI_2, FRAC_PI_2),
    joint("l_shoulder_x", "l_shoulder", Axis::X, -PI, PI),
    joint("r_shoulder_z", "r_shoulder", Axis::Z, -PI, PI),
    joint("r_shoulder_y", "r_shoulder", Axis::Y, -FRAC_PI_2, FRAC_PI_2),
    joint("r_shoulder_x", "r_shoulder", Axis::X, -PI, PI),
    joint("l_elbow", "l_elbow", Axis::NegY, 0.0, FLEX),
    joint("r_elbow", "r_elbow", Axis::NegY, 0.0, FLEX),
    joint("l_hip_y", "l_hip", Axis::Y, -FRAC_PI_2, FRAC_PI_2),
    joint("l_hip_x", "l_hip", Axis::X, -FRAC_PI_2, FRAC_PI_2),
    joint("r_hip_y", "r_hip", Axis::Y, -FRAC_PI_2, FRAC_PI_2),
    joint("r_hip_x", "r_hip", Axis::X, -FRAC_PI_2, FRAC_PI_2),
    joint("l_knee", "l_knee", Axis::Y, 0.0, FLEX),
    joint("r_knee", "r_knee", Axis::Y, 0.0, FLEX),
];

/// Degrees of freedom per articulated segment.
pub const DOF_GROUPS: [(&str, usize); 10] = [
    ("head", 3),
    ("l_shoulder", 3),
    ("r_shoulder", 3),
    ("l_elbow", 1),
    ("r_elbow", 1),
    ("l_hip", 2),
    ("r_hip", 2),
    ("l_knee", 1),
    ("r_knee", 1),
    ("waist", 1),
];

pub fn joint_index(name: &str) -> Option<usize> {
    JOINTS.iter().position(|j| j.name == name)
}

/// Segment length as a fraction of height.
pub fn segment_fraction(segment: &str) -> Option<f64> {
    Some(match segment {
        "waist" => 2.0 * a::HIP_HALF_WIDTH,
        "torso" => a::TORSO,
        "head" => a::HEAD,
        "l_shoulder" | "r_shoulder" => a::UPPER_ARM,
        "l_elbow" | "r_elbow" => a::FOREARM,
        "l_wrist" | "r_wrist" => a::HAND,
        "l_hip" | "r_hip" => a::THIGH,
        "l_knee" | "r_knee" => a::SHANK,
        "l_ankle" | "r_ankle" => a::ANKLE_HEIGHT,
        _ => return None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub name: &'static str,
    pub length: f64,
}

/// Metric dimensions used by forward kinematics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dimensions {
    pub hip_half_width: f64,
    pub shoulder_half_width: f64,
    pub torso: f64,
    pub upper_arm: f64,
    pub forearm: f64,
    pub thigh: f64,
    pub shank: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicModel {
    pub body_id: HexId,
    pub height: f64,
    pub links: [Link; 15],
    pub dims: Dimensions,
}

impl KinematicModel {
    pub fn generate(body_id: HexId, height: f64) -> Result<KinematicModel, KinematicsError> {
        if !(a::MIN_HEIGHT..=a::MAX_HEIGHT).contains(&height) {
            return Err(KinematicsError::Range(format!(
                "height {height} m outside [{}, {}]",
                a::MIN_HEIGHT,
                a::MAX_HEIGHT
            )));
        }
        let links = SEGMENTS.map(|name| Link {
            name,
            length: segment_fraction(name).expect("every segment has a length") * height,
        });
        Ok(KinematicModel {
            body_id,
            height,
            links,
            dims: Dimensions {
                hip_half_width: a::HIP_HALF_WIDTH * height,
                shoulder_half_width: a::SHOULDER_HALF_WIDTH * height,
                torso: a::TORSO * height,
                upper_arm: a::UPPER_ARM * height,
                forearm: a::FOREARM * height,
                thigh: a::THIGH * height,
                shank: a::SHANK * height,
            },
        })
    }

    pub fn link_length(&self, segment: &str) -> Option<f64> {
        self.links.iter().find(|l| l.name == segment).map(|l| l.length)
    }

    /// `<segment>_<bodyID>`
    pub fn frame(&self, segment: &str) -> String {
        format!("{segment}_{}", self.body_id)
    }

    pub fn root_frame(&self) -> String {
        format!("body_{}", self.body_id)
    }
}

/// Eighteen joint angles in `JOINTS` order, with per-joint validity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointAngles {
    pub values: [f64; DOF],
    pub valid: [bool; DOF],
}

impl Default for JointAngles {
    fn default() -> Self {
        JointAngles::zero()
    }
}

impl JointAngles {
    pub fn zero() -> Self {
        JointAngles {
            values: [0.0; DOF],
            valid: [true; DOF],
        }
    }

    pub fn from_values(values: [f64; DOF]) -> Self {
        JointAngles {
            values,
            valid: [true; DOF],
        }
    }

    pub fn get(&self, name: &str) -> f64 {
        self.values[joint_index(name).unwrap_or_else(|| panic!("unknown joint `{name}`"))]
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.values[joint_index(name).unwrap_or_else(|| panic!("unknown joint `{name}`"))] = value;
    }

    /// Names of joints outside their limits.
    pub fn out_of_limits(&self) -> Vec<&'static str> {
        JOINTS
            .iter()
            .zip(self.values)
            .filter(|(j, v)| !(j.lower..=j.upper).contains(v))
            .map(|(j, _)| j.name)
            .collect()
    }

    pub fn clamp_to_limits(&mut self) {
        for (j, v) in JOINTS.iter().zip(self.values.iter_mut()) {
            *v = v.clamp(j.lower, j.upper);
        }
    }
}
