//! Wire-visible message schemas.
//!
//! Every float on the wire is an `f32`; the canonical encoding prints nine
//! significant digits, which is exactly enough to round-trip an `f32`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::codec::{real, real_array, real_opt, real_vec};
use super::id::HexId;
use crate::time::Stamp;

pub const LANDMARK_COUNT: usize = 67;
pub const SKELETON_KEYPOINT_COUNT: usize = 18;
pub const AUDIO_FEATURE_COUNT: usize = 16;
pub const DESCRIPTOR_DIM: usize = 16;

/// Action unit 45 (blink / eyes closed).
pub const AU_BLINK: u32 = 45;

/// Names of the sixteen low-level audio descriptors, in wire order.
pub const AUDIO_FEATURE_NAMES: [&str; AUDIO_FEATURE_COUNT] = [
    "zcr", "rms_energy", "f0_hz", "hnr", "mfcc_1", "mfcc_2", "mfcc_3", "mfcc_4", "mfcc_5",
    "mfcc_6", "mfcc_7", "mfcc_8", "mfcc_9", "mfcc_10", "mfcc_11", "mfcc_12",
];
pub const AUDIO_RMS_INDEX: usize = 1;
pub const AUDIO_F0_INDEX: usize = 2;

/// COCO-18 keypoint order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Keypoint {
    Nose = 0,
    Neck = 1,
    RShoulder = 2,
    RElbow = 3,
    RWrist = 4,
    LShoulder = 5,
    LElbow = 6,
    LWrist = 7,
    RHip = 8,
    RKnee = 9,
    RAnkle = 10,
    LHip = 11,
    LKnee = 12,
    LAnkle = 13,
    REye = 14,
    LEye = 15,
    REar = 16,
    LEar = 17,
}

impl Keypoint {
    pub const ALL: [Keypoint; SKELETON_KEYPOINT_COUNT] = [
        Keypoint::Nose,
        Keypoint::Neck,
        Keypoint::RShoulder,
        Keypoint::RElbow,
        Keypoint::RWrist,
        Keypoint::LShoulder,
        Keypoint::LElbow,
        Keypoint::LWrist,
        Keypoint::RHip,
        Keypoint::RKnee,
        Keypoint::RAnkle,
        Keypoint::LHip,
        Keypoint::LKnee,
        Keypoint::LAnkle,
        Keypoint::REye,
        Keypoint::LEye,
        Keypoint::REar,
        Keypoint::LEar,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionOfInterest {
    pub x_offset: u32,
    pub y_offset: u32,
    pub width: u32,
    pub height: u32,
}

impl RegionOfInterest {
    pub fn area(&self) -> f64 {
        self.width as f64 * self.height as f64
    }

    pub fn intersection_area(&self, other: &RegionOfInterest) -> f64 {
        let x0 = self.x_offset.max(other.x_offset) as f64;
        let y0 = self.y_offset.max(other.y_offset) as f64;
        let x1 = (self.x_offset + self.width).min(other.x_offset + other.width) as f64;
        let y1 = (self.y_offset + self.height).min(other.y_offset + other.height) as f64;
        (x1 - x0).max(0.0) * (y1 - y0).max(0.0)
    }

    pub fn iou(&self, other: &RegionOfInterest) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    /// Top third of the region (rounded up, at least one pixel tall).
    pub fn upper_third(&self) -> RegionOfInterest {
        RegionOfInterest {
            height: self.height.div_ceil(3).max(1),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Landmark {
    #[serde(with = "real")]
    pub x: f32,
    #[serde(with = "real")]
    pub y: f32,
    #[serde(with = "real")]
    pub confidence: f32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FacialLandmarks {
    pub landmarks: Vec<Landmark>,
    pub stamp: Stamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionUnit {
    pub au: u32,
    #[serde(with = "real")]
    pub intensity: f32,
    #[serde(with = "real")]
    pub confidence: f32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FacialActionUnits {
    pub units: Vec<ActionUnit>,
}

impl FacialActionUnits {
    pub fn intensity(&self, au: u32) -> Option<f32> {
        self.units.iter().find(|u| u.au == au).map(|u| u.intensity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpressionCategory {
    Neutral,
    Happy,
    Sad,
    Angry,
    Fearful,
    Disgusted,
    Surprised,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expression {
    pub category: Option<ExpressionCategory>,
    #[serde(with = "real_opt", default)]
    pub valence: Option<f32>,
    #[serde(with = "real_opt", default)]
    pub arousal: Option<f32>,
    #[serde(with = "real")]
    pub confidence: f32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Keypoint2D {
    #[serde(with = "real")]
    pub x: f32,
    #[serde(with = "real")]
    pub y: f32,
    #[serde(with = "real")]
    pub confidence: f32,
}

impl Keypoint2D {
    pub const ABSENT: Keypoint2D = Keypoint2D {
        x: 0.0,
        y: 0.0,
        confidence: 0.0,
    };

    pub fn is_present(&self) -> bool {
        self.confidence > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Skeleton2D {
    pub keypoints: Vec<Keypoint2D>,
    pub stamp: Stamp,
}

impl Skeleton2D {
    pub fn get(&self, kp: Keypoint) -> Option<&Keypoint2D> {
        self.keypoints.get(kp.index())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyAttitude {
    pub hands_on_face: bool,
    pub arms_crossed: bool,
    pub hands_raised: bool,
    #[serde(with = "real")]
    pub confidence: f32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AudioFeatures {
    #[serde(with = "real_vec")]
    pub features: Vec<f32>,
    pub stamp: Stamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgeAndGender {
    #[serde(with = "real")]
    pub age: f32,
    #[serde(with = "real")]
    pub age_confidence: f32,
    pub gender: Gender,
    #[serde(with = "real")]
    pub gender_confidence: f32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Group {
    pub group_id: HexId,
    pub members: Vec<HexId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GazeSenderReceiver {
    pub sender: HexId,
    pub receiver: HexId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupsStamped {
    pub stamp: Stamp,
    pub groups: Vec<Group>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GazesStamped {
    pub stamp: Stamp,
    pub gazes: Vec<GazeSenderReceiver>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StringMsg {
    pub data: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoolMsg {
    pub data: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Float32Msg {
    #[serde(with = "real")]
    pub data: f32,
}

/// Currently tracked identifiers of one kind, sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdsList {
    pub ids: Vec<HexId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AudioData {
    pub data: Vec<u8>,
}

/// One parent→child rigid transform. Rotation is `(w, x, y, z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformStamped {
    pub stamp: Stamp,
    pub parent: String,
    pub child: String,
    #[serde(with = "real_array")]
    pub translation: [f32; 3],
    #[serde(with = "real_array")]
    pub rotation: [f32; 4],
}

/// Abstract identity embedding used for re-identification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityDescriptor {
    #[serde(with = "real_vec")]
    pub values: Vec<f32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Keypoint3D {
    #[serde(with = "real")]
    pub x: f32,
    #[serde(with = "real")]
    pub y: f32,
    #[serde(with = "real")]
    pub z: f32,
    #[serde(with = "real")]
    pub confidence: f32,
}

/// 18 COCO keypoints in metric coordinates of `frame`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Skeleton3D {
    pub stamp: Stamp,
    pub frame: String,
    pub keypoints: Vec<Keypoint3D>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointState {
    pub stamp: Stamp,
    pub names: Vec<String>,
    #[serde(with = "real_vec")]
    pub positions: Vec<f32>,
    pub valid: Vec<bool>,
}

macro_rules! schemas {
    ($($variant:ident => $ty:ty, $name:literal;)*) => {
        /// Schema names as they appear in the event log.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum Schema {
            $($variant,)*
        }

        impl Schema {
            pub const ALL: &'static [Schema] = &[$(Schema::$variant,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(Schema::$variant => $name,)*
                }
            }
        }

        impl FromStr for Schema {
            type Err = UnknownSchema;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok(Schema::$variant),)*
                    other => Err(UnknownSchema(other.to_string())),
                }
            }
        }

        /// A message of any schema.
        #[derive(Debug, Clone, PartialEq)]
        pub enum Message {
            $($variant($ty),)*
        }

        impl Message {
            pub fn schema(&self) -> Schema {
                match self {
                    $(Message::$variant(_) => Schema::$variant,)*
                }
            }

            pub(crate) fn to_json(&self) -> Result<serde_json::Value, serde_json::Error> {
                match self {
                    $(Message::$variant(m) => serde_json::to_value(m),)*
                }
            }

            pub(crate) fn from_json(
                schema: Schema,
                value: serde_json::Value,
            ) -> Result<Message, serde_json::Error> {
                Ok(match schema {
                    $(Schema::$variant => Message::$variant(serde_json::from_value(value)?),)*
                })
            }
        }

        $(
            impl From<$ty> for Message {
                fn from(m: $ty) -> Message {
                    Message::$variant(m)
                }
            }
        )*
    };
}

schemas! {
    RegionOfInterest => RegionOfInterest, "RegionOfInterest";
    FacialLandmarks => FacialLandmarks, "FacialLandmarks";
    FacialActionUnits => FacialActionUnits, "FacialActionUnits";
    Expression => Expression, "Expression";
    Skeleton2D => Skeleton2D, "Skeleton2D";
    BodyAttitude => BodyAttitude, "BodyAttitude";
    AudioFeatures => AudioFeatures, "AudioFeatures";
    AgeAndGender => AgeAndGender, "AgeAndGender";
    Group => Group, "Group";
    GazeSenderReceiver => GazeSenderReceiver, "GazeSenderReceiver";
    GroupsStamped => GroupsStamped, "GroupsStamped";
    GazesStamped => GazesStamped, "GazesStamped";
    String => StringMsg, "String";
    Bool => BoolMsg, "Bool";
    Float32 => Float32Msg, "Float32";
    IdsList => IdsList, "IdsList";
    AudioData => AudioData, "AudioData";
    TransformStamped => TransformStamped, "TransformStamped";
    IdentityDescriptor => IdentityDescriptor, "IdentityDescriptor";
    Skeleton3D => Skeleton3D, "Skeleton3D";
    JointState => JointState, "JointState";
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown schema `{0}`")]
pub struct UnknownSchema(pub String);

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Message {
    pub fn string(data: impl Into<String>) -> Message {
        Message::String(StringMsg { data: data.into() })
    }

    pub fn float32(data: f32) -> Message {
        Message::Float32(Float32Msg { data })
    }

    pub fn boolean(data: bool) -> Message {
        Message::Bool(BoolMsg { data })
    }
}
