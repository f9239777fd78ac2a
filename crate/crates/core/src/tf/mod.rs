//! Timestamped transform tree and human frame conventions.

pub mod conventions;
pub mod transform;
pub mod tree;

pub use conventions::{
    check_face_frame, check_gaze_frame, face_to_gaze, parse_frame, FaceGeometry, FrameReport,
    FrameViolation, HumanFrame, FACE_TO_GAZE_WXYZ, SEGMENTS,
};
pub use transform::{
    axis_x, axis_y, axis_z, from_message, from_parts, interpolate, rotation_distance, rotation_wxyz,
    to_message, translation_distance, Transform,
};
pub use tree::{TfError, TfTree, DEFAULT_RETENTION};
