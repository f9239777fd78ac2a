//! Fusion of faces, bodies and voices into persistent persons.

pub mod assignment;
pub mod body_node;
pub mod config;
pub mod identify;
pub mod interactions;
pub mod manager;
pub mod perception;
pub mod record;

pub use assignment::assign;
pub use body_node::BodyKinematicsNode;
pub use config::{ConfigError, ManagerConfig};
pub use identify::{descriptor_distance, identify, update_descriptor};
pub use interactions::{detect_gaze, detect_groups, GazeSource, GroupIds};
pub use manager::{Cluster, PersonError, PersonManager};
pub use perception::{classify_body_attitude, estimate_face_distance};
pub use record::{location_confidence, EmptyRecord, FrameSource, KnownPerson, PersonRecord};
