//! Scripted multi-actor scenes rendered as perception output, with ground truth.

pub mod noise;
pub mod runner;
pub mod scenario;
pub mod score;
pub mod truth;
pub mod world;

pub use noise::{gaussian3, von_mises};
pub use runner::{face_landmarks, Simulator, EYES_CLOSED_AU45, SENSOR_FRAME, WORLD_FRAME};
pub use scenario::{
    ActorScript, AuSpec, Demographics, FaceLocalization, Interval, KnownSpec, NoiseSpec, Scenario, ScenarioError,
    Sensor, ROBOT, SCENARIO_VERSION,
};
pub use score::{person_snapshots, score, PersonSnapshot, ScoreError, ScoreReport};
pub use truth::{ActorTruth, FaceTruth, Truth, TruthTick};
pub use world::{actor_poses, ActorPose};
