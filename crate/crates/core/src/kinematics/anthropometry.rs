//! Segment proportions as fractions of total body height.

pub const HIP_HEIGHT: f64 = 0.530;
pub const SHOULDER_HEIGHT: f64 = 0.818;
pub const SHOULDER_HALF_WIDTH: f64 = 0.129;
pub const HIP_HALF_WIDTH: f64 = 0.0955;
pub const UPPER_ARM: f64 = 0.186;
pub const FOREARM: f64 = 0.146;
pub const THIGH: f64 = 0.245;
pub const SHANK: f64 = 0.246;
pub const ANKLE_HEIGHT: f64 = 0.039;
pub const NECK_TO_SELLION: f64 = 0.052;
pub const TORSO: f64 = SHOULDER_HEIGHT - HIP_HEIGHT;
pub const HAND: f64 = 0.108;
pub const HEAD: f64 = 0.130;

/// Facial reference points in the head frame (origin at the neck joint,
/// x forward, y left, z up), as `[forward, left, up]` fractions of height.
pub mod face {
    pub const SELLION: [f64; 3] = [0.045, 0.0, super::NECK_TO_SELLION];
    pub const EYE_HALF_SPACING: f64 = 0.018;
    pub const NOSE: [f64; 3] = [0.057, 0.0, 0.024];
    pub const EAR: [f64; 3] = [0.004, 0.043, 0.045];
}

pub const MIN_HEIGHT: f64 = 0.5;
pub const MAX_HEIGHT: f64 = 2.5;
