use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::kinematics::anthropometry::{MAX_HEIGHT, MIN_HEIGHT};
use crate::kinematics::joint_index;
use crate::model::{ExpressionCategory, Gender, DESCRIPTOR_DIM};

pub const SCENARIO_VERSION: u32 = 1;

/// Scenario load or validation failure. `path` is a JSON location such as
/// `actors[1].timeline[0].end`.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("{file}: {source_msg}")]
    Io { file: String, source_msg: String },
    #[error("{file}:{line}:{column}: {message}")]
    Parse {
        file: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{file}: {path}: {message}")]
    Invalid {
        file: String,
        path: String,
        message: String,
    },
}

fn default_tick() -> f64 {
    0.1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub scenario_version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    /// Seconds.
    pub duration: f64,
    #[serde(default = "default_tick")]
    pub tick: f64,
    #[serde(default)]
    pub sensor: Sensor,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub face_localization: FaceLocalization,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub known_persons: Vec<KnownSpec>,
    /// Person manager settings that differ from the defaults.
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub manager: serde_json::Map<String, serde_json::Value>,
    pub actors: Vec<ActorScript>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sensor {
    /// Pixels.
    pub focal_length: f64,
    pub image_width: u32,
    pub image_height: u32,
    /// World position of the sensor frame (x forward, y left, z up).
    pub position: [f64; 3],
    pub yaw_deg: f64,
}

impl Default for Sensor {
    fn default() -> Self {
        Sensor {
            focal_length: 600.0,
            image_width: 1280,
            image_height: 720,
            position: [0.0, 0.0, 1.2],
            yaw_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// Standard deviation of isotropic Gaussian noise on 3D positions, metres.
    pub position_sigma: f64,
    /// Von Mises concentration of the facing-angle noise; absent means none.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub facing_kappa: Option<f64>,
}

/// How the 3D face position is obtained.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceLocalization {
    /// True position plus noise.
    #[default]
    Exact,
    /// Depth from the apparent head width, along the ray through the ROI centre.
    HeadSize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnownSpec {
    pub name: String,
    /// Actor whose descriptor enrols this person; absent means name only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub native_language: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Demographics {
    pub age: f32,
    pub gender: Gender,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActorScript {
    pub name: String,
    /// Metres.
    pub height: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub descriptor: Option<Vec<f32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demographics: Option<Demographics>,
    /// Fundamental frequency of the voice, Hz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub voice_pitch: Option<f32>,
    /// Error added to the emitted face frame origin, in face-frame axes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub face_frame_offset: Option<[f64; 3]>,
    pub timeline: Vec<Interval>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuSpec {
    pub au: u32,
    pub intensity: f32,
}

/// One time interval `[start, end)` of an actor's script.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
    /// Floor position (x, y) at `start`.
    pub position: [f64; 2],
    /// Floor position reached at `end`; linear motion in between.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<[f64; 2]>,
    /// Body yaw in the world frame. Defaults to facing the look-at target,
    /// or the robot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facing_deg: Option<f64>,
    /// Actor name or `robot`; the head turns towards that face.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub look_at: Option<String>,
    #[serde(default = "yes")]
    pub face: bool,
    #[serde(default = "yes")]
    pub body: bool,
    #[serde(default)]
    pub voice: bool,
    /// The face recogniser produces a descriptor.
    #[serde(default = "yes")]
    pub recognizable: bool,
    /// The body detector produces 3D keypoints.
    #[serde(default = "yes")]
    pub body_3d: bool,
    #[serde(default = "yes")]
    pub height_visible: bool,
    #[serde(default)]
    pub eyes_closed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speech: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expression: Option<ExpressionCategory>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub action_units: Vec<AuSpec>,
    /// Joint angle overrides in radians.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub pose: BTreeMap<String, f64>,
}

pub const ROBOT: &str = "robot";

impl Scenario {
    pub fn from_json(text: &str, file: &str) -> Result<Scenario, ScenarioError> {
        let scenario: Scenario = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
            file: file.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        scenario.check().map_err(|(path, message)| ScenarioError::Invalid {
            file: file.to_string(),
            path,
            message,
        })?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
        let file = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
            file: file.clone(),
            source_msg: e.to_string(),
        })?;
        Scenario::from_json(&text, &file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Number of ticks; tick `k` happens at `k * tick` seconds.
    pub fn tick_count(&self) -> usize {
        (self.duration / self.tick + 1e-9).floor() as usize + 1
    }

    /// Descriptor of actor `index`: scripted, or drawn from the scenario seed.
    pub fn descriptor(&self, index: usize) -> Vec<f32> {
        if let Some(d) = &self.actors[index].descriptor {
            return d.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ (0xd1b5_4a32_d192_ed03u64.wrapping_mul(index as u64 + 1)));
        let v: Vec<f64> = (0..DESCRIPTOR_DIM).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| (x / norm) as f32).collect()
    }

    pub fn actor_index(&self, name: &str) -> Option<usize> {
        self.actors.iter().position(|a| a.name == name)
    }

    fn check(&self) -> Result<(), (String, String)> {
        let err = |path: &str, msg: String| Err((path.to_string(), msg));
        if self.scenario_version != SCENARIO_VERSION {
            return err(
                "scenario_version",
                format!("unsupported version {}, expected {SCENARIO_VERSION}", self.scenario_version),
            );
        }
        if !(self.tick.is_finite() && self.tick > 0.0) {
            return err("tick", format!("must be positive, got {}", self.tick));
        }
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return err("duration", format!("must be non-negative, got {}", self.duration));
        }
        if !(self.sensor.focal_length > 0.0) || self.sensor.image_width == 0 || self.sensor.image_height == 0 {
            return err("sensor", "focal length and image size must be positive".into());
        }
        if !(self.noise.position_sigma >= 0.0) {
            return err("noise.position_sigma", "must be non-negative".into());
        }
        if let Some(k) = self.noise.facing_kappa {
            if !(k > 0.0) {
                return err("noise.facing_kappa", "must be positive".into());
            }
        }
        let mut names = BTreeSet::new();
        for (i, a) in self.actors.iter().enumerate() {
            let at = |field: &str| format!("actors[{i}].{field}");
            if a.name.is_empty() || a.name == ROBOT {
                return err(&at("name"), format!("`{}` is not a usable actor name", a.name));
            }
            if !names.insert(a.name.as_str()) {
                return err(&at("name"), format!("duplicate actor name `{}`", a.name));
            }
            if !(MIN_HEIGHT..=MAX_HEIGHT).contains(&a.height) {
                return err(&at("height"), format!("{} m outside [{MIN_HEIGHT}, {MAX_HEIGHT}]", a.height));
            }
            if let Some(d) = &a.descriptor {
                if d.len() != DESCRIPTOR_DIM || d.iter().any(|x| !x.is_finite()) {
                    return err(&at("descriptor"), format!("must hold {DESCRIPTOR_DIM} finite values"));
                }
            }
            let mut previous_end = f64::NEG_INFINITY;
            for (j, iv) in a.timeline.iter().enumerate() {
                let at = |field: &str| format!("actors[{i}].timeline[{j}].{field}");
                if !(iv.start.is_finite() && iv.end.is_finite() && iv.start < iv.end) {
                    return err(&at("end"), format!("interval [{}, {}) is empty", iv.start, iv.end));
                }
                if iv.start < previous_end {
                    return err(&at("start"), "intervals overlap or are out of order".into());
                }
                previous_end = iv.end;
                if let Some(target) = &iv.look_at {
                    if target != ROBOT && !self.actors.iter().any(|x| &x.name == target) {
                        return err(&at("look_at"), format!("unknown actor `{target}`"));
                    }
                    if target == &a.name {
                        return err(&at("look_at"), "an actor cannot look at itself".into());
                    }
                }
                for joint in iv.pose.keys() {
                    if joint_index(joint).is_none() {
                        return err(&at("pose"), format!("unknown joint `{joint}`"));
                    }
                }
                for au in &iv.action_units {
                    if !(au.intensity >= 0.0 && au.intensity <= 5.0) {
                        return err(&at("action_units"), format!("AU{} intensity outside [0, 5]", au.au));
                    }
                }
            }
        }
        for (i, k) in self.known_persons.iter().enumerate() {
            if k.name.is_empty() {
                return err(&format!("known_persons[{i}].name"), "must not be empty".into());
            }
            if let Some(actor) = &k.actor {
                if self.actor_index(actor).is_none() {
                    return err(&format!("known_persons[{i}].actor"), format!("unknown actor `{actor}`"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> String {
        r#"{"scenario_version": 1, "name": "t", "duration": 1.0,
            "actors": [{"name": "A", "height": 1.7,
                        "timeline": [{"start": 0, "end": 1, "position": [2, 0]}]}]}"#
            .to_string()
    }

    #[test]
    fn defaults_fill_in() {
        let s = Scenario::from_json(&minimal(), "t.json").unwrap();
        assert_eq!(s.tick, 0.1);
        assert_eq!(s.tick_count(), 11);
        let iv = &s.actors[0].timeline[0];
        assert!(iv.face && iv.body && !iv.voice && iv.recognizable);
    }

    #[test]
    fn overlap_is_reported_with_path() {
        let text = minimal().replace(
            r#"[{"start": 0, "end": 1, "position": [2, 0]}]"#,
            r#"[{"start": 0, "end": 1, "position": [2, 0]}, {"start": 0.5, "end": 2, "position": [2, 0]}]"#,
        );
        match Scenario::from_json(&text, "t.json") {
            Err(ScenarioError::Invalid { path, .. }) => assert_eq!(path, "actors[0].timeline[1].start"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_position() {
        assert!(matches!(
            Scenario::from_json("{\"scenario_version\": 1,", "x.json"),
            Err(ScenarioError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn descriptors_are_unit_and_distinct() {
        let mut s = Scenario::from_json(&minimal(), "t.json").unwrap();
        s.actors.push(ActorScript {
            name: "B".into(),
            ..s.actors[0].clone()
        });
        let (a, b) = (s.descriptor(0), s.descriptor(1));
        let norm: f32 = a.iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-5);
        assert!(crate::person::descriptor_distance(&a, &b) > 0.4);
        assert_eq!(a, s.descriptor(0));
    }
}
