use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::model::HexId;
use crate::time::Stamp;

/// Ground truth written next to an event log as `<log>.truth.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truth {
    pub scenario: String,
    pub seed: u64,
    pub actors: Vec<String>,
    /// Known-person name to the actor it enrols.
    pub known: BTreeMap<String, String>,
    pub group_radius: f64,
    pub ticks: Vec<TruthTick>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthTick {
    pub t: Stamp,
    pub actors: Vec<ActorTruth>,
    /// Actor names, sorted within and across groups.
    pub groups: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActorTruth {
    pub name: String,
    #[serde(default)]
    pub face: Option<HexId>,
    #[serde(default)]
    pub body: Option<HexId>,
    #[serde(default)]
    pub voice: Option<HexId>,
    /// World position of the sellion.
    pub sellion: [f64; 3],
    /// Actor being looked at (only while both faces are visible).
    #[serde(default)]
    pub gaze_target: Option<String>,
    pub eyes_closed: bool,
    /// Eye centres and scalp direction in the sensor frame, when the face is visible.
    #[serde(default)]
    pub face_geometry: Option<FaceTruth>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceTruth {
    pub left_eye: [f64; 3],
    pub right_eye: [f64; 3],
    pub up: [f64; 3],
}

impl FaceTruth {
    pub fn geometry(&self) -> crate::tf::FaceGeometry {
        use nalgebra::{Point3, Vector3};
        crate::tf::FaceGeometry {
            left_eye: Point3::from(self.left_eye),
            right_eye: Point3::from(self.right_eye),
            up: Vector3::from(self.up),
        }
    }
}

impl ActorTruth {
    pub fn visible(&self) -> bool {
        self.face.is_some() || self.body.is_some()
    }
}

impl Truth {
    pub fn truth_path(log: &Path) -> PathBuf {
        let mut name = log.as_os_str().to_owned();
        name.push(".truth.json");
        PathBuf::from(name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("truth serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Truth, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn actor_index(&self, name: &str) -> Option<usize> {
        self.actors.iter().position(|a| a == name)
    }
}
