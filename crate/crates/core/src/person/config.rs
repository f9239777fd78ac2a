use std::path::Path;

use serde::{Deserialize, Serialize};

/// Fusion thresholds. Every field has a default and can be set from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManagerConfig {
    /// Association gate on normalised costs.
    pub assoc_gate: f64,
    /// Face-to-sellion distance (metres) that costs 1.0 in face/body association.
    pub assoc_distance: f64,
    /// Bearing difference (degrees) that costs 1.0 in voice association.
    pub voice_bearing_scale_deg: f64,
    /// Maximum descriptor distance for a positive identification.
    pub ident_threshold: f64,
    pub gaze_cone_deg: f64,
    pub group_radius: f64,
    /// Seconds for location confidence to decay from 0.5 to 0.
    pub forget_time: f64,
    /// Physical head width in metres for size-based distance estimates.
    pub head_width: f64,
    /// Nominal range of bearing-only (voice) person frames.
    pub voice_range: f64,
    /// Seconds an unidentified face/body/voice may stay without a person.
    pub identification_grace: f64,
    pub respect_blinks: bool,
    pub blink_au45_threshold: f64,
    pub world_frame: String,
    pub sensor_frame: String,
    /// Seed for person and group identifiers.
    pub seed: u64,
}

impl Default for ManagerConfig {
    fn default() -> Self {
        ManagerConfig {
            assoc_gate: 0.5,
            assoc_distance: 0.3,
            voice_bearing_scale_deg: 30.0,
            ident_threshold: 0.4,
            gaze_cone_deg: 15.0,
            group_radius: 1.5,
            forget_time: 60.0,
            head_width: 0.15,
            voice_range: 1.5,
            identification_grace: 0.0,
            respect_blinks: true,
            blink_au45_threshold: 1.0,
            world_frame: "world".into(),
            sensor_frame: "camera".into(),
            seed: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl ManagerConfig {
    pub fn from_toml(text: &str) -> Result<ManagerConfig, ConfigError> {
        let table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: "<config>".into(),
            message: e.to_string(),
        })?;
        ManagerConfig::default().merged(table)
    }

    pub fn load(path: &Path) -> Result<ManagerConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        ManagerConfig::from_toml(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    /// Applies the keys present in `overrides` on top of `self`.
    pub fn merged<T: Serialize>(&self, overrides: T) -> Result<ManagerConfig, ConfigError> {
        let mut base = serde_json::to_value(self).expect("config serializes");
        let extra = serde_json::to_value(overrides).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if let (Some(base), Some(extra)) = (base.as_object_mut(), extra.as_object()) {
            for (k, v) in extra {
                base.insert(k.clone(), v.clone());
            }
        }
        let merged: ManagerConfig =
            serde_json::from_value(base).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        merged.check()?;
        Ok(merged)
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        let positive = [
            ("assoc_gate", self.assoc_gate),
            ("assoc_distance", self.assoc_distance),
            ("voice_bearing_scale_deg", self.voice_bearing_scale_deg),
            ("ident_threshold", self.ident_threshold),
            ("gaze_cone_deg", self.gaze_cone_deg),
            ("group_radius", self.group_radius),
            ("forget_time", self.forget_time),
            ("head_width", self.head_width),
            ("voice_range", self.voice_range),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::Invalid(format!("`{name}` must be positive, got {v}")));
            }
        }
        if !(self.identification_grace >= 0.0) {
            return Err(ConfigError::Invalid("`identification_grace` must be >= 0".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_overrides_defaults() {
        let c = ManagerConfig::from_toml("forget_time = 3.0\nrespect_blinks = false\n").unwrap();
        assert_eq!(c.forget_time, 3.0);
        assert!(!c.respect_blinks);
        assert_eq!(c.assoc_gate, 0.5);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ManagerConfig::from_toml("gate = 1").is_err());
    }

    #[test]
    fn negative_values_rejected() {
        assert!(ManagerConfig::from_toml("group_radius = -1.0").is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = ManagerConfig { forget_time: 12.5, ..Default::default() };
        let back: ManagerConfig = serde_json::from_value(c.to_json()).unwrap();
        assert_eq!(back, c);
    }
}
