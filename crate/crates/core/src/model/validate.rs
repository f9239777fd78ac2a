use std::collections::HashSet;
use std::fmt;

use super::messages::*;
use crate::time::Stamp;

/// One broken invariant: where, which rule, and a human-readable detail.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub rule: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} [{}]", self.path, self.detail, self.rule)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    /// True if some violation sits at `path` or below it.
    pub fn mentions(&self, path: &str) -> bool {
        self.violations.iter().any(|v| {
            v.path == path || v.path.starts_with(&format!("{path}.")) || v.path.starts_with(&format!("{path}["))
        })
    }

    pub(crate) fn push(&mut self, path: impl Into<String>, rule: &'static str, detail: impl Into<String>) {
        self.violations.push(Violation {
            path: path.into(),
            rule,
            detail: detail.into(),
        });
    }

    fn unit(&mut self, path: &str, v: f32) {
        if !(0.0..=1.0).contains(&v) {
            self.push(path, "unit-interval", format!("{v} must lie in [0, 1]"));
        }
    }

    fn range(&mut self, path: &str, v: f32, lo: f32, hi: f32) {
        if !(lo..=hi).contains(&v) {
            self.push(path, "range", format!("{v} must lie in [{lo}, {hi}]"));
        }
    }

    fn finite(&mut self, path: &str, v: f32) {
        if !v.is_finite() {
            self.push(path, "finite", format!("{v} is not finite"));
        }
    }

    fn non_negative(&mut self, path: &str, v: f32) {
        if !(v >= 0.0) {
            self.push(path, "non-negative", format!("{v} must be >= 0"));
        }
    }

    fn length(&mut self, path: &str, len: usize, expected: usize) {
        if len != expected {
            self.push(
                path,
                "fixed-length",
                format!("length must be {expected}, got {len}"),
            );
        }
    }

    fn stamp(&mut self, path: &str, s: Stamp) {
        if s < Stamp::ZERO {
            self.push(path, "non-negative", format!("timestamp {s} must be >= 0"));
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            v.fmt(f)?;
        }
        Ok(())
    }
}

/// Reports every invariant violation in `message`. An empty report means valid.
pub fn validate(message: &Message) -> ValidationReport {
    let mut r = ValidationReport::default();
    match message {
        Message::RegionOfInterest(m) => {
            if m.width == 0 {
                r.push("width", "positive", "width must be > 0");
            }
            if m.height == 0 {
                r.push("height", "positive", "height must be > 0");
            }
        }
        Message::FacialLandmarks(m) => {
            r.length("landmarks", m.landmarks.len(), LANDMARK_COUNT);
            for (i, l) in m.landmarks.iter().enumerate() {
                r.finite(&format!("landmarks[{i}].x"), l.x);
                r.finite(&format!("landmarks[{i}].y"), l.y);
                r.unit(&format!("landmarks[{i}].confidence"), l.confidence);
            }
            r.stamp("stamp", m.stamp);
        }
        Message::FacialActionUnits(m) => {
            let mut seen = HashSet::new();
            for (i, u) in m.units.iter().enumerate() {
                if u.au == 0 {
                    r.push(format!("units[{i}].au"), "positive", "AU code must be > 0");
                }
                if !seen.insert(u.au) {
                    r.push(
                        format!("units[{i}].au"),
                        "unique",
                        format!("AU {} appears more than once", u.au),
                    );
                }
                r.range(&format!("units[{i}].intensity"), u.intensity, 0.0, 5.0);
                r.unit(&format!("units[{i}].confidence"), u.confidence);
            }
        }
        Message::Expression(m) => {
            match (m.valence, m.arousal) {
                (Some(_), None) | (None, Some(_)) => r.push(
                    if m.valence.is_some() { "arousal" } else { "valence" },
                    "valence-arousal-pair",
                    "valence and arousal must both be present",
                ),
                (None, None) if m.category.is_none() => r.push(
                    "category",
                    "category-or-valence-arousal",
                    "either a category or valence and arousal is required",
                ),
                _ => {}
            }
            if let Some(v) = m.valence {
                r.range("valence", v, -1.0, 1.0);
            }
            if let Some(a) = m.arousal {
                r.range("arousal", a, -1.0, 1.0);
            }
            r.unit("confidence", m.confidence);
        }
        Message::Skeleton2D(m) => {
            r.length("keypoints", m.keypoints.len(), SKELETON_KEYPOINT_COUNT);
            for (i, k) in m.keypoints.iter().enumerate() {
                r.unit(&format!("keypoints[{i}].confidence"), k.confidence);
                if k.confidence > 0.0 {
                    r.unit(&format!("keypoints[{i}].x"), k.x);
                    r.unit(&format!("keypoints[{i}].y"), k.y);
                } else if k.x != 0.0 || k.y != 0.0 {
                    r.push(
                        format!("keypoints[{i}]"),
                        "absent-keypoint",
                        "absent keypoints must sit at (0, 0)",
                    );
                }
            }
            r.stamp("stamp", m.stamp);
        }
        Message::BodyAttitude(m) => r.unit("confidence", m.confidence),
        Message::AudioFeatures(m) => {
            r.length("features", m.features.len(), AUDIO_FEATURE_COUNT);
            for (i, v) in m.features.iter().enumerate() {
                r.finite(&format!("features[{i}]"), *v);
            }
            if let Some(rms) = m.features.get(AUDIO_RMS_INDEX) {
                r.non_negative(&format!("features[{AUDIO_RMS_INDEX}]"), *rms);
            }
            if let Some(f0) = m.features.get(AUDIO_F0_INDEX) {
                r.non_negative(&format!("features[{AUDIO_F0_INDEX}]"), *f0);
            }
            r.stamp("stamp", m.stamp);
        }
        Message::AgeAndGender(m) => {
            r.non_negative("age", m.age);
            r.finite("age", m.age);
            r.unit("age_confidence", m.age_confidence);
            r.unit("gender_confidence", m.gender_confidence);
        }
        Message::Group(g) => check_group(&mut r, "", g),
        Message::GazeSenderReceiver(g) => check_gaze(&mut r, "", g),
        Message::GroupsStamped(m) => {
            r.stamp("stamp", m.stamp);
            for (i, g) in m.groups.iter().enumerate() {
                check_group(&mut r, &format!("groups[{i}]."), g);
            }
        }
        Message::GazesStamped(m) => {
            r.stamp("stamp", m.stamp);
            for (i, g) in m.gazes.iter().enumerate() {
                check_gaze(&mut r, &format!("gazes[{i}]."), g);
            }
        }
        Message::String(_) | Message::Bool(_) | Message::AudioData(_) => {}
        Message::Float32(m) => r.finite("data", m.data),
        Message::IdsList(m) => {
            let mut seen = HashSet::new();
            for (i, id) in m.ids.iter().enumerate() {
                if !seen.insert(*id) {
                    r.push(format!("ids[{i}]"), "unique", format!("{id} listed twice"));
                }
            }
        }
        Message::TransformStamped(m) => {
            r.stamp("stamp", m.stamp);
            if m.parent.is_empty() {
                r.push("parent", "non-empty", "parent frame is empty");
            }
            if m.child.is_empty() {
                r.push("child", "non-empty", "child frame is empty");
            }
            if m.parent == m.child {
                r.push("child", "distinct-frames", "parent and child are the same frame");
            }
            for (i, v) in m.translation.iter().enumerate() {
                r.finite(&format!("translation[{i}]"), *v);
            }
            for (i, v) in m.rotation.iter().enumerate() {
                r.finite(&format!("rotation[{i}]"), *v);
            }
            let norm = m.rotation.iter().map(|v| (*v as f64).powi(2)).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-6 {
                r.push("rotation", "unit-quaternion", format!("quaternion norm is {norm}"));
            }
        }
        Message::IdentityDescriptor(m) => {
            r.length("values", m.values.len(), DESCRIPTOR_DIM);
            for (i, v) in m.values.iter().enumerate() {
                r.finite(&format!("values[{i}]"), *v);
            }
        }
        Message::Skeleton3D(m) => {
            r.stamp("stamp", m.stamp);
            if m.frame.is_empty() {
                r.push("frame", "non-empty", "reference frame is empty");
            }
            r.length("keypoints", m.keypoints.len(), SKELETON_KEYPOINT_COUNT);
            for (i, k) in m.keypoints.iter().enumerate() {
                r.unit(&format!("keypoints[{i}].confidence"), k.confidence);
                for (axis, v) in [("x", k.x), ("y", k.y), ("z", k.z)] {
                    r.finite(&format!("keypoints[{i}].{axis}"), v);
                }
            }
        }
        Message::JointState(m) => {
            r.stamp("stamp", m.stamp);
            r.length("positions", m.positions.len(), m.names.len());
            r.length("valid", m.valid.len(), m.names.len());
            for (i, v) in m.positions.iter().enumerate() {
                r.finite(&format!("positions[{i}]"), *v);
            }
        }
    }
    r
}

fn check_group(r: &mut ValidationReport, prefix: &str, g: &Group) {
    if g.members.len() < 2 {
        r.push(
            format!("{prefix}members"),
            "min-members",
            format!("a group needs at least 2 members, got {}", g.members.len()),
        );
    }
    let mut seen = HashSet::new();
    for (i, m) in g.members.iter().enumerate() {
        if !seen.insert(*m) {
            r.push(format!("{prefix}members[{i}]"), "unique", format!("{m} listed twice"));
        }
    }
}

fn check_gaze(r: &mut ValidationReport, prefix: &str, g: &GazeSenderReceiver) {
    if g.sender == g.receiver {
        r.push(
            format!("{prefix}receiver"),
            "sender-differs-from-receiver",
            "sender and receiver must differ",
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn landmarks(n: usize, conf: f32) -> FacialLandmarks {
        FacialLandmarks {
            landmarks: vec![Landmark { x: 10.0, y: 20.0, confidence: conf }; n],
            stamp: Stamp::ZERO,
        }
    }

    #[test]
    fn valid_landmarks_give_empty_report() {
        assert!(validate(&Message::FacialLandmarks(landmarks(67, 0.9))).is_empty());
    }

    #[test]
    fn short_skeleton_reports_length() {
        let m = Skeleton2D {
            keypoints: vec![Keypoint2D { x: 0.5, y: 0.5, confidence: 1.0 }; 17],
            stamp: Stamp::ZERO,
        };
        let report = validate(&Message::Skeleton2D(m));
        assert_eq!(report.violations().len(), 1);
        assert_eq!(report.violations()[0].detail, "length must be 18, got 17");
        assert_eq!(report.violations()[0].path, "keypoints");
    }

    #[test]
    fn lone_valence_is_rejected() {
        let m = Expression { category: None, valence: Some(0.3), arousal: None, confidence: 0.8 };
        let report = validate(&Message::Expression(m));
        assert_eq!(report.violations().len(), 1);
        assert_eq!(report.violations()[0].detail, "valence and arousal must both be present");
    }

    #[test]
    fn empty_expression_is_rejected() {
        let m = Expression { category: None, valence: None, arousal: None, confidence: 0.8 };
        assert!(!validate(&Message::Expression(m)).is_empty());
    }

    #[test]
    fn absent_keypoint_must_be_at_origin() {
        let mut kps = vec![Keypoint2D { x: 0.5, y: 0.5, confidence: 1.0 }; 18];
        kps[3] = Keypoint2D { x: 0.2, y: 0.0, confidence: 0.0 };
        let report = validate(&Message::Skeleton2D(Skeleton2D { keypoints: kps, stamp: Stamp::ZERO }));
        assert!(report.mentions("keypoints[3]"));
    }

    #[test]
    fn duplicate_action_units_flagged() {
        let au = ActionUnit { au: 12, intensity: 2.0, confidence: 0.5 };
        let report = validate(&Message::FacialActionUnits(FacialActionUnits { units: vec![au, au] }));
        assert_eq!(report.violations()[0].rule, "unique");
    }

    #[test]
    fn audio_f0_must_be_non_negative() {
        let mut features = vec![0.0; 16];
        features[AUDIO_F0_INDEX] = -1.0;
        let report = validate(&Message::AudioFeatures(AudioFeatures { features, stamp: Stamp::ZERO }));
        assert!(report.mentions("features[2]"));
    }
}
