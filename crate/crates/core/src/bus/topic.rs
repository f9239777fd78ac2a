//! The `/humans` topic grammar and the leaf/schema binding table.

use std::fmt;
use std::str::FromStr;

use crate::model::{HexId, IdKind, Schema};

/// Topic carrying every `TransformStamped` of the frame tree.
pub const TF_TOPIC: &str = "/tf";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid topic `{path}`: segment `{segment}` {reason}")]
pub struct NamingError {
    pub path: String,
    pub segment: String,
    pub reason: String,
}

impl NamingError {
    fn new(path: &str, segment: &str, reason: impl Into<String>) -> Self {
        NamingError {
            path: path.to_string(),
            segment: segment.to_string(),
            reason: reason.into(),
        }
    }
}

/// Per-id sub-topics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Leaf {
    FaceRoi,
    Landmarks,
    Facs,
    Expression,
    FaceDescriptor,
    FaceDemographics,
    BodyRoi,
    Skeleton2d,
    Attitude,
    Skeleton3d,
    Height,
    Urdf,
    JointStates,
    Audio,
    Features,
    IsSpeaking,
    Speech,
    Azimuth,
    FaceId,
    BodyId,
    VoiceId,
    LocationConfidence,
    Demographics,
    Name,
    NativeLanguage,
}

impl Leaf {
    pub const ALL: [Leaf; 25] = [
        Leaf::FaceRoi,
        Leaf::Landmarks,
        Leaf::Facs,
        Leaf::Expression,
        Leaf::FaceDescriptor,
        Leaf::FaceDemographics,
        Leaf::BodyRoi,
        Leaf::Skeleton2d,
        Leaf::Attitude,
        Leaf::Skeleton3d,
        Leaf::Height,
        Leaf::Urdf,
        Leaf::JointStates,
        Leaf::Audio,
        Leaf::Features,
        Leaf::IsSpeaking,
        Leaf::Speech,
        Leaf::Azimuth,
        Leaf::FaceId,
        Leaf::BodyId,
        Leaf::VoiceId,
        Leaf::LocationConfidence,
        Leaf::Demographics,
        Leaf::Name,
        Leaf::NativeLanguage,
    ];

    /// (namespace kind, segment name, schema, latched)
    fn row(self) -> (IdKind, &'static str, Schema, bool) {
        use IdKind::*;
        match self {
            Leaf::FaceRoi => (Face, "roi", Schema::RegionOfInterest, false),
            Leaf::Landmarks => (Face, "landmarks", Schema::FacialLandmarks, false),
            Leaf::Facs => (Face, "facs", Schema::FacialActionUnits, false),
            Leaf::Expression => (Face, "expression", Schema::Expression, false),
            Leaf::FaceDescriptor => (Face, "descriptor", Schema::IdentityDescriptor, false),
            Leaf::FaceDemographics => (Face, "demographics", Schema::AgeAndGender, false),
            Leaf::BodyRoi => (Body, "roi", Schema::RegionOfInterest, false),
            Leaf::Skeleton2d => (Body, "skeleton2d", Schema::Skeleton2D, false),
            Leaf::Attitude => (Body, "attitude", Schema::BodyAttitude, false),
            Leaf::Skeleton3d => (Body, "skeleton3d", Schema::Skeleton3D, false),
            Leaf::Height => (Body, "height", Schema::Float32, false),
            Leaf::Urdf => (Body, "urdf", Schema::String, true),
            Leaf::JointStates => (Body, "joint_states", Schema::JointState, false),
            Leaf::Audio => (Voice, "audio", Schema::AudioData, false),
            Leaf::Features => (Voice, "features", Schema::AudioFeatures, false),
            Leaf::IsSpeaking => (Voice, "is_speaking", Schema::Bool, false),
            Leaf::Speech => (Voice, "speech", Schema::String, false),
            Leaf::Azimuth => (Voice, "azimuth", Schema::Float32, false),
            Leaf::FaceId => (Person, "face_id", Schema::String, true),
            Leaf::BodyId => (Person, "body_id", Schema::String, true),
            Leaf::VoiceId => (Person, "voice_id", Schema::String, true),
            Leaf::LocationConfidence => (Person, "location_confidence", Schema::Float32, false),
            Leaf::Demographics => (Person, "demographics", Schema::AgeAndGender, false),
            Leaf::Name => (Person, "name", Schema::String, false),
            Leaf::NativeLanguage => (Person, "native_language", Schema::String, false),
        }
    }

    pub fn kind(self) -> IdKind {
        self.row().0
    }

    pub fn name(self) -> &'static str {
        self.row().1
    }

    pub fn schema(self) -> Schema {
        self.row().2
    }

    pub fn latched(self) -> bool {
        self.row().3
    }

    pub fn lookup(kind: IdKind, name: &str) -> Option<Leaf> {
        Leaf::ALL
            .into_iter()
            .find(|l| l.kind() == kind && l.name() == name)
    }

    /// The person leaf carrying the id of a transient kind.
    pub fn person_link(kind: IdKind) -> Option<Leaf> {
        match kind {
            IdKind::Face => Some(Leaf::FaceId),
            IdKind::Body => Some(Leaf::BodyId),
            IdKind::Voice => Some(Leaf::VoiceId),
            IdKind::Person => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Interaction {
    Groups,
    Gaze,
}

impl Interaction {
    pub fn name(self) -> &'static str {
        match self {
            Interaction::Groups => "groups",
            Interaction::Gaze => "gaze",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Topic {
    Tracked(IdKind),
    Leaf { id: HexId, leaf: Leaf },
    Interaction(Interaction),
    Tf,
}

/// A grammatical topic path, keeping its canonical text.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TopicPath {
    topic: Topic,
    text: String,
}

impl TopicPath {
    pub fn new(topic: Topic) -> Self {
        let text = match topic {
            Topic::Tracked(kind) => format!("/humans/{}/tracked", kind.plural()),
            Topic::Leaf { id, leaf } => {
                format!("/humans/{}/{}/{}", leaf.kind().plural(), id, leaf.name())
            }
            Topic::Interaction(i) => format!("/humans/interactions/{}", i.name()),
            Topic::Tf => TF_TOPIC.to_string(),
        };
        TopicPath { topic, text }
    }

    pub fn tracked(kind: IdKind) -> Self {
        TopicPath::new(Topic::Tracked(kind))
    }

    pub fn leaf(id: HexId, leaf: Leaf) -> Self {
        TopicPath::new(Topic::Leaf { id, leaf })
    }

    pub fn interaction(i: Interaction) -> Self {
        TopicPath::new(Topic::Interaction(i))
    }

    pub fn tf() -> Self {
        TopicPath::new(Topic::Tf)
    }

    pub fn topic(&self) -> Topic {
        self.topic
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    /// The owning identifier for per-id topics.
    pub fn id(&self) -> Option<(IdKind, HexId)> {
        match self.topic {
            Topic::Leaf { id, leaf } => Some((leaf.kind(), id)),
            _ => None,
        }
    }

    /// Schema and latched flag required on this path.
    pub fn binding(&self) -> (Schema, bool) {
        match self.topic {
            Topic::Tracked(_) => (Schema::IdsList, false),
            Topic::Leaf { leaf, .. } => (leaf.schema(), leaf.latched()),
            Topic::Interaction(Interaction::Groups) => (Schema::GroupsStamped, false),
            Topic::Interaction(Interaction::Gaze) => (Schema::GazesStamped, false),
            Topic::Tf => (Schema::TransformStamped, false),
        }
    }

    pub fn parse(path: &str) -> Result<TopicPath, NamingError> {
        match parse_segments(path, false)? {
            Parsed::Exact(t) => Ok(t),
            Parsed::Wildcard(..) => unreachable!("wildcards disabled"),
        }
    }
}

impl fmt::Display for TopicPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl FromStr for TopicPath {
    type Err = NamingError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TopicPath::parse(s)
    }
}

/// Subscription pattern: an exact path or `*` in place of the id segment.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TopicPattern {
    Exact(TopicPath),
    AnyId(Leaf),
}

impl TopicPattern {
    pub fn parse(pattern: &str) -> Result<TopicPattern, NamingError> {
        Ok(match parse_segments(pattern, true)? {
            Parsed::Exact(t) => TopicPattern::Exact(t),
            Parsed::Wildcard(leaf) => TopicPattern::AnyId(leaf),
        })
    }

    pub fn matches(&self, path: &TopicPath) -> bool {
        match self {
            TopicPattern::Exact(p) => p == path,
            TopicPattern::AnyId(leaf) => {
                matches!(path.topic(), Topic::Leaf { leaf: l, .. } if l == *leaf)
            }
        }
    }
}

impl FromStr for TopicPattern {
    type Err = NamingError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TopicPattern::parse(s)
    }
}

enum Parsed {
    Exact(TopicPath),
    Wildcard(Leaf),
}

fn parse_segments(path: &str, allow_wildcard: bool) -> Result<Parsed, NamingError> {
    if path == TF_TOPIC {
        return Ok(Parsed::Exact(TopicPath::tf()));
    }
    let Some(rest) = path.strip_prefix('/') else {
        return Err(NamingError::new(path, path, "must start with `/`"));
    };
    let segs: Vec<&str> = rest.split('/').collect();
    if segs[0] != "humans" {
        return Err(NamingError::new(path, segs[0], "is not the `humans` namespace"));
    }
    let Some(&ns) = segs.get(1) else {
        return Err(NamingError::new(path, "", "missing sub-namespace"));
    };
    if ns == "interactions" {
        let name = segs.get(2).copied().unwrap_or("");
        let i = match name {
            "groups" => Interaction::Groups,
            "gaze" => Interaction::Gaze,
            _ => return Err(NamingError::new(path, name, "is not `groups` or `gaze`")),
        };
        if let Some(extra) = segs.get(3) {
            return Err(NamingError::new(path, extra, "is an unexpected trailing segment"));
        }
        return Ok(Parsed::Exact(TopicPath::interaction(i)));
    }
    let Some(kind) = IdKind::from_plural(ns) else {
        return Err(NamingError::new(
            path,
            ns,
            "is not one of faces, bodies, voices, persons, interactions",
        ));
    };
    match segs.len() {
        3 if segs[2] == "tracked" => Ok(Parsed::Exact(TopicPath::tracked(kind))),
        3 => Err(NamingError::new(path, segs[2], "expected `tracked` or `<id>/<leaf>`")),
        4 => {
            let leaf = Leaf::lookup(kind, segs[3]).ok_or_else(|| {
                NamingError::new(path, segs[3], format!("is not a {} sub-topic", kind.plural()))
            })?;
            if allow_wildcard && segs[2] == "*" {
                return Ok(Parsed::Wildcard(leaf));
            }
            let id: HexId = segs[2].parse().map_err(|_| {
                NamingError::new(path, segs[2], "is not an 8-character lowercase hex identifier")
            })?;
            Ok(Parsed::Exact(TopicPath::leaf(id, leaf)))
        }
        n if n < 3 => Err(NamingError::new(path, ns, "has no sub-topic")),
        _ => Err(NamingError::new(path, segs[4], "is an unexpected trailing segment")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leaf_paths_parse_and_print() {
        let p = TopicPath::parse("/humans/faces/bf3d0000/roi").unwrap();
        assert_eq!(p.binding(), (Schema::RegionOfInterest, false));
        assert_eq!(p.as_str(), "/humans/faces/bf3d0000/roi");
        let p = TopicPath::parse("/humans/persons/9d8a0000/face_id").unwrap();
        assert_eq!(p.binding(), (Schema::String, true));
    }

    #[test]
    fn uppercase_id_names_the_segment() {
        let e = TopicPath::parse("/humans/faces/BF3D0000/roi").unwrap_err();
        assert_eq!(e.segment, "BF3D0000");
    }

    #[test]
    fn singular_namespace_rejected() {
        let e = TopicPath::parse("/humans/face/0000abcd/roi").unwrap_err();
        assert_eq!(e.segment, "face");
    }

    #[test]
    fn foreign_leaf_rejected() {
        assert!(TopicPath::parse("/humans/faces/0000abcd/skeleton2d").is_err());
        assert!(TopicPath::parse("/humans/persons/0000abcd/roi").is_err());
    }

    #[test]
    fn wildcard_only_on_id_segment() {
        let pat = TopicPattern::parse("/humans/faces/*/roi").unwrap();
        assert!(pat.matches(&TopicPath::parse("/humans/faces/00000001/roi").unwrap()));
        assert!(!pat.matches(&TopicPath::parse("/humans/bodies/00000001/roi").unwrap()));
        assert!(TopicPattern::parse("/humans/*/00000001/roi").is_err());
        assert!(TopicPattern::parse("/robots/faces/x/roi").is_err());
        assert!(TopicPath::parse("/humans/faces/*/roi").is_err());
    }

    #[test]
    fn every_binding_round_trips() {
        for leaf in Leaf::ALL {
            let p = TopicPath::leaf(HexId::from_u32(0x1234abcd), leaf);
            assert_eq!(TopicPath::parse(p.as_str()).unwrap(), p);
        }
        for kind in IdKind::ALL {
            let p = TopicPath::tracked(kind);
            assert_eq!(TopicPath::parse(p.as_str()).unwrap(), p);
        }
    }
}
