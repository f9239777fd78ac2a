use serde::{Deserialize, Serialize};

use crate::model::{HexId, IdKind};
use crate::tf::Transform;
use crate::time::Stamp;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("a person record needs at least one face, body or voice id, or prior knowledge")]
pub struct EmptyRecord;

/// Where the current person frame comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameSource {
    Face,
    Body,
    /// Bearing only, at a nominal range. Low quality.
    Voice,
}

/// A person the robot knows in advance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnownPerson {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub descriptor: Option<Vec<f32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub native_language: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersonRecord {
    pub id: HexId,
    pub face: Option<HexId>,
    pub body: Option<HexId>,
    pub voice: Option<HexId>,
    pub name: Option<String>,
    pub native_language: Option<String>,
    pub descriptor: Option<Vec<f32>>,
    pub descriptor_samples: u32,
    /// Came from the gallery of known persons.
    pub known: bool,
    /// Last located pose and the frame it is expressed in.
    pub last_known: Option<(String, Transform)>,
    pub lost_since: Option<Stamp>,
    pub confidence: f64,
    pub frame_source: Option<FrameSource>,
}

impl PersonRecord {
    /// Anonymous record for at least one live id.
    pub fn anonymous(
        id: HexId,
        face: Option<HexId>,
        body: Option<HexId>,
        voice: Option<HexId>,
    ) -> Result<PersonRecord, EmptyRecord> {
        if face.is_none() && body.is_none() && voice.is_none() {
            return Err(EmptyRecord);
        }
        Ok(PersonRecord {
            face,
            body,
            voice,
            ..PersonRecord::blank(id)
        })
    }

    pub fn from_known(id: HexId, known: &KnownPerson) -> Result<PersonRecord, EmptyRecord> {
        if known.name.is_empty() && known.descriptor.is_none() {
            return Err(EmptyRecord);
        }
        Ok(PersonRecord {
            name: Some(known.name.clone()).filter(|n| !n.is_empty()),
            native_language: known.native_language.clone(),
            descriptor: known.descriptor.clone(),
            descriptor_samples: u32::from(known.descriptor.is_some()),
            known: true,
            ..PersonRecord::blank(id)
        })
    }

    fn blank(id: HexId) -> PersonRecord {
        PersonRecord {
            id,
            face: None,
            body: None,
            voice: None,
            name: None,
            native_language: None,
            descriptor: None,
            descriptor_samples: 0,
            known: false,
            last_known: None,
            lost_since: None,
            confidence: 0.0,
            frame_source: None,
        }
    }

    pub fn link(&self, kind: IdKind) -> Option<HexId> {
        match kind {
            IdKind::Face => self.face,
            IdKind::Body => self.body,
            IdKind::Voice => self.voice,
            IdKind::Person => Some(self.id),
        }
    }

    pub fn is_tracked(&self) -> bool {
        self.face.is_some() || self.body.is_some() || self.voice.is_some()
    }

    pub fn has_prior_knowledge(&self) -> bool {
        self.known || self.name.is_some()
    }
}

/// Location confidence `lost_for` seconds after the last observation: 1 while
/// tracked, then a linear decay from 0.5 to 0 over `forget_time`. Persons that
/// were never located stay at 0.
pub fn location_confidence(tracked: bool, ever_located: bool, lost_for: f64, forget_time: f64) -> f64 {
    if tracked {
        1.0
    } else if !ever_located {
        0.0
    } else {
        0.5 * (1.0 - lost_for / forget_time).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_record_rejected() {
        assert_eq!(PersonRecord::anonymous(HexId::from_u32(1), None, None, None), Err(EmptyRecord));
        assert!(PersonRecord::anonymous(HexId::from_u32(1), None, None, Some(HexId::from_u32(2))).is_ok());
        let nobody = KnownPerson {
            name: String::new(),
            descriptor: None,
            native_language: None,
        };
        assert_eq!(PersonRecord::from_known(HexId::from_u32(1), &nobody), Err(EmptyRecord));
    }

    #[test]
    fn confidence_decay() {
        assert_eq!(location_confidence(true, true, 0.0, 60.0), 1.0);
        assert_eq!(location_confidence(false, true, 0.0, 60.0), 0.5);
        assert_eq!(location_confidence(false, true, 30.0, 60.0), 0.25);
        assert_eq!(location_confidence(false, true, 60.0, 60.0), 0.0);
        assert_eq!(location_confidence(false, true, 90.0, 60.0), 0.0);
        assert_eq!(location_confidence(false, false, 0.0, 60.0), 0.0);
    }
}
