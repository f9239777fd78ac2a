use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Eight lowercase hexadecimal characters, e.g. `24ac91f0`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HexId(u32);

impl HexId {
    pub const fn from_u32(raw: u32) -> Self {
        HexId(raw)
    }

    pub const fn as_u32(self) -> u32 {
        self.0
    }

    /// True when `s` is exactly eight characters of `[0-9a-f]`.
    pub fn is_valid(s: &str) -> bool {
        s.len() == 8 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
    }
}

impl fmt::Display for HexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:08x}", self.0)
    }
}

impl fmt::Debug for HexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HexId({self})")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IdError {
    #[error("`{0}` is not an identifier: expected 8 lowercase hex characters")]
    Format(String),
    #[error("person identifiers are issued by the person manager only")]
    PersonKind,
    #[error("expected a {expected} identifier, got a {actual} identifier")]
    KindMismatch { expected: IdKind, actual: IdKind },
}

impl FromStr for HexId {
    type Err = IdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if !HexId::is_valid(s) {
            return Err(IdError::Format(s.to_string()));
        }
        u32::from_str_radix(s, 16)
            .map(HexId)
            .map_err(|_| IdError::Format(s.to_string()))
    }
}

impl Serialize for HexId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for HexId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Which of the four human identifiers a value belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdKind {
    Face,
    Body,
    Voice,
    Person,
}

impl IdKind {
    pub const ALL: [IdKind; 4] = [IdKind::Face, IdKind::Body, IdKind::Voice, IdKind::Person];
    pub const TRANSIENT: [IdKind; 3] = [IdKind::Face, IdKind::Body, IdKind::Voice];

    /// Namespace segment under `/humans`.
    pub fn plural(self) -> &'static str {
        match self {
            IdKind::Face => "faces",
            IdKind::Body => "bodies",
            IdKind::Voice => "voices",
            IdKind::Person => "persons",
        }
    }

    pub fn from_plural(s: &str) -> Option<IdKind> {
        IdKind::ALL.into_iter().find(|k| k.plural() == s)
    }

    pub fn name(self) -> &'static str {
        match self {
            IdKind::Face => "face",
            IdKind::Body => "body",
            IdKind::Voice => "voice",
            IdKind::Person => "person",
        }
    }

    pub fn is_transient(self) -> bool {
        self != IdKind::Person
    }
}

impl fmt::Display for IdKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A face, body, voice or person identifier. The kind never changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Identifier {
    kind: IdKind,
    value: HexId,
}

impl Identifier {
    pub fn new(kind: IdKind, value: HexId) -> Self {
        Identifier { kind, value }
    }

    pub fn parse(kind: IdKind, s: &str) -> Result<Self, IdError> {
        Ok(Identifier::new(kind, s.parse()?))
    }

    pub fn kind(&self) -> IdKind {
        self.kind
    }

    pub fn value(&self) -> HexId {
        self.value
    }

    /// `face_<id>`, `body_<id>`, `person_<id>`; voices have no frame of their own
    /// but the same pattern is used for bookkeeping.
    pub fn frame_name(&self) -> String {
        format!("{}_{}", self.kind.name(), self.value)
    }
}

impl fmt::Display for Identifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.value.fmt(f)
    }
}

/// Issues identifiers from a seeded random source and never hands out the
/// same value twice.
#[derive(Debug, Clone)]
pub struct IdRegistry {
    rng: ChaCha8Rng,
    issued: HashSet<HexId>,
}

impl IdRegistry {
    pub fn with_seed(seed: u64) -> Self {
        IdRegistry {
            rng: ChaCha8Rng::seed_from_u64(seed),
            issued: HashSet::new(),
        }
    }

    /// Marks `id` as taken so it is never issued.
    pub fn reserve(&mut self, id: HexId) {
        self.issued.insert(id);
    }

    pub fn is_issued(&self, id: HexId) -> bool {
        self.issued.contains(&id)
    }

    pub fn len(&self) -> usize {
        self.issued.len()
    }

    pub fn is_empty(&self) -> bool {
        self.issued.is_empty()
    }

    /// Fresh face, body or voice identifier.
    pub fn new_transient_id(&mut self, kind: IdKind) -> Result<Identifier, IdError> {
        if !kind.is_transient() {
            return Err(IdError::PersonKind);
        }
        Ok(Identifier::new(kind, self.fresh()))
    }

    /// Fresh persistent person identifier. Only the person manager calls this.
    pub fn new_person_id(&mut self) -> Identifier {
        Identifier::new(IdKind::Person, self.fresh())
    }

    /// Fresh identifier-format value with no kind attached (group ids).
    pub fn fresh(&mut self) -> HexId {
        loop {
            let candidate = HexId(self.rng.random());
            if self.issued.insert(candidate) {
                return candidate;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transient_ids_are_eight_lowercase_hex() {
        let mut reg = IdRegistry::with_seed(7);
        let id = reg.new_transient_id(IdKind::Face).unwrap();
        let s = id.to_string();
        assert!(HexId::is_valid(&s), "{s}");
        assert_eq!(id.kind(), IdKind::Face);
        assert_eq!(id.frame_name(), format!("face_{s}"));
    }

    #[test]
    fn collision_forces_redraw() {
        let first = IdRegistry::with_seed(42).new_transient_id(IdKind::Body).unwrap();
        let mut reg = IdRegistry::with_seed(42);
        reg.reserve(first.value());
        let second = reg.new_transient_id(IdKind::Body).unwrap();
        assert_ne!(first.value(), second.value());
    }

    #[test]
    fn person_kind_is_refused() {
        let mut reg = IdRegistry::with_seed(1);
        assert_eq!(reg.new_transient_id(IdKind::Person), Err(IdError::PersonKind));
    }

    #[test]
    fn parse_rejects_uppercase_and_short() {
        assert!("BF3D0000".parse::<HexId>().is_err());
        assert!("24ac".parse::<HexId>().is_err());
        assert_eq!("0000bf3d".parse::<HexId>().unwrap().as_u32(), 0xbf3d);
    }

    #[test]
    fn hundred_thousand_draws_are_distinct() {
        let mut reg = IdRegistry::with_seed(3);
        let mut seen = HashSet::new();
        for _ in 0..100_000 {
            assert!(seen.insert(reg.new_transient_id(IdKind::Voice).unwrap().value()));
        }
        assert_eq!(seen.len(), 100_000);
    }
}
