//! Identifiers, message schemas, canonical encoding and validation.

pub mod codec;
pub mod id;
pub mod messages;
pub mod validate;

pub use codec::{decode, decode_value, encode, format_real, parse_json, CodecError};
pub use id::{HexId, IdError, IdKind, IdRegistry, Identifier};
pub use messages::*;
pub use validate::{validate, ValidationReport, Violation};
