//! Canonical text encoding.
//!
//! Messages encode to compact UTF-8 JSON with lexicographically sorted keys.
//! Floats are written in scientific notation with nine significant digits,
//! timestamps as seconds with nine decimals, so two encodings are byte-equal
//! exactly when the values are equal.

use std::str::FromStr;

use super::messages::{Message, Schema};
use super::validate::{validate, ValidationReport};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CodecError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{schema}: {detail}")]
    Schema { schema: Schema, detail: String },
    #[error("{schema} failed validation: {report}")]
    Invalid {
        schema: Schema,
        report: ValidationReport,
    },
    #[error("cannot encode non-finite value: {0}")]
    NonFinite(String),
}

/// Formats an `f32` with nine significant digits.
pub fn format_real(v: f32) -> String {
    format!("{:.8e}", v as f64)
}

pub(crate) fn real_number(v: f32) -> Result<serde_json::Number, String> {
    if !v.is_finite() {
        return Err(format!("{v}"));
    }
    serde_json::Number::from_str(&format_real(v)).map_err(|e| e.to_string())
}

fn parse_real(n: &serde_json::Number) -> Result<f32, String> {
    let text = n.to_string();
    text.parse::<f32>()
        .map_err(|e| format!("`{text}` is not a float: {e}"))
        .and_then(|v| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("`{text}` overflows f32"))
            }
        })
}

pub(crate) mod real {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f32, s: S) -> Result<S::Ok, S::Error> {
        super::real_number(*v)
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f32, D::Error> {
        let n = serde_json::Number::deserialize(d)?;
        super::parse_real(&n).map_err(serde::de::Error::custom)
    }
}

pub(crate) mod real_opt {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f32>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => super::real::serialize(x, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f32>, D::Error> {
        let n = Option::<serde_json::Number>::deserialize(d)?;
        n.map(|n| super::parse_real(&n).map_err(serde::de::Error::custom))
            .transpose()
    }
}

pub(crate) mod real_vec {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f32], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            let n = super::real_number(*x).map_err(serde::ser::Error::custom)?;
            seq.serialize_element(&n)?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f32>, D::Error> {
        Vec::<serde_json::Number>::deserialize(d)?
            .iter()
            .map(|n| super::parse_real(n).map_err(serde::de::Error::custom))
            .collect()
    }
}

pub(crate) mod real_array {
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer, const N: usize>(v: &[f32; N], s: S) -> Result<S::Ok, S::Error> {
        super::real_vec::serialize(v, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const N: usize>(
        d: D,
    ) -> Result<[f32; N], D::Error> {
        let v = super::real_vec::deserialize(d)?;
        let len = v.len();
        v.try_into().map_err(|_| {
            serde::de::Error::custom(format!("expected an array of {N} numbers, got {len}"))
        })
    }
}

/// Canonical text for `message`.
pub fn encode(message: &Message) -> Result<String, CodecError> {
    let value = message
        .to_json()
        .map_err(|e| CodecError::NonFinite(e.to_string()))?;
    Ok(serde_json::to_string(&value).expect("JSON values always serialize"))
}

/// Parses `text` as JSON without interpreting it against a schema.
pub fn parse_json(text: &str) -> Result<serde_json::Value, CodecError> {
    serde_json::from_str(text).map_err(|e| CodecError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Interprets an already-parsed JSON value as `schema`, without validation.
pub fn decode_value(value: serde_json::Value, schema: Schema) -> Result<Message, CodecError> {
    Message::from_json(schema, value).map_err(|e| CodecError::Schema {
        schema,
        detail: e.to_string(),
    })
}

/// Parses, interprets and validates a message.
pub fn decode(text: &str, schema: Schema) -> Result<Message, CodecError> {
    let message = decode_value(parse_json(text)?, schema)?;
    let report = validate(&message);
    if report.is_empty() {
        Ok(message)
    } else {
        Err(CodecError::Invalid { schema, report })
    }
}
