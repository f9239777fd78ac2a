//! `.hrilog` event logs: one canonical JSON object per line after a version header.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::Value;

use crate::time::Stamp;

pub const LOG_VERSION: u64 = 1;
pub const HEADER_LINE: &str = r#"{"hrilog_version": 1}"#;

/// One recorded publication. `payload` is the canonical message text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogEvent {
    pub seq: u64,
    pub t: Stamp,
    pub topic: String,
    pub schema: String,
    pub latched: bool,
    pub payload: String,
}

impl LogEvent {
    pub fn to_line(&self) -> String {
        format!(
            r#"{{"latched":{},"payload":{},"schema":{},"seq":{},"t":{},"topic":{}}}"#,
            self.latched,
            self.payload,
            Value::from(self.schema.as_str()),
            self.seq,
            self.t,
            Value::from(self.topic.as_str()),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LogError {
    #[error("{0}")]
    Io(String),
    #[error("line {line}: bad header: {detail}")]
    Header { line: usize, detail: String },
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: {detail}")]
    Field { line: usize, detail: String },
    #[error("line {line}: integrity error: {detail}")]
    Integrity { line: usize, detail: String },
}

impl LogError {
    pub fn line(&self) -> Option<usize> {
        match self {
            LogError::Io(_) => None,
            LogError::Header { line, .. }
            | LogError::Parse { line, .. }
            | LogError::Field { line, .. }
            | LogError::Integrity { line, .. } => Some(*line),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoggedEvent {
    /// 1-based physical line number in the file.
    pub line: usize,
    pub event: LogEvent,
}

/// A parsed log, before any ordering checks.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub version: u64,
    pub meta: Option<Value>,
    pub events: Vec<LoggedEvent>,
}

impl EventLog {
    pub fn parse(text: &str) -> Result<EventLog, LogError> {
        let mut lines = text.split('\n').enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines.next().unwrap_or((1, ""));
        let version = parse_header(header)?;
        let mut log = EventLog {
            version,
            meta: None,
            events: Vec::new(),
        };
        for (line, raw) in lines {
            if raw.is_empty() {
                continue;
            }
            let value: Value = serde_json::from_str(raw).map_err(|e| LogError::Parse {
                line,
                column: e.column(),
                message: e.to_string(),
            })?;
            let Value::Object(map) = value else {
                return Err(LogError::Field {
                    line,
                    detail: "expected a JSON object".into(),
                });
            };
            if log.events.is_empty() && log.meta.is_none() && !map.contains_key("seq") {
                log.meta = Some(Value::Object(map));
                continue;
            }
            log.events.push(LoggedEvent {
                line,
                event: event_from_map(line, map)?,
            });
        }
        Ok(log)
    }

    pub fn load(path: &Path) -> Result<EventLog, LogError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LogError::Io(format!("{}: {e}", path.display())))?;
        EventLog::parse(&text)
    }

    /// Checks the version, strictly increasing `seq` and non-decreasing `t`.
    pub fn check_integrity(&self) -> Result<(), LogError> {
        if self.version != LOG_VERSION {
            return Err(LogError::Header {
                line: 1,
                detail: format!("unsupported hrilog_version {}", self.version),
            });
        }
        for pair in self.events.windows(2) {
            let (a, b) = (&pair[0].event, &pair[1].event);
            if b.seq <= a.seq {
                return Err(LogError::Integrity {
                    line: pair[1].line,
                    detail: format!("sequence {} follows {}", b.seq, a.seq),
                });
            }
            if b.t < a.t {
                return Err(LogError::Integrity {
                    line: pair[1].line,
                    detail: format!("timestamp {} follows {}", b.t, a.t),
                });
            }
        }
        Ok(())
    }

    pub fn events(&self) -> impl Iterator<Item = &LogEvent> {
        self.events.iter().map(|e| &e.event)
    }
}

/// Renders a complete log file.
pub fn render_log<'a>(meta: Option<&Value>, events: impl IntoIterator<Item = &'a LogEvent>) -> String {
    let mut out = String::new();
    out.push_str(HEADER_LINE);
    out.push('\n');
    if let Some(meta) = meta {
        out.push_str(&serde_json::to_string(meta).expect("JSON values always serialize"));
        out.push('\n');
    }
    for e in events {
        let _ = writeln!(out, "{}", e.to_line());
    }
    out
}

fn parse_header(line: &str) -> Result<u64, LogError> {
    let header = |detail: String| LogError::Header { line: 1, detail };
    let value: Value = serde_json::from_str(line).map_err(|e| header(e.to_string()))?;
    let Value::Object(map) = value else {
        return Err(header("expected a JSON object".into()));
    };
    if map.len() != 1 {
        return Err(header("expected only `hrilog_version`".into()));
    }
    map.get("hrilog_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| header("missing integer `hrilog_version`".into()))
}

fn event_from_map(line: usize, mut map: serde_json::Map<String, Value>) -> Result<LogEvent, LogError> {
    let field = |detail: String| LogError::Field { line, detail };
    let mut take = |name: &str| {
        map.remove(name)
            .ok_or_else(|| field(format!("missing field `{name}`")))
    };
    let seq = take("seq")?
        .as_u64()
        .ok_or_else(|| field("`seq` must be a non-negative integer".into()))?;
    let t = match take("t")? {
        Value::Number(n) => n
            .to_string()
            .parse::<Stamp>()
            .map_err(|e| field(e.to_string()))?,
        _ => return Err(field("`t` must be a number".into())),
    };
    let topic = match take("topic")? {
        Value::String(s) => s,
        _ => return Err(field("`topic` must be a string".into())),
    };
    let schema = match take("schema")? {
        Value::String(s) => s,
        _ => return Err(field("`schema` must be a string".into())),
    };
    let latched = take("latched")?
        .as_bool()
        .ok_or_else(|| field("`latched` must be a boolean".into()))?;
    let payload = serde_json::to_string(&take("payload")?).expect("JSON values always serialize");
    if let Some(extra) = map.keys().next() {
        return Err(field(format!("unknown field `{extra}`")));
    }
    Ok(LogEvent {
        seq,
        t,
        topic,
        schema,
        latched,
        payload,
    })
}
