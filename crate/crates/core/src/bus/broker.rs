use std::collections::{BTreeMap, BTreeSet};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::{Arc, Mutex, MutexGuard};

use super::log::{EventLog, LogEvent};
use super::topic::{Leaf, NamingError, Topic, TopicPath, TopicPattern};
use crate::model::{
    decode_value, encode, parse_json, validate, CodecError, HexId, IdKind, Identifier, IdsList,
    Message, Schema, ValidationReport,
};
use crate::time::Stamp;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BusError {
    #[error(transparent)]
    Naming(#[from] NamingError),
    #[error("binding error on `{path}`: {detail}")]
    Binding { path: String, detail: String },
    #[error("invalid message on `{path}`: {report}")]
    Validation {
        path: String,
        report: ValidationReport,
    },
    #[error("time regression on `{path}`: {t} is before {last}")]
    TimeRegression { path: String, t: Stamp, last: Stamp },
    #[error("sequence {seq} does not follow {last}")]
    Sequence { seq: u64, last: u64 },
    #[error("expected {expected} identifiers, got a {actual} identifier")]
    Kind { expected: IdKind, actual: IdKind },
    #[error("payload of `{path}`: {source}")]
    Codec { path: String, source: CodecError },
}

/// One message as seen by a subscriber.
#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub seq: u64,
    pub t: Stamp,
    pub path: TopicPath,
    pub message: Message,
}

struct TopicRecord {
    schema: Schema,
    latched: bool,
    last: Option<Delivery>,
}

#[derive(Default)]
struct Inner {
    topics: BTreeMap<TopicPath, TopicRecord>,
    subscribers: Vec<(Vec<TopicPattern>, Sender<Delivery>)>,
    seq: u64,
    now: Stamp,
    recording: Option<Vec<LogEvent>>,
    tracked: BTreeMap<IdKind, BTreeSet<HexId>>,
}

/// In-process publish/subscribe bus. Cloning yields another handle to the
/// same bus; every publish goes through one ordered critical section.
#[derive(Clone, Default)]
pub struct Bus {
    inner: Arc<Mutex<Inner>>,
}

/// Handle for publishing on one advertised topic.
#[derive(Clone)]
pub struct Publisher {
    bus: Bus,
    path: TopicPath,
}

/// Pull-based FIFO of deliveries matching one pattern.
pub struct Subscription {
    rx: Receiver<Delivery>,
}

impl Subscription {
    pub fn try_next(&self) -> Option<Delivery> {
        self.rx.try_recv().ok()
    }

    pub fn drain(&self) -> Vec<Delivery> {
        self.rx.try_iter().collect()
    }
}

impl Publisher {
    pub fn path(&self) -> &TopicPath {
        &self.path
    }

    /// Returns the number of subscribers that received the message.
    pub fn publish(&self, message: impl Into<Message>, t: Stamp) -> Result<usize, BusError> {
        self.bus.publish(&self.path, message.into(), t)
    }
}

impl Bus {
    pub fn new() -> Self {
        Bus::default()
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn advertise(&self, path: &str, schema: Schema, latched: bool) -> Result<Publisher, BusError> {
        self.advertise_path(TopicPath::parse(path)?, schema, latched)
    }

    pub fn advertise_path(
        &self,
        path: TopicPath,
        schema: Schema,
        latched: bool,
    ) -> Result<Publisher, BusError> {
        check_binding(&path, schema, latched)?;
        self.lock().topics.entry(path.clone()).or_insert(TopicRecord {
            schema,
            latched,
            last: None,
        });
        Ok(Publisher {
            bus: self.clone(),
            path,
        })
    }

    /// Publishes on `path`, advertising it with its bound schema first if needed.
    pub fn publish(&self, path: &TopicPath, message: Message, t: Stamp) -> Result<usize, BusError> {
        let mut inner = self.lock();
        let seq = inner.seq + 1;
        publish_locked(&mut inner, path, message, t, seq)
    }

    /// Re-publishes a recorded event, keeping its sequence number.
    pub fn inject(&self, event: &LogEvent) -> Result<usize, BusError> {
        let path = TopicPath::parse(&event.topic)?;
        let schema: Schema = event.schema.parse().map_err(|e: crate::model::UnknownSchema| {
            BusError::Binding {
                path: event.topic.clone(),
                detail: e.to_string(),
            }
        })?;
        check_binding(&path, schema, event.latched)?;
        let codec = |source| BusError::Codec {
            path: event.topic.clone(),
            source,
        };
        let message = decode_value(parse_json(&event.payload).map_err(codec)?, schema).map_err(codec)?;
        let mut inner = self.lock();
        if event.seq <= inner.seq {
            return Err(BusError::Sequence {
                seq: event.seq,
                last: inner.seq,
            });
        }
        publish_locked(&mut inner, &path, message, event.t, event.seq)
    }

    pub fn subscribe(&self, pattern: &str) -> Result<Subscription, BusError> {
        self.subscribe_many(&[pattern])
    }

    /// One FIFO for every topic matching any of `patterns`, in publish order.
    pub fn subscribe_many(&self, patterns: &[&str]) -> Result<Subscription, BusError> {
        let patterns = patterns
            .iter()
            .map(|p| TopicPattern::parse(p))
            .collect::<Result<Vec<_>, _>>()?;
        let (tx, rx) = channel();
        let mut inner = self.lock();
        for (path, record) in &inner.topics {
            if let Some(last) = &record.last {
                if record.latched && patterns.iter().any(|p| p.matches(path)) {
                    let _ = tx.send(last.clone());
                }
            }
        }
        inner.subscribers.push((patterns, tx));
        Ok(Subscription { rx })
    }

    /// Publishes the sorted id list on `/humans/<kind>/tracked` when it differs
    /// from the last list published through this call.
    pub fn update_tracked<I>(&self, kind: IdKind, live: I, t: Stamp) -> Result<Option<usize>, BusError>
    where
        I: IntoIterator<Item = Identifier>,
    {
        let mut set = BTreeSet::new();
        for id in live {
            if id.kind() != kind {
                return Err(BusError::Kind {
                    expected: kind,
                    actual: id.kind(),
                });
            }
            set.insert(id.value());
        }
        let mut inner = self.lock();
        if inner.tracked.get(&kind) == Some(&set) {
            return Ok(None);
        }
        let message = Message::IdsList(IdsList {
            ids: set.iter().copied().collect(),
        });
        let seq = inner.seq + 1;
        let n = publish_locked(&mut inner, &TopicPath::tracked(kind), message, t, seq)?;
        inner.tracked.insert(kind, set);
        Ok(Some(n))
    }

    pub fn start_recording(&self) {
        self.lock().recording.get_or_insert_with(Vec::new);
    }

    /// Stops recording and returns the events recorded so far.
    pub fn take_recording(&self) -> Vec<LogEvent> {
        self.lock().recording.take().unwrap_or_default()
    }

    pub fn latched_value(&self, path: &TopicPath) -> Option<Message> {
        let inner = self.lock();
        let record = inner.topics.get(path)?;
        record.last.as_ref().map(|d| d.message.clone())
    }

    /// Ids last published on `/humans/<kind>/tracked` through [`Bus::update_tracked`].
    pub fn tracked(&self, kind: IdKind) -> BTreeSet<HexId> {
        self.lock().tracked.get(&kind).cloned().unwrap_or_default()
    }

    pub fn is_advertised(&self, path: &TopicPath) -> bool {
        self.lock().topics.contains_key(path)
    }

    pub fn now(&self) -> Stamp {
        self.lock().now
    }

    pub fn last_seq(&self) -> u64 {
        self.lock().seq
    }
}

/// Re-publishes every event of a log in order. Returns the event count.
pub fn replay(log: &EventLog, bus: &Bus) -> Result<usize, BusError> {
    let mut n = 0;
    for e in log.events() {
        bus.inject(e)?;
        n += 1;
    }
    Ok(n)
}

fn check_binding(path: &TopicPath, schema: Schema, latched: bool) -> Result<(), BusError> {
    let (want_schema, want_latched) = path.binding();
    if schema != want_schema {
        return Err(BusError::Binding {
            path: path.to_string(),
            detail: format!("expects {want_schema}, got {schema}"),
        });
    }
    if latched != want_latched {
        let kind = if want_latched { "latched" } else { "not latched" };
        return Err(BusError::Binding {
            path: path.to_string(),
            detail: format!("topic is {kind}"),
        });
    }
    Ok(())
}

/// Topic-specific constraints on top of the schema invariants.
pub fn topic_report(path: &TopicPath, message: &Message) -> ValidationReport {
    let mut report = validate(message);
    if let (Topic::Leaf { leaf, .. }, Message::Float32(m)) = (path.topic(), message) {
        match leaf {
            Leaf::LocationConfidence if !(0.0..=1.0).contains(&m.data) => {
                report.push("data", "unit-interval", format!("{} must lie in [0, 1]", m.data))
            }
            Leaf::Height if !(0.5..=2.5).contains(&m.data) => report.push(
                "data",
                "range",
                format!("height {} must lie in [0.5, 2.5] m", m.data),
            ),
            _ => {}
        }
    }
    if let (Topic::Leaf { leaf: Leaf::FaceId | Leaf::BodyId | Leaf::VoiceId, .. }, Message::String(s)) =
        (path.topic(), message)
    {
        if !s.data.is_empty() && !HexId::is_valid(&s.data) {
            report.push(
                "data",
                "identifier-format",
                format!("`{}` is neither empty nor an identifier", s.data),
            );
        }
    }
    report
}

fn publish_locked(
    inner: &mut Inner,
    path: &TopicPath,
    message: Message,
    t: Stamp,
    seq: u64,
) -> Result<usize, BusError> {
    let (schema, latched) = path.binding();
    let record = inner.topics.entry(path.clone()).or_insert(TopicRecord {
        schema,
        latched,
        last: None,
    });
    if message.schema() != record.schema {
        return Err(BusError::Binding {
            path: path.to_string(),
            detail: format!("expects {}, got {}", record.schema, message.schema()),
        });
    }
    let report = topic_report(path, &message);
    if !report.is_empty() {
        return Err(BusError::Validation {
            path: path.to_string(),
            report,
        });
    }
    if t < inner.now {
        return Err(BusError::TimeRegression {
            path: path.to_string(),
            t,
            last: inner.now,
        });
    }
    let payload = encode(&message).map_err(|source| BusError::Codec {
        path: path.to_string(),
        source,
    })?;
    inner.seq = seq;
    inner.now = t;
    let delivery = Delivery {
        seq,
        t,
        path: path.clone(),
        message,
    };
    if let Some(rec) = inner.recording.as_mut() {
        rec.push(LogEvent {
            seq,
            t,
            topic: path.to_string(),
            schema: schema.name().to_string(),
            latched,
            payload,
        });
    }
    let record = inner.topics.get_mut(path).expect("inserted above");
    if record.latched {
        record.last = Some(delivery.clone());
    }
    let mut delivered = 0;
    inner.subscribers.retain(|(patterns, tx)| {
        if !patterns.iter().any(|p| p.matches(path)) {
            return true;
        }
        match tx.send(delivery.clone()) {
            Ok(()) => {
                delivered += 1;
                true
            }
            Err(_) => false,
        }
    });
    Ok(delivered)
}
