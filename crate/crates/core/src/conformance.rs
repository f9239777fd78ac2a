//! Protocol conformance checks over a recorded event log.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::bus::{topic_report, EventLog, Leaf, LogError, LogEvent, Topic, TopicPath, LOG_VERSION};
use crate::model::{decode, HexId, IdKind, Message, Schema};
use crate::tf::{parse_frame, HumanFrame};
use crate::time::Stamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    HeaderVersion,
    SequenceMonotonic,
    TimestampMonotonic,
    TopicGrammar,
    SchemaBinding,
    LatchedDiscipline,
    PayloadInvalid,
    TrackedConsistency,
    DanglingReference,
    IdentifierCombination,
    FrameName,
    FrameAtZeroConfidence,
}

impl Rule {
    pub const ALL: [Rule; 12] = [
        Rule::HeaderVersion,
        Rule::SequenceMonotonic,
        Rule::TimestampMonotonic,
        Rule::TopicGrammar,
        Rule::SchemaBinding,
        Rule::LatchedDiscipline,
        Rule::PayloadInvalid,
        Rule::TrackedConsistency,
        Rule::DanglingReference,
        Rule::IdentifierCombination,
        Rule::FrameName,
        Rule::FrameAtZeroConfidence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::HeaderVersion => "header-version",
            Rule::SequenceMonotonic => "sequence-monotonic",
            Rule::TimestampMonotonic => "timestamp-monotonic",
            Rule::TopicGrammar => "topic-grammar",
            Rule::SchemaBinding => "schema-binding",
            Rule::LatchedDiscipline => "latched-discipline",
            Rule::PayloadInvalid => "payload-invalid",
            Rule::TrackedConsistency => "tracked-consistency",
            Rule::DanglingReference => "dangling-reference",
            Rule::IdentifierCombination => "identifier-combination",
            Rule::FrameName => "frame-name",
            Rule::FrameAtZeroConfidence => "frame-at-zero-confidence",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub rule: Rule,
    /// Physical line in the log file.
    pub line: usize,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ConformanceReport {
    pub events: usize,
    pub violations: Vec<Finding>,
}

impl ConformanceReport {
    pub fn is_conformant(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

#[derive(Default)]
struct State {
    tracked: BTreeMap<IdKind, BTreeSet<HexId>>,
    named: BTreeSet<HexId>,
    links: BTreeMap<HexId, [bool; 3]>,
    confidence: BTreeMap<HexId, f32>,
    /// Persons first listed at the current timestamp, with the listing line.
    fresh: BTreeMap<HexId, usize>,
}

impl State {
    fn is_tracked(&self, kind: IdKind, id: HexId) -> bool {
        self.tracked.get(&kind).is_some_and(|s| s.contains(&id))
    }

    fn settle(&mut self, out: &mut Vec<Finding>) {
        for (id, line) in std::mem::take(&mut self.fresh) {
            if !self.is_tracked(IdKind::Person, id) || self.named.contains(&id) {
                continue;
            }
            if !self.links.get(&id).is_some_and(|l| l.iter().any(|x| *x)) {
                out.push(Finding {
                    rule: Rule::IdentifierCombination,
                    line,
                    detail: format!("person {id} appears with no face, body or voice and no identity"),
                });
            }
        }
    }
}

/// Parses and checks a log. Errors only for logs that cannot be read at all.
pub fn check_log(text: &str) -> Result<ConformanceReport, LogError> {
    let log = EventLog::parse(text)?;
    Ok(check(&log))
}

pub fn check(log: &EventLog) -> ConformanceReport {
    let mut out = Vec::new();
    if log.version != LOG_VERSION {
        out.push(Finding {
            rule: Rule::HeaderVersion,
            line: 1,
            detail: format!("hrilog_version {} is not {LOG_VERSION}", log.version),
        });
    }
    let mut state = State::default();
    let mut last: Option<(u64, Stamp)> = None;
    for logged in &log.events {
        let e = &logged.event;
        let line = logged.line;
        if let Some((seq, t)) = last {
            if e.seq <= seq {
                out.push(Finding {
                    rule: Rule::SequenceMonotonic,
                    line,
                    detail: format!("sequence {} follows {seq}", e.seq),
                });
            }
            if e.t < t {
                out.push(Finding {
                    rule: Rule::TimestampMonotonic,
                    line,
                    detail: format!("timestamp {} follows {t}", e.t),
                });
            }
            if e.t != t {
                state.settle(&mut out);
            }
        }
        last = Some((e.seq.max(last.map_or(0, |l| l.0)), e.t.max(last.map_or(e.t, |l| l.1))));
        check_event(&mut state, e, line, &mut out);
    }
    state.settle(&mut out);
    ConformanceReport {
        events: log.events.len(),
        violations: out,
    }
}

fn check_event(state: &mut State, e: &LogEvent, line: usize, out: &mut Vec<Finding>) {
    let mut push = |rule: Rule, detail: String| out.push(Finding { rule, line, detail });
    let path = match TopicPath::parse(&e.topic) {
        Ok(p) => p,
        Err(err) => return push(Rule::TopicGrammar, err.to_string()),
    };
    let (want_schema, want_latched) = path.binding();
    let schema: Schema = match e.schema.parse() {
        Ok(s) => s,
        Err(err) => return push(Rule::SchemaBinding, format!("{err} on `{}`", e.topic)),
    };
    if schema != want_schema {
        return push(
            Rule::SchemaBinding,
            format!("`{}` carries {want_schema}, got {schema}", e.topic),
        );
    }
    if e.latched != want_latched {
        let kind = if want_latched { "latched" } else { "not latched" };
        push(Rule::LatchedDiscipline, format!("`{}` is {kind}", e.topic));
    }
    let message = match decode(&e.payload, schema) {
        Ok(m) => m,
        Err(err) => return push(Rule::PayloadInvalid, err.to_string()),
    };
    let report = topic_report(&path, &message);
    if !report.is_empty() {
        push(Rule::PayloadInvalid, format!("`{}`: {report}", e.topic));
    }

    match (path.topic(), &message) {
        (Topic::Tracked(kind), Message::IdsList(list)) => {
            let ids: BTreeSet<HexId> = list.ids.iter().copied().collect();
            if kind == IdKind::Person {
                let before = state.tracked.get(&kind).cloned().unwrap_or_default();
                for id in ids.difference(&before) {
                    state.fresh.insert(*id, line);
                }
            }
            state.tracked.insert(kind, ids);
        }
        (Topic::Leaf { id, leaf }, message) => {
            let kind = leaf.kind();
            if !state.is_tracked(kind, id) {
                push(
                    Rule::TrackedConsistency,
                    format!("`{}` published while {id} is not in /humans/{}/tracked", e.topic, kind.plural()),
                );
            }
            match (leaf, message) {
                (Leaf::FaceId | Leaf::BodyId | Leaf::VoiceId, Message::String(s)) => {
                    let (slot, linked) = match leaf {
                        Leaf::FaceId => (0, IdKind::Face),
                        Leaf::BodyId => (1, IdKind::Body),
                        _ => (2, IdKind::Voice),
                    };
                    let present = !s.data.is_empty();
                    if present {
                        match s.data.parse::<HexId>() {
                            Ok(target) if !state.is_tracked(linked, target) => push(
                                Rule::DanglingReference,
                                format!("person {id} refers to {} {target}, which is not tracked", linked.name()),
                            ),
                            _ => {}
                        }
                    }
                    state.links.entry(id).or_default()[slot] = present;
                }
                (Leaf::Name, Message::String(_)) => {
                    state.named.insert(id);
                }
                (Leaf::LocationConfidence, Message::Float32(c)) => {
                    state.confidence.insert(id, c.data);
                }
                _ => {}
            }
        }
        (Topic::Tf, Message::TransformStamped(m)) => {
            for name in [&m.parent, &m.child] {
                match parse_frame(name) {
                    Err(err) => push(Rule::FrameName, err.to_string()),
                    Ok(Some(frame)) => {
                        let (kind, id) = match frame {
                            HumanFrame::Face(id) | HumanFrame::Gaze(id) => (IdKind::Face, id),
                            HumanFrame::Body(id) | HumanFrame::Segment(_, id) => (IdKind::Body, id),
                            HumanFrame::Person(id) => (IdKind::Person, id),
                        };
                        if !state.is_tracked(kind, id) {
                            push(
                                Rule::TrackedConsistency,
                                format!("frame `{name}` published while {id} is not tracked"),
                            );
                        }
                    }
                    Ok(None) => {}
                }
            }
            if let Ok(Some(HumanFrame::Person(id))) = parse_frame(&m.child) {
                if state.confidence.get(&id) == Some(&0.0) {
                    push(
                        Rule::FrameAtZeroConfidence,
                        format!("frame published at zero confidence: `{}`", m.child),
                    );
                }
            }
        }
        _ => {}
    }
}
