//! End-to-end runs: simulator, body kinematics and person manager on one bus.

use serde_json::{json, Map, Value};

use crate::bus::{render_log, Bus, BusError, EventLog, LogEvent, Topic, TopicPath};
use crate::model::{decode, CodecError, Message, Schema, UnknownSchema};
use crate::person::{BodyKinematicsNode, ConfigError, KnownPerson, ManagerConfig, PersonError, PersonManager};
use crate::sim::{Scenario, Simulator, Truth};
use crate::tf::{parse_frame, HumanFrame};
use crate::time::Stamp;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Bus(#[from] BusError),
    #[error(transparent)]
    Person(#[from] PersonError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("log metadata: {0}")]
    Meta(String),
    #[error("event {seq}: {detail}")]
    Event { seq: u64, detail: String },
}

/// A finished simulation.
#[derive(Debug, Clone)]
pub struct Run {
    pub log: String,
    pub truth: Truth,
    pub config: ManagerConfig,
    /// Skeletons the kinematics node could not fit.
    pub kinematics_failures: u64,
}

/// Manager seed used when neither the scenario nor the overrides set one.
pub fn derived_manager_seed(scenario_seed: u64) -> u64 {
    scenario_seed ^ 0x9e37_79b9_7f4a_7c15
}

/// Defaults, then the scenario's `manager` table, then `overrides`.
pub fn manager_config(scenario: &Scenario, overrides: &Map<String, Value>) -> Result<ManagerConfig, ConfigError> {
    let mut table = scenario.manager.clone();
    table.extend(overrides.clone());
    if !table.contains_key("seed") {
        table.insert("seed".into(), json!(derived_manager_seed(scenario.seed)));
    }
    ManagerConfig::default().merged(&table)
}

pub fn known_persons(scenario: &Scenario) -> Vec<KnownPerson> {
    scenario
        .known_persons
        .iter()
        .map(|k| KnownPerson {
            name: k.name.clone(),
            descriptor: k
                .actor
                .as_deref()
                .and_then(|a| scenario.actor_index(a))
                .map(|i| scenario.descriptor(i)),
            native_language: k.native_language.clone(),
        })
        .collect()
}

fn meta(scenario: &str, seed: u64, config: &ManagerConfig, known: &[KnownPerson]) -> Value {
    json!({
        "config": serde_json::to_value(config).expect("config serializes"),
        "known_persons": serde_json::to_value(known).expect("known persons serialize"),
        "scenario": scenario,
        "seed": seed,
    })
}

/// Runs a scenario through the whole stack and records the bus.
pub fn simulate(scenario: &Scenario, overrides: &Map<String, Value>) -> Result<Run, PipelineError> {
    let config = manager_config(scenario, overrides)?;
    let known = known_persons(scenario);
    let bus = Bus::new();
    bus.start_recording();
    let mut body = BodyKinematicsNode::new(&bus)?;
    let mut manager = PersonManager::new(&bus, config.clone(), &known)?;
    let mut sim = Simulator::new(scenario, &bus);
    for k in 0..sim.tick_count() {
        let t = sim.step(k)?;
        body.step(t)?;
        manager.step(t)?;
    }
    let events = bus.take_recording();
    Ok(Run {
        log: render_log(Some(&meta(&scenario.name, scenario.seed, &config, &known)), &events),
        truth: sim.truth(),
        config,
        kinematics_failures: body.failures(),
    })
}

/// True for events produced by the kinematics node or the person manager.
pub fn is_derived(event: &LogEvent) -> bool {
    let Ok(path) = TopicPath::parse(&event.topic) else {
        return false;
    };
    match path.topic() {
        Topic::Tracked(kind) => kind == crate::model::IdKind::Person,
        Topic::Interaction(_) => true,
        Topic::Leaf { leaf, .. } => {
            leaf.kind() == crate::model::IdKind::Person
                || matches!(leaf, crate::bus::Leaf::Urdf | crate::bus::Leaf::JointStates)
        }
        Topic::Tf => {
            let child = serde_json::from_str::<Value>(&event.payload)
                .ok()
                .and_then(|v| v.get("child").and_then(|c| c.as_str()).map(str::to_string));
            match child.as_deref().map(parse_frame) {
                Some(Ok(Some(frame))) => matches!(
                    frame,
                    HumanFrame::Person(_) | HumanFrame::Body(_) | HumanFrame::Segment(..)
                ),
                _ => false,
            }
        }
    }
}

/// Manager settings and known persons recorded in a log header.
pub fn log_setup(log: &EventLog) -> Result<(ManagerConfig, Vec<KnownPerson>), PipelineError> {
    let meta = log.meta.as_ref().ok_or_else(|| PipelineError::Meta("missing metadata line".into()))?;
    let config = match meta.get("config") {
        Some(c) => serde_json::from_value::<ManagerConfig>(c.clone()).map_err(|e| PipelineError::Meta(e.to_string()))?,
        None => ManagerConfig::default(),
    };
    config.check()?;
    let known = match meta.get("known_persons") {
        Some(k) => serde_json::from_value(k.clone()).map_err(|e| PipelineError::Meta(e.to_string()))?,
        None => Vec::new(),
    };
    Ok((config, known))
}

/// Feeds the perception events of `log` through a fresh kinematics node and
/// person manager and returns the new log. `config` replaces the recorded one.
pub fn replay(log: &EventLog, config: Option<ManagerConfig>) -> Result<String, PipelineError> {
    let (recorded, known) = log_setup(log)?;
    let config = config.unwrap_or(recorded);
    let bus = Bus::new();
    bus.start_recording();
    let mut body = BodyKinematicsNode::new(&bus)?;
    let mut manager = PersonManager::new(&bus, config.clone(), &known)?;
    let mut current: Option<Stamp> = None;
    for e in log.events().filter(|e| !is_derived(e)) {
        if let Some(t) = current.filter(|t| *t != e.t) {
            body.step(t)?;
            manager.step(t)?;
        }
        current = Some(e.t);
        let err = |detail: String| PipelineError::Event { seq: e.seq, detail };
        let path = TopicPath::parse(&e.topic).map_err(|x| err(x.to_string()))?;
        let schema: Schema = e.schema.parse().map_err(|x: UnknownSchema| err(x.to_string()))?;
        let message: Message = decode(&e.payload, schema).map_err(|x: CodecError| err(x.to_string()))?;
        match message {
            Message::IdsList(list) if matches!(path.topic(), Topic::Tracked(_)) => {
                let Topic::Tracked(kind) = path.topic() else { unreachable!() };
                let ids = list.ids.into_iter().map(|id| crate::model::Identifier::new(kind, id));
                bus.update_tracked(kind, ids, e.t)?;
            }
            message => {
                bus.publish(&path, message, e.t)?;
            }
        }
    }
    if let Some(t) = current {
        body.step(t)?;
        manager.step(t)?;
    }
    let events = bus.take_recording();
    let seed = log.meta.as_ref().and_then(|m| m.get("seed")).and_then(Value::as_u64).unwrap_or(0);
    let name = log
        .meta
        .as_ref()
        .and_then(|m| m.get("scenario"))
        .and_then(Value::as_str)
        .unwrap_or("replay")
        .to_string();
    Ok(render_log(Some(&meta(&name, seed, &config, &known)), &events))
}
