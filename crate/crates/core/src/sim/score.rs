use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::truth::{ActorTruth, Truth, TruthTick};
use crate::bus::{EventLog, Interaction, Leaf, Topic, TopicPath};
use crate::model::{decode, HexId, IdKind, Message};
use crate::time::Stamp;

/// Fusion quality of one run against its ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub ticks: usize,
    pub identity_continuity: f64,
    pub association_accuracy: f64,
    pub gaze_precision: f64,
    pub gaze_recall: f64,
    pub group_f1: f64,
    pub confidence_correctness: f64,
    /// Gaze pairs reported while the sender's eyes were closed.
    pub blink_false_positives: u64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoreError {
    #[error("event {seq}: {detail}")]
    Event { seq: u64, detail: String },
}

/// Person-side state of the bus after all events of one timestamp.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PersonSnapshot {
    pub tracked: BTreeSet<HexId>,
    /// person -> [face, body, voice]
    pub links: BTreeMap<HexId, [Option<HexId>; 3]>,
    pub confidence: BTreeMap<HexId, f32>,
    pub gazes: Vec<(HexId, HexId)>,
    pub groups: Vec<Vec<HexId>>,
}

impl PersonSnapshot {
    /// Person holding transient id `id` of `kind`.
    pub fn holder(&self, kind: IdKind, id: HexId) -> Option<HexId> {
        let slot = match kind {
            IdKind::Face => 0,
            IdKind::Body => 1,
            IdKind::Voice => 2,
            IdKind::Person => return None,
        };
        self.links
            .iter()
            .find(|(_, l)| l[slot] == Some(id))
            .map(|(p, _)| *p)
    }
}

/// Folds the person topics of a log into one snapshot per distinct timestamp.
pub fn person_snapshots(log: &EventLog) -> Result<BTreeMap<Stamp, PersonSnapshot>, ScoreError> {
    let mut out = BTreeMap::new();
    let mut state = PersonSnapshot::default();
    let mut current: Option<Stamp> = None;
    for e in log.events() {
        if current.is_some_and(|t| t != e.t) {
            out.insert(current.unwrap(), state.clone());
            state.gazes.clear();
            state.groups.clear();
        }
        current = Some(e.t);
        let err = |detail: String| ScoreError::Event { seq: e.seq, detail };
        let Ok(path) = TopicPath::parse(&e.topic) else { continue };
        let relevant = matches!(
            path.topic(),
            Topic::Tracked(IdKind::Person) | Topic::Interaction(_)
        ) || matches!(path.id(), Some((IdKind::Person, _)));
        if !relevant {
            continue;
        }
        let schema = e.schema.parse().map_err(|x: crate::model::UnknownSchema| err(x.to_string()))?;
        let message = decode(&e.payload, schema).map_err(|x| err(x.to_string()))?;
        match (path.topic(), message) {
            (Topic::Tracked(_), Message::IdsList(list)) => {
                state.tracked = list.ids.into_iter().collect();
                let tracked = &state.tracked;
                state.links.retain(|p, _| tracked.contains(p));
                state.confidence.retain(|p, _| tracked.contains(p));
            }
            (Topic::Leaf { id, leaf }, Message::String(s)) => {
                let slot = match leaf {
                    Leaf::FaceId => 0,
                    Leaf::BodyId => 1,
                    Leaf::VoiceId => 2,
                    _ => continue,
                };
                let value = if s.data.is_empty() {
                    None
                } else {
                    Some(s.data.parse::<HexId>().map_err(|x| err(x.to_string()))?)
                };
                state.links.entry(id).or_default()[slot] = value;
            }
            (Topic::Leaf { id, leaf: Leaf::LocationConfidence }, Message::Float32(c)) => {
                state.confidence.insert(id, c.data);
            }
            (Topic::Interaction(Interaction::Gaze), Message::GazesStamped(g)) => {
                state.gazes = g.gazes.iter().map(|p| (p.sender, p.receiver)).collect();
            }
            (Topic::Interaction(Interaction::Groups), Message::GroupsStamped(g)) => {
                state.groups = g.groups.into_iter().map(|g| g.members).collect();
            }
            _ => {}
        }
    }
    if let Some(t) = current {
        out.insert(t, state);
    }
    Ok(out)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

fn snapshot_at(snaps: &BTreeMap<Stamp, PersonSnapshot>, t: Stamp) -> PersonSnapshot {
    let mut s = snaps.range(..=t).next_back().map(|(_, s)| s.clone()).unwrap_or_default();
    if !snaps.contains_key(&t) {
        s.gazes.clear();
        s.groups.clear();
    }
    s
}

/// Person representing an actor at one tick: holder of its face, else body, else voice.
fn person_of(snap: &PersonSnapshot, a: &ActorTruth) -> Option<HexId> {
    a.face
        .and_then(|f| snap.holder(IdKind::Face, f))
        .or_else(|| a.body.and_then(|b| snap.holder(IdKind::Body, b)))
        .or_else(|| a.voice.and_then(|v| snap.holder(IdKind::Voice, v)))
}

fn actor_of(snap: &PersonSnapshot, tick: &TruthTick, person: HexId) -> Option<String> {
    let links = snap.links.get(&person)?;
    tick.actors
        .iter()
        .find(|a| {
            (a.face.is_some() && a.face == links[0])
                || (a.body.is_some() && a.body == links[1])
                || (a.voice.is_some() && a.voice == links[2])
        })
        .map(|a| a.name.clone())
}

pub fn score(log: &EventLog, truth: &Truth) -> Result<ScoreReport, ScoreError> {
    let snaps = person_snapshots(log)?;
    let views: Vec<(PersonSnapshot, &TruthTick)> =
        truth.ticks.iter().map(|tick| (snapshot_at(&snaps, tick.t), tick)).collect();

    let mut continuity = (0u64, 0u64);
    let mut confidence = (0u64, 0u64);
    for name in &truth.actors {
        let mut seen: Vec<(usize, Option<HexId>)> = Vec::new();
        for (k, (snap, tick)) in views.iter().enumerate() {
            let Some(a) = tick.actors.iter().find(|a| &a.name == name) else { continue };
            if a.face.is_some() || a.body.is_some() || a.voice.is_some() {
                seen.push((k, person_of(snap, a)));
            }
        }
        let mut counts: BTreeMap<HexId, u64> = BTreeMap::new();
        for p in seen.iter().filter_map(|(_, p)| *p) {
            *counts.entry(p).or_default() += 1;
        }
        let mode = counts.iter().max_by_key(|(p, n)| (**n, std::cmp::Reverse(**p))).map(|(p, _)| *p);
        continuity.0 += seen.iter().filter(|(_, p)| p.is_some() && *p == mode).count() as u64;
        continuity.1 += seen.len() as u64;

        let Some(mode) = mode else { continue };
        let Some(first) = seen.iter().find(|(_, p)| *p == Some(mode)).map(|(k, _)| *k) else { continue };
        for (snap, tick) in &views[first..] {
            let Some(c) = snap.confidence.get(&mode) else { continue };
            let visible = tick
                .actors
                .iter()
                .any(|a| &a.name == name && (a.face.is_some() || a.body.is_some() || a.voice.is_some()));
            confidence.1 += 1;
            if visible == (*c == 1.0) {
                confidence.0 += 1;
            }
        }
    }

    let (mut tp, mut fp, mut missed) = (0u64, 0u64, 0u64);
    let (mut gaze_tp, mut gaze_fp, mut gaze_fn, mut blink_fp) = (0u64, 0u64, 0u64, 0u64);
    let (mut group_tp, mut group_fp, mut group_fn) = (0u64, 0u64, 0u64);
    for (snap, tick) in &views {
        let face_actor: BTreeMap<HexId, &str> =
            tick.actors.iter().filter_map(|a| a.face.map(|f| (f, a.name.as_str()))).collect();
        let body_actor: BTreeMap<HexId, &str> =
            tick.actors.iter().filter_map(|a| a.body.map(|b| (b, a.name.as_str()))).collect();
        let mut predicted_correct = BTreeSet::new();
        for links in snap.links.values() {
            let (Some(f), Some(b)) = (links[0], links[1]) else { continue };
            match (face_actor.get(&f), body_actor.get(&b)) {
                (Some(x), Some(y)) if x == y => {
                    tp += 1;
                    predicted_correct.insert(*x);
                }
                _ => fp += 1,
            }
        }
        for a in &tick.actors {
            if a.face.is_some() && a.body.is_some() && !predicted_correct.contains(a.name.as_str()) {
                missed += 1;
            }
        }

        let true_gaze: BTreeSet<(String, String)> = tick
            .actors
            .iter()
            .filter(|a| !a.eyes_closed)
            .filter_map(|a| a.gaze_target.clone().map(|g| (a.name.clone(), g)))
            .collect();
        let mut predicted_gaze = BTreeSet::new();
        for (s, r) in &snap.gazes {
            match (actor_of(snap, tick, *s), actor_of(snap, tick, *r)) {
                (Some(s), Some(r)) => {
                    if tick.actors.iter().any(|a| a.name == s && a.eyes_closed) {
                        blink_fp += 1;
                    }
                    predicted_gaze.insert((s, r));
                }
                _ => gaze_fp += 1,
            }
        }
        gaze_tp += predicted_gaze.intersection(&true_gaze).count() as u64;
        gaze_fp += predicted_gaze.difference(&true_gaze).count() as u64;
        gaze_fn += true_gaze.difference(&predicted_gaze).count() as u64;

        let pairs = |groups: &[Vec<String>]| -> BTreeSet<(String, String)> {
            let mut out = BTreeSet::new();
            for g in groups {
                for (i, x) in g.iter().enumerate() {
                    for y in &g[i + 1..] {
                        out.insert(if x < y { (x.clone(), y.clone()) } else { (y.clone(), x.clone()) });
                    }
                }
            }
            out
        };
        let true_pairs = pairs(&tick.groups);
        let mapped: Vec<Vec<String>> = snap
            .groups
            .iter()
            .map(|g| g.iter().filter_map(|p| actor_of(snap, tick, *p)).collect())
            .collect();
        let predicted_pairs = pairs(&mapped);
        group_tp += predicted_pairs.intersection(&true_pairs).count() as u64;
        group_fp += predicted_pairs.difference(&true_pairs).count() as u64;
        group_fn += true_pairs.difference(&predicted_pairs).count() as u64;
    }

    Ok(ScoreReport {
        ticks: truth.ticks.len(),
        identity_continuity: ratio(continuity.0, continuity.1),
        association_accuracy: ratio(tp, tp + fp + missed),
        gaze_precision: ratio(gaze_tp, gaze_tp + gaze_fp),
        gaze_recall: ratio(gaze_tp, gaze_tp + gaze_fn),
        group_f1: ratio(2 * group_tp, 2 * group_tp + group_fp + group_fn),
        confidence_correctness: ratio(confidence.0, confidence.1),
        blink_false_positives: blink_fp,
    })
}
