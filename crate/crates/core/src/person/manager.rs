use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Isometry3, Point3, Translation3, UnitQuaternion};

use super::assignment::assign;
use super::config::ManagerConfig;
use super::identify::{identify, update_descriptor};
use super::interactions::{detect_gaze, detect_groups, GazeSource, GroupIds};
use super::record::{location_confidence, EmptyRecord, FrameSource, KnownPerson, PersonRecord};
use crate::bus::{Bus, BusError, Interaction, Leaf, Subscription, Topic, TopicPath};
use crate::kinematics::anthropometry::face::SELLION;
use crate::model::{
    AgeAndGender, GazeSenderReceiver, GazesStamped, Group, GroupsStamped, HexId, IdKind, IdRegistry,
    Identifier, Message, RegionOfInterest, TransformStamped, AU_BLINK,
};
use crate::tf::{face_to_gaze, from_message, to_message, TfError, TfTree, Transform};
use crate::time::Stamp;

#[derive(Debug, thiserror::Error)]
pub enum PersonError {
    #[error(transparent)]
    Bus(#[from] BusError),
    #[error(transparent)]
    Tf(#[from] TfError),
    #[error(transparent)]
    Record(#[from] EmptyRecord),
    #[error("time regression: step at {t} after {last}")]
    TimeRegression { t: Stamp, last: Stamp },
}

/// Ids fused into one person candidate during a step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub face: Option<HexId>,
    pub body: Option<HexId>,
    pub voice: Option<HexId>,
    /// `None` while the cluster waits for identification.
    pub person: Option<HexId>,
}

impl Cluster {
    pub fn members(&self) -> impl Iterator<Item = HexId> + '_ {
        [self.face, self.body, self.voice].into_iter().flatten()
    }
}

#[derive(Debug, Clone)]
struct FaceState {
    first_seen: Stamp,
    roi: Option<RegionOfInterest>,
    frame: Option<TransformStamped>,
    descriptor: Option<Vec<f32>>,
    blink: f32,
    demographics: Option<AgeAndGender>,
}

#[derive(Debug, Clone)]
struct BodyState {
    first_seen: Stamp,
    roi: Option<RegionOfInterest>,
    height: Option<f64>,
}

#[derive(Debug, Clone)]
struct VoiceState {
    first_seen: Stamp,
    azimuth: Option<f64>,
}

#[derive(Debug, Clone, Default)]
struct Published {
    links: [Option<String>; 3],
    confidence: Option<f32>,
    introduced: bool,
}

const LINKS: [(IdKind, Leaf); 3] = [
    (IdKind::Face, Leaf::FaceId),
    (IdKind::Body, Leaf::BodyId),
    (IdKind::Voice, Leaf::VoiceId),
];

/// Fuses faces, bodies and voices into persons and publishes the person and
/// interaction topics. Call [`PersonManager::step`] once per time step after
/// the perception outputs for that step have been published.
pub struct PersonManager {
    config: ManagerConfig,
    bus: Bus,
    sub: Subscription,
    registry: IdRegistry,
    tf: TfTree,
    faces: BTreeMap<HexId, FaceState>,
    bodies: BTreeMap<HexId, BodyState>,
    voices: BTreeMap<HexId, VoiceState>,
    persons: BTreeMap<HexId, PersonRecord>,
    published: BTreeMap<HexId, Published>,
    identified: BTreeMap<HexId, Option<HexId>>,
    group_ids: GroupIds,
    clusters: Vec<Cluster>,
    gazes: Vec<(HexId, HexId)>,
    groups: Vec<(HexId, Vec<HexId>)>,
    last_t: Option<Stamp>,
}

impl PersonManager {
    pub fn new(bus: &Bus, config: ManagerConfig, known: &[KnownPerson]) -> Result<Self, PersonError> {
        let sub = bus.subscribe_many(&[
            "/humans/faces/tracked",
            "/humans/bodies/tracked",
            "/humans/voices/tracked",
            "/tf",
            "/humans/faces/*/roi",
            "/humans/faces/*/descriptor",
            "/humans/faces/*/facs",
            "/humans/faces/*/demographics",
            "/humans/bodies/*/roi",
            "/humans/bodies/*/height",
            "/humans/voices/*/azimuth",
        ])?;
        let mut registry = IdRegistry::with_seed(config.seed);
        let mut persons = BTreeMap::new();
        for k in known {
            let id = registry.new_person_id().value();
            persons.insert(id, PersonRecord::from_known(id, k)?);
        }
        Ok(PersonManager {
            config,
            bus: bus.clone(),
            sub,
            registry,
            tf: TfTree::default(),
            faces: BTreeMap::new(),
            bodies: BTreeMap::new(),
            voices: BTreeMap::new(),
            persons,
            published: BTreeMap::new(),
            identified: BTreeMap::new(),
            group_ids: GroupIds::default(),
            clusters: Vec::new(),
            gazes: Vec::new(),
            groups: Vec::new(),
            last_t: None,
        })
    }

    pub fn config(&self) -> &ManagerConfig {
        &self.config
    }

    pub fn persons(&self) -> &BTreeMap<HexId, PersonRecord> {
        &self.persons
    }

    pub fn person(&self, id: HexId) -> Option<&PersonRecord> {
        self.persons.get(&id)
    }

    /// Person currently holding transient id `id` of `kind`.
    pub fn holder(&self, kind: IdKind, id: HexId) -> Option<HexId> {
        self.persons.values().find(|p| p.link(kind) == Some(id)).map(|p| p.id)
    }

    /// Person with the given name (known persons).
    pub fn person_named(&self, name: &str) -> Option<HexId> {
        self.persons
            .values()
            .find(|p| p.name.as_deref() == Some(name))
            .map(|p| p.id)
    }

    /// Fusion result of the last step, including clusters still without a person.
    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn gazes(&self) -> &[(HexId, HexId)] {
        &self.gazes
    }

    pub fn groups(&self) -> &[(HexId, Vec<HexId>)] {
        &self.groups
    }

    pub fn tf(&self) -> &TfTree {
        &self.tf
    }

    fn ingest(&mut self) -> Result<(), PersonError> {
        for d in self.sub.drain() {
            match (d.path.topic(), d.message) {
                (Topic::Tracked(kind), Message::IdsList(list)) => self.set_live(kind, &list.ids, d.t),
                (Topic::Tf, Message::TransformStamped(m)) => {
                    self.tf.set_message(&m)?;
                    if let Some(id) = m.child.strip_prefix("face_").and_then(|s| s.parse::<HexId>().ok()) {
                        if let Some(f) = self.faces.get_mut(&id) {
                            f.frame = Some(m);
                        }
                    }
                }
                (Topic::Leaf { id, leaf }, message) => self.ingest_leaf(id, leaf, message),
                _ => {}
            }
        }
        Ok(())
    }

    fn ingest_leaf(&mut self, id: HexId, leaf: Leaf, message: Message) {
        match (leaf, message) {
            (Leaf::FaceRoi, Message::RegionOfInterest(r)) => {
                if let Some(f) = self.faces.get_mut(&id) {
                    f.roi = Some(r);
                }
            }
            (Leaf::FaceDescriptor, Message::IdentityDescriptor(d)) => {
                if let Some(f) = self.faces.get_mut(&id) {
                    f.descriptor = Some(d.values);
                }
            }
            (Leaf::Facs, Message::FacialActionUnits(units)) => {
                if let Some(f) = self.faces.get_mut(&id) {
                    f.blink = units.intensity(AU_BLINK).unwrap_or(0.0);
                }
            }
            (Leaf::FaceDemographics, Message::AgeAndGender(a)) => {
                if let Some(f) = self.faces.get_mut(&id) {
                    f.demographics = Some(a);
                }
            }
            (Leaf::BodyRoi, Message::RegionOfInterest(r)) => {
                if let Some(b) = self.bodies.get_mut(&id) {
                    b.roi = Some(r);
                }
            }
            (Leaf::Height, Message::Float32(h)) => {
                if let Some(b) = self.bodies.get_mut(&id) {
                    b.height = Some(h.data as f64);
                }
            }
            (Leaf::Azimuth, Message::Float32(a)) => {
                if let Some(v) = self.voices.get_mut(&id) {
                    v.azimuth = Some(a.data as f64);
                }
            }
            _ => {}
        }
    }

    fn set_live(&mut self, kind: IdKind, ids: &[HexId], t: Stamp) {
        let live: BTreeSet<HexId> = ids.iter().copied().collect();
        for id in &live {
            self.registry.reserve(*id);
        }
        match kind {
            IdKind::Face => {
                self.faces.retain(|id, _| live.contains(id));
                for id in &live {
                    self.faces.entry(*id).or_insert(FaceState {
                        first_seen: t,
                        roi: None,
                        frame: None,
                        descriptor: None,
                        blink: 0.0,
                        demographics: None,
                    });
                }
            }
            IdKind::Body => {
                self.bodies.retain(|id, _| live.contains(id));
                for id in &live {
                    self.bodies.entry(*id).or_insert(BodyState {
                        first_seen: t,
                        roi: None,
                        height: None,
                    });
                }
            }
            IdKind::Voice => {
                self.voices.retain(|id, _| live.contains(id));
                for id in &live {
                    self.voices.entry(*id).or_insert(VoiceState {
                        first_seen: t,
                        azimuth: None,
                    });
                }
            }
            IdKind::Person => return,
        }
        for p in self.persons.values_mut() {
            let slot = match kind {
                IdKind::Face => &mut p.face,
                IdKind::Body => &mut p.body,
                _ => &mut p.voice,
            };
            if slot.is_some_and(|id| !live.contains(&id)) {
                *slot = None;
            }
        }
    }

    fn first_seen(&self, c: &Cluster) -> Stamp {
        let f = c.face.map(|id| self.faces[&id].first_seen);
        let b = c.body.map(|id| self.bodies[&id].first_seen);
        let v = c.voice.map(|id| self.voices[&id].first_seen);
        [f, b, v].into_iter().flatten().min().unwrap_or(Stamp::ZERO)
    }

    /// Processes everything published since the previous step and publishes
    /// the fused state for time `t`.
    pub fn step(&mut self, t: Stamp) -> Result<(), PersonError> {
        if let Some(last) = self.last_t {
            if t < last {
                return Err(PersonError::TimeRegression { t, last });
            }
        }
        let previous: BTreeMap<HexId, Vec<(IdKind, HexId)>> = self
            .persons
            .values()
            .map(|p| {
                let links = LINKS.iter().filter_map(|(k, _)| p.link(*k).map(|id| (*k, id))).collect();
                (p.id, links)
            })
            .collect();
        self.ingest()?;
        self.last_t = Some(t);

        let sensor = self.config.sensor_frame.clone();
        let reference = if self.tf.can_transform(&self.config.world_frame, &sensor, t) {
            self.config.world_frame.clone()
        } else {
            sensor.clone()
        };

        let face_pose: BTreeMap<HexId, Transform> = self
            .faces
            .keys()
            .filter_map(|f| {
                self.tf
                    .lookup(&reference, &format!("face_{f}"), t)
                    .ok()
                    .map(|p| (*f, p))
            })
            .collect();
        let sellion: BTreeMap<HexId, Point3<f64>> = self
            .bodies
            .iter()
            .filter_map(|(b, state)| {
                let h = state.height?;
                let head = self.tf.lookup(&reference, &format!("head_{b}"), t).ok()?;
                Some((*b, head * Point3::new(SELLION[0] * h, SELLION[1] * h, SELLION[2] * h)))
            })
            .collect();

        let face_ids: Vec<HexId> = self.faces.keys().copied().collect();
        let body_ids: Vec<HexId> = self.bodies.keys().copied().collect();
        let costs: Vec<Vec<f64>> = face_ids
            .iter()
            .map(|f| {
                body_ids
                    .iter()
                    .map(|b| match (face_pose.get(f), sellion.get(b)) {
                        (Some(fp), Some(s)) => (fp.translation.vector - s.coords).norm() / self.config.assoc_distance,
                        _ => match (&self.faces[f].roi, &self.bodies[b].roi) {
                            (Some(fr), Some(br)) => 1.0 - fr.iou(&br.upper_third()),
                            _ => f64::INFINITY,
                        },
                    })
                    .collect()
            })
            .collect();
        let pairs = assign(&costs, body_ids.len(), self.config.assoc_gate);
        let mut clusters: Vec<Cluster> = face_ids
            .iter()
            .map(|f| Cluster {
                face: Some(*f),
                body: None,
                voice: None,
                person: None,
            })
            .collect();
        let mut body_taken = vec![false; body_ids.len()];
        for (i, j) in pairs {
            clusters[i].body = Some(body_ids[j]);
            body_taken[j] = true;
        }
        for (j, b) in body_ids.iter().enumerate() {
            if !body_taken[j] {
                clusters.push(Cluster {
                    face: None,
                    body: Some(*b),
                    voice: None,
                    person: None,
                });
            }
        }

        let position = |c: &Cluster| -> Option<Point3<f64>> {
            c.face
                .and_then(|f| face_pose.get(&f))
                .map(|p| Point3::from(p.translation.vector))
                .or_else(|| c.body.and_then(|b| sellion.get(&b)).copied())
        };
        let sensor_from_ref = self.tf.lookup(&sensor, &reference, t).ok();
        let located: Vec<(usize, f64)> = clusters
            .iter()
            .enumerate()
            .filter_map(|(i, c)| {
                let p = sensor_from_ref? * position(c)?;
                Some((i, p.y.atan2(p.x)))
            })
            .collect();
        let voice_ids: Vec<HexId> = self.voices.keys().copied().collect();
        let scale = self.config.voice_bearing_scale_deg.to_radians();
        let voice_costs: Vec<Vec<f64>> = voice_ids
            .iter()
            .map(|v| {
                located
                    .iter()
                    .map(|(_, bearing)| match self.voices[v].azimuth {
                        Some(az) => angle_diff(az, *bearing) / scale,
                        None => f64::INFINITY,
                    })
                    .collect()
            })
            .collect();
        let mut voice_taken = vec![false; voice_ids.len()];
        for (i, j) in assign(&voice_costs, located.len(), self.config.assoc_gate) {
            clusters[located[j].0].voice = Some(voice_ids[i]);
            voice_taken[i] = true;
        }
        for (i, v) in voice_ids.iter().enumerate() {
            if !voice_taken[i] {
                clusters.push(Cluster {
                    face: None,
                    body: None,
                    voice: Some(*v),
                    person: None,
                });
            }
        }

        let mut newly_identified = BTreeSet::new();
        let mut claimed: BTreeSet<HexId> = BTreeSet::new();
        for c in &clusters {
            let Some(f) = c.face else { continue };
            if self.identified.contains_key(&f) {
                continue;
            }
            let Some(desc) = self.faces[&f].descriptor.clone() else {
                continue;
            };
            let gallery = self.persons.values().filter_map(|p| {
                let eligible = p.face.is_none_or(|pf| pf == f) && !claimed.contains(&p.id);
                match (&p.descriptor, eligible) {
                    (Some(d), true) => Some((p.id, d.as_slice())),
                    _ => None,
                }
            });
            let result = identify(&desc, gallery, self.config.ident_threshold).map(|r| r.0);
            if let Some(p) = result {
                claimed.insert(p);
                newly_identified.insert(f);
            }
            self.identified.insert(f, result);
        }

        let holders: BTreeMap<(IdKind, HexId), HexId> = self
            .persons
            .values()
            .flat_map(|p| {
                LINKS
                    .iter()
                    .filter_map(move |(k, _)| p.link(*k).map(|id| ((*k, id), p.id)))
            })
            .collect();
        let mut taken = BTreeSet::new();
        for level in 0..4 {
            for c in clusters.iter_mut() {
                if c.person.is_some() {
                    continue;
                }
                let candidate = match level {
                    0 => c.face.and_then(|f| self.identified.get(&f).copied().flatten()),
                    1 => c.face.and_then(|f| holders.get(&(IdKind::Face, f)).copied()),
                    2 => c.body.and_then(|b| holders.get(&(IdKind::Body, b)).copied()),
                    _ => c.voice.and_then(|v| holders.get(&(IdKind::Voice, v)).copied()),
                };
                if let Some(p) = candidate {
                    if self.persons.contains_key(&p) && taken.insert(p) {
                        c.person = Some(p);
                    }
                }
            }
        }
        let grace = Stamp::from_secs_f64(self.config.identification_grace);
        for i in 0..clusters.len() {
            if clusters[i].person.is_some() || t - self.first_seen(&clusters[i]) < grace {
                continue;
            }
            let id = self.registry.new_person_id().value();
            let c = &clusters[i];
            self.persons
                .insert(id, PersonRecord::anonymous(id, c.face, c.body, c.voice)?);
            clusters[i].person = Some(id);
        }

        for p in self.persons.values_mut() {
            p.face = None;
            p.body = None;
            p.voice = None;
        }
        for c in &clusters {
            let Some(pid) = c.person else { continue };
            let p = self.persons.get_mut(&pid).expect("assigned persons exist");
            p.face = c.face;
            p.body = c.body;
            p.voice = c.voice;
            let Some(f) = c.face else { continue };
            let Some(desc) = &self.faces[&f].descriptor else {
                continue;
            };
            match &mut p.descriptor {
                None => {
                    p.descriptor = Some(desc.clone());
                    p.descriptor_samples = 1;
                }
                Some(mean) if newly_identified.contains(&f) => {
                    update_descriptor(mean, desc, p.descriptor_samples);
                    p.descriptor_samples += 1;
                }
                Some(_) => {}
            }
        }

        let retired: Vec<HexId> = self
            .persons
            .values()
            .filter(|p| !p.has_prior_knowledge() && !p.is_tracked())
            .filter(|p| {
                let before = previous.get(&p.id).map(Vec::as_slice).unwrap_or(&[]);
                !before.is_empty()
                    && before.iter().all(|(k, id)| {
                        self.persons
                            .values()
                            .any(|other| other.id != p.id && other.link(*k) == Some(*id))
                    })
            })
            .map(|p| p.id)
            .collect();

        self.clusters = clusters;
        self.publish(t, &reference, &sensor, &face_pose, &sellion, &retired)
    }

    fn person_frame(
        &self,
        p: &PersonRecord,
        t: Stamp,
        sensor: &str,
        face_pose: &BTreeMap<HexId, Transform>,
    ) -> Option<(TransformStamped, FrameSource)> {
        let child = format!("person_{}", p.id);
        if let Some(f) = p.face.filter(|f| face_pose.contains_key(f)) {
            if let Some(m) = self.faces[&f].frame.as_ref().filter(|m| m.stamp == t) {
                return Some((
                    TransformStamped {
                        child,
                        ..m.clone()
                    },
                    FrameSource::Face,
                ));
            }
        }
        if let Some(b) = p.body {
            if let Ok(head) = self.tf.lookup(sensor, &format!("head_{b}"), t) {
                return Some((to_message(&head, t, sensor, &child), FrameSource::Body));
            }
        }
        if let Some(az) = p.voice.and_then(|v| self.voices[&v].azimuth) {
            let r = self.config.voice_range;
            let pose = Isometry3::from_parts(
                Translation3::new(r * az.cos(), r * az.sin(), 0.0),
                UnitQuaternion::from_axis_angle(&nalgebra::Vector3::z_axis(), az),
            );
            return Some((to_message(&pose, t, sensor, &child), FrameSource::Voice));
        }
        None
    }

    fn publish(
        &mut self,
        t: Stamp,
        reference: &str,
        sensor: &str,
        face_pose: &BTreeMap<HexId, Transform>,
        sellion: &BTreeMap<HexId, Point3<f64>>,
        retired: &[HexId],
    ) -> Result<(), PersonError> {
        for id in retired {
            if let Some(state) = self.published.remove(id) {
                for ((_, leaf), last) in LINKS.iter().zip(&state.links) {
                    if last.as_deref().is_some_and(|s| !s.is_empty()) {
                        self.bus.publish(&TopicPath::leaf(*id, *leaf), Message::string(""), t)?;
                    }
                }
            }
            self.persons.remove(id);
        }
        self.bus.update_tracked(
            IdKind::Person,
            self.persons.keys().map(|id| Identifier::new(IdKind::Person, *id)),
            t,
        )?;

        let ids: Vec<HexId> = self.persons.keys().copied().collect();
        let mut tf_out = Vec::new();
        let mut positions = Vec::new();
        for pid in ids {
            let frame = {
                let p = &self.persons[&pid];
                if p.is_tracked() {
                    self.person_frame(p, t, sensor, face_pose)
                } else {
                    None
                }
            };
            let demographics = self.persons[&pid]
                .face
                .and_then(|f| self.faces.get_mut(&f))
                .and_then(|f| f.demographics.take());
            let located = frame.as_ref().and_then(|(m, _)| {
                let parent = self.tf.lookup(reference, &m.parent, t).ok()?;
                Some(parent * from_message(m))
            });
            let forget = self.config.forget_time;
            let p = self.persons.get_mut(&pid).expect("listed above");
            let state = self.published.entry(pid).or_default();

            if !state.introduced {
                state.introduced = true;
                if let Some(name) = &p.name {
                    self.bus.publish(&TopicPath::leaf(pid, Leaf::Name), Message::string(name.clone()), t)?;
                }
                if let Some(lang) = &p.native_language {
                    self.bus.publish(
                        &TopicPath::leaf(pid, Leaf::NativeLanguage),
                        Message::string(lang.clone()),
                        t,
                    )?;
                }
            }
            for (slot, (kind, leaf)) in state.links.iter_mut().zip(LINKS) {
                let value = p.link(kind).map(|id| id.to_string()).unwrap_or_default();
                let unchanged = match slot {
                    Some(last) => *last == value,
                    None => value.is_empty(),
                };
                if !unchanged {
                    self.bus.publish(&TopicPath::leaf(pid, leaf), Message::string(value.clone()), t)?;
                    *slot = Some(value);
                }
            }
            if let Some(d) = demographics {
                self.bus.publish(&TopicPath::leaf(pid, Leaf::Demographics), Message::AgeAndGender(d), t)?;
            }

            let out_frame = if p.is_tracked() {
                p.lost_since = None;
                p.confidence = 1.0;
                p.frame_source = frame.as_ref().map(|f| f.1);
                if let Some((m, _)) = &frame {
                    p.last_known = Some(match located {
                        Some(pose) => (reference.to_string(), pose),
                        None => (m.parent.clone(), from_message(m)),
                    });
                }
                frame.map(|f| f.0)
            } else {
                let since = *p.lost_since.get_or_insert(t);
                p.frame_source = None;
                p.confidence = location_confidence(false, p.last_known.is_some(), (t - since).secs_f64(), forget);
                match &p.last_known {
                    Some((parent, pose)) if p.confidence > 0.0 => {
                        Some(to_message(pose, t, parent, &format!("person_{pid}")))
                    }
                    _ => None,
                }
            };
            let c = p.confidence as f32;
            if state.confidence != Some(c) || (c > 0.0 && c < 1.0) {
                self.bus
                    .publish(&TopicPath::leaf(pid, Leaf::LocationConfidence), Message::float32(c), t)?;
                state.confidence = Some(c);
            }
            if let Some(m) = out_frame {
                self.bus.publish(&TopicPath::tf(), Message::TransformStamped(m.clone()), t)?;
                tf_out.push(m);
            }
            let grouped = p.confidence > 0.5 && matches!(p.frame_source, Some(FrameSource::Face | FrameSource::Body));
            if grouped {
                let pos = p
                    .face
                    .and_then(|f| face_pose.get(&f))
                    .map(|fp| Point3::from(fp.translation.vector))
                    .or_else(|| p.body.and_then(|b| sellion.get(&b)).copied());
                if let Some(pos) = pos {
                    positions.push((pid, pos));
                }
            }
        }

        let sources: Vec<GazeSource> = self
            .persons
            .values()
            .filter_map(|p| {
                let f = p.face?;
                let face = face_pose.get(&f)?;
                let gaze = self
                    .tf
                    .lookup(reference, &format!("gaze_{f}"), t)
                    .unwrap_or_else(|_| face * Isometry3::from_parts(Translation3::identity(), face_to_gaze()));
                Some(GazeSource {
                    person: p.id,
                    gaze,
                    blinking: self.faces[&f].blink as f64 >= self.config.blink_au45_threshold,
                })
            })
            .collect();
        self.gazes = detect_gaze(&sources, self.config.gaze_cone_deg, self.config.respect_blinks);
        self.bus.publish(
            &TopicPath::interaction(Interaction::Gaze),
            Message::GazesStamped(GazesStamped {
                stamp: t,
                gazes: self
                    .gazes
                    .iter()
                    .map(|&(sender, receiver)| GazeSenderReceiver { sender, receiver })
                    .collect(),
            }),
            t,
        )?;
        let groups = detect_groups(&positions, self.config.group_radius);
        self.groups = self.group_ids.assign(&groups, &mut self.registry);
        self.bus.publish(
            &TopicPath::interaction(Interaction::Groups),
            Message::GroupsStamped(GroupsStamped {
                stamp: t,
                groups: self
                    .groups
                    .iter()
                    .map(|(group_id, members)| Group {
                        group_id: *group_id,
                        members: members.clone(),
                    })
                    .collect(),
            }),
            t,
        )?;
        Ok(())
    }
}

/// Absolute angle between two bearings, in [0, pi].
fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}
