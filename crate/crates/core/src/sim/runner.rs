use nalgebra::{Isometry3, Point3, Translation3, UnitQuaternion, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::noise::{gaussian3, von_mises};
use super::scenario::{FaceLocalization, Scenario, ROBOT};
use super::truth::{ActorTruth, FaceTruth, Truth, TruthTick};
use super::world::{actor_poses, clip_roi, head_width, in_image, project, sensor_pose, unproject, ActorPose};
use crate::bus::{Bus, BusError, Leaf, TopicPath};
use crate::model::{
    ActionUnit, AgeAndGender, AudioFeatures, Expression, ExpressionCategory, FacialActionUnits, FacialLandmarks,
    HexId, IdKind, IdRegistry, IdentityDescriptor, Identifier, Keypoint2D, Keypoint3D, Landmark, Message,
    Skeleton2D, Skeleton3D, AUDIO_FEATURE_COUNT, AU_BLINK,
};
use crate::person::{classify_body_attitude, detect_groups, estimate_face_distance};
use crate::tf::{face_to_gaze, to_message, Transform};
use crate::time::Stamp;

/// AU45 intensity emitted while an actor's eyes are closed.
pub const EYES_CLOSED_AU45: f32 = 3.0;

/// Grouping radius used for the ground truth when the scenario does not override it.
const DEFAULT_GROUP_RADIUS: f64 = 1.5;

#[derive(Debug, Clone, Default)]
struct Track {
    face: Option<HexId>,
    body: Option<HexId>,
    voice: Option<HexId>,
    speaking: Option<bool>,
    speech: Option<String>,
}

/// Replays a scenario script as perception output on a bus, one tick at a time.
pub struct Simulator<'s> {
    scenario: &'s Scenario,
    bus: Bus,
    rng: ChaCha8Rng,
    ids: IdRegistry,
    tracks: Vec<Track>,
    descriptors: Vec<Vec<f32>>,
    group_radius: f64,
    truth: Vec<TruthTick>,
}

pub const SENSOR_FRAME: &str = "camera";
pub const WORLD_FRAME: &str = "world";

impl<'s> Simulator<'s> {
    pub fn new(scenario: &'s Scenario, bus: &Bus) -> Self {
        let group_radius = scenario
            .manager
            .get("group_radius")
            .and_then(|v| v.as_f64())
            .unwrap_or(DEFAULT_GROUP_RADIUS);
        Simulator {
            scenario,
            bus: bus.clone(),
            rng: ChaCha8Rng::seed_from_u64(scenario.seed),
            ids: IdRegistry::with_seed(scenario.seed),
            tracks: vec![Track::default(); scenario.actors.len()],
            descriptors: (0..scenario.actors.len()).map(|i| scenario.descriptor(i)).collect(),
            group_radius,
            truth: Vec::new(),
        }
    }

    pub fn tick_count(&self) -> usize {
        self.scenario.tick_count()
    }

    pub fn stamp(&self, k: usize) -> Stamp {
        let tick_ns = (self.scenario.tick * 1e9).round() as i64;
        Stamp::from_nanos(k as i64 * tick_ns)
    }

    fn publish(&self, id: HexId, leaf: Leaf, message: impl Into<Message>, t: Stamp) -> Result<(), BusError> {
        self.bus.publish(&TopicPath::leaf(id, leaf), message.into(), t).map(|_| ())
    }

    fn publish_tf(&self, pose: &Transform, t: Stamp, parent: &str, child: &str) -> Result<(), BusError> {
        self.bus
            .publish(&TopicPath::tf(), Message::TransformStamped(to_message(pose, t, parent, child)), t)
            .map(|_| ())
    }

    fn fresh(&mut self, kind: IdKind) -> HexId {
        self.ids.new_transient_id(kind).expect("transient kind").value()
    }

    /// Publishes everything perceived at tick `k`. Returns its timestamp.
    pub fn step(&mut self, k: usize) -> Result<Stamp, BusError> {
        let t = self.stamp(k);
        let secs = k as f64 * self.scenario.tick;
        let scenario = self.scenario;
        let sensor = &scenario.sensor;
        let world_from_sensor = sensor_pose(sensor);
        let sensor_from_world = world_from_sensor.inverse();
        let poses = actor_poses(scenario, secs);

        self.publish_tf(&world_from_sensor, t, WORLD_FRAME, SENSOR_FRAME)?;

        let mut present = vec![None; scenario.actors.len()];
        for (n, p) in poses.iter().enumerate() {
            let in_view = sensor_from_world * p.sellion();
            present[p.index] = Some((n, project(sensor, &in_view).is_some_and(|uv| in_image(sensor, uv))));
        }
        let mut new_face = vec![false; scenario.actors.len()];
        for (i, track) in self.tracks.clone().iter().enumerate() {
            let iv = present[i].map(|(n, seen)| (poses[n].interval, seen));
            let want = |f: fn(&super::scenario::Interval) -> bool| iv.is_some_and(|(iv, seen)| seen && f(iv));
            let (face, body, voice) = (want(|iv| iv.face), want(|iv| iv.body), iv.is_some_and(|(iv, _)| iv.voice));
            let mut next = track.clone();
            next.face = match (face, track.face) {
                (true, Some(id)) => Some(id),
                (true, None) => {
                    new_face[i] = true;
                    Some(self.fresh(IdKind::Face))
                }
                (false, _) => None,
            };
            next.body = match (body, track.body) {
                (true, Some(id)) => Some(id),
                (true, None) => Some(self.fresh(IdKind::Body)),
                (false, _) => None,
            };
            next.voice = match (voice, track.voice) {
                (true, Some(id)) => Some(id),
                (true, None) => Some(self.fresh(IdKind::Voice)),
                (false, _) => None,
            };
            if next.voice.is_none() {
                next.speaking = None;
                next.speech = None;
            }
            self.tracks[i] = next;
        }
        for kind in [IdKind::Face, IdKind::Body, IdKind::Voice] {
            let live: Vec<Identifier> = self
                .tracks
                .iter()
                .filter_map(|tr| match kind {
                    IdKind::Face => tr.face,
                    IdKind::Body => tr.body,
                    _ => tr.voice,
                })
                .map(|id| Identifier::new(kind, id))
                .collect();
            self.bus.update_tracked(kind, live, t)?;
        }

        let mut truths = Vec::new();
        for pose in &poses {
            let i = pose.index;
            let track = self.tracks[i].clone();
            let iv = pose.interval;
            let mut face_truth = None;
            if let Some(fid) = track.face {
                face_truth = Some(self.emit_face(pose, fid, new_face[i], &sensor_from_world, t)?);
            }
            if let Some(bid) = track.body {
                self.emit_body(pose, bid, &sensor_from_world, t)?;
            }
            if let Some(vid) = track.voice {
                self.emit_voice(pose, vid, &sensor_from_world, t)?;
            }
            let target_visible = |name: &str| {
                scenario
                    .actor_index(name)
                    .is_some_and(|j| self.tracks[j].face.is_some())
            };
            let gaze_target = iv
                .look_at
                .clone()
                .filter(|n| n != ROBOT && track.face.is_some() && target_visible(n));
            let s = pose.sellion();
            truths.push(ActorTruth {
                name: scenario.actors[i].name.clone(),
                face: track.face,
                body: track.body,
                voice: track.voice,
                sellion: [s.x, s.y, s.z],
                gaze_target,
                eyes_closed: iv.eyes_closed,
                face_geometry: face_truth,
            });
        }
        truths.sort_by_key(|a| scenario.actor_index(&a.name));
        let located: Vec<(HexId, Point3<f64>)> = truths
            .iter()
            .enumerate()
            .filter(|(_, a)| a.visible())
            .map(|(n, a)| (HexId::from_u32(n as u32), Point3::from(a.sellion)))
            .collect();
        let groups = detect_groups(&located, self.group_radius)
            .into_iter()
            .map(|g| {
                let mut names: Vec<String> = g.iter().map(|id| truths[id.as_u32() as usize].name.clone()).collect();
                names.sort();
                names
            })
            .collect::<Vec<_>>();
        let mut groups = groups;
        groups.sort();
        self.truth.push(TruthTick {
            t,
            actors: truths,
            groups,
        });
        Ok(t)
    }

    fn emit_face(
        &mut self,
        pose: &ActorPose,
        fid: HexId,
        first: bool,
        sensor_from_world: &Transform,
        t: Stamp,
    ) -> Result<FaceTruth, BusError> {
        let scenario = self.scenario;
        let sensor = &scenario.sensor;
        let actor = &scenario.actors[pose.index];
        let iv = pose.interval;
        let face_true = sensor_from_world * pose.face();
        let sellion = Point3::from(face_true.translation.vector);

        let (u, v) = project(sensor, &sellion).expect("face in view");
        let depth = sellion.x;
        let w = sensor.focal_length * head_width(actor.height) / depth;
        let h = 1.3 * w;
        let roi = clip_roi(sensor, u - w / 2.0, v - 0.4 * h, u + w / 2.0, v + 0.6 * h);

        let mut position = match (scenario.face_localization, roi) {
            (FaceLocalization::HeadSize, Some(roi)) => {
                let nominal = scenario
                    .manager
                    .get("head_width")
                    .and_then(|v| v.as_f64())
                    .unwrap_or(0.15);
                let z = estimate_face_distance(&roi, sensor.focal_length, nominal).unwrap_or(depth);
                Point3::from(unproject(sensor, u, v) * z)
            }
            _ => sellion,
        };
        position += gaussian3(&mut self.rng, scenario.noise.position_sigma);
        let mut rotation = face_true.rotation;
        if let Some(kappa) = scenario.noise.facing_kappa {
            let delta = von_mises(&mut self.rng, kappa);
            rotation = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), delta) * rotation;
        }
        if let Some(offset) = actor.face_frame_offset {
            position += rotation * Vector3::from(offset);
        }
        let face = Isometry3::from_parts(Translation3::from(position.coords), rotation);
        let face_frame = format!("face_{fid}");
        self.publish_tf(&face, t, SENSOR_FRAME, &face_frame)?;
        let gaze = Isometry3::from_parts(Translation3::identity(), face_to_gaze());
        self.publish_tf(&gaze, t, &face_frame, &format!("gaze_{fid}"))?;

        if let Some(roi) = roi {
            self.publish(fid, Leaf::FaceRoi, roi, t)?;
        }
        let landmarks = face_landmarks(&face_true, actor.height)
            .iter()
            .map(|p| {
                let (x, y) = project(sensor, p).unwrap_or((0.0, 0.0));
                Landmark {
                    x: x as f32,
                    y: y as f32,
                    confidence: 0.9,
                }
            })
            .collect();
        self.publish(fid, Leaf::Landmarks, FacialLandmarks { landmarks, stamp: t }, t)?;
        let mut units: Vec<ActionUnit> = iv
            .action_units
            .iter()
            .filter(|a| a.au != AU_BLINK)
            .map(|a| ActionUnit {
                au: a.au,
                intensity: a.intensity,
                confidence: 0.9,
            })
            .collect();
        units.push(ActionUnit {
            au: AU_BLINK,
            intensity: if iv.eyes_closed { EYES_CLOSED_AU45 } else { 0.0 },
            confidence: 0.9,
        });
        units.sort_by_key(|u| u.au);
        self.publish(fid, Leaf::Facs, FacialActionUnits { units }, t)?;
        self.publish(
            fid,
            Leaf::Expression,
            Expression {
                category: Some(iv.expression.unwrap_or(ExpressionCategory::Neutral)),
                valence: None,
                arousal: None,
                confidence: 0.8,
            },
            t,
        )?;
        if iv.recognizable {
            let values = self.descriptors[pose.index].clone();
            self.publish(fid, Leaf::FaceDescriptor, IdentityDescriptor { values }, t)?;
        }
        if let (true, Some(d)) = (first, actor.demographics) {
            self.publish(
                fid,
                Leaf::FaceDemographics,
                AgeAndGender {
                    age: d.age,
                    age_confidence: 0.7,
                    gender: d.gender,
                    gender_confidence: 0.9,
                },
                t,
            )?;
        }

        let (left, right) = pose.eyes();
        let up = sensor_from_world.rotation * (pose.head().rotation * Vector3::z());
        let (l, r) = (sensor_from_world * left, sensor_from_world * right);
        Ok(FaceTruth {
            left_eye: [l.x, l.y, l.z],
            right_eye: [r.x, r.y, r.z],
            up: [up.x, up.y, up.z],
        })
    }

    fn emit_body(&mut self, pose: &ActorPose, bid: HexId, sensor_from_world: &Transform, t: Stamp) -> Result<(), BusError> {
        let scenario = self.scenario;
        let sensor = &scenario.sensor;
        let actor = &scenario.actors[pose.index];
        let iv = pose.interval;
        let points: Vec<Point3<f64>> = pose.keypoints().iter().map(|p| sensor_from_world * p).collect();
        let (w, h) = (sensor.image_width as f64, sensor.image_height as f64);
        let pixels: Vec<Option<(f64, f64)>> = points
            .iter()
            .map(|p| project(sensor, p).filter(|uv| in_image(sensor, *uv)))
            .collect();
        let keypoints: Vec<Keypoint2D> = pixels
            .iter()
            .map(|px| match px {
                Some((u, v)) => Keypoint2D {
                    x: (u / w) as f32,
                    y: (v / h) as f32,
                    confidence: 0.9,
                },
                None => Keypoint2D::ABSENT,
            })
            .collect();
        let seen: Vec<(f64, f64)> = pixels.iter().flatten().copied().collect();
        if !seen.is_empty() {
            let (mut u0, mut v0, mut u1, mut v1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
            for (u, v) in &seen {
                u0 = u0.min(*u);
                v0 = v0.min(*v);
                u1 = u1.max(*u);
                v1 = v1.max(*v);
            }
            let margin = 0.1 * (u1 - u0).max(v1 - v0);
            if let Some(roi) = clip_roi(sensor, u0 - margin, v0 - margin, u1 + margin, v1 + margin) {
                self.publish(bid, Leaf::BodyRoi, roi, t)?;
            }
        }
        let skeleton = Skeleton2D { keypoints, stamp: t };
        let attitude = classify_body_attitude(&skeleton);
        self.publish(bid, Leaf::Skeleton2d, skeleton, t)?;
        self.publish(bid, Leaf::Attitude, attitude, t)?;
        if iv.body_3d {
            let sigma = scenario.noise.position_sigma;
            let keypoints = points
                .iter()
                .map(|p| {
                    let p = p + gaussian3(&mut self.rng, sigma);
                    Keypoint3D {
                        x: p.x as f32,
                        y: p.y as f32,
                        z: p.z as f32,
                        confidence: 0.9,
                    }
                })
                .collect();
            self.publish(
                bid,
                Leaf::Skeleton3d,
                Skeleton3D {
                    stamp: t,
                    frame: SENSOR_FRAME.to_string(),
                    keypoints,
                },
                t,
            )?;
        }
        if iv.height_visible {
            self.publish(bid, Leaf::Height, Message::float32(actor.height as f32), t)?;
        }
        Ok(())
    }

    fn emit_voice(&mut self, pose: &ActorPose, vid: HexId, sensor_from_world: &Transform, t: Stamp) -> Result<(), BusError> {
        let scenario = self.scenario;
        let actor = &scenario.actors[pose.index];
        let iv = pose.interval;
        let mouth = sensor_from_world * pose.sellion() + gaussian3(&mut self.rng, scenario.noise.position_sigma);
        let azimuth = mouth.y.atan2(mouth.x);
        self.publish(vid, Leaf::Azimuth, Message::float32(azimuth as f32), t)?;
        let speaking = iv.speech.is_some();
        let track = &mut self.tracks[pose.index];
        let speaking_changed = track.speaking != Some(speaking);
        track.speaking = Some(speaking);
        let speech_changed = iv.speech.is_some() && track.speech != iv.speech;
        track.speech = iv.speech.clone();
        if speaking_changed {
            self.publish(vid, Leaf::IsSpeaking, Message::boolean(speaking), t)?;
        }
        if speech_changed {
            self.publish(vid, Leaf::Speech, Message::string(iv.speech.clone().unwrap_or_default()), t)?;
        }
        let pitch = actor.voice_pitch.unwrap_or(110.0 + 15.0 * pose.index as f32);
        let mut features = vec![0.0f32; AUDIO_FEATURE_COUNT];
        features[0] = if speaking { 0.12 } else { 0.02 };
        features[1] = if speaking { 0.3 } else { 0.01 };
        features[2] = if speaking { pitch } else { 0.0 };
        features[3] = if speaking { 12.0 } else { 0.0 };
        for (m, f) in features[4..].iter_mut().enumerate() {
            *f = ((pose.index * 7 + m) as f32 * 0.37).sin() * 10.0;
        }
        self.publish(vid, Leaf::Features, AudioFeatures { features, stamp: t }, t)
    }

    pub fn truth(&self) -> Truth {
        let scenario = self.scenario;
        Truth {
            scenario: scenario.name.clone(),
            seed: scenario.seed,
            actors: scenario.actors.iter().map(|a| a.name.clone()).collect(),
            known: scenario
                .known_persons
                .iter()
                .filter_map(|k| k.actor.clone().map(|a| (k.name.clone(), a)))
                .collect(),
            group_radius: self.group_radius,
            ticks: self.truth.clone(),
        }
    }
}

/// 67 facial landmarks in the frame `face` is expressed in: jaw (17), brows
/// (10), nose (9), eyes (12), outer lip (12), inner lip (7).
pub fn face_landmarks(face: &Transform, height: f64) -> Vec<Point3<f64>> {
    let s = height / 1.75;
    let mut pts: Vec<[f64; 3]> = Vec::with_capacity(crate::model::LANDMARK_COUNT);
    for i in 0..17 {
        let a = std::f64::consts::PI * i as f64 / 16.0;
        pts.push([-0.02 + 0.04 * a.sin(), -0.07 * a.cos(), -0.02 - 0.09 * a.sin()]);
    }
    for side in [-1.0, 1.0] {
        for i in 0..5 {
            pts.push([0.01, side * (0.015 + 0.01 * i as f64), 0.015]);
        }
    }
    for i in 0..4 {
        pts.push([0.01 + 0.007 * i as f64, 0.0, -0.015 * i as f64]);
    }
    for i in 0..5 {
        pts.push([0.015, -0.02 + 0.01 * i as f64, -0.055]);
    }
    for side in [-1.0, 1.0] {
        for i in 0..6 {
            let a = std::f64::consts::PI * i as f64 / 3.0;
            pts.push([0.0, side * 0.032 + 0.014 * a.cos(), 0.006 * a.sin()]);
        }
    }
    for i in 0..12 {
        let a = std::f64::consts::PI * i as f64 / 6.0;
        pts.push([0.01, 0.025 * a.cos(), -0.08 + 0.012 * a.sin()]);
    }
    for i in 0..7 {
        pts.push([0.012, -0.015 + 0.005 * i as f64, -0.08]);
    }
    pts.into_iter()
        .map(|[x, y, z]| face * Point3::new(x * s, y * s, z * s))
        .collect()
}
