use std::collections::{BTreeMap, BTreeSet};

use crate::bus::{Bus, BusError, Leaf, Subscription, TopicPath};
use crate::kinematics::{emit_urdf, estimate_joint_state, keypoint_set, segment_frames, KinematicModel};
use crate::model::{HexId, Message, Skeleton3D};
use crate::tf::{to_message, SEGMENTS};
use crate::time::Stamp;

/// Builds a kinematic model per body once its height is known, then publishes
/// the URDF (latched), joint states and the `body_<id>` and segment frames for
/// every 3D skeleton.
pub struct BodyKinematicsNode {
    bus: Bus,
    sub: Subscription,
    live: BTreeSet<HexId>,
    heights: BTreeMap<HexId, f64>,
    models: BTreeMap<HexId, KinematicModel>,
    skeletons: BTreeMap<HexId, Skeleton3D>,
    failures: u64,
}

impl BodyKinematicsNode {
    pub fn new(bus: &Bus) -> Result<Self, BusError> {
        let sub = bus.subscribe_many(&[
            "/humans/bodies/tracked",
            "/humans/bodies/*/height",
            "/humans/bodies/*/skeleton3d",
        ])?;
        Ok(BodyKinematicsNode {
            bus: bus.clone(),
            sub,
            live: BTreeSet::new(),
            heights: BTreeMap::new(),
            models: BTreeMap::new(),
            skeletons: BTreeMap::new(),
            failures: 0,
        })
    }

    /// Skeletons for which joint estimation failed so far.
    pub fn failures(&self) -> u64 {
        self.failures
    }

    pub fn model(&self, body: HexId) -> Option<&KinematicModel> {
        self.models.get(&body)
    }

    pub fn step(&mut self, t: Stamp) -> Result<(), BusError> {
        for d in self.sub.drain() {
            match (d.path.id(), d.message) {
                (None, Message::IdsList(list)) => {
                    self.live = list.ids.into_iter().collect();
                    let live = &self.live;
                    self.heights.retain(|id, _| live.contains(id));
                    self.models.retain(|id, _| live.contains(id));
                    self.skeletons.retain(|id, _| live.contains(id));
                }
                (Some((_, id)), Message::Float32(h)) => {
                    self.heights.insert(id, h.data as f64);
                }
                (Some((_, id)), Message::Skeleton3D(s)) => {
                    self.skeletons.insert(id, s);
                }
                _ => {}
            }
        }
        let skeletons = std::mem::take(&mut self.skeletons);
        for (id, skeleton) in skeletons {
            if !self.live.contains(&id) {
                continue;
            }
            let Some(&height) = self.heights.get(&id) else {
                continue;
            };
            let fresh = match self.models.get(&id) {
                Some(m) => m.height != height,
                None => true,
            };
            if fresh {
                let Ok(model) = KinematicModel::generate(id, height) else {
                    self.failures += 1;
                    continue;
                };
                self.bus.publish(
                    &TopicPath::leaf(id, Leaf::Urdf),
                    Message::string(emit_urdf(&model)),
                    t,
                )?;
                self.models.insert(id, model);
            }
            let model = &self.models[&id];
            let Ok((q, root)) = estimate_joint_state(model, &keypoint_set(&skeleton)) else {
                self.failures += 1;
                continue;
            };
            self.bus.publish(
                &TopicPath::leaf(id, Leaf::JointStates),
                Message::JointState(q.to_message(t)),
                t,
            )?;
            let root_frame = model.root_frame();
            let tf = TopicPath::tf();
            self.bus.publish(
                &tf,
                Message::TransformStamped(to_message(&root, t, &skeleton.frame, &root_frame)),
                t,
            )?;
            let frames = segment_frames(model, &q);
            for seg in SEGMENTS {
                self.bus.publish(
                    &tf,
                    Message::TransformStamped(to_message(&frames[seg], t, &root_frame, &model.frame(seg))),
                    t,
                )?;
            }
        }
        Ok(())
    }
}
