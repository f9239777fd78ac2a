use nalgebra::{Isometry3, Point3, Translation3, UnitQuaternion, Vector3};

use super::scenario::{Interval, Scenario, Sensor, ROBOT};
use crate::kinematics::anthropometry::{self as a, face};
use crate::kinematics::fk::{eye_point, head_point};
use crate::kinematics::{face_frame, joint_index, keypoints, segment_frames, JointAngles, KinematicModel, JOINTS};
use crate::model::{HexId, RegionOfInterest, SKELETON_KEYPOINT_COUNT};
use crate::tf::Transform;

/// Ground-truth pose of one actor at one instant.
#[derive(Debug, Clone)]
pub struct ActorPose<'s> {
    pub index: usize,
    pub interval: &'s Interval,
    pub model: KinematicModel,
    pub q: JointAngles,
    /// Pose of the body root (pelvis) in the world.
    pub root: Transform,
}

impl ActorPose<'_> {
    /// Face frame in the world: sellion origin, head axes.
    pub fn face(&self) -> Transform {
        face_frame(&self.model, &self.q, &self.root)
    }

    pub fn head(&self) -> Transform {
        self.root * segment_frames(&self.model, &self.q)["head"]
    }

    pub fn sellion(&self) -> Point3<f64> {
        self.head() * head_point(&self.model, face::SELLION)
    }

    /// Left and right eye centres in the world.
    pub fn eyes(&self) -> (Point3<f64>, Point3<f64>) {
        let head = self.head();
        (head * eye_point(&self.model, true), head * eye_point(&self.model, false))
    }

    pub fn keypoints(&self) -> [Point3<f64>; SKELETON_KEYPOINT_COUNT] {
        keypoints(&self.model, &self.q, &self.root)
    }

    pub fn floor(&self) -> [f64; 2] {
        [self.root.translation.x, self.root.translation.y]
    }
}

/// Pose of the sensor frame in the world.
pub fn sensor_pose(sensor: &Sensor) -> Transform {
    let [x, y, z] = sensor.position;
    Isometry3::from_parts(
        Translation3::new(x, y, z),
        UnitQuaternion::from_axis_angle(&Vector3::z_axis(), sensor.yaw_deg.to_radians()),
    )
}

/// The script interval active at `t`, if any.
pub fn active_interval(timeline: &[Interval], t: f64) -> Option<&Interval> {
    const EPS: f64 = 1e-9;
    timeline.iter().find(|iv| iv.start <= t + EPS && t + EPS < iv.end)
}

fn floor_position(iv: &Interval, t: f64) -> [f64; 2] {
    match iv.to {
        Some(to) => {
            let s = ((t - iv.start) / (iv.end - iv.start)).clamp(0.0, 1.0);
            [
                iv.position[0] + s * (to[0] - iv.position[0]),
                iv.position[1] + s * (to[1] - iv.position[1]),
            ]
        }
        None => iv.position,
    }
}

/// Poses of every actor present at `t`, with heads turned towards their
/// look-at targets.
pub fn actor_poses(scenario: &Scenario, t: f64) -> Vec<ActorPose<'_>> {
    let active: Vec<(usize, &Interval)> = scenario
        .actors
        .iter()
        .enumerate()
        .filter_map(|(i, actor)| active_interval(&actor.timeline, t).map(|iv| (i, iv)))
        .collect();
    let robot = Point3::from(Vector3::from(scenario.sensor.position));
    let floor_of = |name: &str| -> Option<[f64; 2]> {
        let (_, iv) = active.iter().find(|(i, _)| scenario.actors[*i].name == name)?;
        Some(floor_position(iv, t))
    };

    let mut poses: Vec<ActorPose> = active
        .iter()
        .map(|&(i, iv)| {
            let actor = &scenario.actors[i];
            let here = floor_position(iv, t);
            let yaw = match iv.facing_deg {
                Some(deg) => deg.to_radians(),
                None => {
                    let target = iv
                        .look_at
                        .as_deref()
                        .filter(|n| *n != ROBOT)
                        .and_then(floor_of)
                        .unwrap_or([robot.x, robot.y]);
                    (target[1] - here[1]).atan2(target[0] - here[0])
                }
            };
            let model = KinematicModel::generate(HexId::from_u32(0), actor.height).expect("validated height");
            let mut q = JointAngles::zero();
            for (joint, value) in &iv.pose {
                q.set(joint, *value);
            }
            q.clamp_to_limits();
            let root = Isometry3::from_parts(
                Translation3::new(here[0], here[1], a::HIP_HEIGHT * actor.height),
                UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw),
            );
            ActorPose {
                index: i,
                interval: iv,
                model,
                q,
                root,
            }
        })
        .collect();

    for _ in 0..8 {
        let sellions: Vec<(usize, Point3<f64>)> = poses.iter().map(|p| (p.index, p.sellion())).collect();
        for pose in poses.iter_mut() {
            let target = match pose.interval.look_at.as_deref() {
                None => continue,
                Some(ROBOT) => Some(robot),
                Some(name) => sellions
                    .iter()
                    .find(|(i, _)| scenario.actors[*i].name == name)
                    .map(|(_, p)| *p),
            };
            let Some(target) = target else { continue };
            aim_head(pose, target);
        }
    }
    poses
}

/// Sets head yaw and pitch so the face x-axis points from the sellion at `target`.
fn aim_head(pose: &mut ActorPose, target: Point3<f64>) {
    let frames = segment_frames(&pose.model, &pose.q);
    let head = pose.root * frames["head"];
    let neck_rotation = (pose.root * frames["torso"]).rotation;
    let sellion = head * head_point(&pose.model, face::SELLION);
    let d = neck_rotation.inverse() * (target - sellion);
    let yaw = d.y.atan2(d.x);
    let pitch = (-d.z).atan2(d.x.hypot(d.y));
    for (name, value) in [("head_z", yaw), ("head_y", pitch), ("head_x", 0.0)] {
        let j = &JOINTS[joint_index(name).expect("head joint")];
        pose.q.set(name, value.clamp(j.lower, j.upper));
    }
}

/// Pinhole projection of a point in the sensor frame (x forward, y left,
/// z up) to pixel coordinates; `None` behind the camera.
pub fn project(sensor: &Sensor, p: &Point3<f64>) -> Option<(f64, f64)> {
    if p.x <= 0.05 {
        return None;
    }
    let f = sensor.focal_length;
    Some((
        sensor.image_width as f64 / 2.0 - f * p.y / p.x,
        sensor.image_height as f64 / 2.0 - f * p.z / p.x,
    ))
}

/// Ray through pixel `(u, v)` scaled to unit depth.
pub fn unproject(sensor: &Sensor, u: f64, v: f64) -> Vector3<f64> {
    let f = sensor.focal_length;
    Vector3::new(
        1.0,
        -(u - sensor.image_width as f64 / 2.0) / f,
        -(v - sensor.image_height as f64 / 2.0) / f,
    )
}

pub fn in_image(sensor: &Sensor, (u, v): (f64, f64)) -> bool {
    u >= 0.0 && v >= 0.0 && u < sensor.image_width as f64 && v < sensor.image_height as f64
}

/// Pixel box `[u0, v0, u1, v1]` clipped to the image; `None` when empty.
pub fn clip_roi(sensor: &Sensor, u0: f64, v0: f64, u1: f64, v1: f64) -> Option<RegionOfInterest> {
    let (w, h) = (sensor.image_width as f64, sensor.image_height as f64);
    let (u0, v0) = (u0.clamp(0.0, w).floor(), v0.clamp(0.0, h).floor());
    let (u1, v1) = (u1.clamp(0.0, w).ceil(), v1.clamp(0.0, h).ceil());
    if u1 - u0 < 1.0 || v1 - v0 < 1.0 {
        return None;
    }
    Some(RegionOfInterest {
        x_offset: u0 as u32,
        y_offset: v0 as u32,
        width: (u1 - u0) as u32,
        height: (v1 - v0) as u32,
    })
}

/// Physical ear-to-ear width of the head.
pub fn head_width(height: f64) -> f64 {
    2.0 * face::EAR[1] * height
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tf::axis_x;

    fn scenario(text: &str) -> Scenario {
        Scenario::from_json(text, "t.json").unwrap()
    }

    #[test]
    fn heads_aim_at_each_other() {
        let s = scenario(
            r#"{"scenario_version": 1, "name": "t", "duration": 1,
                "actors": [
                  {"name": "A", "height": 1.6, "timeline": [{"start": 0, "end": 1, "position": [2, -0.7], "look_at": "B", "facing_deg": 30}]},
                  {"name": "B", "height": 1.9, "timeline": [{"start": 0, "end": 1, "position": [2.5, 0.7], "look_at": "A"}]}]}"#,
        );
        let poses = actor_poses(&s, 0.5);
        assert_eq!(poses.len(), 2);
        for (me, other) in [(0, 1), (1, 0)] {
            let dir = (poses[other].sellion() - poses[me].sellion()).normalize();
            assert!(axis_x(&poses[me].face()).dot(&dir) > 1.0 - 1e-9);
        }
    }

    #[test]
    fn default_facing_is_the_robot() {
        let s = scenario(
            r#"{"scenario_version": 1, "name": "t", "duration": 1,
                "actors": [{"name": "A", "height": 1.75, "timeline": [{"start": 0, "end": 1, "position": [2, 1], "to": [4, 1]}]}]}"#,
        );
        let p = &actor_poses(&s, 0.5)[0];
        assert!((p.floor()[0] - 3.0).abs() < 1e-12);
        let yaw = p.root.rotation.euler_angles().2;
        assert!((yaw - (-1.0f64).atan2(-3.0)).abs() < 1e-12);
        assert!(actor_poses(&s, 1.0).is_empty());
    }

    #[test]
    fn projection_round_trip() {
        let sensor = Sensor::default();
        let p = Point3::new(2.0, 0.4, -0.3);
        let (u, v) = project(&sensor, &p).unwrap();
        let ray = unproject(&sensor, u, v) * p.x;
        assert!((ray - p.coords).norm() < 1e-12);
        assert!(project(&sensor, &Point3::new(-1.0, 0.0, 0.0)).is_none());
    }
}
