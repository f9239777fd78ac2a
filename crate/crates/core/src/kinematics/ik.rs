//! Analytic, chain-by-chain joint recovery from 3D keypoints.

use nalgebra::{Isometry3, Matrix3, Point3, Rotation3, SMatrix, SVector, Translation3, UnitQuaternion, Vector3};

use super::anthropometry::face;
use super::fk::{eye_point, head_point, rot};
use super::model::{joint_index, Axis, JointAngles, KinematicModel, KinematicsError, JOINTS};
use crate::model::{Keypoint, Skeleton3D, SKELETON_KEYPOINT_COUNT};
use crate::tf::Transform;

pub type KeypointSet = [Option<Point3<f64>>; SKELETON_KEYPOINT_COUNT];

/// Present keypoints (confidence > 0) of a 3D skeleton.
pub fn keypoint_set(s: &Skeleton3D) -> KeypointSet {
    let mut out = [None; SKELETON_KEYPOINT_COUNT];
    for (slot, k) in out.iter_mut().zip(&s.keypoints) {
        if k.confidence > 0.0 {
            *slot = Some(Point3::new(k.x as f64, k.y as f64, k.z as f64));
        }
    }
    out
}

/// `(z, y, x)` angles with `m = Rz(z) Ry(y) Rx(x)`.
pub fn zyx_angles(m: &Matrix3<f64>) -> (f64, f64, f64) {
    let y = (-m[(2, 0)]).atan2((m[(0, 0)].powi(2) + m[(1, 0)].powi(2)).sqrt());
    let z = m[(1, 0)].atan2(m[(0, 0)]);
    let x = m[(2, 1)].atan2(m[(2, 2)]);
    (z, y, x)
}

fn unit(v: Vector3<f64>, what: &str) -> Result<Vector3<f64>, KinematicsError> {
    v.try_normalize(1e-12)
        .ok_or_else(|| KinematicsError::Estimation(format!("degenerate {what}")))
}

/// Angle between two unit vectors, well conditioned near 0 and pi.
fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

struct Writer {
    q: JointAngles,
}

impl Writer {
    fn put(&mut self, name: &str, value: f64, valid: bool) {
        let i = joint_index(name).expect("known joint");
        self.q.values[i] = if valid { value } else { 0.0 };
        self.q.valid[i] = valid;
    }
}

/// Recovers joint angles and the `body_<id>` root pose (in the keypoints'
/// frame) from COCO keypoints. Hips, shoulders and neck are mandatory.
pub fn estimate_joint_state(
    model: &KinematicModel,
    kp: &KeypointSet,
) -> Result<(JointAngles, Transform), KinematicsError> {
    let get = |k: Keypoint| kp[k.index()];
    let mandatory = [
        Keypoint::LHip,
        Keypoint::RHip,
        Keypoint::LShoulder,
        Keypoint::RShoulder,
        Keypoint::Neck,
    ];
    let missing: Vec<String> = mandatory
        .iter()
        .filter(|k| get(**k).is_none())
        .map(|k| format!("{k:?}"))
        .collect();
    if !missing.is_empty() {
        return Err(KinematicsError::Estimation(format!(
            "missing mandatory keypoints: {}",
            missing.join(", ")
        )));
    }
    let must = |k: Keypoint| get(k).expect("checked above");
    let (lhip, rhip) = (must(Keypoint::LHip), must(Keypoint::RHip));
    let origin = nalgebra::center(&lhip, &rhip);
    let y = unit(lhip - rhip, "hip line")?;
    let up = must(Keypoint::Neck) - origin;
    let z = unit(up - up.dot(&y) * y, "trunk axis")?;
    let x = y.cross(&z);
    let root_rot = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(
        Matrix3::from_columns(&[x, y, z]),
    ));
    let root = Isometry3::from_parts(Translation3::from(origin.coords), root_rot);
    let inv = root.inverse();
    let local = |k: Keypoint| get(k).map(|p| inv * p);

    let mut w = Writer {
        q: JointAngles::zero(),
    };

    let shoulders = local(Keypoint::LShoulder).unwrap() - local(Keypoint::RShoulder).unwrap();
    let waist = (-shoulders.x).atan2(shoulders.y);
    w.put("waist_z", waist, true);
    let torso_inv = rot(Axis::Z, waist).inverse();
    let in_torso = |k: Keypoint| local(k).map(|p| torso_inv * p.coords);

    match (
        in_torso(Keypoint::LEye),
        in_torso(Keypoint::REye),
        in_torso(Keypoint::Nose),
    ) {
        (Some(le), Some(re), Some(nose)) => {
            let model_basis = basis(
                eye_point(model, true).coords - eye_point(model, false).coords,
                head_point(model, face::NOSE).coords - head_point(model, face::SELLION).coords,
            )?;
            let seen = basis(le - re, nose - (le + re) / 2.0)?;
            let (hz, hy, hx) = zyx_angles(&(seen * model_basis.transpose()));
            w.put("head_z", hz, true);
            w.put("head_y", hy, true);
            w.put("head_x", hx, true);
        }
        _ => {
            for j in ["head_z", "head_y", "head_x"] {
                w.put(j, 0.0, false);
            }
        }
    }

    for (side, shoulder, elbow, wrist) in [
        ("l", Keypoint::LShoulder, Keypoint::LElbow, Keypoint::LWrist),
        ("r", Keypoint::RShoulder, Keypoint::RElbow, Keypoint::RWrist),
    ] {
        let name = |j: &str| format!("{side}_{j}");
        let (Some(s), Some(e)) = (in_torso(shoulder), in_torso(elbow)) else {
            for j in ["shoulder_z", "shoulder_y", "shoulder_x", "elbow"] {
                w.put(&name(j), 0.0, false);
            }
            continue;
        };
        let u = unit(e - s, "upper arm")?;
        let forearm = in_torso(wrist).and_then(|p| (p - e).try_normalize(1e-12));
        let bend = forearm.map(|f| (f, angle_between(&u, &f)));
        match bend {
            Some((f, flex)) if flex.sin() > 1e-9 => {
                let bx = (f - f.dot(&u) * u).normalize();
                let bz = -u;
                let by = bz.cross(&bx);
                let (a, b, c) = zyx_angles(&Matrix3::from_columns(&[bx, by, bz]));
                w.put(&name("shoulder_z"), a, true);
                w.put(&name("shoulder_y"), b, true);
                w.put(&name("shoulder_x"), c, true);
                w.put(&name("elbow"), flex, true);
            }
            _ => {
                let horizontal = (u.x * u.x + u.y * u.y).sqrt();
                let yaw = if horizontal > 1e-9 { (-u.y).atan2(-u.x) } else { 0.0 };
                w.put(&name("shoulder_z"), yaw, true);
                w.put(&name("shoulder_y"), horizontal.atan2(-u.z), true);
                w.put(&name("shoulder_x"), 0.0, bend.is_some());
                w.put(&name("elbow"), bend.map(|b| b.1).unwrap_or(0.0), bend.is_some());
            }
        }
    }

    for (side, hip, knee, ankle) in [
        ("l", Keypoint::LHip, Keypoint::LKnee, Keypoint::LAnkle),
        ("r", Keypoint::RHip, Keypoint::RKnee, Keypoint::RAnkle),
    ] {
        let name = |j: &str| format!("{side}_{j}");
        let h = local(hip).unwrap();
        let Some(k) = local(knee) else {
            for j in ["hip_y", "hip_x", "knee"] {
                w.put(&name(j), 0.0, false);
            }
            continue;
        };
        let d = unit(k - h, "thigh")?;
        let hip_x = d.y.clamp(-1.0, 1.0).asin();
        let hip_y = (-d.x).atan2(-d.z);
        match local(ankle).filter(|a| (a - k).norm() > 1e-12) {
            Some(a) => {
                let knee = angle_between(&d, &(a - k).normalize());
                let limits = ["hip_y", "hip_x", "knee"].map(|j| {
                    let spec = &JOINTS[joint_index(&name(j)).expect("leg joint")];
                    (spec.lower, spec.upper)
                });
                let [y, x, kn] = refine_leg(model, &h, &k, &a, [hip_y, hip_x, knee], limits);
                w.put(&name("hip_y"), y, true);
                w.put(&name("hip_x"), x, true);
                w.put(&name("knee"), kn, true);
            }
            None => {
                w.put(&name("hip_y"), hip_y, true);
                w.put(&name("hip_x"), hip_x, true);
                w.put(&name("knee"), 0.0, false);
            }
        }
    }

    let mut q = w.q;
    q.clamp_to_limits();
    Ok((q, root))
}

/// Knee and ankle of one leg, relative to the hip joint, for `[hip_y, hip_x, knee]`.
fn leg_points(model: &KinematicModel, p: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let hip = rot(Axis::Y, p[0]) * rot(Axis::X, p[1]);
    let knee = hip * Vector3::new(0.0, 0.0, -model.dims.thigh);
    let ankle = knee + hip * rot(Axis::Y, p[2]) * Vector3::new(0.0, 0.0, -model.dims.shank);
    (knee, ankle)
}

/// Damped Gauss-Newton fit of the three leg angles to the knee and ankle
/// keypoints, kept inside the joint limits. Near a sideways thigh it also
/// tries several hip_y starts.
fn refine_leg(
    model: &KinematicModel,
    hip: &Point3<f64>,
    knee: &Point3<f64>,
    ankle: &Point3<f64>,
    start: [f64; 3],
    limits: [(f64, f64); 3],
) -> [f64; 3] {
    let clamp = |p: Vector3<f64>| Vector3::from_fn(|i, _| p[i].clamp(limits[i].0, limits[i].1));
    let residual = |p: &Vector3<f64>| {
        let (k, a) = leg_points(model, p);
        let rk = k - (knee - hip);
        let ra = a - (ankle - hip);
        SVector::<f64, 6>::new(rk.x, rk.y, rk.z, ra.x, ra.y, ra.z)
    };
    let fit = |start: Vector3<f64>| {
        let mut p = clamp(start);
        let mut r = residual(&p);
        let mut damping = 1e-6;
        for _ in 0..30 {
            if r.norm() < 1e-12 {
                break;
            }
            let mut jac = SMatrix::<f64, 6, 3>::zeros();
            for i in 0..3 {
                let mut step = Vector3::zeros();
                step[i] = 1e-7;
                jac.set_column(i, &((residual(&(p + step)) - residual(&(p - step))) / 2e-7));
            }
            let jtj = jac.transpose() * jac + Matrix3::identity() * damping;
            let Some(inv) = jtj.try_inverse() else { break };
            let next = clamp(p - inv * jac.transpose() * r);
            if (next - p).norm() < 1e-10 {
                break;
            }
            let rn = residual(&next);
            if rn.norm() < r.norm() {
                p = next;
                r = rn;
                damping = (damping * 0.1).max(1e-12);
            } else {
                damping *= 10.0;
            }
        }
        (r.norm(), p)
    };
    let first = fit(Vector3::from(start));
    if start[1].cos() > 0.4 {
        return [first.1[0], first.1[1], first.1[2]];
    }
    let (_, best) = [-1.2, -0.4, 0.4, 1.2]
        .into_iter()
        .map(|y| fit(Vector3::new(y, start[1], start[2].max(0.3))))
        .fold(first, |a, b| if b.0 < a.0 { b } else { a });
    [best[0], best[1], best[2]]
}

/// Orthonormal basis (columns) from a lateral vector and a second vector in the
/// sagittal plane.
fn basis(lateral: Vector3<f64>, sagittal: Vector3<f64>) -> Result<Matrix3<f64>, KinematicsError> {
    let e1 = unit(lateral, "eye line")?;
    let e2 = unit(sagittal - sagittal.dot(&e1) * e1, "eye-nose triangle")?;
    Ok(Matrix3::from_columns(&[e1, e2, e1.cross(&e2)]))
}
