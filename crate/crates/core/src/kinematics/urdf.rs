//! URDF rendering. Three-axis joints become chains of single-axis revolute
//! joints linked through massless, zero-length helper links named
//! `<segment>_<axis>_link_<bodyID>`.

use std::fmt::Write as _;

use super::anthropometry as a;
use super::model::{JointSpec, KinematicModel, JOINTS};

struct Mount {
    segment: &'static str,
    parent: &'static str,
    origin: [f64; 3],
}

fn mounts(m: &KinematicModel) -> Vec<Mount> {
    let d = &m.dims;
    let mount = |segment, parent, origin| Mount {
        segment,
        parent,
        origin,
    };
    vec![
        mount("waist", "body", [0.0; 3]),
        mount("torso", "waist", [0.0; 3]),
        mount("head", "torso", [0.0, 0.0, d.torso]),
        mount("l_shoulder", "torso", [0.0, d.shoulder_half_width, d.torso]),
        mount("r_shoulder", "torso", [0.0, -d.shoulder_half_width, d.torso]),
        mount("l_elbow", "l_shoulder", [0.0, 0.0, -d.upper_arm]),
        mount("r_elbow", "r_shoulder", [0.0, 0.0, -d.upper_arm]),
        mount("l_wrist", "l_elbow", [0.0, 0.0, -d.forearm]),
        mount("r_wrist", "r_elbow", [0.0, 0.0, -d.forearm]),
        mount("l_hip", "body", [0.0, d.hip_half_width, 0.0]),
        mount("r_hip", "body", [0.0, -d.hip_half_width, 0.0]),
        mount("l_knee", "l_hip", [0.0, 0.0, -d.thigh]),
        mount("r_knee", "r_hip", [0.0, 0.0, -d.thigh]),
        mount("l_ankle", "l_knee", [0.0, 0.0, -d.shank]),
        mount("r_ankle", "r_knee", [0.0, 0.0, -d.shank]),
    ]
}

fn triple(v: [f64; 3]) -> String {
    format!("{} {} {}", v[0], v[1], v[2])
}

fn visual(m: &KinematicModel, segment: &str) -> String {
    let h = m.height;
    let len = m.link_length(segment).expect("segment exists");
    let geometry = match segment {
        "head" => format!(r#"<sphere radius="{}"/>"#, len / 2.0),
        "waist" => format!(r#"<box size="{} {} {}"/>"#, 0.10 * h, len, 0.05 * h),
        "torso" => format!(r#"<box size="{} {} {}"/>"#, 0.12 * h, 2.0 * a::SHOULDER_HALF_WIDTH * h, len),
        _ => format!(r#"<cylinder radius="{}" length="{}"/>"#, 0.025 * h, len),
    };
    let origin = match segment {
        "head" => [0.0, 0.0, len / 2.0],
        "torso" => [0.0, 0.0, len / 2.0],
        "waist" => [0.0; 3],
        _ => [0.0, 0.0, -len / 2.0],
    };
    format!(
        "    <visual>\n      <origin xyz=\"{}\" rpy=\"0 0 0\"/>\n      <geometry>{geometry}</geometry>\n    </visual>\n",
        triple(origin)
    )
}

/// Renders `model` as URDF text. Output depends only on the model.
pub fn emit_urdf(model: &KinematicModel) -> String {
    let id = model.body_id;
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0"?>"#);
    let _ = writeln!(out, r#"<robot name="human_{id}">"#);
    let _ = writeln!(out, r#"  <link name="body_{id}"/>"#);
    for mount in mounts(model) {
        let joints: Vec<&JointSpec> = JOINTS.iter().filter(|j| j.segment == mount.segment).collect();
        let mut parent = format!("{}_{id}", mount.parent);
        let mut origin = mount.origin;
        if joints.is_empty() {
            let child = format!("{}_{id}", mount.segment);
            write_joint(&mut out, &format!("{}_fixed_{id}", mount.segment), "fixed", &parent, &child, origin, None);
        }
        for (i, j) in joints.iter().enumerate() {
            let last = i + 1 == joints.len();
            let child = if last {
                format!("{}_{id}", mount.segment)
            } else {
                let axis = j.name.rsplit('_').next().unwrap_or("x");
                let helper = format!("{}_{axis}_link_{id}", mount.segment);
                let _ = writeln!(out, r#"  <link name="{helper}"/>"#);
                helper
            };
            write_joint(&mut out, &format!("{}_{id}", j.name), "revolute", &parent, &child, origin, Some(j));
            parent = child;
            origin = [0.0; 3];
        }
        let _ = writeln!(out, r#"  <link name="{}_{id}">"#, mount.segment);
        out.push_str(&visual(model, mount.segment));
        let _ = writeln!(out, "  </link>");
    }
    out.push_str("</robot>\n");
    out
}

fn write_joint(
    out: &mut String,
    name: &str,
    kind: &str,
    parent: &str,
    child: &str,
    origin: [f64; 3],
    spec: Option<&JointSpec>,
) {
    let _ = writeln!(out, r#"  <joint name="{name}" type="{kind}">"#);
    let _ = writeln!(out, r#"    <parent link="{parent}"/>"#);
    let _ = writeln!(out, r#"    <child link="{child}"/>"#);
    let _ = writeln!(out, r#"    <origin xyz="{}" rpy="0 0 0"/>"#, triple(origin));
    if let Some(j) = spec {
        let _ = writeln!(out, r#"    <axis xyz="{}"/>"#, triple(j.axis.vector()));
        let _ = writeln!(
            out,
            r#"    <limit lower="{}" upper="{}" effort="0" velocity="0"/>"#,
            j.lower, j.upper
        );
    }
    let _ = writeln!(out, "  </joint>");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::HexId;

    #[test]
    fn names_carry_body_id() {
        let m = KinematicModel::generate(HexId::from_u32(0x37ef0000), 1.75).unwrap();
        let xml = emit_urdf(&m);
        assert!(xml.contains(r#"<link name="waist_37ef0000">"#));
        assert!(xml.contains(r#"<link name="body_37ef0000"/>"#));
        assert!(xml.contains(r#"<joint name="l_shoulder_y_37ef0000" type="revolute">"#));
        assert_eq!(xml, emit_urdf(&m));
    }

    #[test]
    fn joint_counts() {
        let m = KinematicModel::generate(HexId::from_u32(1), 1.6).unwrap();
        let xml = emit_urdf(&m);
        assert_eq!(xml.matches(r#"type="revolute""#).count(), 18);
        assert_eq!(xml.matches(r#"type="fixed""#).count(), 5);
        assert_eq!(xml.matches("<link name=").count(), 15 + 1 + 8);
    }
}
