//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::{Isometry3, Matrix4, Point3, Translation3, UnitQuaternion, Vector3};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::{json, Map};

use hri_core::bus::{Bus, EventLog, Leaf, TopicPath};
use hri_core::conformance::{check_log, Rule};
use hri_core::kinematics::{
    emit_urdf, estimate_joint_state, keypoints, segment_frames, JointAngles, KeypointSet, KinematicModel, DOF,
    DOF_GROUPS, JOINTS,
};
use hri_core::person::{BodyKinematicsNode, Cluster, KnownPerson, PersonManager, PersonRecord};
use hri_core::pipeline::{self, replay, simulate};
use hri_core::sim::{score, Scenario, Simulator, Truth};
use hri_core::tf::{from_message, TfTree, Transform};
use hri_core::{decode, HexId, IdKind, Message, Schema, Stamp, TransformStamped};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn scenario(name: &str) -> Scenario {
    Scenario::load(&fixtures().join(format!("scenarios/{name}.json"))).expect("shipped scenario loads")
}

fn tick_of(s: &Scenario, t: f64) -> usize {
    (t / s.tick).round() as usize
}

fn main() {
    let criteria: [(&str, fn() -> Check, Option<Duration>); 8] = [
        ("identifier combinations", identifier_combinations, Some(Duration::from_secs(10))),
        ("protocol self-conformance", self_conformance, None),
        ("kinematic audit", kinematic_audit, None),
        ("fk/ik round trip", fk_ik_round_trip, None),
        ("transform algebra", transform_algebra, None),
        ("person-frame state machine", person_frame_states, None),
        ("fusion quality", fusion_quality, None),
        ("determinism", determinism, None),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let result = match (result, budget) {
            (Ok(detail), Some(b)) if elapsed > *b => Err(format!("{detail}; took {elapsed:.2?}, budget {b:?}")),
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}; {elapsed:.2?})", i + 1),
            Err(reason) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({reason}; {elapsed:.2?})", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- criterion 1

struct BusState {
    tracked: BTreeMap<IdKind, BTreeSet<HexId>>,
    /// person -> (face, body, voice, name)
    persons: BTreeMap<HexId, (Option<HexId>, Option<HexId>, Option<HexId>, Option<String>)>,
    clusters: Vec<Cluster>,
}

impl BusState {
    fn capture(bus: &Bus, manager: &PersonManager) -> BusState {
        let mut tracked = BTreeMap::new();
        for kind in [IdKind::Face, IdKind::Body, IdKind::Voice, IdKind::Person] {
            tracked.insert(kind, bus.tracked(kind));
        }
        let text = |p: HexId, leaf: Leaf| match bus.latched_value(&TopicPath::leaf(p, leaf)) {
            Some(Message::String(s)) => Some(s.data).filter(|s| !s.is_empty()),
            _ => None,
        };
        let link = |p, leaf| text(p, leaf).map(|s| s.parse::<HexId>().expect("linked id parses"));
        let persons = tracked[&IdKind::Person]
            .iter()
            .map(|p| {
                (
                    *p,
                    (
                        link(*p, Leaf::FaceId),
                        link(*p, Leaf::BodyId),
                        link(*p, Leaf::VoiceId),
                        manager.person(*p).and_then(|r| r.name.clone()),
                    ),
                )
            })
            .collect();
        BusState {
            tracked,
            persons,
            clusters: manager.clusters().to_vec(),
        }
    }

    fn holder(&self, kind: IdKind, id: HexId) -> Option<HexId> {
        self.persons
            .iter()
            .find(|(_, l)| match kind {
                IdKind::Face => l.0 == Some(id),
                IdKind::Body => l.1 == Some(id),
                _ => l.2 == Some(id),
            })
            .map(|(p, _)| *p)
    }

    /// The bus shows `ids` and, when `person` is set, that person holds exactly
    /// those ids; otherwise no person holds any of them.
    fn combination(&self, ids: [Option<HexId>; 3], person: Option<HexId>) -> Result<(), String> {
        let kinds = [IdKind::Face, IdKind::Body, IdKind::Voice];
        for (kind, id) in kinds.iter().zip(ids) {
            if let Some(id) = id {
                ensure!(self.tracked[kind].contains(&id), "{id} missing from {} tracked list", kind.plural());
                if person.is_none() {
                    ensure!(self.holder(*kind, id).is_none(), "{id} already held by a person");
                }
            }
        }
        if let Some(p) = person {
            ensure!(self.tracked[&IdKind::Person].contains(&p), "person {p} not tracked");
            let l = &self.persons[&p];
            ensure!([l.0, l.1, l.2] == ids, "person {p} holds {:?}, expected {ids:?}", [l.0, l.1, l.2]);
        }
        Ok(())
    }
}

fn identifier_combinations() -> Check {
    let s = scenario("table1_walkthrough");
    let config = pipeline::manager_config(&s, &Map::new()).map_err(|e| e.to_string())?;
    let known = pipeline::known_persons(&s);
    let bus = Bus::new();
    bus.start_recording();
    let mut body = BodyKinematicsNode::new(&bus).map_err(|e| e.to_string())?;
    let mut manager = PersonManager::new(&bus, config, &known).map_err(|e| e.to_string())?;
    let mut sim = Simulator::new(&s, &bus);
    let checkpoints: BTreeSet<usize> = [0.3, 0.7, 0.9, 1.2, 1.6, 2.1, 2.7, 5.5].iter().map(|t| tick_of(&s, *t)).collect();
    let mut states = BTreeMap::new();
    for k in 0..sim.tick_count() {
        let t = sim.step(k).map_err(|e| e.to_string())?;
        body.step(t).map_err(|e| e.to_string())?;
        manager.step(t).map_err(|e| e.to_string())?;
        if checkpoints.contains(&k) {
            states.insert(k, BusState::capture(&bus, &manager));
        }
    }
    let truth = sim.truth();
    let at = |t: f64| -> (&BusState, &hri_core::sim::TruthTick) {
        let k = tick_of(&s, t);
        (&states[&k], &truth.ticks[k])
    };
    let actor = |tick: &hri_core::sim::TruthTick, name: &str| {
        tick.actors.iter().find(|a| a.name == name).cloned().expect("actor in truth")
    };

    let (st, tick) = at(0.3);
    let f1 = actor(tick, "A").face.ok_or("no face at 0.3 s")?;
    st.combination([Some(f1), None, None], None).map_err(|e| format!("row 1: {e}"))?;
    let alex = manager.person_named("Alex").ok_or("Alex has no record")?;
    st.combination([None, None, None], Some(alex)).map_err(|e| format!("row 5: {e}"))?;
    ensure!(st.persons[&alex].3.as_deref() == Some("Alex"), "row 5: record has no name");

    let (st, tick) = at(0.7);
    let f2 = actor(tick, "A").face.ok_or("no face at 0.7 s")?;
    ensure!(f2 != f1, "row 2: re-detection kept face id {f1}");
    ensure!(!st.tracked[&IdKind::Face].contains(&f1), "row 2: {f1} still tracked");
    st.combination([Some(f2), None, None], None).map_err(|e| format!("row 2: {e}"))?;

    let (st, tick) = at(0.9);
    let d = actor(tick, "D").body.ok_or("no body for D at 0.9 s")?;
    st.combination([None, Some(d), None], None).map_err(|e| format!("row 3: {e}"))?;

    let (st, tick) = at(1.2);
    let a = actor(tick, "A");
    let b = a.body.ok_or("no body for A at 1.2 s")?;
    ensure!(a.face == Some(f2), "row 4: face id changed");
    st.combination([Some(f2), Some(b), None], None).map_err(|e| format!("row 4: {e}"))?;
    ensure!(
        st.clusters
            .iter()
            .any(|c| c.face == Some(f2) && c.body == Some(b) && c.person.is_none()),
        "row 4: face {f2} and body {b} not matched"
    );

    let (st, tick) = at(1.6);
    ensure!(actor(tick, "A").face == Some(f2), "row 6: face id changed");
    st.combination([Some(f2), None, None], Some(alex)).map_err(|e| format!("row 6: {e}"))?;

    let (st, tick) = at(2.1);
    let f3 = actor(tick, "A").face.ok_or("no face at 2.1 s")?;
    ensure!(f3 != f2, "row 7: face id not renewed");
    st.combination([Some(f3), None, None], Some(alex)).map_err(|e| format!("row 7: {e}"))?;

    let (st, tick) = at(2.7);
    let a = actor(tick, "A");
    ensure!(a.face == Some(f3), "row 8: face id changed");
    let b2 = a.body.ok_or("no body for A at 2.7 s")?;
    st.combination([Some(f3), Some(b2), None], Some(alex)).map_err(|e| format!("row 8: {e}"))?;

    let (st, tick) = at(5.5);
    let v = actor(tick, "C").voice.ok_or("no voice for C at 5.5 s")?;
    let p = st.holder(IdKind::Voice, v).ok_or("row 9: voice not assigned to a person")?;
    ensure!(p != alex, "row 9: voice given to Alex");
    st.combination([None, None, Some(v)], Some(p)).map_err(|e| format!("row 9: {e}"))?;
    ensure!(st.persons[&p].3.is_none(), "row 9: new person has a name");

    ensure!(
        PersonRecord::anonymous(HexId::from_u32(1), None, None, None).is_err(),
        "row 10: empty anonymous record accepted"
    );
    let nobody = KnownPerson {
        name: String::new(),
        descriptor: None,
        native_language: None,
    };
    ensure!(
        PersonRecord::from_known(HexId::from_u32(1), &nobody).is_err(),
        "row 10: empty known record accepted"
    );
    let log = hri_core::bus::render_log(None, &bus.take_recording());
    let report = check_log(&log).map_err(|e| e.to_string())?;
    ensure!(
        !report.has(Rule::IdentifierCombination),
        "bus carried a person without identifiers"
    );
    Ok("9 legal rows observed, empty row rejected".into())
}

// ---------------------------------------------------------------- criterion 2

const SHIPPED: [&str; 6] = [
    "fig1_situation",
    "table1_walkthrough",
    "mafia_3p",
    "mafia_3p_without_blinking",
    "crowd_10",
    "occlusion_stress",
];

fn self_conformance() -> Check {
    let logs: Vec<(&str, String)> = SHIPPED
        .iter()
        .map(|name| (*name, simulate(&scenario(name), &Map::new()).expect("simulation runs").log))
        .collect();
    let invalid: Vec<(Rule, String)> = Rule::ALL
        .iter()
        .map(|r| {
            let file = fixtures().join(format!("invalid_logs/{}.hrilog", r.name().replace('-', "_")));
            (*r, std::fs::read_to_string(file).expect("fixture readable"))
        })
        .collect();

    let start = Instant::now();
    let mut events = 0;
    for (name, log) in &logs {
        let report = check_log(log).map_err(|e| format!("{name}: {e}"))?;
        events += report.events;
        ensure!(
            report.is_conformant(),
            "{name}: {} violations, first {:?}",
            report.violations.len(),
            report.violations[0]
        );
    }
    for (rule, log) in &invalid {
        let report = check_log(log).map_err(|e| format!("{rule}: {e}"))?;
        ensure!(report.has(*rule), "{rule} fixture not flagged: {:?}", report.violations);
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(5), "validation took {elapsed:.2?}");
    Ok(format!(
        "{} logs / {events} events clean, 12 fixtures flagged; validation {elapsed:.2?}",
        logs.len()
    ))
}

// ---------------------------------------------------------------- criterion 3

/// Segment lengths as fractions of body height.
const PROPORTIONS: [(&str, f64); 15] = [
    ("waist", 2.0 * 0.0955),
    ("torso", 0.818 - 0.530),
    ("head", 0.130),
    ("l_shoulder", 0.186),
    ("r_shoulder", 0.186),
    ("l_elbow", 0.146),
    ("r_elbow", 0.146),
    ("l_wrist", 0.108),
    ("r_wrist", 0.108),
    ("l_hip", 0.245),
    ("r_hip", 0.245),
    ("l_knee", 0.246),
    ("r_knee", 0.246),
    ("l_ankle", 0.039),
    ("r_ankle", 0.039),
];

const GROUPING: [(&str, usize); 10] = [
    ("head", 3),
    ("l_shoulder", 3),
    ("r_shoulder", 3),
    ("l_elbow", 1),
    ("r_elbow", 1),
    ("l_hip", 2),
    ("r_hip", 2),
    ("l_knee", 1),
    ("r_knee", 1),
    ("waist", 1),
];

fn parse_xyz(s: &str) -> [f64; 3] {
    let v: Vec<f64> = s.split_whitespace().map(|x| x.parse().expect("number")).collect();
    [v[0], v[1], v[2]]
}

struct UrdfSummary {
    links: Vec<String>,
    revolute: Vec<String>,
    /// joint name -> (parent link, child link, origin)
    joints: BTreeMap<String, (String, String, [f64; 3])>,
}

fn read_urdf(xml: &str) -> Result<UrdfSummary, String> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| format!("URDF does not parse: {e}"))?;
    let robot = doc.root_element();
    ensure!(robot.has_tag_name("robot"), "root element is <{}>", robot.tag_name().name());
    let mut out = UrdfSummary {
        links: Vec::new(),
        revolute: Vec::new(),
        joints: BTreeMap::new(),
    };
    for node in robot.children().filter(|n| n.is_element()) {
        let name = node.attribute("name").unwrap_or_default().to_string();
        if node.has_tag_name("link") {
            out.links.push(name);
        } else if node.has_tag_name("joint") {
            if node.attribute("type") == Some("revolute") {
                out.revolute.push(name.clone());
            }
            let child_attr = |tag: &str| {
                node.children()
                    .find(|c| c.has_tag_name(tag))
                    .and_then(|c| c.attribute("link"))
                    .unwrap_or_default()
                    .to_string()
            };
            let origin = node
                .children()
                .find(|c| c.has_tag_name("origin"))
                .and_then(|c| c.attribute("xyz"))
                .map(parse_xyz)
                .unwrap_or([0.0; 3]);
            out.joints.insert(name, (child_attr("parent"), child_attr("child"), origin));
        }
    }
    Ok(out)
}

/// Summed joint origins along the chain from link `from` down to link `to`.
fn urdf_offset(u: &UrdfSummary, from: &str, to: &str) -> Option<[f64; 3]> {
    if from == to {
        return Some([0.0; 3]);
    }
    u.joints.values().filter(|(p, _, _)| p == from).find_map(|(_, child, origin)| {
        let rest = urdf_offset(u, child, to)?;
        Some([origin[0] + rest[0], origin[1] + rest[1], origin[2] + rest[2]])
    })
}

fn kinematic_audit() -> Check {
    let id: HexId = "37ef0000".parse().map_err(|e| format!("{e:?}"))?;
    ensure!(DOF == 18 && JOINTS.len() == 18, "{} joints", JOINTS.len());
    let mut groups: BTreeMap<&str, usize> = BTreeMap::new();
    for j in &JOINTS {
        *groups.entry(j.segment).or_default() += 1;
    }
    let expected: BTreeMap<&str, usize> = GROUPING.into_iter().collect();
    ensure!(groups == expected, "joint grouping {groups:?}");
    ensure!(DOF_GROUPS.iter().copied().collect::<BTreeMap<_, _>>() == expected, "declared grouping differs");

    let reference = KinematicModel::generate(id, 1.75).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let poses: Vec<JointAngles> = (0..50).map(|_| random_state(&mut rng)).collect();
    let mut worst: f64 = 0.0;
    for h in [1.5, 1.75, 2.0] {
        let m = KinematicModel::generate(id, h).map_err(|e| e.to_string())?;
        ensure!(m.links.len() == 15, "{} links", m.links.len());
        for (name, fraction) in PROPORTIONS {
            let got = m.link_length(name).ok_or(format!("no link {name}"))?;
            worst = worst.max((got - fraction * h).abs());
            ensure!((got - fraction * h).abs() < 1e-9, "{name} at {h} m: {got} vs {}", fraction * h);
        }

        let u = read_urdf(&emit_urdf(&m))?;
        let segments: BTreeSet<String> = u
            .links
            .iter()
            .filter(|l| !l.contains("_link_") && !l.starts_with("body_"))
            .cloned()
            .collect();
        let want: BTreeSet<String> = PROPORTIONS.iter().map(|(n, _)| format!("{n}_{id}")).collect();
        ensure!(segments == want, "URDF segment links {segments:?}");
        ensure!(u.links.contains(&format!("body_{id}")), "no body_{id} root link");
        ensure!(u.revolute.len() == 18, "URDF has {} revolute joints", u.revolute.len());
        let mut urdf_groups: BTreeMap<String, usize> = BTreeMap::new();
        for j in &u.revolute {
            let base = j.strip_suffix(&format!("_{id}")).ok_or(format!("joint {j} lacks id"))?;
            let seg = ["_x", "_y", "_z"]
                .iter()
                .find_map(|s| base.strip_suffix(s))
                .filter(|s| expected.contains_key(s))
                .unwrap_or(base);
            *urdf_groups.entry(seg.to_string()).or_default() += 1;
        }
        let urdf_expected: BTreeMap<String, usize> = GROUPING.iter().map(|(s, n)| (s.to_string(), *n)).collect();
        ensure!(urdf_groups == urdf_expected, "URDF grouping {urdf_groups:?}");

        for (segment, next, want) in [
            ("torso", "head", [0.0, 0.0, (0.818 - 0.530) * h]),
            ("torso", "l_shoulder", [0.0, 0.129 * h, (0.818 - 0.530) * h]),
            ("torso", "r_shoulder", [0.0, -0.129 * h, (0.818 - 0.530) * h]),
            ("l_shoulder", "l_elbow", [0.0, 0.0, -0.186 * h]),
            ("l_elbow", "l_wrist", [0.0, 0.0, -0.146 * h]),
            ("body", "l_hip", [0.0, 0.0955 * h, 0.0]),
            ("l_hip", "l_knee", [0.0, 0.0, -0.245 * h]),
            ("l_knee", "l_ankle", [0.0, 0.0, -0.246 * h]),
        ] {
            let got = urdf_offset(&u, &format!("{segment}_{id}"), &format!("{next}_{id}")).ok_or(format!("no URDF path {segment} -> {next}"))?;
            let err = (0..3).map(|i| (got[i] - want[i]).abs()).fold(0.0, f64::max);
            worst = worst.max(err);
            ensure!(err < 1e-9, "URDF {segment} -> {next} at {h} m: {got:?} vs {want:?}");
        }

        let k = h / 1.75;
        for q in &poses {
            let a = segment_frames(&reference, q);
            let b = segment_frames(&m, q);
            for (name, fa) in &a {
                let fb = &b[name];
                let dt = (fb.translation.vector - fa.translation.vector * k).norm();
                let dr = fb.rotation.angle_to(&fa.rotation);
                worst = worst.max(dt).max(dr);
                ensure!(dt < 1e-9 && dr < 1e-9, "{name} at {h} m breaks similarity: {dt:e} m, {dr:e} rad");
            }
        }
    }
    Ok(format!("15 links, 18 DoF, URDF parses; worst deviation {worst:.1e}"))
}

// ---------------------------------------------------------------- criterion 4

fn random_state(rng: &mut ChaCha8Rng) -> JointAngles {
    let mut values = [0.0; DOF];
    for (v, j) in values.iter_mut().zip(&JOINTS) {
        *v = rng.random_range(j.lower..j.upper);
    }
    JointAngles::from_values(values)
}

fn random_root(rng: &mut ChaCha8Rng, h: f64) -> Transform {
    Isometry3::from_parts(
        Translation3::new(rng.random_range(1.0..4.0), rng.random_range(-2.0..2.0), 0.53 * h - 1.2),
        UnitQuaternion::from_axis_angle(&Vector3::z_axis(), rng.random_range(-3.1..3.1)),
    )
}

fn fk_ik_round_trip() -> Check {
    let id = HexId::from_u32(0x37ef_0000);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let noise = Normal::new(0.0, 0.005).expect("valid sigma");
    let mut worst_angle: f64 = 0.0;
    let mut rms_worst: f64 = 0.0;
    for h in [1.5, 1.75, 2.0] {
        let m = KinematicModel::generate(id, h).map_err(|e| e.to_string())?;
        let mut sq = 0.0;
        let mut n = 0usize;
        for _ in 0..1000 {
            let q = random_state(&mut rng);
            let root = random_root(&mut rng, h);
            let exact = keypoints(&m, &q, &root);
            let (got, _) = estimate_joint_state(&m, &exact.map(Some)).map_err(|e| e.to_string())?;
            for ((j, a), b) in JOINTS.iter().zip(got.values).zip(q.values) {
                worst_angle = worst_angle.max((a - b).abs());
                ensure!((a - b).abs() < 1e-6, "{} at {h} m: {a} vs {b}", j.name);
            }
            ensure!(got.valid.iter().all(|v| *v), "joint flagged invalid on exact keypoints");

            let noisy: KeypointSet = exact.map(|p| {
                Some(p + Vector3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng)))
            });
            let (est, est_root) = estimate_joint_state(&m, &noisy).map_err(|e| e.to_string())?;
            let truth = segment_frames(&m, &q);
            let fitted = segment_frames(&m, &est);
            for (name, f) in &truth {
                let p = root * (f * Point3::origin());
                let e = est_root * (fitted[name] * Point3::origin());
                sq += (p - e).norm_squared();
                n += 1;
            }
        }
        let rms = (sq / n as f64).sqrt();
        rms_worst = rms_worst.max(rms);
        ensure!(rms < 0.03, "segment RMS {rms:.4} m at {h} m");
    }
    Ok(format!(
        "3000 states; max angle error {worst_angle:.1e} rad; worst segment RMS at 5 mm noise {:.1} mm",
        rms_worst * 1000.0
    ))
}

// ---------------------------------------------------------------- criterion 5

#[derive(Debug, Clone)]
struct Tree {
    /// Frame i > 0 hangs off `parents[i - 1] < i`.
    parents: Vec<usize>,
    poses: Vec<([f64; 3], [f64; 3])>,
    picks: [usize; 3],
}

fn tree_strategy() -> impl Strategy<Value = Tree> {
    (2usize..12).prop_flat_map(|n| {
        let parents = (1..n).map(|i| 0..i).collect::<Vec<_>>();
        let poses = proptest::collection::vec(
            (prop::array::uniform3(-5.0f64..5.0), prop::array::uniform3(-3.0f64..3.0)),
            n - 1,
        );
        (parents, poses, prop::array::uniform3(0..n)).prop_map(|(parents, poses, picks)| Tree {
            parents,
            poses,
            picks,
        })
    })
}

fn homogeneous(t: &Transform) -> Matrix4<f64> {
    t.to_homogeneous()
}

fn max_diff(a: &Matrix4<f64>, b: &Matrix4<f64>) -> f64 {
    (a - b).abs().max()
}

fn transform_algebra() -> Check {
    let mut runner = TestRunner::new(Config {
        cases: 10_000,
        failure_persistence: None,
        ..Config::default()
    });
    let worst = std::cell::Cell::new(0.0f64);
    let stamp = Stamp::from_secs_f64(1.0);
    let result = runner.run(&tree_strategy(), |tree| {
        let name = |i: usize| format!("f{i}");
        let mut tf = TfTree::default();
        // Independent oracle: each frame's pose in f0 by matrix products.
        let mut in_root: Vec<Matrix4<f64>> = vec![Matrix4::identity()];
        for (i, (parent, (t, r))) in tree.parents.iter().zip(&tree.poses).enumerate() {
            let edge = Isometry3::new(Vector3::from(*t), Vector3::from(*r));
            tf.set_transform(&name(*parent), &name(i + 1), stamp, edge)
                .map_err(|e| TestCaseError::fail(e.to_string()))?;
            in_root.push(in_root[*parent] * homogeneous(&edge));
        }
        let [a, b, c] = tree.picks;
        let look = |x: usize, y: usize| {
            tf.lookup(&name(x), &name(y), stamp)
                .map(|t| homogeneous(&t))
                .map_err(|e| TestCaseError::fail(e.to_string()))
        };
        let ab = look(a, b)?;
        let ba = look(b, a)?;
        let bc = look(b, c)?;
        let ac = look(a, c)?;
        let oracle = in_root[a].try_inverse().expect("rigid") * in_root[b];
        let errs = [
            max_diff(&ab, &oracle),
            max_diff(&(ab * ba), &Matrix4::identity()),
            max_diff(&ac, &(ab * bc)),
            max_diff(&look(a, a)?, &Matrix4::identity()),
        ];
        let e = errs.iter().copied().fold(0.0, f64::max);
        worst.set(worst.get().max(e));
        prop_assert!(e < 1e-9, "errors {errs:?}");
        Ok(())
    });
    result.map_err(|e| e.to_string())?;
    Ok(format!("10000 random trees; worst deviation {:.1e}", worst.get()))
}

// ---------------------------------------------------------------- criterion 6

/// Bus contents relevant to person frames at one timestamp.
#[derive(Default, Clone)]
struct Frames {
    confidence: BTreeMap<HexId, f32>,
    names: BTreeMap<HexId, String>,
    /// child frame -> message, for frames published at this timestamp only
    tf: BTreeMap<String, TransformStamped>,
}

fn fold_frames(log: &str) -> (BTreeMap<Stamp, Frames>, TfTree) {
    let parsed = EventLog::parse(log).expect("log parses");
    let mut out: BTreeMap<Stamp, Frames> = BTreeMap::new();
    let mut state = Frames::default();
    let mut current = None;
    let mut tree = TfTree::new(Stamp::from_secs_f64(1e6));
    for e in parsed.events() {
        if current.is_some_and(|t| t != e.t) {
            out.insert(current.unwrap(), state.clone());
            state.tf.clear();
        }
        current = Some(e.t);
        let schema: Schema = e.schema.parse().expect("schema");
        let message = decode(&e.payload, schema).expect("payload");
        let path = TopicPath::parse(&e.topic).expect("topic");
        match (path.id(), message) {
            (None, Message::TransformStamped(m)) => {
                tree.set_message(&m).expect("tf accepted");
                state.tf.insert(m.child.clone(), m);
            }
            (Some((IdKind::Person, p)), Message::Float32(c)) if e.topic.ends_with("/location_confidence") => {
                state.confidence.insert(p, c.data);
            }
            (Some((IdKind::Person, p)), Message::String(s)) if e.topic.ends_with("/name") => {
                state.names.insert(p, s.data);
            }
            _ => {}
        }
    }
    if let Some(t) = current {
        out.insert(t, state);
    }
    (out, tree)
}

fn person_named(frames: &BTreeMap<Stamp, Frames>, name: &str) -> Option<HexId> {
    frames
        .values()
        .flat_map(|f| f.names.iter())
        .find(|(_, n)| n.as_str() == name)
        .map(|(p, _)| *p)
}

fn same_pose(a: &TransformStamped, b: &TransformStamped) -> bool {
    a.parent == b.parent && a.translation == b.translation && a.rotation == b.rotation
}

/// Follows one actor through loss: 0.5 on the first unseen tick, then the
/// linear decay, with the frame kept at the last pose while confidence > 0.
fn check_decay(
    frames: &BTreeMap<Stamp, Frames>,
    tree: &TfTree,
    truth: &Truth,
    actor: &str,
    person: HexId,
    forget: f64,
) -> Result<usize, String> {
    let child = format!("person_{person}");
    let mut lost_at: Option<Stamp> = None;
    let mut last_seen = None;
    let mut last_pose: Option<Transform> = None;
    let world = |m: &TransformStamped, t: Stamp| -> Result<Transform, String> {
        Ok(tree.lookup("world", &m.parent, t).map_err(|e| e.to_string())? * from_message(m))
    };
    let mut withdrawn = 0;
    for tick in &truth.ticks {
        let a = tick.actors.iter().find(|a| a.name == actor);
        let seen = a.is_some_and(|a| a.face.is_some() || a.body.is_some() || a.voice.is_some());
        let f = &frames[&tick.t];
        let c = f.confidence.get(&person).copied();
        if seen {
            lost_at = None;
            last_seen = Some(tick.t);
            ensure!(c == Some(1.0), "{actor} seen at {} but confidence {c:?}", tick.t);
            let m = f.tf.get(&child).ok_or(format!("{actor} seen at {} without a frame", tick.t))?;
            last_pose = Some(world(m, tick.t)?);
            continue;
        }
        if last_seen.is_none() {
            continue;
        }
        let since = *lost_at.get_or_insert(tick.t);
        let dt = (tick.t - since).secs_f64();
        let want = (0.5 * (1.0 - dt / forget)).max(0.0);
        let got = c.map(f64::from).unwrap_or(0.0);
        if tick.t == since {
            ensure!(c == Some(0.5), "{actor}: confidence {c:?} at loss ({})", tick.t);
        }
        ensure!((got - want).abs() < 1e-6, "{actor} at {}: confidence {got} vs {want}", tick.t);
        ensure!(
            f.tf.contains_key(&child) == (want > 1e-9),
            "{actor} at {}: frame {} with confidence {got}",
            tick.t,
            if f.tf.contains_key(&child) { "present" } else { "absent" }
        );
        if let Some(m) = f.tf.get(&child) {
            let now = world(m, tick.t)?;
            let then = last_pose.ok_or("no pose before loss")?;
            ensure!(
                (now.translation.vector - then.translation.vector).norm() < 1e-5,
                "{actor}: lost frame moved at {}",
                tick.t
            );
        } else {
            withdrawn += 1;
        }
    }
    Ok(withdrawn)
}

fn person_frame_states() -> Check {
    // Case: tracked and lost, on the occlusion scenario.
    let s = scenario("occlusion_stress");
    let run = simulate(&s, &Map::new()).map_err(|e| e.to_string())?;
    let forget = run.config.forget_time;
    let (frames, tree) = fold_frames(&run.log);
    let ana = person_named(&frames, "Ana").ok_or("Ana never named")?;
    let zoe = person_named(&frames, "Zoe").ok_or("Zoe never named")?;

    let mut collocated = 0;
    let mut via_body = 0;
    for tick in &run.truth.ticks {
        let f = &frames[&tick.t];
        for child in f.tf.keys() {
            if let Some(p) = child.strip_prefix("person_") {
                let p: HexId = p.parse().map_err(|e| format!("{e:?}"))?;
                ensure!(
                    f.confidence.get(&p).is_some_and(|c| *c > 0.0),
                    "frame {child} at {} with confidence {:?}",
                    tick.t,
                    f.confidence.get(&p)
                );
            }
        }
        ensure!(!f.tf.contains_key(&format!("person_{zoe}")), "frame for unlocated Zoe at {}", tick.t);
        ensure!(
            f.confidence.get(&zoe).is_none_or(|c| *c == 0.0),
            "Zoe confidence {:?}",
            f.confidence.get(&zoe)
        );
        let Some(a) = tick.actors.iter().find(|a| a.name == "A") else { continue };
        let person = f.tf.get(&format!("person_{ana}"));
        if let Some(face) = a.face {
            let face_frame = f.tf.get(&format!("face_{face}")).ok_or("face frame missing")?;
            let person = person.ok_or(format!("Ana tracked at {} without a frame", tick.t))?;
            ensure!(same_pose(person, face_frame), "person frame not collocated with face at {}", tick.t);
            collocated += 1;
        } else if let Some(body) = a.body {
            let person = person.ok_or(format!("Ana tracked at {} without a frame", tick.t))?;
            let head = tree
                .lookup(&person.parent, &format!("head_{body}"), tick.t)
                .map_err(|e| e.to_string())?;
            let p = from_message(person);
            ensure!(
                (p.translation.vector - head.translation.vector).norm() < 1e-5,
                "body-sourced frame off the head at {}",
                tick.t
            );
            via_body += 1;
        }
    }
    ensure!(collocated > 0 && via_body > 0, "face {collocated} / body {via_body} ticks");
    check_decay(&frames, &tree, &run.truth, "A", ana, forget)?;
    let (t0, face) = run
        .truth
        .ticks
        .iter()
        .find_map(|t| t.actors.iter().find(|a| a.name == "B").and_then(|a| a.face).map(|f| (t.t, f)))
        .ok_or("B never seen")?;
    let first = &frames[&t0];
    let face_frame = first.tf.get(&format!("face_{face}")).ok_or("B's face frame missing")?;
    let b = first
        .tf
        .values()
        .find(|m| m.child.starts_with("person_") && same_pose(m, face_frame))
        .map(|m| m.child["person_".len()..].parse::<HexId>().expect("person id"))
        .ok_or("no person for B")?;
    let withdrawn = check_decay(&frames, &tree, &run.truth, "B", b, forget)?;
    ensure!(withdrawn > 0, "B's frame never withdrawn");

    // Case: no person id yet, so no person frame.
    let s = scenario("table1_walkthrough");
    let run = simulate(&s, &Map::new()).map_err(|e| e.to_string())?;
    let (frames, _) = fold_frames(&run.log);
    let early: Vec<&Frames> = run
        .truth
        .ticks
        .iter()
        .filter(|t| t.t.secs_f64() < 1.25)
        .map(|t| &frames[&t.t])
        .collect();
    ensure!(
        early.iter().all(|f| !f.tf.keys().any(|c| c.starts_with("person_"))),
        "person frame before identification"
    );
    ensure!(
        early.iter().any(|f| f.tf.keys().any(|c| c.starts_with("face_"))),
        "no unidentified face to test against"
    );
    let late = &frames[&run.truth.ticks[tick_of(&s, 5.5)].t];
    let alex = person_named(&frames, "Alex").ok_or("Alex never named")?;
    let voiced = late
        .tf
        .keys()
        .filter_map(|c| c.strip_prefix("person_"))
        .filter_map(|p| p.parse::<HexId>().ok())
        .filter(|p| *p != alex)
        .count();
    ensure!(voiced == 1, "{voiced} voice-located person frames at 5.5 s");
    Ok(format!(
        "{collocated} face-collocated and {via_body} body-sourced ticks, decay and withdrawal at {forget} s verified"
    ))
}

// ---------------------------------------------------------------- criterion 7

fn with_noise(mut s: Scenario, sigma: f64) -> Scenario {
    s.noise.position_sigma = sigma;
    s
}

fn fusion_quality() -> Check {
    let mut lines = Vec::new();
    for name in ["fig1_situation", "mafia_3p", "crowd_10"] {
        let run = simulate(&scenario(name), &Map::new()).map_err(|e| e.to_string())?;
        let log = EventLog::parse(&run.log).map_err(|e| e.to_string())?;
        let r = score(&log, &run.truth).map_err(|e| e.to_string())?;
        ensure!(
            r.identity_continuity == 1.0 && r.association_accuracy == 1.0,
            "{name}: continuity {} association {}",
            r.identity_continuity,
            r.association_accuracy
        );
        lines.push(format!("{name} 1.0/1.0"));
    }

    let s = with_noise(scenario("mafia_3p_without_blinking"), 0.005);
    let run = simulate(&s, &Map::new()).map_err(|e| e.to_string())?;
    let true_gazes: usize = run
        .truth
        .ticks
        .iter()
        .map(|t| t.actors.iter().filter(|a| a.gaze_target.is_some()).count())
        .sum();
    ensure!(true_gazes > 0, "no scripted gaze to recover");
    let r = score(&EventLog::parse(&run.log).map_err(|e| e.to_string())?, &run.truth).map_err(|e| e.to_string())?;
    ensure!(
        r.gaze_recall >= 0.95 && r.gaze_precision >= 0.95,
        "noisy gaze recall {:.3} precision {:.3}",
        r.gaze_recall,
        r.gaze_precision
    );
    lines.push(format!("noisy gaze R {:.3} P {:.3}", r.gaze_recall, r.gaze_precision));

    let s = scenario("mafia_3p");
    let closed: usize = simulate(&s, &Map::new())
        .map_err(|e| e.to_string())?
        .truth
        .ticks
        .iter()
        .map(|t| t.actors.iter().filter(|a| a.eyes_closed).count())
        .sum();
    ensure!(closed > 0, "no eyes-closed phase scripted");
    let blink = |respect: bool| -> Result<u64, String> {
        let run = simulate(&s, json!({"respect_blinks": respect}).as_object().expect("object"))
            .map_err(|e| e.to_string())?;
        let log = EventLog::parse(&run.log).map_err(|e| e.to_string())?;
        Ok(score(&log, &run.truth).map_err(|e| e.to_string())?.blink_false_positives)
    };
    let respected = blink(true)?;
    let ignored = blink(false)?;
    ensure!(respected == 0, "{respected} gaze false positives with eyes closed");
    lines.push(format!("eyes-closed false positives 0 (ignoring blinks: {ignored})"));
    Ok(lines.join("; "))
}

// ---------------------------------------------------------------- criterion 8

fn determinism() -> Check {
    let mut s = with_noise(scenario("mafia_3p"), 0.005);
    s.noise.facing_kappa = Some(200.0);
    s.seed = 1234;
    let a = simulate(&s, &Map::new()).map_err(|e| e.to_string())?;
    let b = simulate(&s, &Map::new()).map_err(|e| e.to_string())?;
    ensure!(a.log.as_bytes() == b.log.as_bytes(), "simulate differs between runs");
    ensure!(a.truth == b.truth, "truth differs between runs");
    let parsed = EventLog::parse(&a.log).map_err(|e| e.to_string())?;
    let r1 = replay(&parsed, None).map_err(|e| e.to_string())?;
    let r2 = replay(&parsed, None).map_err(|e| e.to_string())?;
    ensure!(r1.as_bytes() == r2.as_bytes(), "replay differs between runs");
    ensure!(r1.as_bytes() == a.log.as_bytes(), "replay does not reproduce the simulated log");
    s.seed = 1235;
    let c = simulate(&s, &Map::new()).map_err(|e| e.to_string())?;
    ensure!(c.log != a.log, "seed has no effect");
    Ok(format!("{} bytes identical across simulate and replay runs", a.log.len()))
}
