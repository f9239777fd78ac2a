use std::collections::BTreeSet;

use nalgebra::{Isometry3, Point3, Vector3};
use proptest::prelude::*;

use hri_core::bus::{render_log, Bus, EventLog, LogEvent};
use hri_core::kinematics::{estimate_joint_state, keypoints, JointAngles, KinematicModel, KeypointSet, JOINTS};
use hri_core::person::{assign, detect_gaze, detect_groups, estimate_face_distance, location_confidence, GazeSource};
use hri_core::tf::{from_message, rotation_distance, to_message, translation_distance, TfTree, Transform};
use hri_core::{
    decode, encode, Float32Msg, HexId, IdKind, IdsList, Identifier, Keypoint2D, Message, RegionOfInterest,
    Skeleton2D, Stamp,
};

fn stamp() -> impl Strategy<Value = Stamp> {
    (0i64..10_000_000_000_000).prop_map(Stamp::from_nanos)
}

fn real() -> impl Strategy<Value = f32> {
    -1.0e6f32..1.0e6
}

fn isometry() -> impl Strategy<Value = Transform> {
    (prop::array::uniform3(-5.0f64..5.0), prop::array::uniform3(-3.0f64..3.0))
        .prop_map(|(t, r)| Isometry3::new(Vector3::from(t), Vector3::from(r)))
}

fn message() -> impl Strategy<Value = Message> {
    prop_oneof![
        real().prop_map(|data| Message::from(Float32Msg { data })),
        prop::collection::vec(any::<u32>(), 0..6)
            .prop_map(|v| Message::from(IdsList { ids: v.into_iter().map(HexId::from_u32).collect() })),
        (prop::collection::vec((0.0f32..=1.0, 0.0f32..=1.0, 0.01f32..=1.0), 18), stamp()).prop_map(|(kps, stamp)| {
            Message::from(Skeleton2D {
                keypoints: kps.into_iter().map(|(x, y, confidence)| Keypoint2D { x, y, confidence }).collect(),
                stamp,
            })
        }),
        (isometry(), stamp()).prop_map(|(t, s)| Message::from(to_message(&t, s, "camera", "face_0000beef"))),
    ]
}

proptest! {
    #[test]
    fn hex_ids_print_and_parse_back(raw in any::<u32>()) {
        let id = HexId::from_u32(raw);
        let text = id.to_string();
        prop_assert_eq!(text.len(), 8);
        prop_assert_eq!(text.parse::<HexId>().unwrap(), id);
        let upper = text.to_uppercase();
        prop_assert_eq!(upper.parse::<HexId>().is_ok(), upper == text);
    }

    #[test]
    fn encoding_is_stable_after_one_round_trip(m in message()) {
        let once = encode(&m).unwrap();
        let back = decode(&once, m.schema()).unwrap();
        prop_assert_eq!(encode(&back).unwrap(), once);
    }

    #[test]
    fn transform_messages_lose_only_f32_precision(t in isometry(), s in stamp()) {
        let back = from_message(&to_message(&t, s, "a", "b"));
        prop_assert!(translation_distance(&t, &back) < 1e-5);
        prop_assert!(rotation_distance(&t.rotation, &back.rotation) < 1e-6);
    }

    #[test]
    fn lookups_in_opposite_directions_are_inverse(chain in prop::collection::vec(isometry(), 1..6), pick in any::<prop::sample::Index>()) {
        let mut tree = TfTree::default();
        for (i, t) in chain.iter().enumerate() {
            tree.set_transform(&format!("f{i}"), &format!("f{}", i + 1), Stamp::ZERO, *t).unwrap();
        }
        let other = format!("f{}", pick.index(chain.len() + 1));
        let ab = tree.lookup("f0", &other, Stamp::ZERO).unwrap();
        let ba = tree.lookup(&other, "f0", Stamp::ZERO).unwrap();
        let id = ab * ba;
        prop_assert!(id.translation.vector.norm() < 1e-9);
        prop_assert!(id.rotation.angle() < 1e-9);
    }

    #[test]
    fn location_confidence_never_rises_while_lost(a in 0.0f64..200.0, b in 0.0f64..200.0, forget in 0.1f64..120.0) {
        let (early, late) = (a.min(b), a.max(b));
        let c_early = location_confidence(false, true, early, forget);
        let c_late = location_confidence(false, true, late, forget);
        prop_assert!((0.0..=0.5).contains(&c_late));
        prop_assert!(c_late <= c_early);
        prop_assert_eq!(location_confidence(true, true, late, forget), 1.0);
    }

    #[test]
    fn face_distance_is_inverse_to_width(w in 1u32..2000, f in 100.0f64..2000.0, head in 0.1f64..0.3) {
        let roi = |width| RegionOfInterest { x_offset: 0, y_offset: 0, width, height: 10 };
        let d1 = estimate_face_distance(&roi(w), f, head).unwrap();
        let d2 = estimate_face_distance(&roi(2 * w), f, head).unwrap();
        prop_assert!((d1 - 2.0 * d2).abs() < 1e-9 * d1);
    }

    #[test]
    fn groups_partition_and_ignore_input_order(
        pts in prop::collection::vec((-4.0f64..4.0, -4.0f64..4.0), 0..10),
        radius in 0.2f64..2.0,
        rotate in 0usize..10,
    ) {
        let people: Vec<(HexId, Point3<f64>)> = pts
            .iter()
            .enumerate()
            .map(|(i, (x, y))| (HexId::from_u32(i as u32 + 1), Point3::new(*x, *y, 0.0)))
            .collect();
        let groups = detect_groups(&people, radius);
        let mut seen = BTreeSet::new();
        for g in &groups {
            prop_assert!(g.len() >= 2);
            for id in g {
                prop_assert!(seen.insert(*id));
            }
        }
        let mut shuffled = people.clone();
        if !shuffled.is_empty() {
            let k = rotate % shuffled.len();
            shuffled.rotate_left(k);
        }
        prop_assert_eq!(detect_groups(&shuffled, radius), groups);
    }

    #[test]
    fn nobody_gazes_at_themself(poses in prop::collection::vec(isometry(), 0..6), cone in 1.0f64..90.0) {
        let sources: Vec<GazeSource> = poses
            .iter()
            .enumerate()
            .map(|(i, gaze)| GazeSource { person: HexId::from_u32(i as u32), gaze: *gaze, blinking: i % 2 == 0 })
            .collect();
        let all = detect_gaze(&sources, cone, false);
        let awake = detect_gaze(&sources, cone, true);
        prop_assert!(all.iter().all(|(s, r)| s != r));
        prop_assert!(awake.iter().all(|p| all.contains(p)));
    }

    #[test]
    fn assignment_is_one_to_one_and_gated(
        costs in prop::collection::vec(prop::collection::vec(0.0f64..2.0, 5), 0..6),
        gate in 0.1f64..1.5,
    ) {
        let pairs = assign(&costs, 5, gate);
        let rows: BTreeSet<_> = pairs.iter().map(|p| p.0).collect();
        let cols: BTreeSet<_> = pairs.iter().map(|p| p.1).collect();
        prop_assert_eq!(rows.len(), pairs.len());
        prop_assert_eq!(cols.len(), pairs.len());
        prop_assert!(pairs.iter().all(|&(i, j)| costs[i][j] <= gate));
    }

    #[test]
    fn log_text_round_trips(values in prop::collection::vec((real(), 0i64..1_000_000_000), 1..20)) {
        let events: Vec<LogEvent> = values
            .iter()
            .enumerate()
            .map(|(i, (v, dt))| LogEvent {
                seq: i as u64 + 1,
                t: Stamp::from_nanos(i as i64 * 1_000_000_000 + dt),
                topic: "/humans/persons/9d8a0000/location_confidence".into(),
                schema: "Float32".into(),
                latched: false,
                payload: encode(&Message::from(Float32Msg { data: v.abs().min(1.0) })).unwrap(),
            })
            .collect();
        let text = render_log(None, &events);
        let log = EventLog::parse(&text).unwrap();
        prop_assert_eq!(render_log(None, log.events()), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ik_recovers_joint_angles_within_limits(
        fractions in prop::collection::vec(0.05f64..0.95, JOINTS.len()),
        height in 1.5f64..2.0,
        root in isometry(),
    ) {
        let model = KinematicModel::generate(HexId::from_u32(7), height).unwrap();
        let mut q = JointAngles::zero();
        for (j, s) in JOINTS.iter().zip(&fractions) {
            q.set(j.name, j.lower + s * (j.upper - j.lower));
        }
        let kp: KeypointSet = keypoints(&model, &q, &root).map(Some);
        let (est, _) = estimate_joint_state(&model, &kp).unwrap();
        let back = keypoints(&model, &est, &root);
        let truth = keypoints(&model, &q, &root);
        for (a, b) in back.iter().zip(&truth) {
            prop_assert!((a - b).norm() < 1e-6, "keypoint moved by {}", (a - b).norm());
        }
        prop_assert!(est.out_of_limits().is_empty());
    }
}

#[test]
fn tracked_lists_publish_only_on_change() {
    let bus = Bus::new();
    let sub = bus.subscribe("/humans/faces/tracked").unwrap();
    let face = |raw| Identifier::new(IdKind::Face, HexId::from_u32(raw));
    let t = Stamp::from_secs_f64(0.1);
    assert!(bus.update_tracked(IdKind::Face, [face(1), face(2)], t).unwrap().is_some());
    assert!(bus.update_tracked(IdKind::Face, [face(2), face(1)], t).unwrap().is_none());
    assert!(bus.update_tracked(IdKind::Face, [face(2)], t).unwrap().is_some());
    assert_eq!(sub.drain().len(), 2);
    assert_eq!(bus.tracked(IdKind::Face), BTreeSet::from([HexId::from_u32(2)]));
}
