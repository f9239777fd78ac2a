use crate::model::{BodyAttitude, Keypoint, RegionOfInterest, Skeleton2D};

/// Distance from the camera to a face of physical width `head_width` metres
/// whose image is `roi.width` pixels wide, for a focal length in pixels.
pub fn estimate_face_distance(roi: &RegionOfInterest, focal_length: f64, head_width: f64) -> Option<f64> {
    (roi.width > 0).then(|| focal_length * head_width / roi.width as f64)
}

const UPPER_BODY: [Keypoint; 8] = [
    Keypoint::Nose,
    Keypoint::Neck,
    Keypoint::RShoulder,
    Keypoint::RElbow,
    Keypoint::RWrist,
    Keypoint::LShoulder,
    Keypoint::LElbow,
    Keypoint::LWrist,
];

/// Hand-crafted posture rules on the upper-body keypoints, in image
/// coordinates (y grows downwards). Any missing upper-body keypoint yields an
/// all-false attitude with zero confidence.
pub fn classify_body_attitude(skeleton: &Skeleton2D) -> BodyAttitude {
    let none = BodyAttitude {
        hands_on_face: false,
        arms_crossed: false,
        hands_raised: false,
        confidence: 0.0,
    };
    let mut pts = Vec::with_capacity(UPPER_BODY.len());
    for k in UPPER_BODY {
        match skeleton.get(k) {
            Some(p) if p.is_present() => pts.push(p),
            _ => return none,
        }
    }
    let [nose, _neck, rsh, rel, rwr, lsh, lel, lwr] = pts[..] else {
        return none;
    };
    let dist = |a: &crate::model::Keypoint2D, b: &crate::model::Keypoint2D| {
        ((a.x - b.x) as f64).hypot((a.y - b.y) as f64)
    };
    let reference = dist(lsh, rsh);
    if reference <= 0.0 {
        return none;
    }
    let hands_on_face = dist(lwr, nose).min(dist(rwr, nose)) < 0.15 * reference;
    let hands_raised = lwr.y < nose.y || rwr.y < nose.y;
    let left_side = (lsh.x - rsh.x).signum();
    let arms_crossed =
        (lwr.x - rel.x) * left_side < 0.0 && (rwr.x - lel.x) * left_side > 0.0;
    let confidence = pts.iter().map(|p| p.confidence).sum::<f32>() / pts.len() as f32;
    BodyAttitude {
        hands_on_face,
        arms_crossed,
        hands_raised,
        confidence,
    }
}
