use std::collections::{BTreeMap, BTreeSet};

use nalgebra::Point3;

use crate::model::{HexId, IdRegistry};
use crate::tf::{axis_z, Transform};

/// Gaze pose and blink state of one person's face.
#[derive(Debug, Clone, Copy)]
pub struct GazeSource {
    pub person: HexId,
    /// Pose of the `gaze_<faceID>` frame.
    pub gaze: Transform,
    pub blinking: bool,
}

/// Directed `(sender, receiver)` pairs: the receiver's gaze origin lies within
/// `cone_deg` of the sender's gaze axis. Blinking senders are skipped when
/// `respect_blinks` is set.
pub fn detect_gaze(sources: &[GazeSource], cone_deg: f64, respect_blinks: bool) -> Vec<(HexId, HexId)> {
    let cone = cone_deg.to_radians();
    let mut out = Vec::new();
    for s in sources {
        if respect_blinks && s.blinking {
            continue;
        }
        let axis = axis_z(&s.gaze);
        let origin = s.gaze.translation.vector;
        for r in sources {
            if r.person == s.person {
                continue;
            }
            let ray = r.gaze.translation.vector - origin;
            if ray.norm() < 1e-9 {
                continue;
            }
            let angle = axis.cross(&ray).norm().atan2(axis.dot(&ray));
            if angle < cone {
                out.push((s.person, r.person));
            }
        }
    }
    out.sort();
    out
}

/// Connected components of the "closer than `radius`" graph, with at least
/// two members each. Members and groups come out sorted.
pub fn detect_groups(positions: &[(HexId, Point3<f64>)], radius: f64) -> Vec<Vec<HexId>> {
    let n = positions.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (positions[i].1 - positions[j].1).norm() < radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut comps: BTreeMap<usize, Vec<HexId>> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        comps.entry(root).or_default().push(positions[i].0);
    }
    let mut groups: Vec<Vec<HexId>> = comps
        .into_values()
        .filter(|g| g.len() >= 2)
        .map(|mut g| {
            g.sort();
            g
        })
        .collect();
    groups.sort();
    groups
}

/// Keeps a group id for as long as the group's membership is unchanged.
#[derive(Debug, Default, Clone)]
pub struct GroupIds {
    current: BTreeMap<BTreeSet<HexId>, HexId>,
}

impl GroupIds {
    pub fn assign(&mut self, groups: &[Vec<HexId>], registry: &mut IdRegistry) -> Vec<(HexId, Vec<HexId>)> {
        let mut next = BTreeMap::new();
        let mut out = Vec::with_capacity(groups.len());
        for g in groups {
            let key: BTreeSet<HexId> = g.iter().copied().collect();
            let id = match self.current.get(&key) {
                Some(id) => *id,
                None => registry.fresh(),
            };
            next.insert(key, id);
            out.push((id, g.clone()));
        }
        self.current = next;
        out
    }
}
