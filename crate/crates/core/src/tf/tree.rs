use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::transform::{from_message, interpolate, Transform};
use crate::model::TransformStamped;
use crate::time::Stamp;

pub const DEFAULT_RETENTION: Stamp = Stamp::from_nanos(10_000_000_000);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TfError {
    #[error("tree error: {0}")]
    Tree(String),
    #[error("conflict: `{child}` already has parent `{existing}` at {t}, refusing `{requested}`")]
    Conflict {
        child: String,
        existing: String,
        requested: String,
        t: Stamp,
    },
    #[error("time regression on `{child}`: {t} is before {last}")]
    TimeRegression { child: String, t: Stamp, last: Stamp },
    #[error("cannot connect `{source_frame}` to `{target}`: {gap}")]
    Lookup {
        target: String,
        source_frame: String,
        gap: String,
    },
    #[error("edge `{parent}` -> `{child}` has no data at {t} (buffer spans {earliest} to {latest})")]
    Extrapolation {
        parent: String,
        child: String,
        t: Stamp,
        earliest: Stamp,
        latest: Stamp,
    },
}

#[derive(Debug, Clone)]
struct EdgeBuffer {
    parent: String,
    samples: VecDeque<(Stamp, Transform)>,
}

impl EdgeBuffer {
    fn latest(&self) -> Stamp {
        self.samples.back().map(|s| s.0).unwrap_or(Stamp::ZERO)
    }

    fn at(&self, child: &str, t: Stamp) -> Result<Transform, TfError> {
        let idx = self.samples.partition_point(|(s, _)| *s < t);
        if let Some((s, tr)) = self.samples.get(idx) {
            if *s == t {
                return Ok(*tr);
            }
            if idx > 0 {
                let (s0, t0) = &self.samples[idx - 1];
                let frac = (t - *s0).nanos() as f64 / (*s - *s0).nanos() as f64;
                return Ok(interpolate(t0, tr, frac));
            }
        }
        Err(TfError::Extrapolation {
            parent: self.parent.clone(),
            child: child.to_string(),
            t,
            earliest: self.samples.front().map(|s| s.0).unwrap_or(Stamp::ZERO),
            latest: self.latest(),
        })
    }
}

/// Time-indexed frame graph; each frame has at most one parent.
#[derive(Debug, Clone)]
pub struct TfTree {
    edges: BTreeMap<String, EdgeBuffer>,
    retention: Stamp,
}

impl Default for TfTree {
    fn default() -> Self {
        TfTree::new(DEFAULT_RETENTION)
    }
}

impl TfTree {
    pub fn new(retention: Stamp) -> Self {
        TfTree {
            edges: BTreeMap::new(),
            retention,
        }
    }

    pub fn set_message(&mut self, m: &TransformStamped) -> Result<(), TfError> {
        self.set_transform(&m.parent, &m.child, m.stamp, from_message(m))
    }

    /// Stores `transform` (child coordinates into parent coordinates) at `t`.
    pub fn set_transform(
        &mut self,
        parent: &str,
        child: &str,
        t: Stamp,
        transform: Transform,
    ) -> Result<(), TfError> {
        if parent == child {
            return Err(TfError::Tree(format!("`{child}` cannot be its own parent")));
        }
        let mut cursor = parent;
        while let Some(edge) = self.edges.get(cursor) {
            if edge.parent == child {
                return Err(TfError::Tree(format!(
                    "`{parent}` -> `{child}` would close a cycle through `{cursor}`"
                )));
            }
            cursor = &edge.parent;
        }
        let retention = self.retention;
        let buffer = self.edges.entry(child.to_string()).or_insert_with(|| EdgeBuffer {
            parent: parent.to_string(),
            samples: VecDeque::new(),
        });
        let last = buffer.latest();
        if !buffer.samples.is_empty() && t < last {
            return Err(TfError::TimeRegression {
                child: child.to_string(),
                t,
                last,
            });
        }
        if buffer.parent != parent {
            if !buffer.samples.is_empty() && t == last {
                return Err(TfError::Conflict {
                    child: child.to_string(),
                    existing: buffer.parent.clone(),
                    requested: parent.to_string(),
                    t,
                });
            }
            buffer.parent = parent.to_string();
            buffer.samples.clear();
        }
        if buffer.samples.back().is_some_and(|s| s.0 == t) {
            buffer.samples.pop_back();
        }
        buffer.samples.push_back((t, transform));
        while buffer
            .samples
            .front()
            .is_some_and(|s| s.0 + retention < t)
        {
            buffer.samples.pop_front();
        }
        Ok(())
    }

    pub fn parent_of(&self, frame: &str) -> Option<&str> {
        self.edges.get(frame).map(|e| e.parent.as_str())
    }

    pub fn latest_time(&self, frame: &str) -> Option<Stamp> {
        self.edges.get(frame).map(|e| e.latest())
    }

    pub fn frames(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        for (child, e) in &self.edges {
            out.insert(child.as_str());
            out.insert(e.parent.as_str());
        }
        out
    }

    /// Transform expressing `source` coordinates in `target` coordinates.
    pub fn lookup(&self, target: &str, source: &str, t: Stamp) -> Result<Transform, TfError> {
        if target == source {
            return Ok(Transform::identity());
        }
        let target_chain = self.chain(target);
        let source_chain = self.chain(source);
        let Some(common) = source_chain.iter().find(|f| target_chain.contains(f)) else {
            return Err(TfError::Lookup {
                target: target.to_string(),
                source_frame: source.to_string(),
                gap: format!(
                    "`{}` and `{}` have no common ancestor",
                    source_chain.last().expect("chain has its start"),
                    target_chain.last().expect("chain has its start"),
                ),
            });
        };
        let common_from_source = self.to_ancestor(source, common, t)?;
        let common_from_target = self.to_ancestor(target, common, t)?;
        Ok(common_from_target.inverse() * common_from_source)
    }

    pub fn can_transform(&self, target: &str, source: &str, t: Stamp) -> bool {
        self.lookup(target, source, t).is_ok()
    }

    fn chain<'a>(&'a self, frame: &'a str) -> Vec<&'a str> {
        let mut out = vec![frame];
        let mut cursor = frame;
        while let Some(edge) = self.edges.get(cursor) {
            cursor = &edge.parent;
            out.push(cursor);
        }
        out
    }

    fn to_ancestor(&self, frame: &str, ancestor: &str, t: Stamp) -> Result<Transform, TfError> {
        let mut acc = Transform::identity();
        let mut cursor = frame;
        while cursor != ancestor {
            let edge = &self.edges[cursor];
            acc = edge.at(cursor, t)? * acc;
            cursor = &edge.parent;
        }
        Ok(acc)
    }
}
