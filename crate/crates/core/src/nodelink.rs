//! Line-oriented node-link text format for graph exports.
//!
//! ```text
//! # saag node-link v1
//! v <id> <x> <y> <slot> <class> <shield 0|1> <meeple -|player> <candidate 0|1>
//! g <id> <x> <y> <onset_ms> <duration_ms>
//! e <kind> <a> <b>
//! ```
//!
//! `v` lines are board vertices (x, y are tile coordinates), `g` lines are
//! gaze fixations (x, y in board-plane tile units). Edge kinds are
//! `intra_tile`, `feature`, `inter_tile`, `saccade` and `link`.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::board::{GridPos, PlayerId};
use crate::catalog::{FeatureClass, Slot};
use crate::error::NodeLinkError;
use crate::graph::{EdgeKind, Vertex};

pub const HEADER: &str = "# saag node-link v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkKind {
    IntraTile,
    Feature,
    InterTile,
    Saccade,
    Link,
}

impl LinkKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LinkKind::IntraTile => "intra_tile",
            LinkKind::Feature => "feature",
            LinkKind::InterTile => "inter_tile",
            LinkKind::Saccade => "saccade",
            LinkKind::Link => "link",
        }
    }

    fn parse(s: &str) -> Option<LinkKind> {
        Some(match s {
            "intra_tile" => LinkKind::IntraTile,
            "feature" => LinkKind::Feature,
            "inter_tile" => LinkKind::InterTile,
            "saccade" => LinkKind::Saccade,
            "link" => LinkKind::Link,
            _ => return None,
        })
    }
}

impl From<EdgeKind> for LinkKind {
    fn from(k: EdgeKind) -> Self {
        match k {
            EdgeKind::IntraTile => LinkKind::IntraTile,
            EdgeKind::Feature => LinkKind::Feature,
            EdgeKind::InterTile => LinkKind::InterTile,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeRecord {
    Vertex {
        id: u32,
        pos: GridPos,
        slot: Slot,
        class: FeatureClass,
        shield: bool,
        meeple: Option<PlayerId>,
        candidate: bool,
    },
    Fixation {
        id: u32,
        x: f64,
        y: f64,
        onset_ms: f64,
        duration_ms: f64,
    },
}

impl NodeRecord {
    pub fn from_vertex(v: &Vertex) -> NodeRecord {
        NodeRecord::Vertex {
            id: v.id,
            pos: v.pos,
            slot: v.slot,
            class: v.class,
            shield: v.shield,
            meeple: v.meeple,
            candidate: v.candidate,
        }
    }

    pub fn id(&self) -> u32 {
        match self {
            NodeRecord::Vertex { id, .. } | NodeRecord::Fixation { id, .. } => *id,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkEdge {
    pub kind: LinkKind,
    pub a: u32,
    pub b: u32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeLinkGraph {
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<LinkEdge>,
}

impl NodeLinkGraph {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(HEADER);
        out.push('\n');
        for n in &self.nodes {
            match n {
                NodeRecord::Vertex { id, pos, slot, class, shield, meeple, candidate } => {
                    let m = meeple.map_or_else(|| "-".to_string(), |p| p.to_string());
                    let _ = writeln!(
                        out,
                        "v {id} {} {} {slot} {class} {} {m} {}",
                        pos.x, pos.y, *shield as u8, *candidate as u8
                    );
                }
                NodeRecord::Fixation { id, x, y, onset_ms, duration_ms } => {
                    let _ = writeln!(out, "g {id} {x} {y} {onset_ms} {duration_ms}");
                }
            }
        }
        for e in &self.edges {
            let _ = writeln!(out, "e {} {} {}", e.kind.as_str(), e.a, e.b);
        }
        out
    }

    pub fn parse(text: &str) -> Result<NodeLinkGraph, NodeLinkError> {
        let mut g = NodeLinkGraph::default();
        let mut ids = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |msg: String| NodeLinkError::Parse { line, msg };
            let raw = raw.trim();
            if raw.is_empty() || raw.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = raw.split_whitespace().collect();
            let int = |s: &str, what: &str| s.parse::<u32>().map_err(|_| err(format!("{what}: bad integer '{s}'")));
            let float = |s: &str, what: &str| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(format!("{what}: bad number '{s}'")))
            };
            let flag = |s: &str, what: &str| match s {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(err(format!("{what}: expected 0 or 1"))),
            };
            match f[0] {
                "v" if f.len() == 9 => {
                    let id = int(f[1], "id")?;
                    let x = int(f[2], "x")?;
                    let y = int(f[3], "y")?;
                    if x > u16::MAX as u32 || y > u16::MAX as u32 {
                        return Err(err("position out of range".into()));
                    }
                    let slot: Slot = f[4].parse().map_err(err)?;
                    let class: FeatureClass = f[5].parse().map_err(err)?;
                    let shield = flag(f[6], "shield")?;
                    let meeple = match f[7] {
                        "-" => None,
                        s => Some(int(s, "meeple")? as PlayerId),
                    };
                    let candidate = flag(f[8], "candidate")?;
                    if !ids.insert(id) {
                        return Err(err(format!("duplicate node id {id}")));
                    }
                    g.nodes.push(NodeRecord::Vertex {
                        id,
                        pos: GridPos::new(x as usize, y as usize),
                        slot,
                        class,
                        shield,
                        meeple,
                        candidate,
                    });
                }
                "g" if f.len() == 6 => {
                    let id = int(f[1], "id")?;
                    if !ids.insert(id) {
                        return Err(err(format!("duplicate node id {id}")));
                    }
                    g.nodes.push(NodeRecord::Fixation {
                        id,
                        x: float(f[2], "x")?,
                        y: float(f[3], "y")?,
                        onset_ms: float(f[4], "onset")?,
                        duration_ms: float(f[5], "duration")?,
                    });
                }
                "e" if f.len() == 4 => {
                    let kind = LinkKind::parse(f[1]).ok_or_else(|| err(format!("unknown edge kind '{}'", f[1])))?;
                    let a = int(f[2], "a")?;
                    let b = int(f[3], "b")?;
                    g.edges.push(LinkEdge { kind, a, b });
                }
                tag => return Err(err(format!("unexpected record '{tag}' with {} fields", f.len()))),
            }
        }
        for e in &g.edges {
            if !ids.contains(&e.a) || !ids.contains(&e.b) {
                return Err(NodeLinkError::Parse { line: 0, msg: format!("edge {}-{} references a missing node", e.a, e.b) });
            }
        }
        Ok(g)
    }
}
