//! Candidate boards: the board graph plus one flagged copy of the next tile
//! for every legal (position, rotation).

use crate::board::{GridPos, PlayerId};
use crate::catalog::{Rotation, Slot, TileKind};
use crate::engine::GameState;
use crate::error::CandidateError;
use crate::graph::{Edge, EdgeKind, FeatureGraph, Vertex, VertexId};
use crate::nodelink::{LinkEdge, NodeLinkGraph, NodeRecord};

/// Width of the per-vertex feature vector.
pub const NODE_FEATURES: usize = 7;

/// Names of the node feature columns, in order.
pub const FEATURE_SCHEMA: [&str; NODE_FEATURES] = ["road", "city", "field", "cloister", "shield", "meeple", "candidate"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateInstance {
    pub id: usize,
    pub pos: GridPos,
    pub rotation: Rotation,
    pub vertices: Vec<VertexId>,
}

#[derive(Debug, Clone)]
pub struct CandidateBoard {
    pub tile: TileKind,
    /// Real vertices first (ids `0..real_count`), then candidate vertices.
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    pub real_count: usize,
    pub candidates: Vec<CandidateInstance>,
    /// Player whose meeples are coded +1.
    pub perspective: PlayerId,
}

impl CandidateBoard {
    pub fn build(graph: &FeatureGraph, tile: TileKind, perspective: PlayerId) -> Result<CandidateBoard, CandidateError> {
        let catalog = graph.catalog();
        let spec = catalog.spec(tile);
        let mut vertices = graph.vertices().to_vec();
        let mut edges = graph.edges().to_vec();
        let real_count = vertices.len();
        let mut candidates = Vec::new();
        for pos in graph.frontier() {
            for rotation in Rotation::ALL {
                if !graph.is_legal(spec, pos, rotation) {
                    continue;
                }
                let base = vertices.len() as VertexId;
                let mut ids = Vec::with_capacity(5);
                for slot in spec.vertex_slots() {
                    let class = spec.slot_class(slot, rotation).expect("vertex slot");
                    let id = base + slot.index() as VertexId;
                    vertices.push(Vertex {
                        id,
                        pos,
                        slot,
                        class,
                        shield: spec.shield && class == crate::catalog::FeatureClass::City,
                        meeple: None,
                        candidate: true,
                    });
                    ids.push(id);
                }
                let tpl = spec.graph_template(rotation);
                let at = |s: Slot| base + s.index() as VertexId;
                for (a, b) in tpl.intra_tile {
                    edges.push(Edge { kind: EdgeKind::IntraTile, a: at(a), b: at(b) });
                }
                for (a, b) in tpl.feature {
                    edges.push(Edge { kind: EdgeKind::Feature, a: at(a), b: at(b) });
                }
                for side in Slot::SIDES {
                    if let Some(theirs) = pos.neighbor(side, graph.size()).and_then(|n| graph.vertex_at(n, side.opposite())) {
                        edges.push(Edge { kind: EdgeKind::InterTile, a: at(side), b: theirs });
                    }
                }
                candidates.push(CandidateInstance { id: candidates.len(), pos, rotation, vertices: ids });
            }
        }
        if candidates.is_empty() {
            return Err(CandidateError::NoLegalPlacement(spec.tile_id.clone()));
        }
        Ok(CandidateBoard { tile, vertices, edges, real_count, candidates, perspective })
    }

    /// Candidate board for the state's drawn tile (or `tile`) from the
    /// point of view of the player to move.
    pub fn from_state(state: &GameState, tile: TileKind) -> Result<CandidateBoard, CandidateError> {
        CandidateBoard::build(state.graph(), tile, state.current_player())
    }

    pub fn instance_at(&self, pos: GridPos, rotation: Rotation) -> Option<usize> {
        self.candidates.iter().position(|c| c.pos == pos && c.rotation == rotation)
    }

    pub fn node_count(&self) -> usize {
        self.vertices.len()
    }

    /// Per-vertex features: one-hot class, shield, meeple code, candidate.
    pub fn node_features(&self) -> Vec<[f64; NODE_FEATURES]> {
        self.vertices.iter().map(|v| node_feature(v, self.perspective)).collect()
    }

    pub fn to_node_link(&self) -> NodeLinkGraph {
        NodeLinkGraph {
            nodes: self.vertices.iter().map(NodeRecord::from_vertex).collect(),
            edges: self.edges.iter().map(|e| LinkEdge { kind: e.kind.into(), a: e.a, b: e.b }).collect(),
        }
    }
}

pub fn node_feature(v: &Vertex, perspective: PlayerId) -> [f64; NODE_FEATURES] {
    let mut f = [0.0; NODE_FEATURES];
    f[match v.class {
        crate::catalog::FeatureClass::Road => 0,
        crate::catalog::FeatureClass::City => 1,
        crate::catalog::FeatureClass::Field => 2,
        crate::catalog::FeatureClass::Cloister => 3,
    }] = 1.0;
    f[4] = f64::from(u8::from(v.shield));
    f[5] = match v.meeple {
        None => 0.0,
        Some(p) if p == perspective => 1.0,
        Some(_) => -1.0,
    };
    f[6] = f64::from(u8::from(v.candidate));
    f
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::board::PlacedTile;
    use crate::catalog::TileCatalog;

    fn start_graph() -> FeatureGraph {
        let c = Arc::new(TileCatalog::base());
        let mut g = FeatureGraph::new(9, c.clone());
        g.add_tile(&PlacedTile::new(GridPos::new(4, 4), c.start(), Rotation::default())).unwrap();
        g
    }

    #[test]
    fn candidates_connect_only_to_real_vertices() {
        let g = start_graph();
        let kind = g.catalog().kind_of("V").unwrap();
        let cb = CandidateBoard::build(&g, kind, 0).unwrap();
        assert!(!cb.candidates.is_empty());
        for e in &cb.edges {
            let (a, b) = (&cb.vertices[e.a as usize], &cb.vertices[e.b as usize]);
            if a.candidate && b.candidate {
                assert_eq!(a.pos, b.pos, "candidate edge crosses instances");
                assert_ne!(e.kind, EdgeKind::InterTile);
            }
        }
        // the original graph is untouched
        assert_eq!(g.vertices().len(), 4);
        assert_eq!(cb.real_count, 4);
    }

    #[test]
    fn symmetric_tile_keeps_all_rotations() {
        let g = start_graph();
        let kind = g.catalog().kind_of("X").unwrap();
        // crossroads only fits on the road ends; every rotation is identical
        let cb = CandidateBoard::build(&g, kind, 0).unwrap();
        let east: Vec<_> = cb.candidates.iter().filter(|c| c.pos == GridPos::new(5, 4)).collect();
        assert_eq!(east.len(), 4);
    }

    #[test]
    fn no_legal_placement_errors() {
        let c = Arc::new(TileCatalog::parse("start A\nA, 2, cccc, 0, 0, NESW\nB, 1, ffff, 0, 0, NESW\n").unwrap());
        let mut g = FeatureGraph::new(5, c.clone());
        g.add_tile(&PlacedTile::new(GridPos::new(2, 2), TileKind(0), Rotation::default())).unwrap();
        assert!(matches!(CandidateBoard::build(&g, TileKind(1), 0), Err(CandidateError::NoLegalPlacement(_))));
    }
}
