//! Graph encoding of the board.
//!
//! Every tile contributes one vertex per side plus a center vertex when it
//! holds a cloister. Edges come in three kinds: intra-tile edges join
//! physically adjacent sides of one tile, feature edges join the vertices of
//! one logical feature on a tile, and inter-tile edges join facing sides of
//! neighbouring tiles. Features spanning several tiles are the connected
//! components of feature plus inter-tile edges, tracked with a union-find so
//! open ends and meeple counts are available per component in O(α).

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::board::{GridPos, PlacedTile, PlayerId};
use crate::catalog::{FeatureClass, Rotation, Slot, TileCatalog, TileKind, TileSpec};
use crate::error::GraphError;
use crate::nodelink::{LinkEdge, NodeLinkGraph, NodeRecord};
use crate::rules::RuleTable;
use crate::unionfind::UnionFind;

pub type VertexId = u32;

const NO_TILE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    IntraTile,
    Feature,
    InterTile,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::IntraTile => "intra_tile",
            EdgeKind::Feature => "feature",
            EdgeKind::InterTile => "inter_tile",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vertex {
    pub id: VertexId,
    pub pos: GridPos,
    pub slot: Slot,
    pub class: FeatureClass,
    pub shield: bool,
    pub meeple: Option<PlayerId>,
    pub candidate: bool,
}

impl Vertex {
    /// Board-plane coordinates in tile units (tile (x, y) spans [x, x+1)).
    pub fn plane_coords(&self) -> (f64, f64) {
        slot_coords(self.pos, self.slot)
    }
}

pub fn slot_coords(pos: GridPos, slot: Slot) -> (f64, f64) {
    let (r, c) = slot.subcell();
    (pos.x as f64 + (c as f64 + 0.5) / 3.0, pos.y as f64 + (r as f64 + 0.5) / 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub kind: EdgeKind,
    pub a: VertexId,
    pub b: VertexId,
}

/// One logical feature spanning one or more tiles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureComponent {
    pub class: FeatureClass,
    pub vertices: Vec<VertexId>,
    pub meeples: BTreeMap<PlayerId, u32>,
    pub completed: bool,
    pub tiles: BTreeSet<GridPos>,
    pub shields: usize,
}

impl FeatureComponent {
    pub fn meeple_count(&self) -> u32 {
        self.meeples.values().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreStage {
    Midgame,
    Endgame,
}

/// Points per player and the meeples handed back by one scoring.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScoreOutcome {
    pub points: BTreeMap<PlayerId, u32>,
    pub returned: Vec<(VertexId, PlayerId)>,
}

#[derive(Debug, Clone)]
pub struct FeatureGraph {
    catalog: Arc<TileCatalog>,
    size: usize,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    /// First vertex id of the tile in each cell, or `NO_TILE`.
    tile_base: Vec<u32>,
    tiles: Vec<(GridPos, TileKind, Rotation)>,
    linked: Vec<bool>,
    uf: UnionFind,
    root_open: Vec<u32>,
    root_meeples: Vec<u32>,
    /// (field vertex, city vertex) pairs touching on one tile.
    field_city: Vec<(VertexId, VertexId)>,
}

impl FeatureGraph {
    pub fn new(size: usize, catalog: Arc<TileCatalog>) -> FeatureGraph {
        FeatureGraph {
            catalog,
            size,
            vertices: Vec::new(),
            edges: Vec::new(),
            tile_base: vec![NO_TILE; size * size],
            tiles: Vec::new(),
            linked: Vec::new(),
            uf: UnionFind::default(),
            root_open: Vec::new(),
            root_meeples: Vec::new(),
            field_city: Vec::new(),
        }
    }

    pub fn catalog(&self) -> &Arc<TileCatalog> {
        &self.catalog
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex(&self, id: VertexId) -> Option<&Vertex> {
        self.vertices.get(id as usize)
    }

    pub fn tile_count(&self) -> usize {
        self.tiles.len()
    }

    /// Placed tiles in placement order.
    pub fn tiles(&self) -> &[(GridPos, TileKind, Rotation)] {
        &self.tiles
    }

    fn cell(&self, pos: GridPos) -> Option<usize> {
        ((pos.x as usize) < self.size && (pos.y as usize) < self.size).then(|| pos.y as usize * self.size + pos.x as usize)
    }

    pub fn is_occupied(&self, pos: GridPos) -> bool {
        self.cell(pos).is_some_and(|i| self.tile_base[i] != NO_TILE)
    }

    pub fn vertex_at(&self, pos: GridPos, slot: Slot) -> Option<VertexId> {
        let base = self.tile_base[self.cell(pos)?];
        if base == NO_TILE {
            return None;
        }
        let id = base + slot.index() as u32;
        let v = self.vertices.get(id as usize)?;
        (v.pos == pos && v.slot == slot).then_some(id)
    }

    /// Placement legality from vertex classes: the cell must be an empty
    /// frontier cell and every facing pair of side vertices must carry the
    /// same feature class.
    pub fn is_legal(&self, spec: &TileSpec, pos: GridPos, rotation: Rotation) -> bool {
        if self.cell(pos).is_none() || self.is_occupied(pos) {
            return false;
        }
        if self.tiles.is_empty() {
            return true;
        }
        let mut touching = false;
        for side in Slot::SIDES {
            let Some(n) = pos.neighbor(side, self.size) else { continue };
            let Some(theirs) = self.vertex_at(n, side.opposite()) else { continue };
            touching = true;
            if self.vertices[theirs as usize].class != spec.side(side, rotation) {
                return false;
            }
        }
        touching
    }

    /// Whether any rotation of `kind` fits anywhere on the board.
    pub fn has_legal_placement(&self, kind: TileKind) -> bool {
        let spec = self.catalog.spec(kind);
        self.frontier().into_iter().any(|p| Rotation::ALL.iter().any(|&r| self.is_legal(spec, p, r)))
    }

    /// Empty cells 4-adjacent to placed tiles, in (y, x) order.
    pub fn frontier(&self) -> Vec<GridPos> {
        let mut out = BTreeSet::new();
        for (pos, _, _) in &self.tiles {
            for s in Slot::SIDES {
                if let Some(n) = pos.neighbor(s, self.size) {
                    if !self.is_occupied(n) {
                        out.insert((n.y, n.x));
                    }
                }
            }
        }
        out.into_iter().map(|(y, x)| GridPos { x, y }).collect()
    }

    /// Adds a tile's vertices and edges. Returns the new vertex ids.
    pub fn add_tile(&mut self, placed: &PlacedTile) -> Result<Vec<VertexId>, GraphError> {
        let catalog = Arc::clone(&self.catalog);
        let spec = catalog.spec(placed.kind);
        let (pos, rot) = (placed.pos, placed.rotation);
        if !self.is_legal(spec, pos, rot) && !(self.tiles.is_empty() && self.cell(pos).is_some()) {
            return Err(GraphError::IllegalPlacement(pos));
        }
        let base = self.vertices.len() as u32;
        let mut ids = Vec::with_capacity(5);
        for slot in spec.vertex_slots() {
            let class = spec.slot_class(slot, rot).expect("vertex slot exists");
            let id = self.uf.push();
            debug_assert_eq!(id, base + slot.index() as u32);
            self.vertices.push(Vertex {
                id,
                pos,
                slot,
                class,
                shield: spec.shield && class == FeatureClass::City,
                meeple: None,
                candidate: false,
            });
            self.linked.push(false);
            self.root_open.push(u32::from(slot.is_side()));
            self.root_meeples.push(0);
            ids.push(id);
        }
        let cell = self.cell(pos).expect("checked in bounds");
        self.tile_base[cell] = base;
        self.tiles.push((pos, placed.kind, rot));

        let tpl = spec.graph_template(rot);
        for (a, b) in tpl.intra_tile {
            self.edges.push(Edge { kind: EdgeKind::IntraTile, a: base + a.index() as u32, b: base + b.index() as u32 });
        }
        for (a, b) in tpl.feature {
            let (a, b) = (base + a.index() as u32, base + b.index() as u32);
            self.edges.push(Edge { kind: EdgeKind::Feature, a, b });
            self.merge(a, b);
        }
        for &(fg, cg) in spec.field_city_pairs() {
            let f = spec.group_slots(fg, rot).next().expect("group non-empty");
            let c = spec.group_slots(cg, rot).next().expect("group non-empty");
            self.field_city.push((base + f.index() as u32, base + c.index() as u32));
        }
        for side in Slot::SIDES {
            let Some(n) = pos.neighbor(side, self.size) else { continue };
            let Some(theirs) = self.vertex_at(n, side.opposite()) else { continue };
            let ours = base + side.index() as u32;
            self.edges.push(Edge { kind: EdgeKind::InterTile, a: ours, b: theirs });
            for v in [ours, theirs] {
                self.linked[v as usize] = true;
                let r = self.uf.find(v);
                self.root_open[r as usize] -= 1;
            }
            self.merge(ours, theirs);
        }
        Ok(ids)
    }

    fn merge(&mut self, a: VertexId, b: VertexId) {
        if let Some((root, absorbed)) = self.uf.union(a, b) {
            self.root_open[root as usize] += self.root_open[absorbed as usize];
            self.root_meeples[root as usize] += self.root_meeples[absorbed as usize];
        }
    }

    pub fn root(&self, v: VertexId) -> VertexId {
        self.uf.find_const(v)
    }

    /// Number of unlinked side vertices in the component of `v`.
    pub fn open_ends(&self, v: VertexId) -> u32 {
        self.root_open[self.root(v) as usize]
    }

    pub fn meeples_on_feature(&self, v: VertexId) -> u32 {
        self.root_meeples[self.root(v) as usize]
    }

    pub fn is_linked(&self, v: VertexId) -> bool {
        self.linked[v as usize]
    }

    /// Whether a meeple on board-frame `slot` of a hypothetical placement
    /// would sit on a feature nobody owns yet.
    pub fn slot_unclaimed(&self, spec: &TileSpec, pos: GridPos, rotation: Rotation, slot: Slot) -> bool {
        let Some(group) = spec.group_of(slot, rotation) else { return false };
        spec.group_slots(group, rotation).filter(|s| s.is_side()).all(|s| {
            pos.neighbor(s, self.size)
                .and_then(|n| self.vertex_at(n, s.opposite()))
                .is_none_or(|v| self.meeples_on_feature(v) == 0)
        })
    }

    pub fn place_meeple(&mut self, v: VertexId, player: PlayerId) -> Result<(), GraphError> {
        let vert = self.vertices.get_mut(v as usize).ok_or(GraphError::NoVertex(v))?;
        if vert.meeple.is_some() {
            return Err(GraphError::MeepleTaken(v));
        }
        vert.meeple = Some(player);
        let r = self.uf.find(v);
        self.root_meeples[r as usize] += 1;
        Ok(())
    }

    pub fn remove_meeple(&mut self, v: VertexId) -> Option<PlayerId> {
        let player = self.vertices.get_mut(v as usize)?.meeple.take()?;
        let r = self.uf.find(v);
        self.root_meeples[r as usize] -= 1;
        Some(player)
    }

    pub fn meeples_on_board(&self) -> impl Iterator<Item = (VertexId, PlayerId)> + '_ {
        self.vertices.iter().filter_map(|v| v.meeple.map(|p| (v.id, p)))
    }

    fn cloister_neighbors(&self, pos: GridPos) -> usize {
        let mut n = 0;
        for dy in -1..=1 {
            for dx in -1..=1 {
                if (dx, dy) != (0, 0) && pos.offset(dx, dy, self.size).is_some_and(|p| self.is_occupied(p)) {
                    n += 1;
                }
            }
        }
        n
    }

    /// The component holding vertex `v`.
    pub fn component_of(&self, v: VertexId) -> FeatureComponent {
        let root = self.root(v);
        let class = self.vertices[v as usize].class;
        let members: Vec<VertexId> = if class == FeatureClass::Cloister {
            vec![v]
        } else {
            self.vertices.iter().filter(|u| u.class == class && self.root(u.id) == root).map(|u| u.id).collect()
        };
        self.build_component(class, members)
    }

    fn build_component(&self, class: FeatureClass, vertices: Vec<VertexId>) -> FeatureComponent {
        let mut meeples = BTreeMap::new();
        let mut tiles = BTreeSet::new();
        for &v in &vertices {
            let vert = &self.vertices[v as usize];
            if let Some(p) = vert.meeple {
                *meeples.entry(p).or_insert(0) += 1;
            }
            tiles.insert(vert.pos);
        }
        let shields = match class {
            FeatureClass::City => tiles
                .iter()
                .filter(|p| {
                    let base = self.tile_base[self.cell(**p).expect("placed")];
                    self.vertices[base as usize..].iter().take_while(|u| u.pos == **p).any(|u| u.shield)
                })
                .count(),
            _ => 0,
        };
        let mut comp = FeatureComponent { class, vertices, meeples, completed: false, tiles, shields };
        comp.completed = self.is_complete(&comp);
        comp
    }

    /// Road/city: no side vertex lacks an inter-tile edge. Cloister: all 8
    /// surrounding cells occupied. Fields never complete.
    pub fn is_complete(&self, comp: &FeatureComponent) -> bool {
        match comp.class {
            FeatureClass::Road | FeatureClass::City => comp.vertices.iter().all(|&v| self.linked[v as usize]),
            FeatureClass::Cloister => {
                comp.vertices.first().is_some_and(|&v| self.cloister_neighbors(self.vertices[v as usize].pos) == 8)
            }
            FeatureClass::Field => false,
        }
    }

    /// Connected components of one class (candidate vertices never appear in
    /// this graph). Ordered by smallest vertex id.
    pub fn components(&self, class: FeatureClass) -> Vec<FeatureComponent> {
        let mut groups: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
        let mut order = Vec::new();
        for v in self.vertices.iter().filter(|v| v.class == class && !v.candidate) {
            let key = if class == FeatureClass::Cloister { v.id } else { self.root(v.id) };
            let entry = groups.entry(key).or_default();
            if entry.is_empty() {
                order.push(key);
            }
            entry.push(v.id);
        }
        order.into_iter().map(|k| self.build_component(class, groups.remove(&k).expect("key present"))).collect()
    }

    /// Completed city components adjacent to a field component.
    pub fn adjacent_completed_cities(&self, field: &FeatureComponent) -> usize {
        let members: BTreeSet<VertexId> = field.vertices.iter().copied().collect();
        let mut roots = BTreeSet::new();
        for &(f, c) in &self.field_city {
            if members.contains(&f) {
                roots.insert(self.root(c));
            }
        }
        roots.into_iter().filter(|&r| self.open_ends(r) == 0).count()
    }

    /// Points owed for a component and the meeples it hands back.
    pub fn score(&self, comp: &FeatureComponent, stage: ScoreStage, rules: &RuleTable) -> Result<ScoreOutcome, GraphError> {
        let completed = self.is_complete(comp);
        if stage == ScoreStage::Midgame
            && matches!(comp.class, FeatureClass::Road | FeatureClass::City | FeatureClass::Cloister)
            && !completed
        {
            return Err(GraphError::IncompleteFeature(comp.class));
        }
        let best = comp.meeples.values().copied().max().unwrap_or(0);
        if best == 0 {
            return Ok(ScoreOutcome::default());
        }
        let tiles = comp.tiles.len() as u32;
        let shields = comp.shields as u32;
        let value = match comp.class {
            FeatureClass::Road if completed => rules.road_per_tile * tiles,
            FeatureClass::Road => rules.incomplete_road_per_tile * tiles,
            FeatureClass::City if completed => rules.city_per_tile * tiles + rules.city_per_shield * shields,
            FeatureClass::City => rules.incomplete_city_per_tile * tiles + rules.incomplete_city_per_shield * shields,
            FeatureClass::Cloister => {
                let pos = self.vertices[comp.vertices[0] as usize].pos;
                rules.cloister_base + rules.cloister_per_neighbor * self.cloister_neighbors(pos) as u32
            }
            FeatureClass::Field if stage == ScoreStage::Endgame && rules.fields_enabled => {
                rules.field_per_city * self.adjacent_completed_cities(comp) as u32
            }
            FeatureClass::Field => 0,
        };
        let points = comp.meeples.iter().filter(|(_, &n)| n == best).map(|(&p, _)| (p, value)).collect();
        let returned = comp
            .vertices
            .iter()
            .filter_map(|&v| self.vertices[v as usize].meeple.map(|p| (v, p)))
            .collect();
        Ok(ScoreOutcome { points, returned })
    }

    /// Node-link export for debugging and overlays.
    pub fn to_node_link(&self) -> NodeLinkGraph {
        NodeLinkGraph {
            nodes: self.vertices.iter().map(NodeRecord::from_vertex).collect(),
            edges: self.edges.iter().map(|e| LinkEdge { kind: e.kind.into(), a: e.a, b: e.b }).collect(),
        }
    }
}
