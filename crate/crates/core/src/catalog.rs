//! Tile vocabulary: per-tile 3x3 sub-tile bit cells and graph templates.
//!
//! The catalog is loaded from a small line-oriented text format (see
//! `data/base.catalog` for the grammar). Rotation is applied on demand and is
//! always a number of clockwise quarter turns.

use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CatalogError;

const BASE_CATALOG: &str = include_str!("../data/base.catalog");

/// Feature classes a tile side or center can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureClass {
    Road,
    City,
    Field,
    Cloister,
}

impl FeatureClass {
    pub const ALL: [FeatureClass; 4] = [
        FeatureClass::Road,
        FeatureClass::City,
        FeatureClass::Field,
        FeatureClass::Cloister,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureClass::Road => "road",
            FeatureClass::City => "city",
            FeatureClass::Field => "field",
            FeatureClass::Cloister => "cloister",
        }
    }

    /// Bit used in the sub-tile encoding.
    pub fn bit(self) -> u8 {
        match self {
            FeatureClass::Cloister => SubTileCell::CLOISTER,
            FeatureClass::Road => SubTileCell::ROAD,
            FeatureClass::City => SubTileCell::CITY,
            FeatureClass::Field => SubTileCell::FIELD,
        }
    }

    fn side_char(self) -> char {
        match self {
            FeatureClass::Road => 'r',
            FeatureClass::City => 'c',
            FeatureClass::Field => 'f',
            FeatureClass::Cloister => 'm',
        }
    }
}

impl fmt::Display for FeatureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "road" => Ok(FeatureClass::Road),
            "city" => Ok(FeatureClass::City),
            "field" => Ok(FeatureClass::Field),
            "cloister" => Ok(FeatureClass::Cloister),
            other => Err(format!("unknown feature class '{other}'")),
        }
    }
}

/// Vertex slot on a tile. Sides are listed clockwise from north.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Slot {
    N,
    E,
    S,
    W,
    #[serde(rename = "center")]
    Center,
}

impl Slot {
    pub const SIDES: [Slot; 4] = [Slot::N, Slot::E, Slot::S, Slot::W];
    pub const ALL: [Slot; 5] = [Slot::N, Slot::E, Slot::S, Slot::W, Slot::Center];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Slot> {
        Slot::ALL.get(i).copied()
    }

    pub fn is_side(self) -> bool {
        self != Slot::Center
    }

    /// Slot after `rotation` clockwise quarter turns. Center is fixed.
    pub fn rotated(self, rotation: Rotation) -> Slot {
        match self {
            Slot::Center => Slot::Center,
            side => Slot::SIDES[(side.index() + rotation.quarter_turns() as usize) % 4],
        }
    }

    /// The side facing this one across a tile boundary.
    pub fn opposite(self) -> Slot {
        match self {
            Slot::N => Slot::S,
            Slot::E => Slot::W,
            Slot::S => Slot::N,
            Slot::W => Slot::E,
            Slot::Center => Slot::Center,
        }
    }

    /// Grid offset (dx, dy) towards the neighbour on this side; y grows south.
    pub fn offset(self) -> (i64, i64) {
        match self {
            Slot::N => (0, -1),
            Slot::E => (1, 0),
            Slot::S => (0, 1),
            Slot::W => (-1, 0),
            Slot::Center => (0, 0),
        }
    }

    /// (row, col) of the sub-tile cell the slot sits on.
    pub fn subcell(self) -> (usize, usize) {
        match self {
            Slot::N => (0, 1),
            Slot::E => (1, 2),
            Slot::S => (2, 1),
            Slot::W => (1, 0),
            Slot::Center => (1, 1),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Slot::N => "N",
            Slot::E => "E",
            Slot::S => "S",
            Slot::W => "W",
            Slot::Center => "center",
        }
    }

    fn group_char(self) -> char {
        match self {
            Slot::N => 'N',
            Slot::E => 'E',
            Slot::S => 'S',
            Slot::W => 'W',
            Slot::Center => 'M',
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Slot {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "N" => Ok(Slot::N),
            "E" => Ok(Slot::E),
            "S" => Ok(Slot::S),
            "W" => Ok(Slot::W),
            "center" | "M" => Ok(Slot::Center),
            other => Err(format!("unknown slot '{other}'")),
        }
    }
}

/// Clockwise quarter turns, 0..=3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Rotation(u8);

impl Rotation {
    pub const ALL: [Rotation; 4] = [Rotation(0), Rotation(1), Rotation(2), Rotation(3)];

    pub fn new(quarter_turns: u8) -> Option<Rotation> {
        (quarter_turns < 4).then_some(Rotation(quarter_turns))
    }

    pub fn quarter_turns(self) -> u8 {
        self.0
    }

    pub fn inverse(self) -> Rotation {
        Rotation((4 - self.0) % 4)
    }
}

impl TryFrom<u8> for Rotation {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        Rotation::new(v).ok_or_else(|| format!("rotation {v} out of range 0..=3"))
    }
}

impl From<Rotation> for u8 {
    fn from(r: Rotation) -> u8 {
        r.0
    }
}

/// One sub-tile cell: a 4-bit feature field plus the shield flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SubTileCell {
    pub bits: u8,
    pub shield: bool,
}

impl SubTileCell {
    pub const CLOISTER: u8 = 0b0001;
    pub const ROAD: u8 = 0b0010;
    pub const CITY: u8 = 0b0100;
    pub const FIELD: u8 = 0b1000;

    pub const EMPTY: SubTileCell = SubTileCell { bits: 0, shield: false };

    pub fn of(class: FeatureClass) -> SubTileCell {
        SubTileCell { bits: class.bit(), shield: false }
    }

    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    pub fn has(self, class: FeatureClass) -> bool {
        self.bits & class.bit() != 0
    }

    fn from_char(c: char) -> Option<SubTileCell> {
        Some(match c {
            'c' => SubTileCell::of(FeatureClass::City),
            'C' => SubTileCell { bits: SubTileCell::CITY, shield: true },
            'r' => SubTileCell::of(FeatureClass::Road),
            'f' => SubTileCell::of(FeatureClass::Field),
            'm' => SubTileCell::of(FeatureClass::Cloister),
            '.' => SubTileCell::EMPTY,
            _ => return None,
        })
    }

    fn to_char(self) -> Option<char> {
        match (self.bits, self.shield) {
            (SubTileCell::CITY, true) => Some('C'),
            (SubTileCell::CITY, false) => Some('c'),
            (SubTileCell::ROAD, false) => Some('r'),
            (SubTileCell::FIELD, false) => Some('f'),
            (SubTileCell::CLOISTER, false) => Some('m'),
            (0, false) => Some('.'),
            _ => None,
        }
    }
}

pub type SubGrid = [[SubTileCell; 3]; 3];

/// Rotates a 3x3 grid clockwise by `rotation`.
pub fn rotate_grid<T: Copy>(grid: &[[T; 3]; 3], rotation: Rotation) -> [[T; 3]; 3] {
    let mut out = *grid;
    for _ in 0..rotation.quarter_turns() {
        let prev = out;
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = prev[2 - c][r];
            }
        }
    }
    out
}

/// Vertices of one logical feature on a tile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureGroup {
    pub class: FeatureClass,
    pub slots: Vec<Slot>,
}

/// Index of a tile kind inside its catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TileKind(pub u16);

impl TileKind {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileSpec {
    pub tile_id: String,
    pub count: u32,
    /// Side classes in N, E, S, W order.
    pub sides: [FeatureClass; 4],
    pub cloister: bool,
    pub shield: bool,
    pub feature_groups: Vec<FeatureGroup>,
    subgrid: SubGrid,
    explicit_cells: bool,
    /// (field group, city group) pairs that touch on this tile.
    field_city: Vec<(usize, usize)>,
}

/// Template graph of one tile in board orientation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileGraphTemplate {
    pub vertices: Vec<(Slot, FeatureClass)>,
    pub intra_tile: Vec<(Slot, Slot)>,
    pub feature: Vec<(Slot, Slot)>,
}

impl TileSpec {
    pub fn side(&self, side: Slot, rotation: Rotation) -> FeatureClass {
        debug_assert!(side.is_side());
        // the side that ends up facing `side` after rotating clockwise
        let local = side.rotated(rotation.inverse());
        self.sides[local.index()]
    }

    pub fn rotated_sides(&self, rotation: Rotation) -> [FeatureClass; 4] {
        Slot::SIDES.map(|s| self.side(s, rotation))
    }

    /// Class carried by `slot` after rotation, or `None` for a missing center.
    pub fn slot_class(&self, slot: Slot, rotation: Rotation) -> Option<FeatureClass> {
        match slot {
            Slot::Center => self.cloister.then_some(FeatureClass::Cloister),
            side => Some(self.side(side, rotation)),
        }
    }

    pub fn subgrid(&self, rotation: Rotation) -> SubGrid {
        rotate_grid(&self.subgrid, rotation)
    }

    /// Index of the feature group holding a board-frame slot.
    pub fn group_of(&self, slot: Slot, rotation: Rotation) -> Option<usize> {
        let local = slot.rotated(rotation.inverse());
        self.feature_groups.iter().position(|g| g.slots.contains(&local))
    }

    /// Board-frame slots of group `group`.
    pub fn group_slots(&self, group: usize, rotation: Rotation) -> impl Iterator<Item = Slot> + '_ {
        self.feature_groups[group].slots.iter().map(move |s| s.rotated(rotation))
    }

    pub fn field_city_pairs(&self) -> &[(usize, usize)] {
        &self.field_city
    }

    pub fn vertex_slots(&self) -> impl Iterator<Item = Slot> {
        let n = if self.cloister { 5 } else { 4 };
        Slot::ALL.into_iter().take(n)
    }

    pub fn graph_template(&self, rotation: Rotation) -> TileGraphTemplate {
        let vertices = self
            .vertex_slots()
            .map(|s| (s, self.slot_class(s, rotation).expect("slot exists")))
            .collect();
        let intra_tile = vec![(Slot::N, Slot::E), (Slot::E, Slot::S), (Slot::S, Slot::W), (Slot::W, Slot::N)];
        let mut feature = Vec::new();
        for group in &self.feature_groups {
            let slots: Vec<Slot> = group.slots.iter().map(|s| s.rotated(rotation)).collect();
            for i in 0..slots.len() {
                for j in i + 1..slots.len() {
                    feature.push((slots[i], slots[j]));
                }
            }
        }
        TileGraphTemplate { vertices, intra_tile, feature }
    }

    fn cells_string(&self) -> String {
        self.subgrid
            .iter()
            .map(|row| row.iter().map(|c| c.to_char().unwrap_or('?')).collect::<String>())
            .collect::<Vec<_>>()
            .join("/")
    }
}

/// Immutable tile vocabulary with deck counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileCatalog {
    tiles: Vec<TileSpec>,
    start: TileKind,
    total_count: u32,
    hash: String,
}

impl TileCatalog {
    /// The bundled base-game catalog.
    pub fn base() -> TileCatalog {
        TileCatalog::parse(BASE_CATALOG).expect("bundled catalog is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TileCatalog, CatalogError> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| CatalogError::Io(e.to_string()))?;
        TileCatalog::parse(&text)
    }

    pub fn parse(text: &str) -> Result<TileCatalog, CatalogError> {
        let mut tiles = Vec::new();
        let mut start_id: Option<(usize, String)> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("start") {
                if rest.starts_with(char::is_whitespace) {
                    if start_id.is_some() {
                        return Err(CatalogError::Parse { line: line_no, msg: "duplicate start directive".into() });
                    }
                    start_id = Some((line_no, rest.trim().to_string()));
                    continue;
                }
            }
            tiles.push(parse_record(line, line_no)?);
        }
        let (line, start_id) = start_id.ok_or(CatalogError::Parse { line: 0, msg: "missing start directive".into() })?;
        TileCatalog::from_tiles(tiles, &start_id).map_err(|e| match e {
            CatalogError::Validation { tile_id, msg } if msg.starts_with("start") => {
                CatalogError::Parse { line, msg: format!("{msg}: {tile_id}") }
            }
            other => other,
        })
    }

    pub fn from_tiles(tiles: Vec<TileSpec>, start_id: &str) -> Result<TileCatalog, CatalogError> {
        let mut seen = HashSet::new();
        for t in &tiles {
            if !seen.insert(t.tile_id.as_str()) {
                return Err(CatalogError::Validation { tile_id: t.tile_id.clone(), msg: "duplicate tile_id".into() });
            }
        }
        let start = tiles
            .iter()
            .position(|t| t.tile_id == start_id)
            .ok_or_else(|| CatalogError::Validation { tile_id: start_id.to_string(), msg: "start tile not in catalog".into() })?;
        if tiles.len() > u16::MAX as usize {
            return Err(CatalogError::Parse { line: 0, msg: "too many tiles".into() });
        }
        let total_count = tiles.iter().try_fold(0u32, |acc, t| acc.checked_add(t.count)).ok_or(CatalogError::Validation {
            tile_id: String::new(),
            msg: "tile count overflow".into(),
        })?;
        let mut cat = TileCatalog { tiles, start: TileKind(start as u16), total_count, hash: String::new() };
        cat.hash = {
            let digest = Sha256::digest(cat.to_text().as_bytes());
            hex::encode(&digest[..8])
        };
        Ok(cat)
    }

    pub fn tiles(&self) -> &[TileSpec] {
        &self.tiles
    }

    pub fn kinds(&self) -> impl Iterator<Item = TileKind> {
        (0..self.tiles.len() as u16).map(TileKind)
    }

    pub fn spec(&self, kind: TileKind) -> &TileSpec {
        &self.tiles[kind.index()]
    }

    pub fn kind_of(&self, tile_id: &str) -> Option<TileKind> {
        self.tiles.iter().position(|t| t.tile_id == tile_id).map(|i| TileKind(i as u16))
    }

    pub fn start(&self) -> TileKind {
        self.start
    }

    pub fn total_count(&self) -> u32 {
        self.total_count
    }

    /// Short content hash of the canonical text form.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// Drawable tiles, one entry per copy, in catalog order.
    pub fn deck(&self) -> Vec<TileKind> {
        let mut deck = Vec::with_capacity(self.total_count as usize);
        for kind in self.kinds() {
            let mut n = self.spec(kind).count;
            if kind == self.start {
                n -= 1;
            }
            deck.extend(std::iter::repeat_n(kind, n as usize));
        }
        deck
    }

    /// Canonical text form; `parse(to_text())` reproduces the catalog.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "start {}", self.tiles[self.start.index()].tile_id);
        for t in &self.tiles {
            let sides: String = t.sides.iter().map(|c| c.side_char()).collect();
            let groups: Vec<String> =
                t.feature_groups.iter().map(|g| g.slots.iter().map(|s| s.group_char()).collect()).collect();
            let _ = write!(
                out,
                "{}, {}, {}, {}, {}, {}",
                t.tile_id,
                t.count,
                sides,
                t.cloister as u8,
                t.shield as u8,
                groups.join(";")
            );
            if t.explicit_cells {
                let _ = write!(out, ", {}", t.cells_string());
            }
            out.push('\n');
        }
        out
    }
}

fn parse_record(line: &str, line_no: usize) -> Result<TileSpec, CatalogError> {
    let perr = |msg: String| CatalogError::Parse { line: line_no, msg };
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 6 && fields.len() != 7 {
        return Err(perr(format!("expected 6 or 7 fields, found {}", fields.len())));
    }
    let tile_id = fields[0];
    if tile_id.is_empty() || tile_id.contains(char::is_whitespace) {
        return Err(perr("tile_id: must be a non-empty token".into()));
    }
    let count: u32 = fields[1].parse().map_err(|_| perr(format!("count: invalid integer '{}'", fields[1])))?;
    let side_chars: Vec<char> = fields[2].chars().collect();
    if side_chars.len() != 4 {
        return Err(perr(format!("sides: expected 4 chars, found '{}'", fields[2])));
    }
    let mut sides = [FeatureClass::Field; 4];
    for (i, c) in side_chars.iter().enumerate() {
        sides[i] = match c {
            'r' => FeatureClass::Road,
            'c' => FeatureClass::City,
            'f' => FeatureClass::Field,
            other => return Err(perr(format!("sides: unknown class char '{other}'"))),
        };
    }
    let flag = |name: &str, s: &str| match s {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(perr(format!("{name}: expected 0 or 1, found '{other}'"))),
    };
    let cloister = flag("cloister", fields[3])?;
    let shield = flag("shield", fields[4])?;
    let mut groups = Vec::new();
    for part in fields[5].split(';') {
        let mut slots = Vec::new();
        for c in part.trim().chars() {
            slots.push(match c {
                'N' => Slot::N,
                'E' => Slot::E,
                'S' => Slot::S,
                'W' => Slot::W,
                'M' => Slot::Center,
                other => return Err(perr(format!("groups: unknown slot '{other}'"))),
            });
        }
        if slots.is_empty() {
            return Err(perr("groups: empty group".into()));
        }
        groups.push(slots);
    }
    let cells = if fields.len() == 7 {
        let rows: Vec<&str> = fields[6].split('/').collect();
        if rows.len() != 3 || rows.iter().any(|r| r.chars().count() != 3) {
            return Err(perr(format!("cells: expected 3 rows of 3, found '{}'", fields[6])));
        }
        let mut grid = [[SubTileCell::EMPTY; 3]; 3];
        for (r, row) in rows.iter().enumerate() {
            for (c, ch) in row.chars().enumerate() {
                grid[r][c] = SubTileCell::from_char(ch).ok_or_else(|| perr(format!("cells: unknown cell char '{ch}'")))?;
            }
        }
        Some(grid)
    } else {
        None
    };
    TileSpec::new(tile_id, count, sides, cloister, shield, groups, cells)
}

impl TileSpec {
    /// Builds and validates a tile. `cells` defaults to the derived layout.
    pub fn new(
        tile_id: &str,
        count: u32,
        sides: [FeatureClass; 4],
        cloister: bool,
        shield: bool,
        groups: Vec<Vec<Slot>>,
        cells: Option<SubGrid>,
    ) -> Result<TileSpec, CatalogError> {
        let verr = |msg: String| CatalogError::Validation { tile_id: tile_id.to_string(), msg };
        if count == 0 {
            return Err(verr("count must be positive".into()));
        }
        if sides.contains(&FeatureClass::Cloister) {
            return Err(verr("sides cannot be cloister".into()));
        }
        let mut seen = [false; 5];
        let mut feature_groups = Vec::with_capacity(groups.len());
        for slots in groups {
            let mut class = None;
            for &s in &slots {
                if seen[s.index()] {
                    return Err(verr(format!("slot {s} appears in more than one feature group")));
                }
                seen[s.index()] = true;
                let c = match s {
                    Slot::Center if !cloister => return Err(verr("center slot grouped on a tile without cloister".into())),
                    Slot::Center => FeatureClass::Cloister,
                    side => sides[side.index()],
                };
                match class {
                    None => class = Some(c),
                    Some(prev) if prev != c => {
                        return Err(verr(format!("feature group mixes {prev} and {c}")));
                    }
                    _ => {}
                }
            }
            let class = class.expect("non-empty group");
            if class == FeatureClass::Cloister && slots.len() != 1 {
                return Err(verr("cloister group must hold only the center".into()));
            }
            feature_groups.push(FeatureGroup { class, slots });
        }
        for s in Slot::SIDES {
            if !seen[s.index()] {
                return Err(verr(format!("side {s} is not in any feature group")));
            }
        }
        if cloister && !seen[Slot::Center.index()] {
            return Err(verr("cloister center is not in any feature group".into()));
        }
        if shield && !sides.contains(&FeatureClass::City) {
            return Err(verr("shield on a tile without city".into()));
        }

        let explicit_cells = cells.is_some();
        let subgrid = match cells {
            Some(grid) => grid,
            None => derive_cells(&sides, cloister, shield, &feature_groups),
        };
        for (r, row) in subgrid.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                if cell.has(FeatureClass::Cloister) && (r, c) != (1, 1) {
                    return Err(verr(format!("cloister bit outside the center cell at ({r},{c})")));
                }
                if cell.shield && !cell.has(FeatureClass::City) {
                    return Err(verr(format!("shield without city bit at ({r},{c})")));
                }
                if cell.shield && !shield {
                    return Err(verr(format!("shield cell at ({r},{c}) on a tile without shield")));
                }
            }
        }
        if shield && !subgrid.iter().flatten().any(|c| c.shield) {
            return Err(verr("shield tile has no shield cell".into()));
        }
        for s in Slot::SIDES {
            let (r, c) = s.subcell();
            if !subgrid[r][c].has(sides[s.index()]) {
                return Err(verr(format!("side {s} is {} but its edge cell lacks the {} bit", sides[s.index()], sides[s.index()])));
            }
        }
        if subgrid[1][1].has(FeatureClass::Cloister) != cloister {
            return Err(verr("center cell cloister bit disagrees with cloister flag".into()));
        }

        let field_city = field_city_adjacency(&subgrid, &feature_groups);
        Ok(TileSpec {
            tile_id: tile_id.to_string(),
            count,
            sides,
            cloister,
            shield,
            feature_groups,
            subgrid,
            explicit_cells,
            field_city,
        })
    }
}

/// Default cell layout: each side's class on its edge-center cell, the center
/// carrying the feature that passes through, corners city only where two
/// sides of one city meet.
fn derive_cells(sides: &[FeatureClass; 4], cloister: bool, shield: bool, groups: &[FeatureGroup]) -> SubGrid {
    let cell = |class: FeatureClass| SubTileCell {
        bits: class.bit(),
        shield: shield && class == FeatureClass::City,
    };
    let mut grid = [[cell(FeatureClass::Field); 3]; 3];
    for s in Slot::SIDES {
        let (r, c) = s.subcell();
        grid[r][c] = cell(sides[s.index()]);
    }
    let side_group = |s: Slot| groups.iter().position(|g| g.slots.contains(&s));
    for (a, b, rc) in [(Slot::N, Slot::W, (0, 0)), (Slot::N, Slot::E, (0, 2)), (Slot::S, Slot::W, (2, 0)), (Slot::S, Slot::E, (2, 2))] {
        if sides[a.index()] == FeatureClass::City && side_group(a) == side_group(b) {
            grid[rc.0][rc.1] = cell(FeatureClass::City);
        }
    }
    let multi = |class: FeatureClass| groups.iter().any(|g| g.class == class && g.slots.len() >= 2);
    let road_sides = sides.iter().filter(|&&c| c == FeatureClass::Road).count();
    grid[1][1] = if cloister {
        cell(FeatureClass::Cloister)
    } else if multi(FeatureClass::City) {
        cell(FeatureClass::City)
    } else if road_sides >= 2 {
        cell(FeatureClass::Road)
    } else {
        cell(FeatureClass::Field)
    };
    grid
}

/// Field groups touching city groups, found by flooding field cells from each
/// field side and then flooding the city cells reached back to city sides.
fn field_city_adjacency(grid: &SubGrid, groups: &[FeatureGroup]) -> Vec<(usize, usize)> {
    let flood = |starts: Vec<(usize, usize)>, class: FeatureClass| -> [[bool; 3]; 3] {
        let mut seen = [[false; 3]; 3];
        let mut stack = starts;
        while let Some((r, c)) = stack.pop() {
            if seen[r][c] || !grid[r][c].has(class) {
                continue;
            }
            seen[r][c] = true;
            if r > 0 {
                stack.push((r - 1, c));
            }
            if r < 2 {
                stack.push((r + 1, c));
            }
            if c > 0 {
                stack.push((r, c - 1));
            }
            if c < 2 {
                stack.push((r, c + 1));
            }
        }
        seen
    };
    let mut pairs = Vec::new();
    for (fi, fg) in groups.iter().enumerate().filter(|(_, g)| g.class == FeatureClass::Field) {
        let fields = flood(fg.slots.iter().map(|s| s.subcell()).collect(), FeatureClass::Field);
        let mut touched = Vec::new();
        for r in 0..3 {
            for c in 0..3 {
                if !fields[r][c] {
                    continue;
                }
                let mut nbrs = vec![];
                if r > 0 {
                    nbrs.push((r - 1, c));
                }
                if r < 2 {
                    nbrs.push((r + 1, c));
                }
                if c > 0 {
                    nbrs.push((r, c - 1));
                }
                if c < 2 {
                    nbrs.push((r, c + 1));
                }
                touched.extend(nbrs.into_iter().filter(|&(nr, nc)| grid[nr][nc].has(FeatureClass::City)));
            }
        }
        if touched.is_empty() {
            continue;
        }
        let cities = flood(touched, FeatureClass::City);
        for (ci, cg) in groups.iter().enumerate().filter(|(_, g)| g.class == FeatureClass::City) {
            if cg.slots.iter().any(|s| {
                let (r, c) = s.subcell();
                cities[r][c]
            }) {
                pairs.push((fi, ci));
            }
        }
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> TileCatalog {
        TileCatalog::base()
    }

    #[test]
    fn base_catalog_has_72_tiles() {
        let cat = base();
        assert_eq!(cat.total_count(), 72);
        assert_eq!(cat.deck().len(), 71);
        assert_eq!(cat.spec(cat.start()).tile_id, "D");
    }

    #[test]
    fn start_tile_cells_match_figure() {
        let cat = base();
        let g = cat.spec(cat.start()).subgrid(Rotation(0));
        assert!(g[0][1].has(FeatureClass::City));
        for c in 0..3 {
            assert!(g[1][c].has(FeatureClass::Road), "middle row col {c}");
        }
    }

    #[test]
    fn start_tile_rotated_once_has_city_east() {
        let cat = base();
        let g = cat.spec(cat.start()).subgrid(Rotation(1));
        assert!(g[1][2].has(FeatureClass::City));
        assert!(!g[0][1].has(FeatureClass::City));
        // road now runs north-south
        assert!(g[0][1].has(FeatureClass::Road) && g[2][1].has(FeatureClass::Road));
    }

    #[test]
    fn rotation_zero_is_identity() {
        let cat = base();
        for t in cat.tiles() {
            assert_eq!(t.subgrid(Rotation(0)), t.subgrid);
        }
    }

    #[test]
    fn rotating_back_restores_grid() {
        let cat = base();
        for t in cat.tiles() {
            for r in Rotation::ALL {
                assert_eq!(rotate_grid(&t.subgrid(r), r.inverse()), t.subgrid(Rotation(0)));
            }
        }
    }

    #[test]
    fn rotated_sides_follow_edge_cells() {
        let cat = base();
        for t in cat.tiles() {
            for r in Rotation::ALL {
                let g = t.subgrid(r);
                for s in Slot::SIDES {
                    let (row, col) = s.subcell();
                    assert!(g[row][col].has(t.side(s, r)), "{} rot {} side {}", t.tile_id, r.0, s);
                }
            }
        }
    }

    #[test]
    fn start_tile_template() {
        let cat = base();
        let tpl = cat.spec(cat.start()).graph_template(Rotation(0));
        assert_eq!(tpl.vertices.len(), 4);
        assert_eq!(tpl.intra_tile.len(), 4);
        assert_eq!(tpl.feature, vec![(Slot::E, Slot::W)]);
    }

    #[test]
    fn cloister_tile_has_center_vertex() {
        let cat = base();
        let b = cat.spec(cat.kind_of("B").unwrap());
        let tpl = b.graph_template(Rotation(0));
        assert_eq!(tpl.vertices.len(), 5);
        assert!(tpl.vertices.contains(&(Slot::Center, FeatureClass::Cloister)));
    }

    #[test]
    fn half_turn_swaps_opposite_slots() {
        let cat = base();
        let swap = |s: Slot| s.opposite();
        for t in cat.tiles() {
            let mut a: Vec<_> = t
                .graph_template(Rotation(0))
                .feature
                .into_iter()
                .map(|(x, y)| {
                    let (x, y) = (swap(x), swap(y));
                    (x.min(y), x.max(y))
                })
                .collect();
            let mut b: Vec<_> =
                t.graph_template(Rotation(2)).feature.into_iter().map(|(x, y)| (x.min(y), x.max(y))).collect();
            a.sort();
            b.sort();
            assert_eq!(a, b, "{}", t.tile_id);
        }
    }

    #[test]
    fn duplicate_id_rejected() {
        let text = "start A\nA, 1, ffff, 0, 0, NESW\nA, 1, ffff, 0, 0, NESW\n";
        match TileCatalog::parse(text) {
            Err(CatalogError::Validation { tile_id, .. }) => assert_eq!(tile_id, "A"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn side_cell_mismatch_rejected() {
        let text = "start Z\nZ, 1, cfff, 0, 0, N;ESW, fff/fff/fff\n";
        match TileCatalog::parse(text) {
            Err(CatalogError::Validation { tile_id, msg }) => {
                assert_eq!(tile_id, "Z");
                assert!(msg.contains("side N"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line() {
        let text = "start A\n\nA, 1, fffq, 0, 0, NESW\n";
        match TileCatalog::parse(text) {
            Err(CatalogError::Parse { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.starts_with("sides"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn text_round_trip() {
        let cat = base();
        let again = TileCatalog::parse(&cat.to_text()).unwrap();
        assert_eq!(cat, again);
    }

    #[test]
    fn derived_cells_match_explicit_base_cells() {
        // the bundled file spells out cells; the derivation rule must agree
        for t in base().tiles() {
            let groups = t.feature_groups.iter().map(|g| g.slots.clone()).collect();
            let derived = TileSpec::new(&t.tile_id, t.count, t.sides, t.cloister, t.shield, groups, None).unwrap();
            assert_eq!(derived.subgrid, t.subgrid, "{}", t.tile_id);
        }
    }

    #[test]
    fn field_city_adjacency_of_start_tile() {
        let cat = base();
        let d = cat.spec(cat.start());
        // the southern field is cut off from the city by the road
        assert!(d.field_city_pairs().is_empty());
        let e = cat.spec(cat.kind_of("E").unwrap());
        assert_eq!(e.field_city_pairs(), &[(1, 0)]);
        let h = cat.spec(cat.kind_of("H").unwrap());
        assert_eq!(h.field_city_pairs().len(), 2);
    }
}
