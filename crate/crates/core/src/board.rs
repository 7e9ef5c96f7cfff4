//! Grid of placed tiles and its sub-tile bit matrix.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::catalog::{Rotation, Slot, SubTileCell, TileCatalog, TileKind};
use crate::error::BoardError;

pub const DEFAULT_BOARD_SIZE: usize = 40;

pub type PlayerId = usize;

/// Tile coordinates: `x` grows east, `y` grows south.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridPos {
    pub x: u16,
    pub y: u16,
}

impl GridPos {
    pub fn new(x: usize, y: usize) -> GridPos {
        GridPos { x: x as u16, y: y as u16 }
    }

    pub fn offset(self, dx: i64, dy: i64, size: usize) -> Option<GridPos> {
        let x = self.x as i64 + dx;
        let y = self.y as i64 + dy;
        (x >= 0 && y >= 0 && (x as usize) < size && (y as usize) < size).then(|| GridPos::new(x as usize, y as usize))
    }

    pub fn neighbor(self, side: Slot, size: usize) -> Option<GridPos> {
        let (dx, dy) = side.offset();
        self.offset(dx, dy, size)
    }
}

impl fmt::Display for GridPos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Meeple {
    pub player: PlayerId,
    pub slot: Slot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PlacedTile {
    pub pos: GridPos,
    pub kind: TileKind,
    pub rotation: Rotation,
    pub meeple: Option<Meeple>,
}

impl PlacedTile {
    pub fn new(pos: GridPos, kind: TileKind, rotation: Rotation) -> PlacedTile {
        PlacedTile { pos, kind, rotation, meeple: None }
    }
}

/// Placed tiles on a `size` x `size` grid. Placement returns a new state.
#[derive(Debug, Clone)]
pub struct BoardState {
    catalog: Arc<TileCatalog>,
    size: usize,
    cells: Vec<Option<PlacedTile>>,
    order: Vec<GridPos>,
    start_pos: Option<GridPos>,
}

impl PartialEq for BoardState {
    fn eq(&self, other: &Self) -> bool {
        self.size == other.size && self.cells == other.cells && self.order == other.order && self.start_pos == other.start_pos
    }
}

impl BoardState {
    /// A board with no tiles at all.
    pub fn empty(size: usize, catalog: Arc<TileCatalog>) -> Result<BoardState, BoardError> {
        if size < 3 {
            return Err(BoardError::TooSmall(size));
        }
        Ok(BoardState { catalog, size, cells: vec![None; size * size], order: Vec::new(), start_pos: None })
    }

    /// A board with the catalog's start tile at the center, rotation 0.
    pub fn new(size: usize, catalog: Arc<TileCatalog>) -> Result<BoardState, BoardError> {
        let start = catalog.start();
        let mut board = BoardState::empty(size, catalog)?;
        let pos = GridPos::new(size / 2, size / 2);
        board.cells[pos.y as usize * size + pos.x as usize] = Some(PlacedTile::new(pos, start, Rotation::default()));
        board.order.push(pos);
        board.start_pos = Some(pos);
        Ok(board)
    }

    pub fn catalog(&self) -> &Arc<TileCatalog> {
        &self.catalog
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn start_pos(&self) -> Option<GridPos> {
        self.start_pos
    }

    pub fn in_bounds(&self, pos: GridPos) -> bool {
        (pos.x as usize) < self.size && (pos.y as usize) < self.size
    }

    fn idx(&self, pos: GridPos) -> usize {
        pos.y as usize * self.size + pos.x as usize
    }

    pub fn get(&self, pos: GridPos) -> Option<&PlacedTile> {
        if !self.in_bounds(pos) {
            return None;
        }
        self.cells[self.idx(pos)].as_ref()
    }

    pub fn is_occupied(&self, pos: GridPos) -> bool {
        self.get(pos).is_some()
    }

    /// Placed tiles in placement order.
    pub fn placed(&self) -> impl Iterator<Item = &PlacedTile> + '_ {
        self.order.iter().map(move |p| self.cells[self.idx(*p)].as_ref().expect("ordered cell occupied"))
    }

    pub fn tile_count(&self) -> usize {
        self.order.len()
    }

    pub fn neighbors(&self, pos: GridPos) -> impl Iterator<Item = (Slot, GridPos)> + '_ {
        Slot::SIDES.into_iter().filter_map(move |s| pos.neighbor(s, self.size).map(|p| (s, p)))
    }

    pub fn occupied_neighbor_count(&self, pos: GridPos) -> usize {
        self.neighbors(pos).filter(|(_, p)| self.is_occupied(*p)).count()
    }

    pub fn is_frontier(&self, pos: GridPos) -> bool {
        self.in_bounds(pos) && !self.is_occupied(pos) && self.occupied_neighbor_count(pos) > 0
    }

    /// Empty cells 4-adjacent to a placed tile.
    pub fn frontier(&self) -> BTreeSet<GridPos> {
        let mut out = BTreeSet::new();
        for p in &self.order {
            for (_, n) in self.neighbors(*p) {
                if !self.is_occupied(n) {
                    out.insert(n);
                }
            }
        }
        out
    }

    /// Frontier sorted by (y, x), matching action-index order.
    pub fn frontier_row_major(&self) -> Vec<GridPos> {
        let mut v: Vec<GridPos> = self.frontier().into_iter().collect();
        v.sort_by_key(|p| (p.y, p.x));
        v
    }

    /// Checks occupancy, adjacency and side matching for a placement.
    pub fn check_placement(&self, pos: GridPos, kind: TileKind, rotation: Rotation) -> Result<(), BoardError> {
        if !self.in_bounds(pos) {
            return Err(BoardError::OutOfBounds(pos));
        }
        if self.is_occupied(pos) {
            return Err(BoardError::Occupied(pos));
        }
        if self.order.is_empty() {
            return Ok(());
        }
        if self.occupied_neighbor_count(pos) == 0 {
            return Err(BoardError::NotAdjacent(pos));
        }
        let spec = self.catalog.spec(kind);
        for (side, n) in self.neighbors(pos) {
            if let Some(other) = self.get(n) {
                let theirs = self.catalog.spec(other.kind).side(side.opposite(), other.rotation);
                if spec.side(side, rotation) != theirs {
                    return Err(BoardError::SideMismatch { pos, side });
                }
            }
        }
        Ok(())
    }

    /// Returns a new board with `placed` added.
    pub fn place(&self, placed: PlacedTile) -> Result<BoardState, BoardError> {
        let mut next = self.clone();
        next.place_mut(placed)?;
        Ok(next)
    }

    pub fn place_mut(&mut self, placed: PlacedTile) -> Result<(), BoardError> {
        self.check_placement(placed.pos, placed.kind, placed.rotation)?;
        if let Some(m) = placed.meeple {
            if self.catalog.spec(placed.kind).slot_class(m.slot, placed.rotation).is_none() {
                return Err(BoardError::NoSuchSlot { pos: placed.pos, slot: m.slot });
            }
        }
        let i = self.idx(placed.pos);
        self.cells[i] = Some(placed);
        if self.order.is_empty() {
            self.start_pos = Some(placed.pos);
        }
        self.order.push(placed.pos);
        Ok(())
    }

    pub fn set_meeple(&mut self, pos: GridPos, meeple: Option<Meeple>) -> Result<(), BoardError> {
        let i = if self.in_bounds(pos) { self.idx(pos) } else { return Err(BoardError::OutOfBounds(pos)) };
        let catalog = Arc::clone(&self.catalog);
        let tile = self.cells[i].as_mut().ok_or(BoardError::Empty(pos))?;
        if let Some(m) = meeple {
            if catalog.spec(tile.kind).slot_class(m.slot, tile.rotation).is_none() {
                return Err(BoardError::NoSuchSlot { pos, slot: m.slot });
            }
        }
        tile.meeple = meeple;
        Ok(())
    }

    pub fn meeples(&self) -> impl Iterator<Item = (GridPos, Meeple)> + '_ {
        self.placed().filter_map(|t| t.meeple.map(|m| (t.pos, m)))
    }

    /// The 3W x 3W sub-tile matrix, row-major.
    pub fn bit_matrix(&self) -> BitMatrix {
        let side = self.size * 3;
        let mut cells = vec![SubTileCell::EMPTY; side * side];
        for t in self.placed() {
            let grid = self.catalog.spec(t.kind).subgrid(t.rotation);
            for (r, row) in grid.iter().enumerate() {
                for (c, cell) in row.iter().enumerate() {
                    cells[(t.pos.y as usize * 3 + r) * side + t.pos.x as usize * 3 + c] = *cell;
                }
            }
        }
        BitMatrix { side, cells }
    }
}

/// Square sub-tile matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    side: usize,
    cells: Vec<SubTileCell>,
}

impl BitMatrix {
    pub fn rows(&self) -> usize {
        self.side
    }

    pub fn cols(&self) -> usize {
        self.side
    }

    pub fn get(&self, row: usize, col: usize) -> SubTileCell {
        self.cells[row * self.side + col]
    }

    pub fn cells(&self) -> &[SubTileCell] {
        &self.cells
    }
}
