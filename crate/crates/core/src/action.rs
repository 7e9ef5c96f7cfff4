//! Flat action space: (x, y, rotation, meeple option) on a W x W board.
//!
//! `index = ((y * W + x) * 4 + rotation) * 6 + option`, with options ordered
//! none, N, E, S, W, center. Meeple slots are in board orientation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::board::GridPos;
use crate::catalog::{Rotation, Slot};
use crate::error::EngineError;

pub const ROTATIONS: usize = 4;
pub const MEEPLE_OPTIONS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MeepleOption {
    #[serde(rename = "none")]
    None,
    N,
    E,
    S,
    W,
    #[serde(rename = "center")]
    Center,
}

impl MeepleOption {
    pub const ALL: [MeepleOption; MEEPLE_OPTIONS] =
        [MeepleOption::None, MeepleOption::N, MeepleOption::E, MeepleOption::S, MeepleOption::W, MeepleOption::Center];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn slot(self) -> Option<Slot> {
        match self {
            MeepleOption::None => None,
            MeepleOption::N => Some(Slot::N),
            MeepleOption::E => Some(Slot::E),
            MeepleOption::S => Some(Slot::S),
            MeepleOption::W => Some(Slot::W),
            MeepleOption::Center => Some(Slot::Center),
        }
    }

    pub fn from_slot(slot: Option<Slot>) -> MeepleOption {
        match slot {
            None => MeepleOption::None,
            Some(s) => MeepleOption::ALL[s.index() + 1],
        }
    }
}

/// One decoded action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub pos: GridPos,
    pub rotation: Rotation,
    pub meeple: MeepleOption,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} r{} {:?}", self.pos, self.rotation.quarter_turns(), self.meeple)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionSpace {
    board_size: usize,
}

impl ActionSpace {
    pub fn new(board_size: usize) -> ActionSpace {
        ActionSpace { board_size }
    }

    pub fn board_size(&self) -> usize {
        self.board_size
    }

    pub fn len(&self) -> usize {
        self.board_size * self.board_size * ROTATIONS * MEEPLE_OPTIONS
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn encode(&self, action: Action) -> Result<usize, EngineError> {
        let (x, y) = (action.pos.x as usize, action.pos.y as usize);
        if x >= self.board_size || y >= self.board_size {
            return Err(EngineError::BadAction(format!("position {} outside a {}-wide board", action.pos, self.board_size)));
        }
        Ok(self.placement_base(action.pos, action.rotation) + action.meeple.index())
    }

    /// Index of the (pos, rotation, none) action.
    pub fn placement_base(&self, pos: GridPos, rotation: Rotation) -> usize {
        ((pos.y as usize * self.board_size + pos.x as usize) * ROTATIONS + rotation.quarter_turns() as usize) * MEEPLE_OPTIONS
    }

    pub fn decode(&self, index: usize) -> Result<Action, EngineError> {
        if index >= self.len() {
            return Err(EngineError::ActionOutOfRange(index));
        }
        let option = index % MEEPLE_OPTIONS;
        let rest = index / MEEPLE_OPTIONS;
        let rotation = rest % ROTATIONS;
        let cell = rest / ROTATIONS;
        Ok(Action {
            pos: GridPos::new(cell % self.board_size, cell / self.board_size),
            rotation: Rotation::new(rotation as u8).expect("rotation < 4"),
            meeple: MeepleOption::ALL[option],
        })
    }
}

/// Bit vector over an action space.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActionMask {
    words: Vec<u64>,
    len: usize,
}

impl ActionMask {
    pub fn new(len: usize) -> ActionMask {
        ActionMask { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn set(&mut self, i: usize, on: bool) {
        assert!(i < self.len, "mask index {i} out of range {}", self.len);
        if on {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn get(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Set indices in increasing order.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_size_for_forty() {
        assert_eq!(ActionSpace::new(40).len(), 38400);
        assert_eq!(40 * 40 * 4 * 6, 38400);
        assert_eq!(ActionSpace::new(9).len(), 1944);
    }

    #[test]
    fn known_indices() {
        let s = ActionSpace::new(40);
        let a = Action { pos: GridPos::new(0, 0), rotation: Rotation::default(), meeple: MeepleOption::None };
        assert_eq!(s.encode(a).unwrap(), 0);
        let b = Action { pos: GridPos::new(39, 39), rotation: Rotation::new(3).unwrap(), meeple: MeepleOption::Center };
        assert_eq!(s.encode(b).unwrap(), ((39 * 40 + 39) * 4 + 3) * 6 + 5);
        assert_eq!(s.encode(b).unwrap(), 38399);
        assert_eq!(s.decode(38399).unwrap(), b);
        assert!(s.decode(38400).is_err());
        let bad = Action { pos: GridPos::new(40, 0), ..a };
        assert!(s.encode(bad).is_err());
    }

    #[test]
    fn mask_ops() {
        let mut m = ActionMask::new(130);
        m.set(0, true);
        m.set(64, true);
        m.set(129, true);
        assert_eq!(m.count_ones(), 3);
        assert_eq!(m.iter_ones().collect::<Vec<_>>(), vec![0, 64, 129]);
        m.set(64, false);
        assert!(!m.get(64));
        assert!(!m.get(500));
    }
}
