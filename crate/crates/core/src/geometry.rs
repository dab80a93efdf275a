//! Board coordinates, buckets and the 144-action space.
//!
//! Rows and columns are numbered 1..=6 with row 1 at the bottom of the
//! board; cell ids run `cell = (row - 1) * 6 + col`, so cell 1 is the
//! bottom-left corner and cell 36 the top-right. Buckets sit at the four
//! outer corners: 0 top-left, 1 top-right, 2 bottom-right, 3 bottom-left.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::RangeError;

pub const ROWS: u8 = 6;
pub const COLS: u8 = 6;
pub const NUM_CELLS: usize = 36;
pub const NUM_BUCKETS: usize = 4;
pub const NUM_ACTIONS: usize = NUM_CELLS * NUM_BUCKETS;

pub fn cell_of(row: u8, col: u8) -> Result<u8, RangeError> {
    if !(1..=ROWS).contains(&row) {
        return Err(RangeError::Row(row as i64));
    }
    if !(1..=COLS).contains(&col) {
        return Err(RangeError::Col(col as i64));
    }
    Ok((row - 1) * COLS + col)
}

/// Inverse of [`cell_of`]: `(row, col)`.
pub fn row_col(cell: u8) -> Result<(u8, u8), RangeError> {
    if !(1..=NUM_CELLS as u8).contains(&cell) {
        return Err(RangeError::Cell(cell as i64));
    }
    Ok(((cell - 1) / COLS + 1, (cell - 1) % COLS + 1))
}

/// Bucket anchor coordinates, doubled so that everything stays integral.
///
/// A cell's centre is `(2*col, 2*row)`; the board spans `[1, 13]` on both
/// axes and the anchors are its corners.
const ANCHORS_X2: [(i32, i32); NUM_BUCKETS] = [(1, 13), (13, 13), (13, 1), (1, 1)];

fn squared_distances(cell: u8) -> [i32; NUM_BUCKETS] {
    let (row, col) = row_col(cell).expect("valid cell");
    let (x, y) = (2 * col as i32, 2 * row as i32);
    ANCHORS_X2.map(|(ax, ay)| (x - ax).pow(2) + (y - ay).pow(2))
}

/// Bucket closest to `cell` by Euclidean distance (lowest index on ties).
pub fn nearest_bucket(cell: u8) -> u8 {
    let d = squared_distances(cell);
    (0..NUM_BUCKETS).min_by_key(|&b| (d[b], b)).unwrap() as u8
}

/// Bucket farthest from `cell` by Euclidean distance (lowest index on ties).
pub fn remotest_bucket(cell: u8) -> u8 {
    let d = squared_distances(cell);
    (0..NUM_BUCKETS)
        .max_by_key(|&b| (d[b], std::cmp::Reverse(b)))
        .unwrap() as u8
}

/// An attempt to put the piece at `(row, col)` into `bucket`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Move {
    pub row: u8,
    pub col: u8,
    pub bucket: u8,
}

impl Move {
    pub fn new(row: u8, col: u8, bucket: u8) -> Result<Self, RangeError> {
        cell_of(row, col)?;
        if bucket as usize >= NUM_BUCKETS {
            return Err(RangeError::Bucket(bucket as i64));
        }
        Ok(Self { row, col, bucket })
    }

    pub fn from_cell(cell: u8, bucket: u8) -> Result<Self, RangeError> {
        let (row, col) = row_col(cell)?;
        Self::new(row, col, bucket)
    }

    pub fn cell(&self) -> u8 {
        (self.row - 1) * COLS + self.col
    }

    /// Cell-major, bucket-minor: `(cell - 1) * 4 + bucket`.
    pub fn action_index(&self) -> usize {
        (self.cell() as usize - 1) * NUM_BUCKETS + self.bucket as usize
    }

    pub fn from_action_index(index: usize) -> Result<Self, RangeError> {
        if index >= NUM_ACTIONS {
            return Err(RangeError::Action(index as i64));
        }
        Self::from_cell((index / NUM_BUCKETS) as u8 + 1, (index % NUM_BUCKETS) as u8)
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(r{} c{} -> b{})", self.row, self.col, self.bucket)
    }
}

/// A subset of the 144 actions, stored as a bitset over action indices.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ActionSet {
    bits: [u64; 3],
}

impl ActionSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// All four buckets of every cell set in `cells` (bit `c - 1` = cell `c`).
    pub fn from_cell_mask(cells: u64) -> Self {
        let mut set = Self::empty();
        let mut m = cells;
        while m != 0 {
            let c = m.trailing_zeros() as usize;
            for b in 0..NUM_BUCKETS {
                set.insert_index(c * NUM_BUCKETS + b);
            }
            m &= m - 1;
        }
        set
    }

    #[inline]
    pub fn insert_index(&mut self, i: usize) {
        self.bits[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn remove_index(&mut self, i: usize) {
        self.bits[i / 64] &= !(1 << (i % 64));
    }

    #[inline]
    pub fn contains_index(&self, i: usize) -> bool {
        i < NUM_ACTIONS && self.bits[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn insert(&mut self, m: Move) {
        self.insert_index(m.action_index());
    }

    pub fn contains(&self, m: Move) -> bool {
        self.contains_index(m.action_index())
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn difference(&self, other: &ActionSet) -> ActionSet {
        let mut out = *self;
        for (w, o) in out.bits.iter_mut().zip(other.bits) {
            *w &= !o;
        }
        out
    }

    pub fn is_subset(&self, other: &ActionSet) -> bool {
        self.bits.iter().zip(other.bits).all(|(a, b)| a & !b == 0)
    }

    /// Action indices in increasing order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &word)| {
            let mut m = word;
            std::iter::from_fn(move || {
                if m == 0 {
                    return None;
                }
                let i = m.trailing_zeros() as usize;
                m &= m - 1;
                Some(w * 64 + i)
            })
        })
    }

    pub fn moves(&self) -> impl Iterator<Item = Move> + '_ {
        self.indices().map(|i| Move::from_action_index(i).unwrap())
    }
}

impl fmt::Debug for ActionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.moves()).finish()
    }
}

impl FromIterator<Move> for ActionSet {
    fn from_iter<I: IntoIterator<Item = Move>>(iter: I) -> Self {
        let mut s = Self::empty();
        for m in iter {
            s.insert(m);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corners() {
        assert_eq!(cell_of(1, 1).unwrap(), 1);
        assert_eq!(cell_of(6, 6).unwrap(), 36);
        assert_eq!(cell_of(4, 1).unwrap(), 19);
        assert!(cell_of(0, 1).is_err());
        assert!(cell_of(1, 7).is_err());
    }

    #[test]
    fn cell_numbering_is_a_bijection() {
        let mut seen = [false; NUM_CELLS + 1];
        for r in 1..=6 {
            for c in 1..=6 {
                let cell = cell_of(r, c).unwrap();
                assert!(!seen[cell as usize]);
                seen[cell as usize] = true;
                assert_eq!(row_col(cell).unwrap(), (r, c));
            }
        }
        assert!(row_col(0).is_err() && row_col(37).is_err());
    }

    #[test]
    fn bottom_three_rows_are_cells_1_to_18() {
        let bottom: Vec<u8> = (1..=36u8).filter(|&c| row_col(c).unwrap().0 <= 3).collect();
        assert_eq!(bottom, (1..=18).collect::<Vec<_>>());
    }

    #[test]
    fn corner_distances() {
        assert_eq!(nearest_bucket(1), 3);
        assert_eq!(remotest_bucket(1), 1);
        assert_eq!(nearest_bucket(36), 1);
        assert_eq!(remotest_bucket(36), 3);
        assert_eq!(nearest_bucket(31), 0);
        assert_eq!(nearest_bucket(6), 2);
    }

    #[test]
    fn action_index_layout() {
        assert_eq!(Move::new(1, 1, 0).unwrap().action_index(), 0);
        assert_eq!(Move::new(6, 6, 3).unwrap().action_index(), 143);
        for i in 0..NUM_ACTIONS {
            assert_eq!(Move::from_action_index(i).unwrap().action_index(), i);
        }
        assert!(Move::from_action_index(144).is_err());
        assert!(Move::new(1, 1, 4).is_err());
    }

    #[test]
    fn action_set_ops() {
        let all = ActionSet::from_cell_mask((1u64 << 36) - 1);
        assert_eq!(all.len(), 144);
        let one = ActionSet::from_cell_mask(1 << 4);
        assert_eq!(one.indices().collect::<Vec<_>>(), vec![16, 17, 18, 19]);
        assert!(one.is_subset(&all));
        assert_eq!(all.difference(&one).len(), 140);
    }
}
