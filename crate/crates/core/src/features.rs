//! Boolean feature maps of the observed state.
//!
//! Every encoding starts with the current board (288 entries: four 36-cell
//! shape planes, then four 36-cell color planes, in palette order) followed
//! by `n` history slots. A slot describes one earlier board and the
//! successful action taken from it; slots run oldest first and the window
//! is right-aligned, so the most recent success is always in the last slot
//! and unused leading slots are zero.
//!
//! Slot layouts, by board/action representation:
//!
//! | rep    | board block            | action block              |
//! |--------|------------------------|---------------------------|
//! | dense  | removed shape (4) ‖ removed color (4) | row (6) ‖ col (6) ‖ bucket (4) |
//! | sparse | full board (288)       | one-hot action (144)      |
//! | both   | sparse ‖ dense         | sparse ‖ dense            |

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::board::{Board, Piece};
use crate::error::FeatureError;
use crate::geometry::{Move, NUM_ACTIONS, NUM_BUCKETS, NUM_CELLS};
use crate::palette::Palette;

pub const BOARD_LEN: usize = 2 * 4 * NUM_CELLS;
pub const DENSE_BOARD_LEN: usize = 8;
pub const DENSE_ACTION_LEN: usize = 6 + 6 + NUM_BUCKETS;
pub const SPARSE_ACTION_LEN: usize = NUM_ACTIONS;
pub const MEMORY_DEPTHS: [usize; 4] = [2, 4, 6, 8];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rep {
    Dense,
    Sparse,
    Both,
}

/// The five feature maps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureMap {
    #[serde(rename = "BD-AD")]
    BdAd,
    #[serde(rename = "BD-AS")]
    BdAs,
    #[serde(rename = "BS-AD")]
    BsAd,
    #[serde(rename = "BS-AS")]
    BsAs,
    #[serde(rename = "BSD-ASD")]
    BsdAsd,
}

impl FeatureMap {
    pub const ALL: [FeatureMap; 5] =
        [FeatureMap::BdAd, FeatureMap::BdAs, FeatureMap::BsAd, FeatureMap::BsAs, FeatureMap::BsdAsd];

    pub fn reps(self) -> (Rep, Rep) {
        match self {
            FeatureMap::BdAd => (Rep::Dense, Rep::Dense),
            FeatureMap::BdAs => (Rep::Dense, Rep::Sparse),
            FeatureMap::BsAd => (Rep::Sparse, Rep::Dense),
            FeatureMap::BsAs => (Rep::Sparse, Rep::Sparse),
            FeatureMap::BsdAsd => (Rep::Both, Rep::Both),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureMap::BdAd => "BD-AD",
            FeatureMap::BdAs => "BD-AS",
            FeatureMap::BsAd => "BS-AD",
            FeatureMap::BsAs => "BS-AS",
            FeatureMap::BsdAsd => "BSD-ASD",
        }
    }
}

impl FromStr for FeatureMap {
    type Err = FeatureError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureMap::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| FeatureError::UnknownMap(s.to_string()))
    }
}

/// A feature map plus memory depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub map: FeatureMap,
    pub memory: usize,
}

impl FeatureSpec {
    pub fn new(map: FeatureMap, memory: usize) -> Result<Self, FeatureError> {
        if !MEMORY_DEPTHS.contains(&memory) {
            return Err(FeatureError::Memory(memory));
        }
        Ok(Self { map, memory })
    }

    /// Every (map, depth) combination.
    pub fn all() -> impl Iterator<Item = FeatureSpec> {
        FeatureMap::ALL
            .into_iter()
            .flat_map(|map| MEMORY_DEPTHS.into_iter().map(move |memory| FeatureSpec { map, memory }))
    }

    pub fn board_slot_len(&self) -> usize {
        match self.map.reps().0 {
            Rep::Dense => DENSE_BOARD_LEN,
            Rep::Sparse => BOARD_LEN,
            Rep::Both => BOARD_LEN + DENSE_BOARD_LEN,
        }
    }

    pub fn action_slot_len(&self) -> usize {
        match self.map.reps().1 {
            Rep::Dense => DENSE_ACTION_LEN,
            Rep::Sparse => SPARSE_ACTION_LEN,
            Rep::Both => SPARSE_ACTION_LEN + DENSE_ACTION_LEN,
        }
    }

    pub fn slot_len(&self) -> usize {
        self.board_slot_len() + self.action_slot_len()
    }

    pub fn len(&self) -> usize {
        BOARD_LEN + self.slot_len() * self.memory
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-n{}", self.map.name(), self.memory)
    }
}

impl FromStr for FeatureSpec {
    type Err = FeatureError;
    /// Accepts `BD-AD-n6`, `BD-AD:6` or `BD-AD/6`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || FeatureError::UnknownMap(s.to_string());
        let (map, n) = if let Some((m, n)) = s.rsplit_once("-n").or_else(|| s.rsplit_once("-N")) {
            (m, n)
        } else {
            s.rsplit_once([':', '/']).ok_or_else(bad)?
        };
        let memory: usize = n.parse().map_err(|_| bad())?;
        FeatureSpec::new(map.parse()?, memory)
    }
}

/// A boolean vector stored as its sorted set of one-positions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FeatureVector {
    len: usize,
    ones: Vec<u32>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Indices of the one-entries, increasing.
    pub fn ones(&self) -> &[u32] {
        &self.ones
    }

    pub fn get(&self, i: usize) -> bool {
        self.ones.binary_search(&(i as u32)).is_ok()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.len];
        for &i in &self.ones {
            v[i as usize] = 1.0;
        }
        v
    }

    pub fn to_bools(&self) -> Vec<bool> {
        let mut v = vec![false; self.len];
        for &i in &self.ones {
            v[i as usize] = true;
        }
        v
    }
}

struct Builder {
    offset: usize,
    ones: Vec<u32>,
}

impl Builder {
    fn set(&mut self, i: usize) {
        self.ones.push((self.offset + i) as u32);
    }

    fn skip(&mut self, n: usize) {
        self.offset += n;
    }
}

fn check_palette(palette: &Palette) -> Result<(), FeatureError> {
    if palette.num_shapes() != 4 || palette.num_colors() != 4 {
        return Err(FeatureError::PaletteSize { shapes: palette.num_shapes(), colors: palette.num_colors() });
    }
    Ok(())
}

fn write_board(b: &mut Builder, board: &Board) {
    for (cell, p) in board.pieces() {
        b.set(p.shape as usize * NUM_CELLS + cell as usize - 1);
    }
    for (cell, p) in board.pieces() {
        b.set(4 * NUM_CELLS + p.color as usize * NUM_CELLS + cell as usize - 1);
    }
    b.skip(BOARD_LEN);
}

fn write_dense_board(b: &mut Builder, removed: Piece) {
    b.set(removed.shape as usize);
    b.set(4 + removed.color as usize);
    b.skip(DENSE_BOARD_LEN);
}

fn write_dense_action(b: &mut Builder, mv: Move) {
    b.set(mv.row as usize - 1);
    b.set(6 + mv.col as usize - 1);
    b.set(12 + mv.bucket as usize);
    b.skip(DENSE_ACTION_LEN);
}

fn write_sparse_action(b: &mut Builder, mv: Move) {
    b.set(mv.action_index());
    b.skip(SPARSE_ACTION_LEN);
}

fn finish(b: Builder) -> FeatureVector {
    FeatureVector { len: b.offset, ones: b.ones }
}

/// The 288-entry current-board block.
pub fn encode_current_board(board: &Board, palette: &Palette) -> Result<FeatureVector, FeatureError> {
    check_palette(palette)?;
    let mut b = Builder { offset: 0, ones: Vec::new() };
    write_board(&mut b, board);
    let mut v = finish(b);
    v.ones.sort_unstable();
    Ok(v)
}

/// Sparse board encoding; identical layout to the current-board block.
pub fn encode_board_sparse(board: &Board, palette: &Palette) -> Result<FeatureVector, FeatureError> {
    encode_current_board(board, palette)
}

/// Row one-hot (6) ‖ column one-hot (6) ‖ bucket one-hot (4).
pub fn encode_action_dense(mv: Move) -> FeatureVector {
    let mut b = Builder { offset: 0, ones: Vec::new() };
    write_dense_action(&mut b, mv);
    finish(b)
}

/// One-hot over the 144 actions at `(cell - 1) * 4 + bucket`.
pub fn encode_action_sparse(mv: Move) -> FeatureVector {
    let mut b = Builder { offset: 0, ones: Vec::new() };
    write_sparse_action(&mut b, mv);
    finish(b)
}

/// Shape one-hot (4) ‖ color one-hot (4) of the piece a move removed.
pub fn encode_board_delta(removed: Piece) -> FeatureVector {
    let mut b = Builder { offset: 0, ones: Vec::new() };
    write_dense_board(&mut b, removed);
    finish(b)
}

/// One remembered step: the board before a successful move, and the move.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HistoryEntry {
    pub board: Board,
    pub action: Move,
}

impl HistoryEntry {
    pub fn removed(&self) -> Piece {
        self.board.get(self.action.cell()).expect("history entries record successful moves")
    }
}

/// The last `capacity` distinct boards and the successful actions taken
/// from them. Failed moves are never recorded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HistoryWindow {
    capacity: usize,
    entries: VecDeque<HistoryEntry>,
}

impl HistoryWindow {
    pub fn new(capacity: usize) -> Self {
        Self { capacity, entries: VecDeque::with_capacity(capacity + 1) }
    }

    /// Records a successful `action` taken from `board_before`.
    pub fn push(&mut self, board_before: Board, action: Move) {
        debug_assert!(board_before.get(action.cell()).is_some());
        self.entries.push_back(HistoryEntry { board: board_before, action });
        while self.entries.len() > self.capacity {
            self.entries.pop_front();
        }
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Oldest first.
    pub fn entries(&self) -> impl Iterator<Item = &HistoryEntry> {
        self.entries.iter()
    }
}

/// Full encoding of the current board plus history under `spec`.
pub fn encode(
    spec: &FeatureSpec,
    board: &Board,
    window: &HistoryWindow,
    palette: &Palette,
) -> Result<FeatureVector, FeatureError> {
    check_palette(palette)?;
    if window.len() > spec.memory {
        return Err(FeatureError::WindowTooLong { got: window.len(), memory: spec.memory });
    }
    let mut b = Builder { offset: 0, ones: Vec::with_capacity(64) };
    write_board(&mut b, board);
    b.skip((spec.memory - window.len()) * spec.slot_len());
    let (board_rep, action_rep) = spec.map.reps();
    for entry in window.entries() {
        if matches!(board_rep, Rep::Sparse | Rep::Both) {
            write_board(&mut b, &entry.board);
        }
        if matches!(board_rep, Rep::Dense | Rep::Both) {
            write_dense_board(&mut b, entry.removed());
        }
        if matches!(action_rep, Rep::Sparse | Rep::Both) {
            write_sparse_action(&mut b, entry.action);
        }
        if matches!(action_rep, Rep::Dense | Rep::Both) {
            write_dense_action(&mut b, entry.action);
        }
    }
    debug_assert_eq!(b.offset, spec.len());
    let mut v = finish(b);
    // Only the board blocks are written out of order.
    v.ones.sort_unstable();
    Ok(v)
}

/// Named blocks of an encoding, for debugging output.
pub fn describe_blocks(spec: &FeatureSpec, v: &FeatureVector) -> Vec<(String, Vec<usize>)> {
    let mut blocks = vec![("current-board".to_string(), 0, BOARD_LEN)];
    let mut off = BOARD_LEN;
    for slot in 0..spec.memory {
        blocks.push((format!("slot{slot}-board"), off, spec.board_slot_len()));
        off += spec.board_slot_len();
        blocks.push((format!("slot{slot}-action"), off, spec.action_slot_len()));
        off += spec.action_slot_len();
    }
    blocks
        .into_iter()
        .map(|(name, start, len)| {
            let ones = v
                .ones()
                .iter()
                .map(|&i| i as usize)
                .filter(|&i| i >= start && i < start + len)
                .map(|i| i - start)
                .collect();
            (name, ones)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boardgen::{generate, GenParams};
    use crate::rng::SplitMix64;

    fn spec(map: FeatureMap, memory: usize) -> FeatureSpec {
        FeatureSpec::new(map, memory).unwrap()
    }

    #[test]
    fn closed_form_lengths() {
        for s in FeatureSpec::all() {
            let n = s.memory;
            let expected = match s.map {
                FeatureMap::BdAd => 288 + 24 * n,
                FeatureMap::BdAs => 288 + 152 * n,
                FeatureMap::BsAd => 288 + 304 * n,
                FeatureMap::BsAs => 288 + 432 * n,
                FeatureMap::BsdAsd => 288 + 456 * n,
            };
            assert_eq!(s.len(), expected, "{s}");
        }
        assert_eq!(spec(FeatureMap::BdAd, 6).len(), 432);
        assert_eq!(spec(FeatureMap::BsdAsd, 8).len(), 3936);
        assert_eq!(spec(FeatureMap::BdAd, 2).len(), 336);
        assert_eq!(FeatureSpec::all().count(), 20);
    }

    #[test]
    fn current_board_planes() {
        let pal = Palette::default();
        assert!(encode_current_board(&Board::empty(), &pal).unwrap().ones().is_empty());
        let mut b = Board::empty();
        b.place(1, Piece { shape: 0, color: 0 }).unwrap();
        let v = encode_current_board(&b, &pal).unwrap();
        assert_eq!(v.len(), 288);
        assert_eq!(v.ones(), &[0, 144]);
    }

    #[test]
    fn nine_pieces_eighteen_ones() {
        let pal = Palette::default();
        let mut rng = SplitMix64::new(11);
        for _ in 0..50 {
            let b = generate(&GenParams::rl_default(&pal), &pal, &mut rng).unwrap();
            assert_eq!(encode_current_board(&b, &pal).unwrap().ones().len(), 18);
        }
    }

    #[test]
    fn action_blocks() {
        assert_eq!(encode_action_sparse(Move::new(1, 1, 0).unwrap()).ones(), &[0]);
        assert_eq!(encode_action_sparse(Move::new(6, 6, 3).unwrap()).ones(), &[143]);
        let d = encode_action_dense(Move::new(2, 5, 1).unwrap());
        assert_eq!(d.len(), 16);
        assert_eq!(d.ones(), &[1, 10, 13]);
        let delta = encode_board_delta(Piece { shape: 2, color: 3 });
        assert_eq!(delta.ones(), &[2, 7]);
    }

    #[test]
    fn empty_window_zero_history() {
        let pal = Palette::default();
        let b = generate(&GenParams::rl_default(&pal), &pal, &mut SplitMix64::new(4)).unwrap();
        for s in FeatureSpec::all() {
            let v = encode(&s, &b, &HistoryWindow::new(s.memory), &pal).unwrap();
            assert_eq!(v.len(), s.len());
            assert!(v.ones().iter().all(|&i| (i as usize) < BOARD_LEN));
        }
    }

    #[test]
    fn most_recent_step_sits_in_last_slot() {
        let pal = Palette::default();
        let mut b = Board::empty();
        b.place(8, Piece { shape: 1, color: 2 }).unwrap();
        b.place(9, Piece { shape: 3, color: 0 }).unwrap();
        let s = spec(FeatureMap::BdAd, 2);
        let mut w = HistoryWindow::new(2);
        let mv = Move::from_cell(8, 2).unwrap();
        w.push(b, mv);
        b.remove(8);
        let v = encode(&s, &b, &w, &pal).unwrap();
        let blocks = describe_blocks(&s, &v);
        assert_eq!(blocks[1].1, Vec::<usize>::new());
        assert_eq!(blocks[3].1, vec![1, 4 + 2]);
        // row 2, col 2, bucket 2
        assert_eq!(blocks[4].1, vec![1, 6 + 1, 12 + 2]);
    }

    #[test]
    fn window_keeps_latest() {
        let mut b = Board::empty();
        for c in 1..=5 {
            b.place(c, Piece { shape: 0, color: 0 }).unwrap();
        }
        let mut w = HistoryWindow::new(2);
        for c in 1..=4 {
            w.push(b, Move::from_cell(c, 0).unwrap());
            b.remove(c);
        }
        let cells: Vec<u8> = w.entries().map(|e| e.action.cell()).collect();
        assert_eq!(cells, vec![3, 4]);
    }

    #[test]
    fn spec_parsing() {
        assert_eq!("BD-AD-n6".parse::<FeatureSpec>().unwrap(), spec(FeatureMap::BdAd, 6));
        assert_eq!("bsd-asd:8".parse::<FeatureSpec>().unwrap(), spec(FeatureMap::BsdAsd, 8));
        assert!("BD-AD-n5".parse::<FeatureSpec>().is_err());
        assert!("XX-n2".parse::<FeatureSpec>().is_err());
        assert_eq!(spec(FeatureMap::BsAs, 4).to_string(), "BS-AS-n4");
    }

    #[test]
    fn palette_mismatch() {
        let pal = Palette::new(vec!["a", "b"], vec!["x", "y", "z", "w"]);
        assert!(encode_current_board(&Board::empty(), &pal).is_err());
    }
}
