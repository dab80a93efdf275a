//! Pieces, boards and the JSON board-literal format.
//!
//! A board literal is a list of `{cell, shape, color}` records; a board file
//! is a top-level JSON list of such literals.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{BoardError, RangeError};
use crate::geometry::NUM_CELLS;
use crate::palette::Palette;

/// A game piece, identified by palette indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Piece {
    pub shape: u8,
    pub color: u8,
}

/// Contents of the 6x6 grid; at most one piece per cell.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Board {
    cells: [Option<Piece>; NUM_CELLS],
}

impl Default for Board {
    fn default() -> Self {
        Self::empty()
    }
}

impl Board {
    pub fn empty() -> Self {
        Self { cells: [None; NUM_CELLS] }
    }

    pub fn get(&self, cell: u8) -> Option<Piece> {
        if (1..=NUM_CELLS as u8).contains(&cell) {
            self.cells[cell as usize - 1]
        } else {
            None
        }
    }

    /// Places `piece` at `cell`, returning whatever was there before.
    pub fn place(&mut self, cell: u8, piece: Piece) -> Result<Option<Piece>, RangeError> {
        if !(1..=NUM_CELLS as u8).contains(&cell) {
            return Err(RangeError::Cell(cell as i64));
        }
        Ok(self.cells[cell as usize - 1].replace(piece))
    }

    pub fn remove(&mut self, cell: u8) -> Option<Piece> {
        if (1..=NUM_CELLS as u8).contains(&cell) {
            self.cells[cell as usize - 1].take()
        } else {
            None
        }
    }

    /// Occupied cells with their pieces, in increasing cell order.
    pub fn pieces(&self) -> impl Iterator<Item = (u8, Piece)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.map(|p| (i as u8 + 1, p)))
    }

    pub fn len(&self) -> usize {
        self.cells.iter().filter(|p| p.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.iter().all(Option::is_none)
    }

    /// Bit `c - 1` set for every occupied cell `c`.
    pub fn occupied_mask(&self) -> u64 {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_some())
            .fold(0, |m, (i, _)| m | 1 << i)
    }

    pub fn to_literal(&self, palette: &Palette) -> BoardLiteral {
        BoardLiteral(
            self.pieces()
                .map(|(cell, p)| PieceRecord {
                    cell,
                    shape: palette.shape_name(p.shape).to_string(),
                    color: palette.color_name(p.color).to_string(),
                })
                .collect(),
        )
    }
}

impl fmt::Debug for Board {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.pieces()).finish()
    }
}

/// One `{cell, shape, color}` record.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PieceRecord {
    pub cell: u8,
    pub shape: String,
    pub color: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BoardLiteral(pub Vec<PieceRecord>);

impl BoardLiteral {
    /// Validates cell range, cell uniqueness and palette membership.
    /// `index` is the record's position in its file, used in error messages.
    pub fn to_board(&self, palette: &Palette, index: usize) -> Result<Board, BoardError> {
        let mut board = Board::empty();
        for rec in &self.0 {
            let shape = palette
                .shape_index(&rec.shape)
                .ok_or_else(|| BoardError::UnknownShape { board: index, name: rec.shape.clone() })?;
            let color = palette
                .color_index(&rec.color)
                .ok_or_else(|| BoardError::UnknownColor { board: index, name: rec.color.clone() })?;
            let previous = board
                .place(rec.cell, Piece { shape, color })
                .map_err(|source| BoardError::Range { board: index, source })?;
            if previous.is_some() {
                return Err(BoardError::DuplicateCell { board: index, cell: rec.cell });
            }
        }
        Ok(board)
    }
}

pub fn parse_boards(json: &str, palette: &Palette) -> Result<Vec<Board>, BoardError> {
    let literals: Vec<BoardLiteral> = serde_json::from_str(json)?;
    literals
        .iter()
        .enumerate()
        .map(|(i, lit)| lit.to_board(palette, i))
        .collect()
}

/// Reads a predefined-board file, preserving board order.
pub fn load_boards(path: &Path, palette: &Palette) -> Result<Vec<Board>, BoardError> {
    parse_boards(&std::fs::read_to_string(path)?, palette)
}

pub fn boards_to_json(boards: &[Board], palette: &Palette) -> String {
    let literals: Vec<BoardLiteral> = boards.iter().map(|b| b.to_literal(palette)).collect();
    serde_json::to_string_pretty(&literals).expect("board literals serialize")
}

pub fn save_boards(path: &Path, boards: &[Board], palette: &Palette) -> Result<(), BoardError> {
    std::fs::write(path, boards_to_json(boards, palette))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_board() {
        let p = Palette::default();
        let boards = parse_boards(r#"[[{"cell": 1, "shape": "star", "color": "red"}]]"#, &p).unwrap();
        assert_eq!(boards.len(), 1);
        assert_eq!(boards[0].len(), 1);
        assert_eq!(boards[0].get(1), Some(Piece { shape: 0, color: 0 }));
    }

    #[test]
    fn duplicate_cell_is_rejected_with_index() {
        let p = Palette::default();
        let json = r#"[[], [{"cell": 3, "shape": "star", "color": "red"},
                             {"cell": 3, "shape": "circle", "color": "blue"}]]"#;
        match parse_boards(json, &p) {
            Err(BoardError::DuplicateCell { board: 1, cell: 3 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_records() {
        let p = Palette::default();
        assert!(matches!(
            parse_boards(r#"[[{"cell": 37, "shape": "star", "color": "red"}]]"#, &p),
            Err(BoardError::Range { .. })
        ));
        assert!(matches!(
            parse_boards(r#"[[{"cell": 2, "shape": "hexagon", "color": "red"}]]"#, &p),
            Err(BoardError::UnknownShape { .. })
        ));
        assert!(matches!(parse_boards("{", &p), Err(BoardError::Json(_))));
    }

    #[test]
    fn occupied_mask_bits() {
        let mut b = Board::empty();
        b.place(1, Piece { shape: 0, color: 0 }).unwrap();
        b.place(36, Piece { shape: 1, color: 1 }).unwrap();
        assert_eq!(b.occupied_mask(), 1 | 1 << 35);
        assert_eq!(b.remove(36), Some(Piece { shape: 1, color: 1 }));
        assert_eq!(b.len(), 1);
    }
}
