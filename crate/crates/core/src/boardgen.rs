//! Seeded random board generation.
//!
//! Each draw picks a piece count, a number of distinct shapes and a number
//! of distinct colors uniformly from their ranges, picks that many shapes
//! and colors from the palette, scatters the pieces over distinct cells and
//! assigns each piece a uniform shape and color from the picked subsets.
//! With `cover_all`, draws are repeated until every palette shape and color
//! appears at least once.

use serde::{Deserialize, Serialize};

use crate::board::{Board, Piece};
use crate::error::GenError;
use crate::geometry::NUM_CELLS;
use crate::palette::Palette;
use crate::rng::SplitMix64;

/// Upper bound on rejection-sampling attempts for `cover_all`.
pub const COVER_ALL_ATTEMPTS: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenParams {
    pub min_pieces: usize,
    pub max_pieces: usize,
    pub min_shapes: usize,
    pub max_shapes: usize,
    pub min_colors: usize,
    pub max_colors: usize,
    #[serde(default)]
    pub cover_all: bool,
}

impl GenParams {
    /// Exactly `n` pieces with every shape and color eligible.
    pub fn fixed(n: usize, palette: &Palette) -> Self {
        Self {
            min_pieces: n,
            max_pieces: n,
            min_shapes: palette.num_shapes(),
            max_shapes: palette.num_shapes(),
            min_colors: palette.num_colors(),
            max_colors: palette.num_colors(),
            cover_all: false,
        }
    }

    /// Boards used by the learning agents: 9 pieces, no cover constraint.
    pub fn rl_default(palette: &Palette) -> Self {
        Self::fixed(9, palette)
    }

    /// Boards shown to people: every shape and color present, 9 pieces for
    /// stationary rules and 8 otherwise.
    pub fn human_default(palette: &Palette, stationary: bool) -> Self {
        Self { cover_all: true, ..Self::fixed(if stationary { 9 } else { 8 }, palette) }
    }

    pub fn validate(&self, palette: &Palette) -> Result<(), GenError> {
        let bad = |msg: String| Err(GenError::Infeasible(msg));
        let ranges = [
            ("pieces", self.min_pieces, self.max_pieces, NUM_CELLS),
            ("shapes", self.min_shapes, self.max_shapes, palette.num_shapes()),
            ("colors", self.min_colors, self.max_colors, palette.num_colors()),
        ];
        for (what, lo, hi, cap) in ranges {
            if lo < 1 || lo > hi || hi > cap {
                return bad(format!("{what} range [{lo}, {hi}] must satisfy 1 <= min <= max <= {cap}"));
            }
        }
        if self.cover_all {
            let need = palette.num_shapes().max(palette.num_colors());
            if self.max_pieces < need {
                return bad(format!("cover_all needs at least {need} pieces, max is {}", self.max_pieces));
            }
            if self.max_shapes < palette.num_shapes() || self.max_colors < palette.num_colors() {
                return bad("cover_all needs max_shapes/max_colors to span the whole palette".into());
            }
        }
        Ok(())
    }
}

fn draw(params: &GenParams, palette: &Palette, rng: &mut SplitMix64) -> Board {
    let n = rng.range_inclusive(params.min_pieces as u64, params.max_pieces as u64) as usize;
    let ns = rng.range_inclusive(params.min_shapes as u64, params.max_shapes as u64) as usize;
    let nc = rng.range_inclusive(params.min_colors as u64, params.max_colors as u64) as usize;
    let shapes = rng.sample_distinct(palette.num_shapes(), ns);
    let colors = rng.sample_distinct(palette.num_colors(), nc);
    let cells = rng.sample_distinct(NUM_CELLS, n);
    let mut board = Board::empty();
    for cell in cells {
        let piece = Piece {
            shape: shapes[rng.index(ns)] as u8,
            color: colors[rng.index(nc)] as u8,
        };
        board.place(cell as u8 + 1, piece).expect("cell in range");
    }
    board
}

fn covers(board: &Board, palette: &Palette) -> bool {
    let (mut s, mut c) = (0u64, 0u64);
    for (_, p) in board.pieces() {
        s |= 1 << p.shape;
        c |= 1 << p.color;
    }
    s.count_ones() as usize == palette.num_shapes() && c.count_ones() as usize == palette.num_colors()
}

/// Draws one board. The same params and RNG state always give the same board.
pub fn generate(params: &GenParams, palette: &Palette, rng: &mut SplitMix64) -> Result<Board, GenError> {
    params.validate(palette)?;
    if !params.cover_all {
        return Ok(draw(params, palette, rng));
    }
    for _ in 0..COVER_ALL_ATTEMPTS {
        let b = draw(params, palette, rng);
        if covers(&b, palette) {
            return Ok(b);
        }
    }
    Err(GenError::CoverAllExhausted(COVER_ALL_ATTEMPTS))
}
